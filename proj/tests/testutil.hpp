#pragma once

// Shared helpers for the test suites: finite-difference oracles, tiny model
// builders, and a subprocess runner for CLI tests.

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "deeposets/model.hpp"
#include "deeposets/nn.hpp"
#include "deeposets/rng.hpp"

namespace testutil {

// Central finite difference of eval() with respect to *param.
template <typename Eval>
double central_difference(double* param, Eval&& eval, double step = 1e-5) {
  const double original = *param;
  *param = original + step;
  const double plus = eval();
  *param = original - step;
  const double minus = eval();
  *param = original;
  return (plus - minus) / (2.0 * step);
}

// Relative gradient agreement with an absolute floor: gradients above 1e-4
// in magnitude are held to 1e-5 relative error, tiny ones to the matching
// absolute error (finite differences bottom out near 1e-11 in double).
inline bool grad_close(double analytic, double numeric) {
  const double scale =
      std::max({std::abs(analytic), std::abs(numeric), 1e-4});
  return std::abs(analytic - numeric) / scale < 1e-5;
}

inline double rel_err(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

// A small random model configuration (d = 1, widths <= 8) for gradient and
// invariance checks.
inline deeposets::ModelConfig tiny_config(deeposets::rng::RandomStream& pick) {
  using deeposets::nn::Activation;
  auto width = [&] { return 2 + static_cast<int>(pick.uniform() * 7.0); };
  deeposets::ModelConfig config;
  config.input_dim = 1;
  config.pair_embed_dim = 2 * (1 + static_cast<int>(pick.uniform() * 3.0));
  const int pooled = width();
  const int p = width();
  config.encoder_sizes = {config.pair_embed_dim, width(), pooled};
  config.encoder_acts = {Activation::kSelu, Activation::kIdentity};
  config.branch_sizes = {pooled, width(), p};
  config.branch_acts = {Activation::kTanh, Activation::kIdentity};
  config.trunk_sizes = {1, width(), p};
  config.trunk_acts = {Activation::kTanh, Activation::kTanh};
  config.readout_width = p;
  return config;
}

// Random prompt with n examples of dimension d.
inline deeposets::Prompt random_prompt(int n, int d,
                                       deeposets::rng::RandomStream& stream) {
  deeposets::Prompt prompt;
  prompt.examples.resize(static_cast<std::size_t>(n));
  for (deeposets::Example& ex : prompt.examples) {
    ex.x.resize(static_cast<std::size_t>(d));
    for (double& v : ex.x) v = stream.normal();
    ex.y = stream.normal();
  }
  return prompt;
}

// Every mutable parameter of a dense net, for finite-difference sweeps.
inline std::vector<double*> all_params(deeposets::nn::DenseNet& net) {
  std::vector<double*> params;
  for (deeposets::nn::DenseLayer& layer : net.layers) {
    for (double& w : layer.weights) params.push_back(&w);
    for (double& b : layer.bias) params.push_back(&b);
  }
  return params;
}

struct CmdResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr interleaved
};

// Runs a shell command, capturing combined output and the exit status.
inline CmdResult run_cmd(const std::string& command) {
  CmdResult result;
  const std::string full = command + " 2>&1";
  FILE* pipe = popen(full.c_str(), "r");
  if (!pipe) return result;
  char buf[1024];
  while (std::fgets(buf, sizeof(buf), pipe)) result.output += buf;
  const int status = pclose(pipe);
  if (WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
  return result;
}

}  // namespace testutil
