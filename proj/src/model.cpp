#include "deeposets/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "deeposets/common.hpp"

namespace deeposets {

namespace {

void check_sizes(const char* name, const std::vector<int>& sizes,
                 const std::vector<nn::Activation>& acts) {
  if (sizes.size() < 2) {
    throw ShapeError(msg("config: ", name, " needs at least two widths"));
  }
  if (acts.size() != sizes.size() - 1) {
    throw ShapeError(msg("config: ", name, " has ", sizes.size() - 1,
                         " layers but ", acts.size(), " activations"));
  }
  for (int s : sizes) {
    if (s < 1) throw ShapeError(msg("config: ", name, " width ", s, " < 1"));
  }
}

std::size_t net_param_count(const std::vector<int>& sizes) {
  std::size_t total = 0;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    total += static_cast<std::size_t>(sizes[i + 1]) *
             static_cast<std::size_t>(sizes[i] + 1);
  }
  return total;
}

}  // namespace

void ModelConfig::validate() const {
  if (input_dim < 1) throw ShapeError("config: input_dim < 1");
  if (pair_embed_dim < 2 || pair_embed_dim % 2 != 0) {
    throw ShapeError(
        msg("config: pair_embed_dim ", pair_embed_dim,
            " must be even (two concatenated coordinate streams)"));
  }
  if (readout_width < 1) throw ShapeError("config: readout width < 1");
  check_sizes("encoder", encoder_sizes, encoder_acts);
  check_sizes("branch", branch_sizes, branch_acts);
  check_sizes("trunk", trunk_sizes, trunk_acts);
  if (encoder_sizes.front() != pair_embed_dim) {
    throw ShapeError(msg("config: encoder input ", encoder_sizes.front(),
                         " != pair_embed_dim ", pair_embed_dim));
  }
  if (branch_sizes.front() != pooled_dim()) {
    throw ShapeError(msg("config: branch input ", branch_sizes.front(),
                         " != pooled dim ", pooled_dim()));
  }
  if (branch_sizes.back() != readout_width ||
      trunk_sizes.back() != readout_width) {
    throw ShapeError(msg("config: branch/trunk outputs (", branch_sizes.back(),
                         ", ", trunk_sizes.back(), ") must both equal p = ",
                         readout_width));
  }
  if (trunk_sizes.front() != input_dim) {
    throw ShapeError(msg("config: trunk input ", trunk_sizes.front(),
                         " != input_dim ", input_dim));
  }
}

std::size_t ModelConfig::parameter_count() const {
  const std::size_t stream = static_cast<std::size_t>(pair_embed_dim / 2);
  const std::size_t embed =
      2 * stream * static_cast<std::size_t>(input_dim + 1);
  return embed + net_param_count(encoder_sizes) +
         net_param_count(branch_sizes) + net_param_count(trunk_sizes) + 1;
}

ModelConfig build_paper_config(int d) {
  using nn::Activation;
  ModelConfig config;
  config.input_dim = d;
  if (d == 1) {
    config.pair_embed_dim = 10;  // x and y each embedded into 5 dimensions
    config.encoder_sizes = {10, 50, 50, 50, 50, 50, 400};
    config.encoder_acts.assign(5, Activation::kSelu);
    config.encoder_acts.push_back(Activation::kIdentity);
    config.branch_sizes = {400, 40, 40, 40, 40, 100};
    config.branch_acts.assign(4, Activation::kTanh);
    config.branch_acts.push_back(Activation::kIdentity);
    config.trunk_sizes = {1, 40, 40, 40, 40, 100};
    config.trunk_acts.assign(5, Activation::kTanh);
    config.readout_width = 100;
  } else if (d == 5) {
    config.pair_embed_dim = 30;  // x and y each embedded into 15 dimensions
    config.encoder_sizes = {30, 200, 200, 800};
    config.encoder_acts.assign(2, Activation::kSelu);
    config.encoder_acts.push_back(Activation::kIdentity);
    config.branch_sizes = {800, 200, 200, 200, 200, 200};
    config.branch_acts.assign(4, Activation::kTanh);
    config.branch_acts.push_back(Activation::kIdentity);
    config.trunk_sizes = {5, 200, 200, 200, 200, 200};
    config.trunk_acts.assign(5, Activation::kTanh);
    config.readout_width = 200;
  } else {
    throw Error(msg("no preset for d = ", d, " (presets exist for 1 and 5)"));
  }
  config.validate();
  return config;
}

std::size_t DeepOSetsModel::parameter_count() const {
  return x_embed.parameter_count() + y_embed.parameter_count() +
         encoder.parameter_count() + branch.parameter_count() +
         trunk.parameter_count() + 1;
}

void DeepOSetsModel::validate() const {
  config.validate();
  x_embed.validate();
  y_embed.validate();
  encoder.validate();
  branch.validate();
  trunk.validate();
  const int stream = config.pair_embed_dim / 2;
  if (x_embed.input_dim() != config.input_dim ||
      x_embed.output_dim() != stream ||
      y_embed.input_dim() != config.input_dim ||
      y_embed.output_dim() != stream) {
    throw ShapeError("model: embedding layers do not match the config");
  }
  if (encoder.input_dim() != config.pair_embed_dim ||
      encoder.output_dim() != config.pooled_dim() ||
      branch.input_dim() != config.pooled_dim() ||
      branch.output_dim() != config.readout_width ||
      trunk.input_dim() != config.input_dim ||
      trunk.output_dim() != config.readout_width) {
    throw ShapeError("model: subnetwork shapes do not match the config");
  }
}

DeepOSetsModel init_model(const ModelConfig& config, std::uint64_t seed) {
  using nn::Activation;
  config.validate();
  DeepOSetsModel model;
  model.config = config;
  const int stream = config.pair_embed_dim / 2;
  const std::vector<int> embed_sizes = {config.input_dim, stream};
  const std::vector<Activation> embed_acts = {Activation::kIdentity};
  model.x_embed = nn::init_net(embed_sizes, embed_acts, seed, 1);
  model.y_embed = nn::init_net(embed_sizes, embed_acts, seed, 2);
  model.encoder = nn::init_net(config.encoder_sizes, config.encoder_acts, seed, 3);
  model.branch = nn::init_net(config.branch_sizes, config.branch_acts, seed, 4);
  model.trunk = nn::init_net(config.trunk_sizes, config.trunk_acts, seed, 5);
  model.b0 = 0.0;
  model.validate();
  return model;
}

namespace {

void check_prompt(const DeepOSetsModel& model, const Prompt& prompt) {
  prompt.validate();
  if (prompt.input_dim() != model.config.input_dim) {
    throw ShapeError(msg("prompt dimension ", prompt.input_dim(),
                         " != model input_dim ", model.config.input_dim));
  }
}

void check_query(const DeepOSetsModel& model, std::span<const double> x) {
  if (static_cast<int>(x.size()) != model.config.input_dim) {
    throw ShapeError(msg("query dimension ", x.size(), " != model input_dim ",
                         model.config.input_dim));
  }
}

// Canonical summation order: example indices sorted lexicographically by
// (x, y). Any permutation of the prompt yields the same ordering of values,
// hence a bitwise-identical pooled sum.
void canonical_order(const Prompt& prompt, std::vector<int>& order) {
  order.resize(prompt.examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int lhs, int rhs) {
    const Example& a = prompt.examples[static_cast<std::size_t>(lhs)];
    const Example& b = prompt.examples[static_cast<std::size_t>(rhs)];
    for (std::size_t i = 0; i < a.x.size(); ++i) {
      if (a.x[i] != b.x[i]) return a.x[i] < b.x[i];
    }
    return a.y < b.y;
  });
}

void pad_y(const DeepOSetsModel& model, double y, std::vector<double>& out) {
  out.assign(static_cast<std::size_t>(model.config.input_dim), 0.0);
  out[0] = y;
}

// Embeds one example and runs the encoder; traces are optional.
std::vector<double> encode_example(const DeepOSetsModel& model,
                                   const Example& ex, std::vector<double>& y_padded,
                                   std::vector<double>& concat,
                                   nn::ForwardTrace* x_trace,
                                   nn::ForwardTrace* y_trace,
                                   nn::ForwardTrace* encoder_trace) {
  const std::vector<double> ex_stream =
      nn::forward(model.x_embed, ex.x, x_trace);
  pad_y(model, ex.y, y_padded);
  const std::vector<double> ey_stream =
      nn::forward(model.y_embed, y_padded, y_trace);
  concat.resize(ex_stream.size() + ey_stream.size());
  std::copy(ex_stream.begin(), ex_stream.end(), concat.begin());
  std::copy(ey_stream.begin(), ey_stream.end(),
            concat.begin() + static_cast<std::ptrdiff_t>(ex_stream.size()));
  return nn::forward(model.encoder, concat, encoder_trace);
}

}  // namespace

std::vector<double> encode_prompt(const DeepOSetsModel& model,
                                  const Prompt& prompt) {
  check_prompt(model, prompt);
  std::vector<int> order;
  canonical_order(prompt, order);

  std::vector<double> pooled(
      static_cast<std::size_t>(model.config.pooled_dim()), 0.0);
  std::vector<double> y_padded, concat;
  for (int idx : order) {
    const std::vector<double> h =
        encode_example(model, prompt.examples[static_cast<std::size_t>(idx)],
                       y_padded, concat, nullptr, nullptr, nullptr);
    for (std::size_t j = 0; j < pooled.size(); ++j) pooled[j] += h[j];
  }
  const double inv_n = 1.0 / static_cast<double>(prompt.size());
  for (double& v : pooled) v *= inv_n;
  return pooled;
}

BranchCache branch_features(const DeepOSetsModel& model,
                            std::span<const double> pooled) {
  if (static_cast<int>(pooled.size()) != model.config.pooled_dim()) {
    throw ShapeError(msg("pooled vector length ", pooled.size(),
                         " != encoder output ", model.config.pooled_dim()));
  }
  BranchCache cache;
  cache.coefficients = nn::forward(model.branch, pooled);
  cache.b0 = model.b0;
  return cache;
}

double predict(const DeepOSetsModel& model, const BranchCache& cache,
               std::span<const double> x_query) {
  check_query(model, x_query);
  if (static_cast<int>(cache.coefficients.size()) !=
      model.config.readout_width) {
    throw ShapeError(msg("branch cache length ", cache.coefficients.size(),
                         " != readout width ", model.config.readout_width));
  }
  const std::vector<double> basis = nn::forward(model.trunk, x_query);
  double acc = 0.0;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    acc += cache.coefficients[i] * basis[i];
  }
  return acc + cache.b0;
}

double predict_full(const DeepOSetsModel& model, const Prompt& prompt,
                    std::span<const double> x_query) {
  const std::vector<double> pooled = encode_prompt(model, prompt);
  const BranchCache cache = branch_features(model, pooled);
  return predict(model, cache, x_query);
}

void ModelGradients::zero() {
  x_embed.zero();
  y_embed.zero();
  encoder.zero();
  branch.zero();
  trunk.zero();
  b0 = 0.0;
}

void ModelGradients::add(const ModelGradients& other) {
  x_embed.add(other.x_embed);
  y_embed.add(other.y_embed);
  encoder.add(other.encoder);
  branch.add(other.branch);
  trunk.add(other.trunk);
  b0 += other.b0;
}

void ModelGradients::scale(double factor) {
  x_embed.scale(factor);
  y_embed.scale(factor);
  encoder.scale(factor);
  branch.scale(factor);
  trunk.scale(factor);
  b0 *= factor;
}

bool ModelGradients::has_non_finite() const {
  return x_embed.has_non_finite() || y_embed.has_non_finite() ||
         encoder.has_non_finite() || branch.has_non_finite() ||
         trunk.has_non_finite() || !std::isfinite(b0);
}

ModelGradients make_gradients(const DeepOSetsModel& model) {
  ModelGradients grads;
  grads.x_embed = nn::make_tape(model.x_embed);
  grads.y_embed = nn::make_tape(model.y_embed);
  grads.encoder = nn::make_tape(model.encoder);
  grads.branch = nn::make_tape(model.branch);
  grads.trunk = nn::make_tape(model.trunk);
  grads.b0 = 0.0;
  return grads;
}

void model_forward_task(const DeepOSetsModel& model, const Prompt& prompt,
                        std::span<const std::vector<double>> queries,
                        ModelWorkspace& ws) {
  check_prompt(model, prompt);
  const std::size_t n = prompt.examples.size();
  ws.x_embed_traces.resize(n);
  ws.y_embed_traces.resize(n);
  ws.encoder_traces.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    encode_example(model, prompt.examples[i], ws.y_padded, ws.embed_concat,
                   &ws.x_embed_traces[i], &ws.y_embed_traces[i],
                   &ws.encoder_traces[i]);
  }

  canonical_order(prompt, ws.order);
  ws.pooled.assign(static_cast<std::size_t>(model.config.pooled_dim()), 0.0);
  for (int idx : ws.order) {
    const std::vector<double>& h =
        ws.encoder_traces[static_cast<std::size_t>(idx)].output;
    for (std::size_t j = 0; j < ws.pooled.size(); ++j) ws.pooled[j] += h[j];
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (double& v : ws.pooled) v *= inv_n;

  ws.cache.coefficients = nn::forward(model.branch, ws.pooled, &ws.branch_trace);
  ws.cache.b0 = model.b0;

  ws.trunk_traces.resize(queries.size());
  ws.predictions.resize(queries.size());
  for (std::size_t q = 0; q < queries.size(); ++q) {
    check_query(model, queries[q]);
    const std::vector<double> basis =
        nn::forward(model.trunk, queries[q], &ws.trunk_traces[q]);
    double acc = 0.0;
    for (std::size_t i = 0; i < basis.size(); ++i) {
      acc += ws.cache.coefficients[i] * basis[i];
    }
    ws.predictions[q] = acc + model.b0;
  }
}

void model_backward_task(const DeepOSetsModel& model, const Prompt& prompt,
                         std::span<const double> upstream, ModelWorkspace& ws,
                         ModelGradients& grads) {
  const std::size_t n = prompt.examples.size();
  if (ws.encoder_traces.size() != n || !ws.branch_trace.valid ||
      ws.trunk_traces.size() != upstream.size()) {
    throw Error("model backward: no matching forward pass in the workspace");
  }

  const std::size_t p = ws.cache.coefficients.size();
  ws.branch_upstream.assign(p, 0.0);
  for (std::size_t q = 0; q < upstream.size(); ++q) {
    const double du = upstream[q];
    grads.b0 += du;
    const std::vector<double>& basis = ws.trunk_traces[q].output;
    for (std::size_t i = 0; i < p; ++i) {
      ws.branch_upstream[i] += du * basis[i];
    }
    ws.trunk_upstream.resize(p);
    for (std::size_t i = 0; i < p; ++i) {
      ws.trunk_upstream[i] = du * ws.cache.coefficients[i];
    }
    nn::backward_into(model.trunk, ws.trunk_traces[q], ws.trunk_upstream,
                      grads.trunk, ws.example_grad);
  }

  nn::backward_into(model.branch, ws.branch_trace, ws.branch_upstream,
                    grads.branch, ws.pooled_grad);

  // Mean pooling sends 1/n of the pooled gradient down every example path.
  const double inv_n = 1.0 / static_cast<double>(n);
  for (double& v : ws.pooled_grad) v *= inv_n;

  const int stream = model.config.pair_embed_dim / 2;
  for (std::size_t i = 0; i < n; ++i) {
    nn::backward_into(model.encoder, ws.encoder_traces[i], ws.pooled_grad,
                      grads.encoder, ws.example_grad);
    std::span<const double> concat_grad(ws.example_grad);
    nn::backward_into(model.x_embed, ws.x_embed_traces[i],
                      concat_grad.subspan(0, static_cast<std::size_t>(stream)),
                      grads.x_embed, ws.embed_grad);
    nn::backward_into(model.y_embed, ws.y_embed_traces[i],
                      concat_grad.subspan(static_cast<std::size_t>(stream)),
                      grads.y_embed, ws.embed_grad);
  }
}

ModelGradients model_gradients(const DeepOSetsModel& model,
                               const Prompt& prompt,
                               std::span<const double> x_query,
                               double upstream) {
  ModelWorkspace ws;
  const std::vector<std::vector<double>> queries = {
      std::vector<double>(x_query.begin(), x_query.end())};
  model_forward_task(model, prompt, queries, ws);
  ModelGradients grads = make_gradients(model);
  const double upstreams[1] = {upstream};
  model_backward_task(model, prompt, upstreams, ws, grads);
  return grads;
}

}  // namespace deeposets
