#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <sstream>

#include "deeposets/checkpoint.hpp"
#include "deeposets/rng.hpp"
#include "deeposets/trainer.hpp"
#include "testutil.hpp"

using namespace deeposets;

namespace {

Checkpoint sample_checkpoint(bool with_optimizer) {
  rng::RandomStream stream(71, 1);
  Checkpoint ckpt;
  ckpt.model = init_model(testutil::tiny_config(stream), 19);
  ckpt.seed = 19;
  ckpt.iterations = 123;
  ckpt.final_loss = 0.012345678901234567;
  if (with_optimizer) {
    trainer::ModelOptimizer opt = trainer::ModelOptimizer::create(ckpt.model);
    // non-trivial moments
    ModelGradients grads = make_gradients(ckpt.model);
    const Prompt prompt = testutil::random_prompt(3, 1, stream);
    const std::vector<double> q = {0.2};
    grads = model_gradients(ckpt.model, prompt, q, 0.7);
    opt.step(ckpt.model, grads);
    ckpt.optimizer = opt.snapshot();
  }
  return ckpt;
}

std::string to_string(const Checkpoint& ckpt) {
  std::ostringstream os;
  save_checkpoint(ckpt, os);
  return os.str();
}

}  // namespace

TEST_CASE("format_double: 17 significant digits round-trip exactly") {
  rng::RandomStream stream(1, 0);
  for (int i = 0; i < 10000; ++i) {
    double v = std::ldexp(stream.normal(), static_cast<int>(stream.uniform() * 600) - 300);
    const double parsed = std::strtod(format_double(v).c_str(), nullptr);
    CHECK(std::memcmp(&parsed, &v, sizeof v) == 0);
  }
  for (double v : {0.0, -0.0, 0.1, 1.0 / 3.0, 1e-308, 1e308, 4.9e-324}) {
    const double parsed = std::strtod(format_double(v).c_str(), nullptr);
    CHECK(std::memcmp(&parsed, &v, sizeof v) == 0);
  }
}

TEST_CASE("checkpoint: save -> load -> save is byte-identical") {
  for (bool with_opt : {false, true}) {
    const Checkpoint original = sample_checkpoint(with_opt);
    const std::string first = to_string(original);
    std::istringstream is(first);
    const Checkpoint loaded = load_checkpoint(is, "<memory>");
    const std::string second = to_string(loaded);
    CHECK(first == second);
    CHECK(loaded.seed == original.seed);
    CHECK(loaded.iterations == original.iterations);
    CHECK(loaded.optimizer.has_value() == with_opt);
  }
}

TEST_CASE("checkpoint: loaded model predicts identically to 0 ulp") {
  const Checkpoint original = sample_checkpoint(false);
  std::istringstream is(to_string(original));
  const Checkpoint loaded = load_checkpoint(is, "<memory>");

  rng::RandomStream stream(5, 5);
  const Prompt prompt = testutil::random_prompt(6, 1, stream);
  for (int i = 0; i < 50; ++i) {
    const std::vector<double> q = {stream.normal()};
    const double a = predict_full(original.model, prompt, q);
    const double b = predict_full(loaded.model, prompt, q);
    CHECK(std::memcmp(&a, &b, sizeof a) == 0);
  }
}

TEST_CASE("checkpoint: non-finite parameters survive the round trip") {
  Checkpoint ckpt = sample_checkpoint(false);
  ckpt.model.encoder.layers[0].weights[0] = std::nan("");
  ckpt.model.encoder.layers[0].weights[1] =
      std::numeric_limits<double>::infinity();
  const std::string first = to_string(ckpt);
  std::istringstream is(first);
  const Checkpoint loaded = load_checkpoint(is, "<memory>");
  CHECK(std::isnan(loaded.model.encoder.layers[0].weights[0]));
  CHECK(std::isinf(loaded.model.encoder.layers[0].weights[1]));
  CHECK(to_string(loaded) == first);
}

TEST_CASE("checkpoint: version mismatch is rejected") {
  std::string text = to_string(sample_checkpoint(false));
  text.replace(text.find("v1"), 2, "v9");
  std::istringstream is(text);
  CHECK_THROWS_WITH_AS(load_checkpoint(is, "<memory>"),
                       doctest::Contains("not a compatible checkpoint"),
                       IoError);
}

TEST_CASE("checkpoint: truncation is detected at any cut point") {
  const std::string full = to_string(sample_checkpoint(true));
  for (double fraction : {0.05, 0.33, 0.70, 0.95, 0.999}) {
    const std::string cut =
        full.substr(0, static_cast<std::size_t>(full.size() * fraction));
    std::istringstream is(cut);
    CHECK_THROWS_AS(load_checkpoint(is, "<memory>"), IoError);
  }
  // even dropping just the trailing "end" line must fail
  const std::string no_end = full.substr(0, full.rfind("end"));
  std::istringstream is(no_end);
  CHECK_THROWS_AS(load_checkpoint(is, "<memory>"), IoError);
}

TEST_CASE("checkpoint: garbage tokens are a structured error") {
  std::string text = to_string(sample_checkpoint(false));
  const std::size_t pos = text.find("weights ");
  text.replace(pos + 8, 3, "zzz");
  std::istringstream is(text);
  CHECK_THROWS_AS(load_checkpoint(is, "<memory>"), IoError);
}

TEST_CASE("checkpoint: missing file is an IoError") {
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/path.ckpt"), IoError);
}
