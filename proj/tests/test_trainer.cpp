#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "deeposets/rng.hpp"
#include "deeposets/trainer.hpp"
#include "testutil.hpp"

using namespace deeposets;
namespace fs = std::filesystem;

namespace {

fs::path make_temp_dir() {
  std::string templ =
      (fs::temp_directory_path() / "deeposets_trainer_XXXXXX").string();
  char* raw = templ.data();
  REQUIRE(mkdtemp(raw) != nullptr);
  return fs::path(raw);
}

std::string slurp(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

trainer::TrainConfig tiny_train_config(std::uint64_t seed) {
  rng::RandomStream pick(seed, 900);
  trainer::TrainConfig config;
  config.model_config = testutil::tiny_config(pick);
  config.tasks.input_dim = 1;
  config.tasks.prompt_size = 4;
  config.tasks.noise_variance = 0.0;
  config.tasks.query_count = 1;
  config.tasks.seed = seed;
  config.iterations = 40;
  config.batch_size = 8;
  config.seed = seed;
  config.log_every = 10;
  config.threads = 1;
  return config;
}

}  // namespace

TEST_CASE("loss: exact fits give zero, constant-zero model gives mean square") {
  rng::RandomStream stream(1, 1);
  DeepOSetsModel model = init_model(testutil::tiny_config(stream), 3);
  // zero branch and bias force the prediction to 0 everywhere
  for (auto& layer : model.branch.layers) {
    std::fill(layer.weights.begin(), layer.weights.end(), 0.0);
    std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
  }
  model.b0 = 0.0;

  taskgen::TaskSample task;
  task.weights = {0.0};
  task.prompt.examples.push_back({{0.5}, 0.0});
  task.queries.push_back({{1.0}, 0.0});
  task.queries.push_back({{2.0}, 0.0});
  CHECK(trainer::loss(model, task) == 0.0);

  task.queries.clear();
  task.queries.push_back({{1.0}, 1.0});
  task.queries.push_back({{2.0}, -1.0});
  CHECK(trainer::loss(model, task) == 1.0);
}

TEST_CASE("loss matches an independent recomputation to 1e-14") {
  rng::RandomStream stream(2, 1);
  const DeepOSetsModel model = init_model(testutil::tiny_config(stream), 5);
  taskgen::TaskDistribution dist;
  dist.input_dim = 1;
  dist.prompt_size = 6;
  dist.query_count = 5;
  dist.seed = 77;
  const auto task = taskgen::sample_task(dist, 0);

  double acc = 0.0;
  for (const auto& q : task.queries) {
    const double err = predict_full(model, task.prompt, q.x) - q.target;
    acc += err * err;
  }
  const double reference = acc / static_cast<double>(task.queries.size());
  CHECK(std::abs(trainer::loss(model, task) - reference) <= 1e-14);
}

TEST_CASE("train: zero iterations returns the initialized model unchanged") {
  trainer::TrainConfig config = tiny_train_config(4);
  config.iterations = 0;
  const trainer::TrainResult result = trainer::train(config);
  const DeepOSetsModel reference = init_model(config.model_config, config.seed);
  CHECK(result.checkpoint.model.encoder.layers[0].weights ==
        reference.encoder.layers[0].weights);
  CHECK(result.checkpoint.model.trunk.layers[1].weights ==
        reference.trunk.layers[1].weights);
  CHECK(result.log.entries.empty());
  CHECK(result.loss_history.empty());
  CHECK(result.checkpoint.iterations == 0);
}

TEST_CASE("train: bitwise deterministic for a fixed seed and thread count") {
  const fs::path dir = make_temp_dir();
  for (int threads : {1, 2}) {
    trainer::TrainConfig config = tiny_train_config(9);
    config.threads = threads;
    config.checkpoint_prefix = (dir / msg("a_t", threads)).string();
    trainer::train(config);
    config.checkpoint_prefix = (dir / msg("b_t", threads)).string();
    trainer::train(config);
    CHECK(slurp(dir / msg("a_t", threads, ".ckpt")) ==
          slurp(dir / msg("b_t", threads, ".ckpt")));
  }
  fs::remove_all(dir);
}

TEST_CASE("train: resuming reproduces the uninterrupted trajectory bitwise") {
  const fs::path dir = make_temp_dir();

  trainer::TrainConfig full = tiny_train_config(12);
  full.checkpoint_every = 20;
  full.checkpoint_prefix = (dir / "full").string();
  trainer::train(full);

  trainer::TrainConfig resumed = tiny_train_config(12);
  resumed.resume_path = (dir / "full_iter20.ckpt").string();
  resumed.checkpoint_prefix = (dir / "resumed").string();
  const trainer::TrainResult result = trainer::train(resumed);
  CHECK(result.loss_history.size() == 20);  // iterations 21..40 only

  CHECK(slurp(dir / "full.ckpt") == slurp(dir / "resumed.ckpt"));
  fs::remove_all(dir);
}

TEST_CASE("train: non-finite loss aborts with a diagnostic checkpoint") {
  const fs::path dir = make_temp_dir();

  trainer::TrainConfig config = tiny_train_config(15);
  Checkpoint poisoned;
  poisoned.model = init_model(config.model_config, config.seed);
  poisoned.model.b0 = std::numeric_limits<double>::quiet_NaN();
  poisoned.seed = config.seed;
  poisoned.iterations = 0;
  trainer::ModelOptimizer opt = trainer::ModelOptimizer::create(poisoned.model);
  poisoned.optimizer = opt.snapshot();
  save_checkpoint(poisoned, (dir / "poisoned.ckpt").string());

  config.resume_path = (dir / "poisoned.ckpt").string();
  config.checkpoint_prefix = (dir / "run").string();
  CHECK_THROWS_WITH_AS(trainer::train(config),
                       doctest::Contains("non-finite loss"), Error);
  CHECK(fs::exists(dir / "run_diagnostic.ckpt"));
  fs::remove_all(dir);
}

TEST_CASE("train: loss decreases and the log tracks the schedule") {
  trainer::TrainConfig config = tiny_train_config(30);
  config.iterations = 300;
  config.batch_size = 16;
  config.log_every = 25;
  const trainer::TrainResult result = trainer::train(config);

  REQUIRE(result.loss_history.size() == 300);
  double head = 0.0, tail = 0.0;
  for (int i = 0; i < 30; ++i) {
    head += result.loss_history[static_cast<std::size_t>(i)];
    tail += result.loss_history[result.loss_history.size() - 1 -
                                static_cast<std::size_t>(i)];
  }
  CHECK(tail < head);  // 30-iteration means, start vs end

  long prev = 0;
  for (const auto& entry : result.log.entries) {
    CHECK(entry.iteration > prev);
    prev = entry.iteration;
    CHECK(std::isfinite(entry.loss));
    CHECK(entry.loss >= 0.0);
    CHECK(entry.learning_rate == 1e-3);  // t < 2000 throughout
  }
  CHECK(result.log.entries.back().iteration == 300);

  // smoothed loss is the mean of the last min(500, run) losses
  double mean = 0.0;
  for (double v : result.loss_history) mean += v;
  mean /= static_cast<double>(result.loss_history.size());
  CHECK(result.smoothed_loss == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("train log CSV: header plus one row per entry") {
  trainer::TrainConfig config = tiny_train_config(31);
  config.iterations = 20;
  config.log_every = 10;
  const trainer::TrainResult result = trainer::train(config);
  std::ostringstream os;
  result.log.write_csv(os, "{\"command\":\"test\"}");
  std::istringstream is(os.str());
  std::string line;
  int rows = 0;
  bool header_seen = false;
  while (std::getline(is, line)) {
    if (line.rfind("#", 0) == 0) continue;
    if (!header_seen) {
      CHECK(line == "iteration,loss,lr,elapsed_seconds");
      header_seen = true;
      continue;
    }
    ++rows;
  }
  CHECK(rows == static_cast<int>(result.log.entries.size()));
}

TEST_CASE("train: config validation") {
  trainer::TrainConfig config = tiny_train_config(32);
  config.batch_size = 0;
  CHECK_THROWS_AS(trainer::train(config), Error);

  trainer::TrainConfig mismatch = tiny_train_config(33);
  mismatch.tasks.input_dim = 2;
  CHECK_THROWS_AS(trainer::train(mismatch), ShapeError);
}
