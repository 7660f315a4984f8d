#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "deeposets/checkpoint.hpp"
#include "deeposets/model.hpp"
#include "deeposets/taskgen.hpp"

namespace deeposets::trainer {

// Adam over all model parameters with a shared step counter, so the decayed
// learning rate is consistent across subnetworks.
struct ModelOptimizer {
  nn::AdamState x_embed, y_embed, encoder, branch, trunk;
  double b0_first = 0.0;
  double b0_second = 0.0;
  long steps = 0;

  static ModelOptimizer create(const DeepOSetsModel& model);

  // Applies one Adam update. Throws Error on non-finite gradients, leaving
  // every parameter unchanged.
  void step(DeepOSetsModel& model, const ModelGradients& grads);

  double current_learning_rate() const {
    return encoder.learning_rate_at(steps);
  }

  OptimizerSnapshot snapshot() const;
  void restore(const DeepOSetsModel& model, const OptimizerSnapshot& snap);
};

struct TrainConfig {
  ModelConfig model_config;
  taskgen::TaskDistribution tasks;  // query_count = queries per task
  long iterations = 16000;
  int batch_size = 64;
  std::uint64_t seed = 0;
  long log_every = 50;
  long checkpoint_every = 0;        // 0 = final checkpoint only
  std::string checkpoint_prefix;    // empty = write no files
  std::string resume_path;          // empty = fresh initialization
  int threads = 1;

  void validate() const;
};

struct TrainLogEntry {
  long iteration = 0;  // 1-based
  double loss = 0.0;
  double learning_rate = 0.0;
  double elapsed_seconds = 0.0;
};

struct TrainLog {
  std::vector<TrainLogEntry> entries;

  // CSV: iteration,loss,lr,elapsed_seconds with '#' provenance header lines.
  void write_csv(std::ostream& os, const std::string& config_echo) const;
};

struct TrainResult {
  Checkpoint checkpoint;            // model + optimizer + metadata
  TrainLog log;
  std::vector<double> loss_history; // one per iteration of this run
  double smoothed_loss = 0.0;       // mean of the last min(500, run) losses
  long iterations_completed = 0;
};

// Mean squared error of the model on one task's queries against their
// noiseless targets. Encodes the prompt once.
double loss(const DeepOSetsModel& model, const taskgen::TaskSample& task);

// Runs the training loop: fresh tasks every iteration (task index =
// iteration * batch_size + position), quadratic loss, Adam with stepped
// exponential decay. Deterministic for a fixed (seed, threads); threads = 1
// is bitwise reproducible and identical to the sequential loop.
TrainResult train(const TrainConfig& config);

// Writes/loads checkpoints in the text format of checkpoint.hpp.
void save(const TrainResult& result, const std::string& path);

}  // namespace deeposets::trainer
