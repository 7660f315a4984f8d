#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "deeposets/model.hpp"
#include "deeposets/taskgen.hpp"

namespace deeposets::bench {

// Cartesian evaluation grid over (d, n, sigma2). Every cell draws its own
// independent tasks; the whole grid is a pure function of the seed.
struct EvalGrid {
  std::vector<int> dims;
  std::vector<int> prompt_sizes;
  std::vector<double> noise_variances;
  int tasks_per_cell = 2000;
  int queries_per_task = 16;
  std::uint64_t seed = 1;
  int threads = 1;

  void validate() const;
};

struct CellResult {
  std::string method;  // "deeposets", "ols", or "transformer_reference"
  int d = 0;
  int n = 0;
  double sigma2 = 0.0;
  long tasks = 0;
  int queries = 0;
  double mean_mse = 0.0;
  double std_error = 0.0;
  bool measured = true;  // false for literature reference rows
};

struct ExperimentReport {
  std::vector<CellResult> cells;
  std::uint64_t seed = 0;
  std::string checkpoint_hash;  // empty for baseline-only runs
  std::string config_echo;      // resolved configuration, JSON text
  std::string timestamp;

  const CellResult* find(const std::string& method, int d, int n,
                         double sigma2) const;

  void write_csv(std::ostream& os) const;
  nlohmann::json to_json() const;
  static ExperimentReport from_json(const nlohmann::json& j);
};

// Evaluates the grid. `model` may be null for a baseline-only run; when
// present, every d in the grid must equal the model's input dimension. MSE
// is the mean over tasks and queries of (prediction - noiseless target)^2;
// noise corrupts prompt labels only.
ExperimentReport run_eval_grid(const DeepOSetsModel* model,
                               const EvalGrid& grid);

// Noise-sensitivity summary at fixed (d, n): the MSE ratio of each method
// relative to its own value at the smallest noise level.
struct NoiseRobustness {
  struct Row {
    std::string method;
    double sigma2 = 0.0;
    double mean_mse = 0.0;
    double ratio = 0.0;  // mse / mse(min sigma2)
  };
  std::vector<Row> rows;
  // +1: deeposets' ratio grows slower than ols'; 0: neutral; -1: faster.
  int deeposets_slower_flag = 0;

  std::string describe() const;
};

// Requires deeposets and ols rows at >= 3 noise levels for (d, n); throws
// Error otherwise.
NoiseRobustness compare_noise_robustness(const ExperimentReport& report,
                                         int d, int n);

// ---- latency ----

struct LatencyConfig {
  std::vector<int> prompt_sizes;
  int repetitions = 300;  // must be >= 100
  std::uint64_t seed = 7;

  void validate() const;
};

struct Quartiles {
  double p25 = 0.0;
  double median = 0.0;
  double p75 = 0.0;
};

struct LatencyRow {
  int n = 0;
  Quartiles encode_ms;       // encode_prompt + branch_features
  Quartiles first_query_ms;  // full pipeline, prompt processed fresh
  Quartiles cached_query_ms; // predict with the branch cache held fixed
  long encode_batch = 1;     // calls per timed sample (widened when a single
  long first_query_batch = 1;  // call is below timer resolution)
  long cached_query_batch = 1;
};

struct LatencyReport {
  std::vector<LatencyRow> rows;
  int repetitions = 0;
  std::string machine;
  std::string checkpoint_hash;
  std::string config_echo;
  std::string timestamp;

  void write_csv(std::ostream& os) const;
  nlohmann::json to_json() const;
  static LatencyReport from_json(const nlohmann::json& j);
};

// Measures inference latency per prompt size, single-threaded, reporting
// median and interquartile range over `repetitions` samples after a 10%
// warmup discard.
LatencyReport run_latency_bench(const DeepOSetsModel& model,
                                const LatencyConfig& config);

// Median of pairwise slopes; robust trend estimate for latency flatness
// checks.
double theil_sen_slope(std::span<const double> xs, std::span<const double> ys);

// Human-readable host summary (cpu model, core count, compiler).
std::string machine_descriptor();

}  // namespace deeposets::bench
