#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "deeposets/prompt.hpp"
#include "deeposets/rng.hpp"

namespace deeposets::taskgen {

// A query point together with its noiseless target a^T x.
struct Query {
  std::vector<double> x;
  double target = 0.0;
};

// One sampled linear task: ground-truth weights, its prompt, and held-out
// queries. Noise (when configured) corrupts prompt labels only; query
// targets stay noiseless.
struct TaskSample {
  std::vector<double> weights;  // ground truth a
  Prompt prompt;
  std::vector<Query> queries;
};

// Distribution of tasks: f(x) = a^T x with a, x, x_query all i.i.d.
// N(0, I_d), plus optional N(0, sigma2) label noise on the prompt.
struct TaskDistribution {
  int input_dim = 1;
  int prompt_size = 10;
  double noise_variance = 0.0;
  int query_count = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

// Samples task number `index`. Tasks are addressable: any index can be drawn
// independently, and the same (distribution, index) pair is bitwise
// reproducible. Distributions differing only in noise_variance share the
// same underlying (a, x, query) draws, so noise levels can be compared on
// paired tasks.
TaskSample sample_task(const TaskDistribution& dist, std::uint64_t index);

// Advancing cursor over task indices; the distribution is passed alongside,
// so one cursor can drive several noise levels over paired tasks.
struct TaskStream {
  std::uint64_t next_index = 0;
};

// Samples the task at the cursor and advances it.
TaskSample sample_task(const TaskDistribution& dist, TaskStream& stream);

// `count` consecutive tasks starting at the stream position; equivalent to
// that many sequential sample_task calls.
std::vector<TaskSample> sample_batch(const TaskDistribution& dist,
                                     std::size_t count, TaskStream& stream);

// Writes tasks as line-delimited JSON records
// {seed, index, d, n, sigma2, a, xs, ys, queries} for fixture exchange.
void write_tasks_jsonl(const TaskDistribution& dist, std::uint64_t first_index,
                       std::size_t count, std::ostream& os);

}  // namespace deeposets::taskgen
