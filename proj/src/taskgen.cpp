#include "deeposets/taskgen.hpp"

#include <cmath>
#include <ostream>

#include <nlohmann/json.hpp>

namespace deeposets::taskgen {

void TaskDistribution::validate() const {
  if (input_dim < 1) throw Error(msg("task: input_dim ", input_dim, " < 1"));
  if (prompt_size < 1) {
    throw Error(msg("task: prompt_size ", prompt_size, " < 1"));
  }
  if (noise_variance < 0.0) {
    throw Error(msg("task: negative noise variance ", noise_variance));
  }
  if (query_count < 0) {
    throw Error(msg("task: negative query count ", query_count));
  }
}

namespace {

// Stream ids are split so that the (a, x, query) draws of a task are
// unaffected by whether noise is drawn.
constexpr std::uint64_t kDataStream = 0;
constexpr std::uint64_t kNoiseStream = 1;

std::vector<double> draw_vector(rng::RandomStream& stream, int dim) {
  std::vector<double> v(static_cast<std::size_t>(dim));
  for (double& c : v) c = stream.normal();
  return v;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace

TaskSample sample_task(const TaskDistribution& dist, std::uint64_t index) {
  dist.validate();
  rng::RandomStream data(dist.seed, 2 * index + kDataStream);

  TaskSample task;
  task.weights = draw_vector(data, dist.input_dim);
  task.prompt.examples.resize(static_cast<std::size_t>(dist.prompt_size));
  for (Example& ex : task.prompt.examples) {
    ex.x = draw_vector(data, dist.input_dim);
    ex.y = dot(task.weights, ex.x);
  }
  task.queries.resize(static_cast<std::size_t>(dist.query_count));
  for (Query& q : task.queries) {
    q.x = draw_vector(data, dist.input_dim);
    q.target = dot(task.weights, q.x);
  }

  if (dist.noise_variance > 0.0) {
    rng::RandomStream noise(dist.seed, 2 * index + kNoiseStream);
    const double sigma = std::sqrt(dist.noise_variance);
    for (Example& ex : task.prompt.examples) ex.y += sigma * noise.normal();
  }
  return task;
}

TaskSample sample_task(const TaskDistribution& dist, TaskStream& stream) {
  return sample_task(dist, stream.next_index++);
}

std::vector<TaskSample> sample_batch(const TaskDistribution& dist,
                                     std::size_t count, TaskStream& stream) {
  std::vector<TaskSample> batch;
  batch.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    batch.push_back(sample_task(dist, stream));
  }
  return batch;
}

void write_tasks_jsonl(const TaskDistribution& dist, std::uint64_t first_index,
                       std::size_t count, std::ostream& os) {
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint64_t index = first_index + i;
    const TaskSample task = sample_task(dist, index);
    nlohmann::json record;
    record["seed"] = dist.seed;
    record["index"] = index;
    record["d"] = dist.input_dim;
    record["n"] = dist.prompt_size;
    record["sigma2"] = dist.noise_variance;
    record["a"] = task.weights;
    nlohmann::json xs = nlohmann::json::array();
    nlohmann::json ys = nlohmann::json::array();
    for (const Example& ex : task.prompt.examples) {
      xs.push_back(ex.x);
      ys.push_back(ex.y);
    }
    record["xs"] = xs;
    record["ys"] = ys;
    nlohmann::json queries = nlohmann::json::array();
    for (const Query& q : task.queries) {
      queries.push_back({{"x", q.x}, {"target", q.target}});
    }
    record["queries"] = queries;
    os << record.dump() << '\n';
  }
}

}  // namespace deeposets::taskgen
