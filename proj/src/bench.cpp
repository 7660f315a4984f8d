#include "deeposets/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <ostream>
#include <thread>

#include "deeposets/baseline.hpp"
#include "deeposets/checkpoint.hpp"
#include "deeposets/parallel.hpp"

namespace deeposets::bench {

namespace {

std::string iso_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm_utc;
  gmtime_r(&now, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

// Test MSE reported in the literature for a 22M-parameter autoregressive
// transformer baseline on the same task family. Echoed in reports as
// reference rows; never measured by this project.
struct LiteratureCell {
  int d;
  int n;
  double sigma2;
  double mse;
};
constexpr LiteratureCell kTransformerReference[] = {
    {1, 10, 0.0, 4.74e-4}, {1, 10, 0.04, 6.80e-3}, {1, 10, 0.2, 0.132},
    {1, 10, 2.0, 6.91},    {5, 10, 0.0, 3.46e-3},  {5, 10, 0.04, 1.02e-2},
    {5, 10, 0.2, 8.81e-2}, {5, 10, 2.0, 5.17},
};

struct MeanStdErr {
  double mean = 0.0;
  double std_error = 0.0;
};

MeanStdErr mean_std_error(const std::vector<double>& values) {
  MeanStdErr out;
  const double count = static_cast<double>(values.size());
  if (values.empty()) return out;
  double acc = 0.0;
  for (double v : values) acc += v;
  out.mean = acc / count;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) {
      const double dev = v - out.mean;
      ss += dev * dev;
    }
    out.std_error = std::sqrt(ss / (count - 1.0) / count);
  }
  return out;
}

}  // namespace

void EvalGrid::validate() const {
  if (dims.empty() || prompt_sizes.empty() || noise_variances.empty()) {
    throw Error("eval grid: dims, prompt sizes, and noise levels must all be "
                "nonempty");
  }
  for (int d : dims)
    if (d < 1) throw Error(msg("eval grid: d ", d, " < 1"));
  for (int n : prompt_sizes)
    if (n < 1) throw Error(msg("eval grid: n ", n, " < 1"));
  for (double s2 : noise_variances)
    if (s2 < 0.0) throw Error(msg("eval grid: sigma2 ", s2, " < 0"));
  if (tasks_per_cell < 2) throw Error("eval grid: needs >= 2 tasks per cell");
  if (queries_per_task < 1) throw Error("eval grid: needs >= 1 query");
}

const CellResult* ExperimentReport::find(const std::string& method, int d,
                                         int n, double sigma2) const {
  for (const CellResult& cell : cells) {
    if (cell.method == method && cell.d == d && cell.n == n &&
        cell.sigma2 == sigma2) {
      return &cell;
    }
  }
  return nullptr;
}

void ExperimentReport::write_csv(std::ostream& os) const {
  os << "# kind eval_grid\n";
  os << "# seed " << seed << '\n';
  if (!checkpoint_hash.empty()) os << "# checkpoint_hash " << checkpoint_hash << '\n';
  os << "# timestamp " << timestamp << '\n';
  if (!config_echo.empty()) os << "# config " << config_echo << '\n';
  os << "method,d,n,sigma2,tasks,queries,mean_mse,std_error,measured\n";
  for (const CellResult& c : cells) {
    os << c.method << ',' << c.d << ',' << c.n << ',' << format_double(c.sigma2)
       << ',' << c.tasks << ',' << c.queries << ',' << format_double(c.mean_mse)
       << ',' << format_double(c.std_error) << ',' << (c.measured ? 1 : 0)
       << '\n';
  }
}

nlohmann::json ExperimentReport::to_json() const {
  nlohmann::json j;
  j["kind"] = "eval_grid";
  j["seed"] = seed;
  j["checkpoint_hash"] = checkpoint_hash;
  j["timestamp"] = timestamp;
  if (!config_echo.empty()) {
    j["config"] = nlohmann::json::parse(config_echo, nullptr, false);
  }
  nlohmann::json cells_json = nlohmann::json::array();
  for (const CellResult& c : cells) {
    cells_json.push_back({{"method", c.method},
                          {"d", c.d},
                          {"n", c.n},
                          {"sigma2", c.sigma2},
                          {"tasks", c.tasks},
                          {"queries", c.queries},
                          {"mean_mse", c.mean_mse},
                          {"std_error", c.std_error},
                          {"measured", c.measured}});
  }
  j["cells"] = cells_json;
  return j;
}

ExperimentReport ExperimentReport::from_json(const nlohmann::json& j) {
  if (!j.contains("kind") || j["kind"] != "eval_grid") {
    throw IoError("not an eval_grid report");
  }
  ExperimentReport report;
  report.seed = j.value("seed", std::uint64_t{0});
  report.checkpoint_hash = j.value("checkpoint_hash", std::string());
  report.timestamp = j.value("timestamp", std::string());
  if (j.contains("config")) report.config_echo = j["config"].dump();
  for (const nlohmann::json& c : j.at("cells")) {
    CellResult cell;
    cell.method = c.at("method").get<std::string>();
    cell.d = c.at("d").get<int>();
    cell.n = c.at("n").get<int>();
    cell.sigma2 = c.at("sigma2").get<double>();
    cell.tasks = c.at("tasks").get<long>();
    cell.queries = c.at("queries").get<int>();
    cell.mean_mse = c.at("mean_mse").get<double>();
    cell.std_error = c.at("std_error").get<double>();
    cell.measured = c.at("measured").get<bool>();
    report.cells.push_back(std::move(cell));
  }
  return report;
}

ExperimentReport run_eval_grid(const DeepOSetsModel* model,
                               const EvalGrid& grid) {
  grid.validate();
  if (model) {
    for (int d : grid.dims) {
      if (d != model->config.input_dim) {
        throw Error(msg("eval grid: d ", d, " does not match the checkpoint (",
                        model->config.input_dim, ")"));
      }
    }
  }

  ExperimentReport report;
  report.seed = grid.seed;
  report.timestamp = iso_timestamp();

  long cell_index = 0;
  for (int d : grid.dims) {
    for (int n : grid.prompt_sizes) {
      for (double sigma2 : grid.noise_variances) {
        taskgen::TaskDistribution dist;
        dist.input_dim = d;
        dist.prompt_size = n;
        dist.noise_variance = sigma2;
        dist.query_count = grid.queries_per_task;
        dist.seed = grid.seed;
        const std::uint64_t base =
            static_cast<std::uint64_t>(cell_index) *
            static_cast<std::uint64_t>(grid.tasks_per_cell);
        ++cell_index;

        const std::size_t task_count =
            static_cast<std::size_t>(grid.tasks_per_cell);
        std::vector<double> model_mses(model ? task_count : 0);
        std::vector<double> ols_mses(task_count);

        parallel_shards(task_count, grid.threads, [&](int, std::size_t begin,
                                                      std::size_t end) {
          for (std::size_t t = begin; t < end; ++t) {
            const taskgen::TaskSample task =
                taskgen::sample_task(dist, base + t);
            const double inv_q =
                1.0 / static_cast<double>(task.queries.size());

            const baseline::OlsFit fit = baseline::ols_fit(task.prompt);
            double ols_acc = 0.0;
            for (const taskgen::Query& q : task.queries) {
              const double err = baseline::ols_predict(fit, q.x) - q.target;
              ols_acc += err * err;
            }
            ols_mses[t] = ols_acc * inv_q;

            if (model) {
              const BranchCache cache =
                  branch_features(*model, encode_prompt(*model, task.prompt));
              double acc = 0.0;
              for (const taskgen::Query& q : task.queries) {
                const double err = predict(*model, cache, q.x) - q.target;
                acc += err * err;
              }
              model_mses[t] = acc * inv_q;
            }
          }
        });

        auto push_cell = [&](const std::string& method,
                             const std::vector<double>& mses) {
          const MeanStdErr stats = mean_std_error(mses);
          CellResult cell;
          cell.method = method;
          cell.d = d;
          cell.n = n;
          cell.sigma2 = sigma2;
          cell.tasks = grid.tasks_per_cell;
          cell.queries = grid.queries_per_task;
          cell.mean_mse = stats.mean;
          cell.std_error = stats.std_error;
          report.cells.push_back(std::move(cell));
        };
        if (model) push_cell("deeposets", model_mses);
        push_cell("ols", ols_mses);

        for (const LiteratureCell& ref : kTransformerReference) {
          if (ref.d == d && ref.n == n && ref.sigma2 == sigma2) {
            CellResult cell;
            cell.method = "transformer_reference";
            cell.d = d;
            cell.n = n;
            cell.sigma2 = sigma2;
            cell.tasks = 0;
            cell.queries = 0;
            cell.mean_mse = ref.mse;
            cell.std_error = 0.0;
            cell.measured = false;
            report.cells.push_back(std::move(cell));
          }
        }
      }
    }
  }
  return report;
}

NoiseRobustness compare_noise_robustness(const ExperimentReport& report,
                                         int d, int n) {
  std::vector<double> levels;
  for (const CellResult& c : report.cells) {
    if (c.d == d && c.n == n &&
        std::find(levels.begin(), levels.end(), c.sigma2) == levels.end()) {
      levels.push_back(c.sigma2);
    }
  }
  std::sort(levels.begin(), levels.end());

  auto collect = [&](const std::string& method) {
    std::vector<const CellResult*> cells;
    for (double s2 : levels) {
      const CellResult* c = report.find(method, d, n, s2);
      if (c) cells.push_back(c);
    }
    return cells;
  };

  const auto deeposets_cells = collect("deeposets");
  const auto ols_cells = collect("ols");
  if (deeposets_cells.size() < 3 || ols_cells.size() < 3 ||
      deeposets_cells.size() != ols_cells.size()) {
    throw Error(msg("noise robustness: need deeposets and ols rows at >= 3 "
                    "shared noise levels for d=", d, ", n=", n));
  }

  NoiseRobustness out;
  auto add_rows = [&](const std::vector<const CellResult*>& cells) {
    const double base_mse = cells.front()->mean_mse;
    for (const CellResult* c : cells) {
      NoiseRobustness::Row row;
      row.method = c->method;
      row.sigma2 = c->sigma2;
      row.mean_mse = c->mean_mse;
      row.ratio = base_mse > 0.0 ? c->mean_mse / base_mse
                                 : std::numeric_limits<double>::infinity();
      out.rows.push_back(row);
    }
  };
  add_rows(deeposets_cells);
  add_rows(ols_cells);
  for (const CellResult* c : collect("transformer_reference")) {
    NoiseRobustness::Row row;
    row.method = c->method;
    row.sigma2 = c->sigma2;
    row.mean_mse = c->mean_mse;
    const double base = collect("transformer_reference").front()->mean_mse;
    row.ratio = base > 0.0 ? c->mean_mse / base
                           : std::numeric_limits<double>::infinity();
    out.rows.push_back(row);
  }

  const double dos_growth = deeposets_cells.back()->mean_mse /
                            deeposets_cells.front()->mean_mse;
  const double ols_growth =
      ols_cells.back()->mean_mse / ols_cells.front()->mean_mse;
  const double rel_gap =
      std::abs(dos_growth - ols_growth) / std::max(dos_growth, ols_growth);
  if (rel_gap < 1e-9) {
    out.deeposets_slower_flag = 0;
  } else {
    out.deeposets_slower_flag = dos_growth < ols_growth ? 1 : -1;
  }
  return out;
}

std::string NoiseRobustness::describe() const {
  std::ostringstream os;
  os << "method,sigma2,mean_mse,ratio_vs_min_noise\n";
  for (const Row& r : rows) {
    os << r.method << ',' << format_double(r.sigma2) << ','
       << format_double(r.mean_mse) << ',' << format_double(r.ratio) << '\n';
  }
  os << "# deeposets ratio grows "
     << (deeposets_slower_flag > 0
             ? "slower than"
             : (deeposets_slower_flag < 0 ? "faster than" : "same as"))
     << " ols\n";
  return os.str();
}

// ---- latency ----

void LatencyConfig::validate() const {
  if (prompt_sizes.empty()) throw Error("latency: empty prompt-size list");
  for (int n : prompt_sizes)
    if (n < 1) throw Error(msg("latency: n ", n, " < 1"));
  if (repetitions < 100) {
    throw Error(msg("latency: repetitions ", repetitions,
                    " below minimum 100"));
  }
}

namespace {

// Sink defeating dead-code elimination of the timed calls.
volatile double g_latency_sink = 0.0;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Repeats `call` enough times per sample that one sample is well above the
// timer resolution, then reports per-call quartiles in milliseconds over
// `repetitions` samples (a further 10% leading samples are discarded as
// warmup).
template <typename F>
Quartiles measure_quartiles(F&& call, int repetitions, long& batch_out) {
  constexpr double kMinSampleSeconds = 20e-6;
  long batch = 1;
  for (;;) {
    const auto t0 = Clock::now();
    for (long i = 0; i < batch; ++i) call();
    const double elapsed = seconds_since(t0);
    if (elapsed >= kMinSampleSeconds || batch >= (1L << 22)) break;
    batch *= 2;
  }
  batch_out = batch;

  const int warmup = (repetitions + 9) / 10;
  const int total = repetitions + warmup;
  std::vector<double> samples(static_cast<std::size_t>(repetitions));
  for (int s = 0; s < total; ++s) {
    const auto t0 = Clock::now();
    for (long i = 0; i < batch; ++i) call();
    const double per_call = seconds_since(t0) / static_cast<double>(batch);
    if (s >= warmup) samples[static_cast<std::size_t>(s - warmup)] = per_call;
  }
  std::sort(samples.begin(), samples.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(samples.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, samples.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return (samples[lo] * (1.0 - frac) + samples[hi] * frac) * 1e3;  // ms
  };
  return {quantile(0.25), quantile(0.5), quantile(0.75)};
}

}  // namespace

LatencyReport run_latency_bench(const DeepOSetsModel& model,
                                const LatencyConfig& config) {
  config.validate();

  LatencyReport report;
  report.repetitions = config.repetitions;
  report.machine = machine_descriptor();
  report.timestamp = iso_timestamp();

  for (int n : config.prompt_sizes) {
    taskgen::TaskDistribution dist;
    dist.input_dim = model.config.input_dim;
    dist.prompt_size = n;
    dist.noise_variance = 0.2;
    dist.query_count = 128;
    dist.seed = config.seed;
    const taskgen::TaskSample task = taskgen::sample_task(dist, 0);
    const Prompt& prompt = task.prompt;

    LatencyRow row;
    row.n = n;

    row.encode_ms = measure_quartiles(
        [&] {
          const BranchCache cache =
              branch_features(model, encode_prompt(model, prompt));
          g_latency_sink = g_latency_sink + cache.coefficients[0];
        },
        config.repetitions, row.encode_batch);

    {
      std::size_t q = 0;
      row.first_query_ms = measure_quartiles(
          [&] {
            g_latency_sink =
                g_latency_sink +
                predict_full(model, prompt, task.queries[q].x);
            q = (q + 1) % task.queries.size();
          },
          config.repetitions, row.first_query_batch);
    }

    {
      const BranchCache cache =
          branch_features(model, encode_prompt(model, prompt));
      std::size_t q = 0;
      row.cached_query_ms = measure_quartiles(
          [&] {
            g_latency_sink =
                g_latency_sink + predict(model, cache, task.queries[q].x);
            q = (q + 1) % task.queries.size();
          },
          config.repetitions, row.cached_query_batch);
    }

    report.rows.push_back(row);
  }
  return report;
}

void LatencyReport::write_csv(std::ostream& os) const {
  os << "# kind latency\n";
  os << "# machine " << machine << '\n';
  os << "# repetitions " << repetitions << '\n';
  if (!checkpoint_hash.empty()) os << "# checkpoint_hash " << checkpoint_hash << '\n';
  os << "# timestamp " << timestamp << '\n';
  if (!config_echo.empty()) os << "# config " << config_echo << '\n';
  os << "n,encode_ms_p25,encode_ms_median,encode_ms_p75,"
        "first_query_ms_p25,first_query_ms_median,first_query_ms_p75,"
        "cached_query_ms_p25,cached_query_ms_median,cached_query_ms_p75,"
        "encode_batch,first_query_batch,cached_query_batch\n";
  for (const LatencyRow& r : rows) {
    os << r.n << ',' << format_double(r.encode_ms.p25) << ','
       << format_double(r.encode_ms.median) << ','
       << format_double(r.encode_ms.p75) << ','
       << format_double(r.first_query_ms.p25) << ','
       << format_double(r.first_query_ms.median) << ','
       << format_double(r.first_query_ms.p75) << ','
       << format_double(r.cached_query_ms.p25) << ','
       << format_double(r.cached_query_ms.median) << ','
       << format_double(r.cached_query_ms.p75) << ',' << r.encode_batch << ','
       << r.first_query_batch << ',' << r.cached_query_batch << '\n';
  }
}

nlohmann::json LatencyReport::to_json() const {
  nlohmann::json j;
  j["kind"] = "latency";
  j["machine"] = machine;
  j["repetitions"] = repetitions;
  j["checkpoint_hash"] = checkpoint_hash;
  j["timestamp"] = timestamp;
  if (!config_echo.empty()) {
    j["config"] = nlohmann::json::parse(config_echo, nullptr, false);
  }
  nlohmann::json rows_json = nlohmann::json::array();
  for (const LatencyRow& r : rows) {
    rows_json.push_back(
        {{"n", r.n},
         {"encode_ms", {r.encode_ms.p25, r.encode_ms.median, r.encode_ms.p75}},
         {"first_query_ms",
          {r.first_query_ms.p25, r.first_query_ms.median, r.first_query_ms.p75}},
         {"cached_query_ms",
          {r.cached_query_ms.p25, r.cached_query_ms.median,
           r.cached_query_ms.p75}},
         {"encode_batch", r.encode_batch},
         {"first_query_batch", r.first_query_batch},
         {"cached_query_batch", r.cached_query_batch}});
  }
  j["rows"] = rows_json;
  return j;
}

LatencyReport LatencyReport::from_json(const nlohmann::json& j) {
  if (!j.contains("kind") || j["kind"] != "latency") {
    throw IoError("not a latency report");
  }
  LatencyReport report;
  report.machine = j.value("machine", std::string());
  report.repetitions = j.value("repetitions", 0);
  report.checkpoint_hash = j.value("checkpoint_hash", std::string());
  report.timestamp = j.value("timestamp", std::string());
  if (j.contains("config")) report.config_echo = j["config"].dump();
  for (const nlohmann::json& r : j.at("rows")) {
    LatencyRow row;
    row.n = r.at("n").get<int>();
    auto read_q = [&](const char* key) {
      const nlohmann::json& arr = r.at(key);
      return Quartiles{arr.at(0).get<double>(), arr.at(1).get<double>(),
                       arr.at(2).get<double>()};
    };
    row.encode_ms = read_q("encode_ms");
    row.first_query_ms = read_q("first_query_ms");
    row.cached_query_ms = read_q("cached_query_ms");
    row.encode_batch = r.value("encode_batch", 1L);
    row.first_query_batch = r.value("first_query_batch", 1L);
    row.cached_query_batch = r.value("cached_query_batch", 1L);
    report.rows.push_back(row);
  }
  return report;
}

double theil_sen_slope(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw Error("theil_sen_slope: need >= 2 paired points");
  }
  std::vector<double> slopes;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = i + 1; j < xs.size(); ++j) {
      if (xs[i] != xs[j]) slopes.push_back((ys[j] - ys[i]) / (xs[j] - xs[i]));
    }
  }
  if (slopes.empty()) throw Error("theil_sen_slope: all x values equal");
  std::sort(slopes.begin(), slopes.end());
  const std::size_t mid = slopes.size() / 2;
  return slopes.size() % 2 == 1
             ? slopes[mid]
             : 0.5 * (slopes[mid - 1] + slopes[mid]);
}

std::string machine_descriptor() {
  std::string cpu = "unknown cpu";
  std::ifstream cpuinfo("/proc/cpuinfo");
  std::string line;
  while (std::getline(cpuinfo, line)) {
    if (line.rfind("model name", 0) == 0) {
      const std::size_t colon = line.find(':');
      if (colon != std::string::npos) {
        cpu = line.substr(colon + 1);
        const std::size_t first = cpu.find_first_not_of(' ');
        if (first != std::string::npos) cpu = cpu.substr(first);
      }
      break;
    }
  }
  return msg(cpu, ", ", std::thread::hardware_concurrency(),
             " hardware threads, compiler ", __VERSION__);
}

}  // namespace deeposets::bench
