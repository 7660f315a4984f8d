// Command-line front end: train models, evaluate accuracy grids, benchmark
// inference latency, answer one-off prompts, and render report plots.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "deeposets/baseline.hpp"
#include "deeposets/bench.hpp"
#include "deeposets/checkpoint.hpp"
#include "deeposets/model.hpp"
#include "deeposets/svgplot.hpp"
#include "deeposets/taskgen.hpp"
#include "deeposets/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using namespace deeposets;

// "1,2,5" and "1..100" (inclusive), mixed per comma-separated token.
std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> values;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) {
    if (token.empty()) continue;
    const std::size_t dots = token.find("..");
    if (dots == std::string::npos) {
      values.push_back(std::stoi(token));
    } else {
      const int lo = std::stoi(token.substr(0, dots));
      const int hi = std::stoi(token.substr(dots + 2));
      if (hi < lo) throw CLI::ValidationError(msg("bad range '", token, "'"));
      for (int v = lo; v <= hi; ++v) values.push_back(v);
    }
  }
  if (values.empty()) {
    throw CLI::ValidationError(msg("empty list '", text, "'"));
  }
  return values;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) {
    if (!token.empty()) values.push_back(std::stod(token));
  }
  if (values.empty()) {
    throw CLI::ValidationError(msg("empty list '", text, "'"));
  }
  return values;
}

std::string hash_hex(const std::string& path) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a_file_hash(path)));
  return buf;
}

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError(msg("cannot open '", path.string(), "' for writing"));
  os << content;
}

void write_resolved_config(const fs::path& out_dir, const json& echo) {
  write_text_file(out_dir / "resolved_config.json", echo.dump(2) + "\n");
}

int default_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// ---- model config construction ----

ModelConfig config_from_widths(int d, int embed_stream,
                               std::vector<int> encoder_widths,
                               std::vector<int> branch_widths,
                               std::vector<int> trunk_widths) {
  using nn::Activation;
  if (encoder_widths.empty() || branch_widths.empty() || trunk_widths.empty()) {
    throw Error("custom model: encoder/branch/trunk widths must be nonempty");
  }
  ModelConfig config;
  config.input_dim = d;
  config.pair_embed_dim = 2 * embed_stream;
  config.encoder_sizes = {config.pair_embed_dim};
  config.encoder_sizes.insert(config.encoder_sizes.end(),
                              encoder_widths.begin(), encoder_widths.end());
  config.encoder_acts.assign(encoder_widths.size() - 1, Activation::kSelu);
  config.encoder_acts.push_back(Activation::kIdentity);
  config.branch_sizes = {config.encoder_sizes.back()};
  config.branch_sizes.insert(config.branch_sizes.end(), branch_widths.begin(),
                             branch_widths.end());
  config.branch_acts.assign(branch_widths.size() - 1, Activation::kTanh);
  config.branch_acts.push_back(Activation::kIdentity);
  config.trunk_sizes = {d};
  config.trunk_sizes.insert(config.trunk_sizes.end(), trunk_widths.begin(),
                            trunk_widths.end());
  config.trunk_acts.assign(trunk_widths.size(), Activation::kTanh);
  config.readout_width = branch_widths.back();
  config.validate();
  return config;
}

json model_config_echo(const ModelConfig& config) {
  json j;
  j["d"] = config.input_dim;
  j["pair_embed_dim"] = config.pair_embed_dim;
  j["encoder_sizes"] = config.encoder_sizes;
  j["branch_sizes"] = config.branch_sizes;
  j["trunk_sizes"] = config.trunk_sizes;
  j["readout_width"] = config.readout_width;
  j["parameters"] = config.parameter_count();
  return j;
}

// ---- train ----

struct TrainArgs {
  std::string preset;
  int custom_d = 0;
  int custom_embed_stream = 0;
  std::string custom_encoder, custom_branch, custom_trunk;
  long iterations = 16000;
  int batch = 64;
  int queries = 1;
  int prompt_size = 0;  // 0 = preset default (13 for d=1, 50 for d=5)
  double noise = 0.0;
  std::uint64_t seed = 42;
  int threads = default_threads();
  long log_every = 50;
  long checkpoint_every = 0;
  std::string out_dir = "out/train";
  std::string resume;
};

int run_train(const TrainArgs& args) {
  trainer::TrainConfig config;
  if (!args.resume.empty()) {
    config.model_config = load_checkpoint(args.resume).model.config;
  } else if (args.preset == "d1") {
    config.model_config = build_paper_config(1);
  } else if (args.preset == "d5") {
    config.model_config = build_paper_config(5);
  } else if (args.preset.empty()) {
    if (args.custom_d <= 0) {
      throw Error("train: pass --preset d1|d5 or a full custom model "
                  "(--d, --embed-stream, --encoder, --branch, --trunk)");
    }
    config.model_config = config_from_widths(
        args.custom_d, args.custom_embed_stream,
        parse_int_list(args.custom_encoder), parse_int_list(args.custom_branch),
        parse_int_list(args.custom_trunk));
  } else {
    throw Error(msg("train: unknown preset '", args.preset, "'"));
  }

  const int d = config.model_config.input_dim;
  config.tasks.input_dim = d;
  config.tasks.prompt_size =
      args.prompt_size > 0 ? args.prompt_size : (d == 5 ? 50 : 13);
  config.tasks.noise_variance = args.noise;
  config.tasks.query_count = args.queries;
  config.tasks.seed = args.seed;
  config.iterations = args.iterations;
  config.batch_size = args.batch;
  config.seed = args.seed;
  config.log_every = args.log_every;
  config.checkpoint_every = args.checkpoint_every;
  config.threads = args.threads;
  config.resume_path = args.resume;

  fs::create_directories(args.out_dir);
  config.checkpoint_prefix = (fs::path(args.out_dir) / "checkpoint").string();

  json echo;
  echo["command"] = "train";
  echo["model"] = model_config_echo(config.model_config);
  echo["iterations"] = config.iterations;
  echo["batch_size"] = config.batch_size;
  echo["prompt_size"] = config.tasks.prompt_size;
  echo["queries_per_task"] = config.tasks.query_count;
  echo["train_noise_variance"] = config.tasks.noise_variance;
  echo["seed"] = config.seed;
  echo["threads"] = config.threads;
  echo["log_every"] = config.log_every;
  echo["checkpoint_every"] = config.checkpoint_every;
  echo["resume"] = config.resume_path;
  echo["out_dir"] = args.out_dir;
  write_resolved_config(args.out_dir, echo);

  std::cout << "training: d=" << d << ", " << config.model_config.parameter_count()
            << " parameters, " << config.iterations << " iterations, batch "
            << config.batch_size << ", n=" << config.tasks.prompt_size
            << ", threads " << config.threads << "\n";

  const trainer::TrainResult result = trainer::train(config);

  std::ofstream log_csv(fs::path(args.out_dir) / "train_log.csv",
                        std::ios::binary);
  result.log.write_csv(log_csv, echo.dump());

  std::cout << "final checkpoint: " << config.checkpoint_prefix << ".ckpt\n";
  if (!result.loss_history.empty()) {
    std::cout << "last loss " << format_double(result.loss_history.back())
              << ", smoothed(500) " << format_double(result.smoothed_loss)
              << "\n";
  }
  return 0;
}

// ---- eval ----

struct EvalArgs {
  std::string checkpoint;
  bool ols_only = false;
  std::string dims;  // empty = checkpoint's d
  std::string ns = "10";
  std::string sigma2s = "0,0.04,0.2,2.0";
  int tasks = 2000;
  int queries = 16;
  std::uint64_t seed = 1000;
  int threads = default_threads();
  std::string out_dir = "out/eval";
  bool plots = false;
};

void emit_eval_plots(const bench::ExperimentReport& report,
                     const fs::path& out_dir);

int run_eval(const EvalArgs& args) {
  std::optional<Checkpoint> ckpt;
  if (!args.ols_only) {
    if (args.checkpoint.empty()) {
      throw Error("eval: --checkpoint is required (or pass --ols-only)");
    }
    ckpt = load_checkpoint(args.checkpoint);
  }

  bench::EvalGrid grid;
  if (!args.dims.empty()) {
    grid.dims = parse_int_list(args.dims);
  } else if (ckpt) {
    grid.dims = {ckpt->model.config.input_dim};
  } else {
    throw Error("eval: --ols-only needs an explicit --d list");
  }
  grid.prompt_sizes = parse_int_list(args.ns);
  grid.noise_variances = parse_double_list(args.sigma2s);
  grid.tasks_per_cell = args.tasks;
  grid.queries_per_task = args.queries;
  grid.seed = args.seed;
  grid.threads = args.threads;

  json echo;
  echo["command"] = "eval";
  echo["checkpoint"] = args.checkpoint;
  echo["ols_only"] = args.ols_only;
  echo["d"] = grid.dims;
  echo["n"] = grid.prompt_sizes;
  echo["sigma2"] = grid.noise_variances;
  echo["tasks_per_cell"] = grid.tasks_per_cell;
  echo["queries_per_task"] = grid.queries_per_task;
  echo["seed"] = grid.seed;
  echo["threads"] = grid.threads;
  echo["out_dir"] = args.out_dir;

  bench::ExperimentReport report =
      bench::run_eval_grid(ckpt ? &ckpt->model : nullptr, grid);
  report.config_echo = echo.dump();
  if (!args.checkpoint.empty()) {
    report.checkpoint_hash = hash_hex(args.checkpoint);
  }

  fs::create_directories(args.out_dir);
  write_resolved_config(args.out_dir, echo);
  {
    std::ofstream csv(fs::path(args.out_dir) / "eval_report.csv",
                      std::ios::binary);
    report.write_csv(csv);
  }
  write_text_file(fs::path(args.out_dir) / "eval_report.json",
                  report.to_json().dump(2) + "\n");

  // Noise-robustness summaries wherever a (d, n) slice has >= 3 noise levels
  // for both measured methods.
  if (ckpt && grid.noise_variances.size() >= 3) {
    std::string all;
    for (int d : grid.dims) {
      for (int n : grid.prompt_sizes) {
        try {
          const bench::NoiseRobustness nr =
              bench::compare_noise_robustness(report, d, n);
          all += msg("# d=", d, " n=", n, "\n", nr.describe());
        } catch (const Error&) {
          // slice incomplete; skip
        }
      }
    }
    if (!all.empty()) {
      write_text_file(fs::path(args.out_dir) / "noise_robustness.csv", all);
    }
  }

  if (args.plots) emit_eval_plots(report, args.out_dir);

  report.write_csv(std::cout);
  return 0;
}

void emit_eval_plots(const bench::ExperimentReport& report,
                     const fs::path& out_dir) {
  std::vector<int> dims, ns;
  std::vector<double> sigmas;
  std::vector<std::string> methods;
  for (const bench::CellResult& c : report.cells) {
    if (std::find(dims.begin(), dims.end(), c.d) == dims.end())
      dims.push_back(c.d);
    if (std::find(ns.begin(), ns.end(), c.n) == ns.end()) ns.push_back(c.n);
    if (std::find(sigmas.begin(), sigmas.end(), c.sigma2) == sigmas.end())
      sigmas.push_back(c.sigma2);
    if (std::find(methods.begin(), methods.end(), c.method) == methods.end())
      methods.push_back(c.method);
  }
  std::sort(ns.begin(), ns.end());
  std::sort(sigmas.begin(), sigmas.end());

  for (int d : dims) {
    for (double s2 : sigmas) {
      plot::LineChart chart;
      chart.title = msg("MSE vs examples (d=", d, ", sigma2=", s2, ")");
      chart.x_label = "in-context examples n";
      chart.y_label = "mean MSE";
      chart.log_y = true;
      chart.provenance = report.config_echo;
      for (const std::string& m : methods) {
        plot::Series series;
        series.label = m;
        for (int n : ns) {
          const bench::CellResult* c = report.find(m, d, n, s2);
          if (c) series.points.push_back({double(n), c->mean_mse});
        }
        if (series.points.size() >= 1) chart.series.push_back(series);
      }
      if (!chart.series.empty()) {
        plot::write_svg(chart,
                        (out_dir / msg("mse_vs_n_d", d, "_s", s2, ".svg")).string());
      }
    }
    for (int n : ns) {
      plot::LineChart chart;
      chart.title = msg("MSE vs noise (d=", d, ", n=", n, ")");
      chart.x_label = "noise variance sigma2";
      chart.y_label = "mean MSE";
      chart.log_y = true;
      chart.provenance = report.config_echo;
      for (const std::string& m : methods) {
        plot::Series series;
        series.label = m;
        for (double s2 : sigmas) {
          const bench::CellResult* c = report.find(m, d, n, s2);
          if (c) series.points.push_back({s2, c->mean_mse});
        }
        if (series.points.size() >= 1) chart.series.push_back(series);
      }
      if (!chart.series.empty()) {
        plot::write_svg(
            chart, (out_dir / msg("mse_vs_sigma2_d", d, "_n", n, ".svg")).string());
      }
    }
  }
}

// ---- bench ----

struct BenchArgs {
  std::string checkpoint;
  std::string ns = "1..100";
  int repetitions = 300;
  std::uint64_t seed = 7;
  std::string out_dir = "out/bench";
  bool plots = false;
};

void emit_latency_plot(const bench::LatencyReport& report,
                       const fs::path& out_dir) {
  plot::LineChart chart;
  chart.title = "Inference time vs in-context examples";
  chart.x_label = "in-context examples n";
  chart.y_label = "time per call (ms)";
  chart.log_y = true;
  chart.provenance = report.config_echo;
  plot::Series encode{"prompt encode", {}};
  plot::Series first{"first query", {}};
  plot::Series cached{"cached query", {}};
  for (const bench::LatencyRow& r : report.rows) {
    encode.points.push_back({double(r.n), r.encode_ms.median});
    first.points.push_back({double(r.n), r.first_query_ms.median});
    cached.points.push_back({double(r.n), r.cached_query_ms.median});
  }
  chart.series = {encode, first, cached};
  plot::write_svg(chart, (out_dir / "latency_vs_n.svg").string());
}

int run_bench(const BenchArgs& args) {
  if (args.checkpoint.empty()) throw Error("bench: --checkpoint is required");
  const Checkpoint ckpt = load_checkpoint(args.checkpoint);

  bench::LatencyConfig config;
  config.prompt_sizes = parse_int_list(args.ns);
  config.repetitions = args.repetitions;
  config.seed = args.seed;

  json echo;
  echo["command"] = "bench";
  echo["checkpoint"] = args.checkpoint;
  echo["n"] = config.prompt_sizes;
  echo["repetitions"] = config.repetitions;
  echo["seed"] = config.seed;
  echo["out_dir"] = args.out_dir;

  bench::LatencyReport report = bench::run_latency_bench(ckpt.model, config);
  report.checkpoint_hash = hash_hex(args.checkpoint);
  report.config_echo = echo.dump();

  fs::create_directories(args.out_dir);
  write_resolved_config(args.out_dir, echo);
  {
    std::ofstream csv(fs::path(args.out_dir) / "latency.csv", std::ios::binary);
    report.write_csv(csv);
  }
  write_text_file(fs::path(args.out_dir) / "latency.json",
                  report.to_json().dump(2) + "\n");
  if (args.plots) emit_latency_plot(report, args.out_dir);

  report.write_csv(std::cout);
  return 0;
}

// ---- predict ----

struct PredictArgs {
  std::string checkpoint;
  std::string prompt_file;
  std::vector<std::string> queries;
  std::string queries_file;
};

std::vector<double> parse_number_line(const std::string& line,
                                      const std::string& file, long line_no) {
  std::vector<double> values;
  std::istringstream ls(line);
  std::string tok;
  while (ls >> tok) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (!end || *end != '\0') {
      throw ParseError(file, line_no, msg("not a number: '", tok, "'"));
    }
    values.push_back(v);
  }
  return values;
}

Prompt read_prompt_file(const std::string& path, int d) {
  std::ifstream is(path);
  if (!is) throw IoError(msg("cannot open prompt file '", path, "'"));
  Prompt prompt;
  std::string line;
  long line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const std::vector<double> values = parse_number_line(line, path, line_no);
    if (values.empty()) continue;
    if (static_cast<int>(values.size()) != d + 1) {
      throw ParseError(path, line_no,
                       msg("expected ", d + 1, " numbers (x_1 ... x_", d,
                           " y), got ", values.size()));
    }
    Example ex;
    ex.x.assign(values.begin(), values.end() - 1);
    ex.y = values.back();
    prompt.examples.push_back(std::move(ex));
  }
  if (prompt.examples.empty()) {
    throw ParseError(path, line_no, "prompt file has no examples");
  }
  return prompt;
}

int run_predict(const PredictArgs& args) {
  if (args.checkpoint.empty()) throw Error("predict: --checkpoint is required");
  if (args.prompt_file.empty()) throw Error("predict: --prompt is required");
  const Checkpoint ckpt = load_checkpoint(args.checkpoint);
  const int d = ckpt.model.config.input_dim;

  const Prompt prompt = read_prompt_file(args.prompt_file, d);

  std::vector<std::vector<double>> queries;
  for (std::size_t i = 0; i < args.queries.size(); ++i) {
    const std::vector<double> q =
        parse_number_line(args.queries[i], "<--query>", static_cast<long>(i + 1));
    if (static_cast<int>(q.size()) != d) {
      throw Error(msg("query ", i + 1, " has dimension ", q.size(),
                      ", checkpoint expects ", d));
    }
    queries.push_back(q);
  }
  if (!args.queries_file.empty()) {
    std::ifstream is(args.queries_file);
    if (!is) {
      throw IoError(msg("cannot open queries file '", args.queries_file, "'"));
    }
    std::string line;
    long line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      if (line.empty() || line[0] == '#') continue;
      const std::vector<double> q =
          parse_number_line(line, args.queries_file, line_no);
      if (q.empty()) continue;
      if (static_cast<int>(q.size()) != d) {
        throw ParseError(args.queries_file, line_no,
                         msg("query has dimension ", q.size(),
                             ", checkpoint expects ", d));
      }
      queries.push_back(q);
    }
  }

  // Encode once; reuse the branch cache across all queries.
  const BranchCache cache =
      branch_features(ckpt.model, encode_prompt(ckpt.model, prompt));
  for (const std::vector<double>& q : queries) {
    std::cout << format_double(predict(ckpt.model, cache, q)) << '\n';
  }
  return 0;
}

// ---- plot (from report files) ----

struct PlotArgs {
  std::string eval_report;
  std::string latency_report;
  std::string out_dir = "out/plots";
};

int run_plot(const PlotArgs& args) {
  if (args.eval_report.empty() && args.latency_report.empty()) {
    throw Error("plot: pass --eval and/or --latency report JSON files");
  }
  fs::create_directories(args.out_dir);
  if (!args.eval_report.empty()) {
    std::ifstream is(args.eval_report);
    if (!is) throw IoError(msg("cannot open '", args.eval_report, "'"));
    const bench::ExperimentReport report =
        bench::ExperimentReport::from_json(json::parse(is));
    emit_eval_plots(report, args.out_dir);
  }
  if (!args.latency_report.empty()) {
    std::ifstream is(args.latency_report);
    if (!is) throw IoError(msg("cannot open '", args.latency_report, "'"));
    const bench::LatencyReport report =
        bench::LatencyReport::from_json(json::parse(is));
    emit_latency_plot(report, args.out_dir);
  }
  std::cout << "plots written to " << args.out_dir << "\n";
  return 0;
}

// ---- dump-tasks ----

struct DumpArgs {
  int d = 1;
  int n = 10;
  double sigma2 = 0.0;
  int queries = 16;
  long count = 10;
  std::uint64_t start = 0;
  std::uint64_t seed = 0;
  std::string out;  // empty = stdout
};

int run_dump(const DumpArgs& args) {
  taskgen::TaskDistribution dist;
  dist.input_dim = args.d;
  dist.prompt_size = args.n;
  dist.noise_variance = args.sigma2;
  dist.query_count = args.queries;
  dist.seed = args.seed;
  if (args.out.empty()) {
    taskgen::write_tasks_jsonl(dist, args.start,
                               static_cast<std::size_t>(args.count), std::cout);
  } else {
    std::ofstream os(args.out, std::ios::binary);
    if (!os) throw IoError(msg("cannot open '", args.out, "' for writing"));
    taskgen::write_tasks_jsonl(dist, args.start,
                               static_cast<std::size_t>(args.count), os);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DeepOSets: in-context learning of supervised-learning "
               "operators with a set-pooled DeepONet"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from an INI/TOML file");

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "Train a model on sampled linear tasks");
  train->add_option("--preset", train_args.preset, "Model preset: d1 or d5");
  train->add_option("--d", train_args.custom_d, "Custom model: input dimension");
  train->add_option("--embed-stream", train_args.custom_embed_stream,
                    "Custom model: per-stream embedding width");
  train->add_option("--encoder", train_args.custom_encoder,
                    "Custom model: encoder widths, e.g. 50,50,400");
  train->add_option("--branch", train_args.custom_branch,
                    "Custom model: branch widths (last = p)");
  train->add_option("--trunk", train_args.custom_trunk,
                    "Custom model: trunk widths (last = p)");
  train->add_option("--iterations", train_args.iterations, "Optimizer steps")
      ->capture_default_str();
  train->add_option("--batch", train_args.batch, "Tasks per iteration")
      ->capture_default_str();
  train->add_option("--queries", train_args.queries, "Queries per task")
      ->capture_default_str();
  train->add_option("--n", train_args.prompt_size,
                    "Prompt length (default 13 for d1, 50 for d5)");
  train->add_option("--noise", train_args.noise,
                    "Training-prompt noise variance (default 0: noiseless)")
      ->capture_default_str();
  train->add_option("--seed", train_args.seed, "Seed")->capture_default_str();
  train->add_option("--threads", train_args.threads,
                    "Worker threads (1 = bitwise reproducible)")
      ->capture_default_str();
  train->add_option("--log-every", train_args.log_every, "Log cadence")
      ->capture_default_str();
  train->add_option("--checkpoint-every", train_args.checkpoint_every,
                    "Mid-run checkpoint cadence (0 = final only)")
      ->capture_default_str();
  train->add_option("--out", train_args.out_dir, "Output directory")
      ->capture_default_str();
  train->add_option("--resume", train_args.resume,
                    "Resume training from a checkpoint");

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand("eval", "Evaluate MSE grids against the OLS baseline");
  eval->add_option("--checkpoint", eval_args.checkpoint, "Trained checkpoint");
  eval->add_flag("--ols-only", eval_args.ols_only,
                 "Evaluate the baseline only (no checkpoint needed)");
  eval->add_option("--d", eval_args.dims, "Dimension list (default: checkpoint's)");
  eval->add_option("--n", eval_args.ns, "Prompt-size list, e.g. 2..20 or 5,10")
      ->capture_default_str();
  eval->add_option("--sigma2", eval_args.sigma2s, "Noise-variance list")
      ->capture_default_str();
  eval->add_option("--tasks", eval_args.tasks, "Tasks per cell")
      ->capture_default_str();
  eval->add_option("--queries", eval_args.queries, "Queries per task")
      ->capture_default_str();
  eval->add_option("--seed", eval_args.seed, "Seed")->capture_default_str();
  eval->add_option("--threads", eval_args.threads, "Worker threads")
      ->capture_default_str();
  eval->add_option("--out", eval_args.out_dir, "Output directory")
      ->capture_default_str();
  eval->add_flag("--plots", eval_args.plots, "Emit SVG figures");

  BenchArgs bench_args;
  CLI::App* benchcmd = app.add_subcommand("bench", "Measure inference latency vs prompt size");
  benchcmd->add_option("--checkpoint", bench_args.checkpoint, "Checkpoint");
  benchcmd->add_option("--n", bench_args.ns, "Prompt-size list")
      ->capture_default_str();
  benchcmd->add_option("--repetitions", bench_args.repetitions,
                       "Timed samples per measurement (>= 100)")
      ->capture_default_str();
  benchcmd->add_option("--seed", bench_args.seed, "Seed")->capture_default_str();
  benchcmd->add_option("--out", bench_args.out_dir, "Output directory")
      ->capture_default_str();
  benchcmd->add_flag("--plots", bench_args.plots, "Emit SVG figure");

  PredictArgs predict_args;
  CLI::App* predict = app.add_subcommand("predict", "Answer queries for a prompt file");
  predict->add_option("--checkpoint", predict_args.checkpoint, "Checkpoint");
  predict->add_option("--prompt", predict_args.prompt_file,
                      "Prompt file: one 'x_1 ... x_d y' example per line");
  predict->add_option("--query", predict_args.queries,
                      "Query point 'x_1 ... x_d' (repeatable)");
  predict->add_option("--queries-file", predict_args.queries_file,
                      "File with one query per line");

  PlotArgs plot_args;
  CLI::App* plotcmd = app.add_subcommand("plot", "Render SVG figures from report JSON files");
  plotcmd->add_option("--eval", plot_args.eval_report, "eval_report.json path");
  plotcmd->add_option("--latency", plot_args.latency_report, "latency.json path");
  plotcmd->add_option("--out", plot_args.out_dir, "Output directory")
      ->capture_default_str();

  DumpArgs dump_args;
  CLI::App* dump = app.add_subcommand("dump-tasks", "Write sampled tasks as JSON lines");
  dump->add_option("--d", dump_args.d, "Dimension")->capture_default_str();
  dump->add_option("--n", dump_args.n, "Prompt size")->capture_default_str();
  dump->add_option("--sigma2", dump_args.sigma2, "Noise variance")
      ->capture_default_str();
  dump->add_option("--queries", dump_args.queries, "Queries per task")
      ->capture_default_str();
  dump->add_option("--count", dump_args.count, "Number of tasks")
      ->capture_default_str();
  dump->add_option("--start", dump_args.start, "First task index")
      ->capture_default_str();
  dump->add_option("--seed", dump_args.seed, "Seed")->capture_default_str();
  dump->add_option("--out", dump_args.out, "Output file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return run_train(train_args);
    if (eval->parsed()) return run_eval(eval_args);
    if (benchcmd->parsed()) return run_bench(bench_args);
    if (predict->parsed()) return run_predict(predict_args);
    if (plotcmd->parsed()) return run_plot(plot_args);
    if (dump->parsed()) return run_dump(dump_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
