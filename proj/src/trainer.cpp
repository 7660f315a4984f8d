#include "deeposets/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>

#include "deeposets/parallel.hpp"

namespace deeposets::trainer {

ModelOptimizer ModelOptimizer::create(const DeepOSetsModel& model) {
  ModelOptimizer opt;
  opt.x_embed = nn::make_adam_state(model.x_embed);
  opt.y_embed = nn::make_adam_state(model.y_embed);
  opt.encoder = nn::make_adam_state(model.encoder);
  opt.branch = nn::make_adam_state(model.branch);
  opt.trunk = nn::make_adam_state(model.trunk);
  return opt;
}

void ModelOptimizer::step(DeepOSetsModel& model, const ModelGradients& grads) {
  // Checked up front so a bad gradient cannot leave the model half-updated.
  if (grads.has_non_finite()) {
    throw Error(msg("optimizer: non-finite gradient at step ", steps,
                    "; parameters left unchanged"));
  }
  nn::adam_step(model.x_embed, grads.x_embed, x_embed);
  nn::adam_step(model.y_embed, grads.y_embed, y_embed);
  nn::adam_step(model.encoder, grads.encoder, encoder);
  nn::adam_step(model.branch, grads.branch, branch);
  nn::adam_step(model.trunk, grads.trunk, trunk);

  const double lr = encoder.learning_rate_at(steps);
  const double t = static_cast<double>(steps + 1);
  const double bc1 = 1.0 - std::pow(encoder.beta1, t);
  const double bc2 = 1.0 - std::pow(encoder.beta2, t);
  b0_first = encoder.beta1 * b0_first + (1.0 - encoder.beta1) * grads.b0;
  b0_second =
      encoder.beta2 * b0_second + (1.0 - encoder.beta2) * grads.b0 * grads.b0;
  model.b0 -= lr * (b0_first / bc1) /
              (std::sqrt(b0_second / bc2) + encoder.epsilon);
  ++steps;
}

OptimizerSnapshot ModelOptimizer::snapshot() const {
  OptimizerSnapshot snap;
  snap.steps = steps;
  for (const nn::AdamState* s : {&x_embed, &y_embed, &encoder, &branch, &trunk}) {
    snap.first_moments.push_back(s->first_moment);
    snap.second_moments.push_back(s->second_moment);
  }
  snap.b0_first = b0_first;
  snap.b0_second = b0_second;
  return snap;
}

void ModelOptimizer::restore(const DeepOSetsModel& model,
                             const OptimizerSnapshot& snap) {
  *this = create(model);
  if (snap.first_moments.size() != 5 || snap.second_moments.size() != 5) {
    throw Error("optimizer restore: snapshot does not have 5 subnetworks");
  }
  nn::AdamState* states[] = {&x_embed, &y_embed, &encoder, &branch, &trunk};
  for (int i = 0; i < 5; ++i) {
    states[i]->first_moment = snap.first_moments[static_cast<std::size_t>(i)];
    states[i]->second_moment = snap.second_moments[static_cast<std::size_t>(i)];
    states[i]->steps = snap.steps;
  }
  b0_first = snap.b0_first;
  b0_second = snap.b0_second;
  steps = snap.steps;
}

void TrainConfig::validate() const {
  model_config.validate();
  tasks.validate();
  if (iterations < 0) throw Error("train: negative iteration count");
  if (batch_size < 1) throw Error("train: batch size < 1");
  if (tasks.query_count < 1) throw Error("train: needs >= 1 query per task");
  if (tasks.input_dim != model_config.input_dim) {
    throw ShapeError(msg("train: task dimension ", tasks.input_dim,
                         " != model dimension ", model_config.input_dim));
  }
}

void TrainLog::write_csv(std::ostream& os,
                         const std::string& config_echo) const {
  if (!config_echo.empty()) os << "# " << config_echo << '\n';
  os << "iteration,loss,lr,elapsed_seconds\n";
  for (const TrainLogEntry& e : entries) {
    os << e.iteration << ',' << format_double(e.loss) << ','
       << format_double(e.learning_rate) << ','
       << format_double(e.elapsed_seconds) << '\n';
  }
}

double loss(const DeepOSetsModel& model, const taskgen::TaskSample& task) {
  if (task.queries.empty()) return 0.0;
  const std::vector<double> pooled = encode_prompt(model, task.prompt);
  const BranchCache cache = branch_features(model, pooled);
  double acc = 0.0;
  for (const taskgen::Query& q : task.queries) {
    const double err = predict(model, cache, q.x) - q.target;
    acc += err * err;
  }
  return acc / static_cast<double>(task.queries.size());
}

namespace {

// Per-worker accumulation state, reused across iterations.
struct WorkerState {
  ModelGradients grads;
  ModelWorkspace ws;
  std::vector<std::vector<double>> queries;
  std::vector<double> targets;
  std::vector<double> upstream;
  double loss_sum = 0.0;
};

void save_if_named(const Checkpoint& ckpt, const std::string& path) {
  if (!path.empty()) save_checkpoint(ckpt, path);
}

}  // namespace

TrainResult train(const TrainConfig& config) {
  config.validate();

  TrainResult result;
  Checkpoint& ckpt = result.checkpoint;
  ModelOptimizer optimizer;
  long start_iteration = 0;

  if (!config.resume_path.empty()) {
    ckpt = load_checkpoint(config.resume_path);
    if (!ckpt.optimizer) {
      throw Error(msg("cannot resume from '", config.resume_path,
                      "': checkpoint has no optimizer state"));
    }
    optimizer = ModelOptimizer::create(ckpt.model);
    optimizer.restore(ckpt.model, *ckpt.optimizer);
    start_iteration = ckpt.iterations;
  } else {
    ckpt.model = init_model(config.model_config, config.seed);
    ckpt.seed = config.seed;
    optimizer = ModelOptimizer::create(ckpt.model);
  }
  DeepOSetsModel& model = ckpt.model;

  const int batch = config.batch_size;
  const int queries_per_task = config.tasks.query_count;
  const int workers = std::max(1, config.threads);
  std::vector<WorkerState> states(static_cast<std::size_t>(workers));
  for (WorkerState& s : states) s.grads = make_gradients(model);
  ModelGradients total = make_gradients(model);

  // Each task contributes mean-over-queries squared error; the batch loss is
  // the mean over tasks. Folding both denominators into the upstream factor
  // keeps the merged tape equal to the gradient of that mean.
  const double upstream_scale =
      2.0 / (static_cast<double>(batch) * queries_per_task);

  const auto t0 = std::chrono::steady_clock::now();
  for (long iter = start_iteration; iter < config.iterations; ++iter) {
    const std::uint64_t base_index =
        static_cast<std::uint64_t>(iter) * static_cast<std::uint64_t>(batch);

    parallel_shards(
        static_cast<std::size_t>(batch), workers,
        [&](int w, std::size_t begin, std::size_t end) {
          WorkerState& st = states[static_cast<std::size_t>(w)];
          st.grads.zero();
          st.loss_sum = 0.0;
          for (std::size_t t = begin; t < end; ++t) {
            const taskgen::TaskSample task =
                taskgen::sample_task(config.tasks, base_index + t);
            st.queries.resize(task.queries.size());
            st.targets.resize(task.queries.size());
            for (std::size_t q = 0; q < task.queries.size(); ++q) {
              st.queries[q] = task.queries[q].x;
              st.targets[q] = task.queries[q].target;
            }
            model_forward_task(model, task.prompt, st.queries, st.ws);
            st.upstream.resize(task.queries.size());
            double task_loss = 0.0;
            for (std::size_t q = 0; q < task.queries.size(); ++q) {
              const double err = st.ws.predictions[q] - st.targets[q];
              task_loss += err * err;
              st.upstream[q] = upstream_scale * err;
            }
            st.loss_sum += task_loss / static_cast<double>(task.queries.size());
            model_backward_task(model, task.prompt, st.upstream, st.ws,
                                st.grads);
          }
        });

    double batch_loss = 0.0;
    if (workers == 1) {
      batch_loss = states[0].loss_sum;
    } else {
      total.zero();
      for (const WorkerState& st : states) {
        total.add(st.grads);
        batch_loss += st.loss_sum;
      }
    }
    batch_loss /= static_cast<double>(batch);
    const ModelGradients& grads = workers == 1 ? states[0].grads : total;

    if (!std::isfinite(batch_loss)) {
      ckpt.iterations = iter;
      ckpt.final_loss = batch_loss;
      ckpt.optimizer = optimizer.snapshot();
      const std::string diag = config.checkpoint_prefix.empty()
                                   ? std::string()
                                   : config.checkpoint_prefix + "_diagnostic.ckpt";
      save_if_named(ckpt, diag);
      throw Error(msg("training aborted: non-finite loss at iteration ",
                      iter + 1,
                      diag.empty() ? "" : ", diagnostic checkpoint at ", diag));
    }

    const double lr = optimizer.current_learning_rate();
    optimizer.step(model, grads);
    result.loss_history.push_back(batch_loss);

    const long iteration_number = iter + 1;
    const bool last = iteration_number == config.iterations;
    if ((config.log_every > 0 && iteration_number % config.log_every == 0) ||
        last) {
      const double elapsed =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count();
      result.log.entries.push_back(
          {iteration_number, batch_loss, lr, elapsed});
    }
    if (config.checkpoint_every > 0 && !config.checkpoint_prefix.empty() &&
        iteration_number % config.checkpoint_every == 0 && !last) {
      ckpt.iterations = iteration_number;
      ckpt.final_loss = batch_loss;
      ckpt.optimizer = optimizer.snapshot();
      save_checkpoint(ckpt, msg(config.checkpoint_prefix, "_iter",
                                iteration_number, ".ckpt"));
    }
  }

  result.iterations_completed = config.iterations;
  ckpt.iterations = config.iterations;
  ckpt.final_loss =
      result.loss_history.empty() ? 0.0 : result.loss_history.back();
  ckpt.optimizer = optimizer.snapshot();

  if (!result.loss_history.empty()) {
    const std::size_t window =
        std::min<std::size_t>(500, result.loss_history.size());
    double acc = 0.0;
    for (std::size_t i = result.loss_history.size() - window;
         i < result.loss_history.size(); ++i) {
      acc += result.loss_history[i];
    }
    result.smoothed_loss = acc / static_cast<double>(window);
  }

  save_if_named(ckpt, config.checkpoint_prefix.empty()
                          ? std::string()
                          : config.checkpoint_prefix + ".ckpt");
  return result;
}

void save(const TrainResult& result, const std::string& path) {
  save_checkpoint(result.checkpoint, path);
}

}  // namespace deeposets::trainer
