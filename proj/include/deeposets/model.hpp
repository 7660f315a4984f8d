#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "deeposets/nn.hpp"
#include "deeposets/prompt.hpp"

namespace deeposets {

// Full shape description of a DeepOSets model. Sizes are complete width
// lists ([in, ..., out]) with one activation per layer.
struct ModelConfig {
  int input_dim = 1;      // d
  int pair_embed_dim = 0; // both coordinate streams concatenated
  std::vector<int> encoder_sizes;
  std::vector<nn::Activation> encoder_acts;
  std::vector<int> branch_sizes;
  std::vector<nn::Activation> branch_acts;
  std::vector<int> trunk_sizes;
  std::vector<nn::Activation> trunk_acts;
  int readout_width = 0;  // p

  int pooled_dim() const {
    return encoder_sizes.empty() ? 0 : encoder_sizes.back();
  }

  // Enforces the wiring invariants: encoder output == branch input, branch
  // and trunk outputs == p, trunk input == d, encoder input == embed dim.
  void validate() const;

  std::size_t parameter_count() const;
};

// Presets reproducing the benchmark configurations for d = 1 and d = 5.
ModelConfig build_paper_config(int d);

// Encoder + branch + trunk + bias. The per-example embedding is two linear
// maps (one for x, one for y zero-padded to dimension d), concatenated and
// fed to the encoder MLP; encoder outputs are mean-pooled over the prompt.
struct DeepOSetsModel {
  ModelConfig config;
  nn::DenseNet x_embed;  // single identity layer, d -> pair_embed_dim/2
  nn::DenseNet y_embed;  // single identity layer, d -> pair_embed_dim/2
  nn::DenseNet encoder;
  nn::DenseNet branch;
  nn::DenseNet trunk;
  double b0 = 0.0;

  std::size_t parameter_count() const;
  void validate() const;
};

DeepOSetsModel init_model(const ModelConfig& config, std::uint64_t seed);

// The p branch coefficients plus bias for a fixed prompt. Immutable once
// built; reusable across any number of queries.
struct BranchCache {
  std::vector<double> coefficients;
  double b0 = 0.0;
};

// Mean-pooled encoder features of the prompt. Summation runs in a canonical
// order (examples sorted lexicographically by (x, y)), so any permutation of
// the prompt produces a bitwise-identical pooled vector. O(n) in the prompt
// length.
std::vector<double> encode_prompt(const DeepOSetsModel& model,
                                  const Prompt& prompt);

// Branch forward on a pooled vector.
BranchCache branch_features(const DeepOSetsModel& model,
                            std::span<const double> pooled);

// Trunk forward + dot-product readout. Runtime independent of the prompt
// length that produced `cache`.
double predict(const DeepOSetsModel& model, const BranchCache& cache,
               std::span<const double> x_query);

// encode_prompt -> branch_features -> predict in one call.
double predict_full(const DeepOSetsModel& model, const Prompt& prompt,
                    std::span<const double> x_query);

// Gradients for every trainable parameter of the model.
struct ModelGradients {
  nn::GradientTape x_embed;
  nn::GradientTape y_embed;
  nn::GradientTape encoder;
  nn::GradientTape branch;
  nn::GradientTape trunk;
  double b0 = 0.0;

  void zero();
  void add(const ModelGradients& other);
  void scale(double factor);
  bool has_non_finite() const;
};

ModelGradients make_gradients(const DeepOSetsModel& model);

// Reusable buffers for a forward/backward pass over one task. Owned by one
// thread; reuse across tasks avoids reallocation in training loops.
struct ModelWorkspace {
  std::vector<nn::ForwardTrace> x_embed_traces;
  std::vector<nn::ForwardTrace> y_embed_traces;
  std::vector<nn::ForwardTrace> encoder_traces;
  nn::ForwardTrace branch_trace;
  std::vector<nn::ForwardTrace> trunk_traces;
  std::vector<int> order;           // canonical summation order
  std::vector<double> pooled;
  BranchCache cache;
  std::vector<double> predictions;  // one per query

  // scratch
  std::vector<double> y_padded;
  std::vector<double> embed_concat;
  std::vector<double> branch_upstream;
  std::vector<double> trunk_upstream;
  std::vector<double> pooled_grad;
  std::vector<double> example_grad;
  std::vector<double> embed_grad;
};

// Forward pass over a prompt and a set of queries, caching everything needed
// for the backward pass. Fills ws.predictions.
void model_forward_task(const DeepOSetsModel& model, const Prompt& prompt,
                        std::span<const std::vector<double>> queries,
                        ModelWorkspace& ws);

// Backward pass matching the last model_forward_task on `ws`. `upstream[q]`
// is d(loss)/d(prediction_q); gradients are accumulated into `grads`. The
// pooled-mean backward distributes each query's upstream divided by the
// prompt length to every example path.
void model_backward_task(const DeepOSetsModel& model, const Prompt& prompt,
                         std::span<const double> upstream, ModelWorkspace& ws,
                         ModelGradients& grads);

// Gradients of a single prediction scaled by `upstream`; the one-query
// convenience wrapper over the task-level pair above.
ModelGradients model_gradients(const DeepOSetsModel& model,
                               const Prompt& prompt,
                               std::span<const double> x_query,
                               double upstream);

}  // namespace deeposets
