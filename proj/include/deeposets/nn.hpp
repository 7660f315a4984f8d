#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace deeposets::nn {

enum class Activation { kIdentity, kTanh, kSelu, kRelu };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

// Scaled exponential linear unit constants, chosen so that activations keep
// zero mean and unit variance through a normalized network.
constexpr double kSeluLambda = 1.0507009873554805;
constexpr double kSeluAlpha = 1.6732632423543772;

// One affine layer y = act(W x + b), weights row-major [out_dim x in_dim].
struct DenseLayer {
  int in_dim = 0;
  int out_dim = 0;
  Activation activation = Activation::kIdentity;
  std::vector<double> weights;
  std::vector<double> bias;

  std::size_t parameter_count() const {
    return static_cast<std::size_t>(out_dim) *
           static_cast<std::size_t>(in_dim + 1);
  }
};

// A stack of dense layers; layer i's output feeds layer i+1.
struct DenseNet {
  std::vector<DenseLayer> layers;

  int input_dim() const { return layers.empty() ? 0 : layers.front().in_dim; }
  int output_dim() const { return layers.empty() ? 0 : layers.back().out_dim; }
  std::size_t parameter_count() const;

  // Throws ShapeError if adjacent layer dimensions disagree or any weight
  // buffer has the wrong size.
  void validate() const;
};

// Cached intermediates of one forward pass, needed to run backward.
// `inputs[i]` is the input vector of layer i and `preacts[i]` its affine
// output before the activation.
struct ForwardTrace {
  std::vector<std::vector<double>> inputs;
  std::vector<std::vector<double>> preacts;
  std::vector<double> output;
  bool valid = false;
};

// Per-parameter gradient buffers mirroring a DenseNet's shape.
struct GradientTape {
  struct LayerGrad {
    std::vector<double> weights;
    std::vector<double> bias;
  };
  std::vector<LayerGrad> layers;

  void zero();
  // Merge by summation; shapes must agree.
  void add(const GradientTape& other);
  void scale(double factor);
  bool has_non_finite() const;
};

GradientTape make_tape(const DenseNet& net);

// Adam optimizer state with a stepped exponential learning-rate decay:
// lr(t) = base_lr * decay^floor(t / decay_interval), t counting completed
// steps.
struct AdamState {
  double base_lr = 1e-3;
  double decay = 0.9;
  long decay_interval = 2000;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  long steps = 0;
  std::vector<GradientTape::LayerGrad> first_moment;
  std::vector<GradientTape::LayerGrad> second_moment;

  double learning_rate_at(long step) const;
  double current_learning_rate() const { return learning_rate_at(steps); }
};

AdamState make_adam_state(const DenseNet& net);

// Evaluates the network on `input`. When `trace` is non-null, the per-layer
// inputs and pre-activations are recorded so `backward` can run later.
std::vector<double> forward(const DenseNet& net, std::span<const double> input,
                            ForwardTrace* trace = nullptr);

// Reverse-mode pass for the forward call that produced `trace`. Accumulates
// parameter gradients into `tape` and returns the gradient with respect to
// the network input. `upstream` is d(loss)/d(output).
std::vector<double> backward(const DenseNet& net, const ForwardTrace& trace,
                             std::span<const double> upstream,
                             GradientTape& tape);

// In-place variant writing the input gradient into `input_grad`.
void backward_into(const DenseNet& net, const ForwardTrace& trace,
                   std::span<const double> upstream, GradientTape& tape,
                   std::vector<double>& input_grad);

// One Adam update over all parameters of `net` using the gradients in
// `tape`. Throws Error if the tape contains NaN/Inf, leaving the parameters
// untouched. Increments the step counter.
void adam_step(DenseNet& net, const GradientTape& tape, AdamState& state);

// Builds a network with the given layer widths (sizes = [in, h1, ..., out])
// and one activation per layer. Weights are drawn uniformly with
// variance-scaled bounds (Glorot for identity/tanh/relu layers, LeCun-style
// for selu layers); biases are zero. Deterministic in (sizes, seed).
DenseNet init_net(std::span<const int> sizes,
                  std::span<const Activation> activations, std::uint64_t seed,
                  std::uint64_t stream_id = 0);

}  // namespace deeposets::nn
