#include "deeposets/nn.hpp"

#include <cmath>
#include <cstring>

#include "deeposets/common.hpp"
#include "deeposets/rng.hpp"

namespace deeposets::nn {

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::kIdentity: return "identity";
    case Activation::kTanh: return "tanh";
    case Activation::kSelu: return "selu";
    case Activation::kRelu: return "relu";
  }
  throw Error("unknown activation enum value");
}

Activation activation_from_name(const std::string& name) {
  if (name == "identity") return Activation::kIdentity;
  if (name == "tanh") return Activation::kTanh;
  if (name == "selu") return Activation::kSelu;
  if (name == "relu") return Activation::kRelu;
  throw Error(msg("unknown activation name '", name, "'"));
}

std::size_t DenseNet::parameter_count() const {
  std::size_t total = 0;
  for (const DenseLayer& layer : layers) total += layer.parameter_count();
  return total;
}

void DenseNet::validate() const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const DenseLayer& layer = layers[i];
    if (layer.in_dim <= 0 || layer.out_dim <= 0) {
      throw ShapeError(msg("layer ", i, ": nonpositive dimension ",
                           layer.in_dim, "x", layer.out_dim));
    }
    if (layer.weights.size() != static_cast<std::size_t>(layer.in_dim) *
                                    static_cast<std::size_t>(layer.out_dim) ||
        layer.bias.size() != static_cast<std::size_t>(layer.out_dim)) {
      throw ShapeError(msg("layer ", i, ": parameter buffers do not match ",
                           layer.out_dim, "x", layer.in_dim));
    }
    if (i + 1 < layers.size() && layers[i + 1].in_dim != layer.out_dim) {
      throw ShapeError(msg("layer ", i, " output dim ", layer.out_dim,
                           " != layer ", i + 1, " input dim ",
                           layers[i + 1].in_dim));
    }
  }
}

void GradientTape::zero() {
  for (LayerGrad& g : layers) {
    std::fill(g.weights.begin(), g.weights.end(), 0.0);
    std::fill(g.bias.begin(), g.bias.end(), 0.0);
  }
}

void GradientTape::add(const GradientTape& other) {
  if (other.layers.size() != layers.size()) {
    throw ShapeError("tape merge: layer counts differ");
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    LayerGrad& dst = layers[i];
    const LayerGrad& src = other.layers[i];
    if (src.weights.size() != dst.weights.size() ||
        src.bias.size() != dst.bias.size()) {
      throw ShapeError(msg("tape merge: layer ", i, " shapes differ"));
    }
    for (std::size_t k = 0; k < dst.weights.size(); ++k)
      dst.weights[k] += src.weights[k];
    for (std::size_t k = 0; k < dst.bias.size(); ++k)
      dst.bias[k] += src.bias[k];
  }
}

void GradientTape::scale(double factor) {
  for (LayerGrad& g : layers) {
    for (double& v : g.weights) v *= factor;
    for (double& v : g.bias) v *= factor;
  }
}

bool GradientTape::has_non_finite() const {
  for (const LayerGrad& g : layers) {
    for (double v : g.weights)
      if (!std::isfinite(v)) return true;
    for (double v : g.bias)
      if (!std::isfinite(v)) return true;
  }
  return false;
}

GradientTape make_tape(const DenseNet& net) {
  GradientTape tape;
  tape.layers.resize(net.layers.size());
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    tape.layers[i].weights.assign(net.layers[i].weights.size(), 0.0);
    tape.layers[i].bias.assign(net.layers[i].bias.size(), 0.0);
  }
  return tape;
}

AdamState make_adam_state(const DenseNet& net) {
  AdamState state;
  state.first_moment.resize(net.layers.size());
  state.second_moment.resize(net.layers.size());
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    state.first_moment[i].weights.assign(net.layers[i].weights.size(), 0.0);
    state.first_moment[i].bias.assign(net.layers[i].bias.size(), 0.0);
    state.second_moment[i].weights.assign(net.layers[i].weights.size(), 0.0);
    state.second_moment[i].bias.assign(net.layers[i].bias.size(), 0.0);
  }
  return state;
}

double AdamState::learning_rate_at(long step) const {
  return base_lr * std::pow(decay, static_cast<double>(step / decay_interval));
}

namespace {

inline double apply_activation(Activation act, double z) {
  switch (act) {
    case Activation::kIdentity: return z;
    case Activation::kTanh: return std::tanh(z);
    case Activation::kSelu:
      return z > 0.0 ? kSeluLambda * z
                     : kSeluLambda * kSeluAlpha * std::expm1(z);
    case Activation::kRelu: return z > 0.0 ? z : 0.0;
  }
  return z;
}

// Derivative from the pre-activation z and the activation output a.
inline double activation_derivative(Activation act, double z, double a) {
  switch (act) {
    case Activation::kIdentity: return 1.0;
    case Activation::kTanh: return 1.0 - a * a;
    case Activation::kSelu:
      // For z <= 0, a = lambda*alpha*(e^z - 1), so a + lambda*alpha = d/dz.
      return z > 0.0 ? kSeluLambda : a + kSeluLambda * kSeluAlpha;
    case Activation::kRelu: return z > 0.0 ? 1.0 : 0.0;
  }
  return 1.0;
}

void affine_forward(const DenseLayer& layer, const double* x, double* z) {
  const double* w = layer.weights.data();
  for (int j = 0; j < layer.out_dim; ++j) {
    const double* row = w + static_cast<std::size_t>(j) * layer.in_dim;
    double acc = layer.bias[static_cast<std::size_t>(j)];
    for (int k = 0; k < layer.in_dim; ++k) acc += row[k] * x[k];
    z[j] = acc;
  }
}

}  // namespace

std::vector<double> forward(const DenseNet& net, std::span<const double> input,
                            ForwardTrace* trace) {
  if (net.layers.empty()) throw ShapeError("forward: empty network");
  if (static_cast<int>(input.size()) != net.input_dim()) {
    throw ShapeError(msg("forward: layer 0 expects input of length ",
                         net.input_dim(), ", got ", input.size()));
  }

  if (trace) {
    trace->inputs.resize(net.layers.size());
    trace->preacts.resize(net.layers.size());
    trace->valid = false;
  }

  std::vector<double> current(input.begin(), input.end());
  std::vector<double> next;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const DenseLayer& layer = net.layers[i];
    if (static_cast<int>(current.size()) != layer.in_dim) {
      throw ShapeError(msg("forward: layer ", i, " expects input of length ",
                           layer.in_dim, ", got ", current.size()));
    }
    next.resize(static_cast<std::size_t>(layer.out_dim));
    affine_forward(layer, current.data(), next.data());
    if (trace) {
      trace->inputs[i] = current;
      trace->preacts[i] = next;
    }
    for (double& v : next) v = apply_activation(layer.activation, v);
    current.swap(next);
  }

  if (trace) {
    trace->output = current;
    trace->valid = true;
  }
  return current;
}

void backward_into(const DenseNet& net, const ForwardTrace& trace,
                   std::span<const double> upstream, GradientTape& tape,
                   std::vector<double>& input_grad) {
  if (!trace.valid || trace.inputs.size() != net.layers.size()) {
    throw Error("backward: no matching forward trace for this network");
  }
  if (tape.layers.size() != net.layers.size()) {
    throw ShapeError("backward: tape does not mirror the network");
  }
  if (static_cast<int>(upstream.size()) != net.output_dim()) {
    throw ShapeError(msg("backward: upstream gradient length ",
                         upstream.size(), " != output dim ",
                         net.output_dim()));
  }

  std::vector<double> grad(upstream.begin(), upstream.end());
  std::vector<double> prev_grad;
  for (std::size_t idx = net.layers.size(); idx-- > 0;) {
    const DenseLayer& layer = net.layers[idx];
    const std::vector<double>& x = trace.inputs[idx];
    const std::vector<double>& z = trace.preacts[idx];
    // The post-activation values of layer idx are the next layer's cached
    // input (or the trace output for the last layer).
    const std::vector<double>& a = idx + 1 < net.layers.size()
                                       ? trace.inputs[idx + 1]
                                       : trace.output;
    if (static_cast<int>(x.size()) != layer.in_dim ||
        static_cast<int>(z.size()) != layer.out_dim ||
        static_cast<int>(a.size()) != layer.out_dim) {
      throw Error(msg("backward: trace for layer ", idx,
                      " does not match the network shape"));
    }

    GradientTape::LayerGrad& g = tape.layers[idx];
    prev_grad.assign(static_cast<std::size_t>(layer.in_dim), 0.0);
    const double* wp = layer.weights.data();
    for (int j = 0; j < layer.out_dim; ++j) {
      const std::size_t sj = static_cast<std::size_t>(j);
      const double dz =
          grad[sj] * activation_derivative(layer.activation, z[sj], a[sj]);
      if (dz == 0.0) continue;
      g.bias[sj] += dz;
      double* gw = g.weights.data() + sj * layer.in_dim;
      const double* row = wp + sj * layer.in_dim;
      const double* xp = x.data();
      double* pg = prev_grad.data();
      for (int k = 0; k < layer.in_dim; ++k) {
        gw[k] += dz * xp[k];
        pg[k] += dz * row[k];
      }
    }
    grad.swap(prev_grad);
  }
  input_grad.swap(grad);
}

std::vector<double> backward(const DenseNet& net, const ForwardTrace& trace,
                             std::span<const double> upstream,
                             GradientTape& tape) {
  std::vector<double> input_grad;
  backward_into(net, trace, upstream, tape, input_grad);
  return input_grad;
}

void adam_step(DenseNet& net, const GradientTape& tape, AdamState& state) {
  if (tape.layers.size() != net.layers.size() ||
      state.first_moment.size() != net.layers.size()) {
    throw ShapeError("adam_step: tape/state do not mirror the network");
  }
  if (tape.has_non_finite()) {
    throw Error(msg("adam_step: non-finite gradient at step ", state.steps,
                    "; parameters left unchanged"));
  }

  const double lr = state.current_learning_rate();
  const double t = static_cast<double>(state.steps + 1);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);

  auto update = [&](double* params, const double* grads, double* m, double* v,
                    std::size_t count) {
    for (std::size_t k = 0; k < count; ++k) {
      const double gk = grads[k];
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * gk;
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * gk * gk;
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      params[k] -= lr * mhat / (std::sqrt(vhat) + state.epsilon);
    }
  };

  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    DenseLayer& layer = net.layers[i];
    update(layer.weights.data(), tape.layers[i].weights.data(),
           state.first_moment[i].weights.data(),
           state.second_moment[i].weights.data(), layer.weights.size());
    update(layer.bias.data(), tape.layers[i].bias.data(),
           state.first_moment[i].bias.data(),
           state.second_moment[i].bias.data(), layer.bias.size());
  }
  ++state.steps;
}

DenseNet init_net(std::span<const int> sizes,
                  std::span<const Activation> activations, std::uint64_t seed,
                  std::uint64_t stream_id) {
  if (sizes.size() < 2) throw ShapeError("init_net: need at least two sizes");
  if (activations.size() != sizes.size() - 1) {
    throw ShapeError(msg("init_net: ", sizes.size() - 1, " layers but ",
                         activations.size(), " activations"));
  }
  for (int s : sizes) {
    if (s <= 0) throw ShapeError(msg("init_net: zero-size layer (", s, ")"));
  }

  rng::RandomStream stream(seed, stream_id);
  DenseNet net;
  net.layers.resize(activations.size());
  for (std::size_t i = 0; i < activations.size(); ++i) {
    DenseLayer& layer = net.layers[i];
    layer.in_dim = sizes[i];
    layer.out_dim = sizes[i + 1];
    layer.activation = activations[i];
    const double fan_in = static_cast<double>(layer.in_dim);
    const double fan_out = static_cast<double>(layer.out_dim);
    // Unit-variance propagation for selu layers; Glorot bounds otherwise.
    const double bound = layer.activation == Activation::kSelu
                             ? std::sqrt(3.0 / fan_in)
                             : std::sqrt(6.0 / (fan_in + fan_out));
    layer.weights.resize(static_cast<std::size_t>(layer.in_dim) *
                         static_cast<std::size_t>(layer.out_dim));
    for (double& w : layer.weights) w = stream.uniform(-bound, bound);
    layer.bias.assign(static_cast<std::size_t>(layer.out_dim), 0.0);
  }
  return net;
}

}  // namespace deeposets::nn
