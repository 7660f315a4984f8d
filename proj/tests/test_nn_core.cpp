#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "deeposets/common.hpp"
#include "deeposets/nn.hpp"
#include "deeposets/rng.hpp"
#include "testutil.hpp"

using namespace deeposets;
using nn::Activation;

namespace {

nn::DenseNet single_layer(int in, int out, Activation act,
                          std::vector<double> weights,
                          std::vector<double> bias) {
  nn::DenseNet net;
  nn::DenseLayer layer;
  layer.in_dim = in;
  layer.out_dim = out;
  layer.activation = act;
  layer.weights = std::move(weights);
  layer.bias = std::move(bias);
  net.layers.push_back(std::move(layer));
  return net;
}

nn::DenseNet random_net(const std::vector<int>& sizes,
                        const std::vector<Activation>& acts,
                        std::uint64_t seed) {
  return nn::init_net(sizes, acts, seed);
}

}  // namespace

TEST_CASE("forward: identity layer passes input through") {
  const auto net = single_layer(2, 2, Activation::kIdentity,
                                {1.0, 0.0, 0.0, 1.0}, {0.0, 0.0});
  const std::vector<double> input = {1.5, -2.0};
  const auto out = nn::forward(net, input);
  CHECK(out[0] == 1.5);
  CHECK(out[1] == -2.0);
}

TEST_CASE("forward: tanh of zero pre-activation is zero") {
  const auto net = single_layer(1, 1, Activation::kTanh, {0.0}, {0.0});
  const auto out = nn::forward(net, std::vector<double>{7.0});
  CHECK(out[0] == 0.0);
}

TEST_CASE("forward: selu at 1 equals the scale constant") {
  const auto net = single_layer(1, 1, Activation::kSelu, {1.0}, {0.0});
  const auto out = nn::forward(net, std::vector<double>{1.0});
  CHECK(out[0] == doctest::Approx(nn::kSeluLambda).epsilon(1e-15));
}

TEST_CASE("forward: selu negative branch matches its definition") {
  const auto net = single_layer(1, 1, Activation::kSelu, {1.0}, {0.0});
  const auto out = nn::forward(net, std::vector<double>{-0.75});
  const double expected =
      nn::kSeluLambda * nn::kSeluAlpha * std::expm1(-0.75);
  CHECK(out[0] == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("forward: dimension mismatch names the layer") {
  const auto net = single_layer(2, 1, Activation::kIdentity, {1.0, 1.0}, {0.0});
  CHECK_THROWS_WITH_AS(nn::forward(net, std::vector<double>{1.0}),
                       doctest::Contains("layer 0"), ShapeError);
}

TEST_CASE("backward: linear chain rule on a scalar layer") {
  const auto net = single_layer(1, 1, Activation::kIdentity, {2.0}, {0.0});
  nn::ForwardTrace trace;
  nn::forward(net, std::vector<double>{3.0}, &trace);
  auto tape = nn::make_tape(net);
  const auto input_grad =
      nn::backward(net, trace, std::vector<double>{1.0}, tape);
  CHECK(input_grad[0] == 2.0);
  CHECK(tape.layers[0].weights[0] == 3.0);
  CHECK(tape.layers[0].bias[0] == 1.0);
}

TEST_CASE("backward: zero upstream yields zero gradients") {
  const auto net = random_net({3, 5, 2}, {Activation::kTanh, Activation::kSelu}, 9);
  nn::ForwardTrace trace;
  nn::forward(net, std::vector<double>{0.3, -1.2, 0.9}, &trace);
  auto tape = nn::make_tape(net);
  const auto input_grad =
      nn::backward(net, trace, std::vector<double>{0.0, 0.0}, tape);
  for (double g : input_grad) CHECK(g == 0.0);
  for (const auto& layer : tape.layers) {
    for (double g : layer.weights) CHECK(g == 0.0);
    for (double g : layer.bias) CHECK(g == 0.0);
  }
}

TEST_CASE("backward without a forward trace is an error") {
  const auto net = single_layer(1, 1, Activation::kIdentity, {1.0}, {0.0});
  nn::ForwardTrace trace;  // never produced by forward
  auto tape = nn::make_tape(net);
  CHECK_THROWS_AS(nn::backward(net, trace, std::vector<double>{1.0}, tape),
                  Error);
}

TEST_CASE("gradient check: every activation, nets up to 3 layers") {
  // Property from the module contract: analytic gradients match central
  // finite differences at 1e-5 step with < 1e-5 relative error.
  const std::vector<Activation> all_acts = {
      Activation::kIdentity, Activation::kTanh, Activation::kSelu,
      Activation::kRelu};
  std::uint64_t seed = 100;
  for (Activation act : all_acts) {
    for (int depth = 1; depth <= 3; ++depth) {
      std::vector<int> sizes = {3};
      std::vector<Activation> acts;
      for (int l = 0; l < depth; ++l) {
        sizes.push_back(2 + (l + depth) % 3);
        acts.push_back(act);
      }
      auto net = random_net(sizes, acts, seed++);
      rng::RandomStream stream(seed, 77);
      std::vector<double> input(3);
      for (double& v : input) v = stream.normal();
      std::vector<double> upstream(
          static_cast<std::size_t>(net.output_dim()));
      for (double& v : upstream) v = stream.normal();

      auto scalar_loss = [&] {
        const auto out = nn::forward(net, input);
        double acc = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) acc += out[i] * upstream[i];
        return acc;
      };

      nn::ForwardTrace trace;
      nn::forward(net, input, &trace);
      auto tape = nn::make_tape(net);
      const auto input_grad = nn::backward(net, trace, upstream, tape);

      for (std::size_t li = 0; li < net.layers.size(); ++li) {
        auto check_buffer = [&](std::vector<double>& params,
                                const std::vector<double>& grads) {
          for (std::size_t k = 0; k < params.size(); ++k) {
            const double fd =
                testutil::central_difference(&params[k], scalar_loss);
            CHECK_MESSAGE(testutil::grad_close(grads[k], fd),
                          "layer ", li, " param ", k, ": analytic ", grads[k],
                          " vs fd ", fd);
          }
        };
        check_buffer(net.layers[li].weights, tape.layers[li].weights);
        check_buffer(net.layers[li].bias, tape.layers[li].bias);
      }
      for (std::size_t k = 0; k < input.size(); ++k) {
        const double fd = testutil::central_difference(&input[k], scalar_loss);
        CHECK(testutil::grad_close(input_grad[k], fd));
      }
    }
  }
}

TEST_CASE("tape merge equals sequential accumulation") {
  const auto net = random_net({4, 6, 3}, {Activation::kSelu, Activation::kTanh}, 3);
  rng::RandomStream stream(4, 0);
  auto draw = [&](int len) {
    std::vector<double> v(static_cast<std::size_t>(len));
    for (double& x : v) x = stream.normal();
    return v;
  };
  const auto in_a = draw(4), in_b = draw(4);
  const auto up_a = draw(3), up_b = draw(3);

  auto sequential = nn::make_tape(net);
  nn::ForwardTrace trace;
  nn::forward(net, in_a, &trace);
  nn::backward(net, trace, up_a, sequential);
  nn::forward(net, in_b, &trace);
  nn::backward(net, trace, up_b, sequential);

  auto tape_a = nn::make_tape(net);
  auto tape_b = nn::make_tape(net);
  nn::forward(net, in_a, &trace);
  nn::backward(net, trace, up_a, tape_a);
  nn::forward(net, in_b, &trace);
  nn::backward(net, trace, up_b, tape_b);
  tape_a.add(tape_b);

  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    for (std::size_t k = 0; k < tape_a.layers[li].weights.size(); ++k) {
      CHECK(tape_a.layers[li].weights[k] == sequential.layers[li].weights[k]);
    }
    for (std::size_t k = 0; k < tape_a.layers[li].bias.size(); ++k) {
      CHECK(tape_a.layers[li].bias[k] == sequential.layers[li].bias[k]);
    }
  }
}

TEST_CASE("adam: first step moves by about lr in the gradient direction") {
  auto net = single_layer(1, 2, Activation::kIdentity, {0.5, -0.25},
                          {0.1, 0.2});
  auto tape = nn::make_tape(net);
  tape.layers[0].weights = {0.8, -1.7};
  tape.layers[0].bias = {2.4, -0.003};
  auto state = nn::make_adam_state(net);
  const std::vector<double> before_w = net.layers[0].weights;
  const std::vector<double> before_b = net.layers[0].bias;
  nn::adam_step(net, tape, state);
  const double lr = 1e-3;
  CHECK(std::abs(net.layers[0].weights[0] - (before_w[0] - lr)) < 1e-6);
  CHECK(std::abs(net.layers[0].weights[1] - (before_w[1] + lr)) < 1e-6);
  CHECK(std::abs(net.layers[0].bias[0] - (before_b[0] - lr)) < 1e-6);
  CHECK(std::abs(net.layers[0].bias[1] - (before_b[1] + lr)) < 1e-6);
  CHECK(state.steps == 1);
}

TEST_CASE("adam: zero gradients leave parameters unchanged") {
  auto net = random_net({2, 3}, {Activation::kTanh}, 5);
  const auto before = net.layers[0].weights;
  auto tape = nn::make_tape(net);
  auto state = nn::make_adam_state(net);
  nn::adam_step(net, tape, state);
  CHECK(net.layers[0].weights == before);
}

TEST_CASE("adam: NaN gradient aborts the step and keeps parameters") {
  auto net = random_net({2, 2}, {Activation::kIdentity}, 6);
  const auto before = net.layers[0].weights;
  auto tape = nn::make_tape(net);
  tape.layers[0].weights[1] = std::nan("");
  auto state = nn::make_adam_state(net);
  CHECK_THROWS_AS(nn::adam_step(net, tape, state), Error);
  CHECK(net.layers[0].weights == before);
  CHECK(state.steps == 0);
}

TEST_CASE("learning-rate schedule: 0.9 drop every 2000 steps, exact") {
  nn::AdamState state;
  CHECK(state.learning_rate_at(0) == 1e-3);
  CHECK(state.learning_rate_at(1999) == 1e-3);
  CHECK(state.learning_rate_at(2000) == 1e-3 * 0.9);
  CHECK(state.learning_rate_at(2000) == doctest::Approx(9e-4).epsilon(1e-15));
  CHECK(state.learning_rate_at(16000) ==
        1e-3 * std::pow(0.9, 8.0));
  for (long t : {0L, 1L, 4000L, 5999L, 31999L}) {
    CHECK(state.learning_rate_at(t) ==
          1e-3 * std::pow(0.9, static_cast<double>(t / 2000)));
  }
}

TEST_CASE("init_net: parameter count matches the closed form") {
  const std::vector<int> sizes = {1, 40, 40, 40, 40, 100};
  const std::vector<Activation> acts(5, Activation::kTanh);
  const auto net = nn::init_net(sizes, acts, 0);
  CHECK(net.parameter_count() == 9100);

  // parameter_count == sum over layers of out*(in+1), random shapes
  rng::RandomStream pick(11, 0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> s = {1 + static_cast<int>(pick.uniform() * 9)};
    std::size_t expected = 0;
    const int depth = 1 + static_cast<int>(pick.uniform() * 4);
    std::vector<Activation> a;
    for (int l = 0; l < depth; ++l) {
      s.push_back(1 + static_cast<int>(pick.uniform() * 9));
      expected += static_cast<std::size_t>(s[s.size() - 1]) *
                  static_cast<std::size_t>(s[s.size() - 2] + 1);
      a.push_back(Activation::kSelu);
    }
    CHECK(nn::init_net(s, a, trial).parameter_count() == expected);
  }
}

TEST_CASE("init_net: deterministic in the seed") {
  const std::vector<int> sizes = {3, 8, 2};
  const std::vector<Activation> acts = {Activation::kSelu, Activation::kTanh};
  const auto a = nn::init_net(sizes, acts, 1234);
  const auto b = nn::init_net(sizes, acts, 1234);
  const auto c = nn::init_net(sizes, acts, 1235);
  CHECK(a.layers[0].weights == b.layers[0].weights);
  CHECK(a.layers[1].weights == b.layers[1].weights);
  CHECK(a.layers[0].weights != c.layers[0].weights);
  for (const auto& layer : a.layers) {
    for (double bias : layer.bias) CHECK(bias == 0.0);
  }
}

TEST_CASE("init_net: zero-size layer is an error") {
  const std::vector<int> sizes = {2, 0, 1};
  const std::vector<Activation> acts = {Activation::kTanh, Activation::kTanh};
  CHECK_THROWS_AS(nn::init_net(sizes, acts, 0), ShapeError);
}
