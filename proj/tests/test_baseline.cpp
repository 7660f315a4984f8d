#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "deeposets/baseline.hpp"
#include "deeposets/taskgen.hpp"
#include "testutil.hpp"

using namespace deeposets;
using baseline::OlsFit;

TEST_CASE("ols_fit: exact interpolation of y = 2x") {
  Prompt prompt;
  prompt.examples.push_back({{1.0}, 2.0});
  prompt.examples.push_back({{2.0}, 4.0});
  const OlsFit fit = baseline::ols_fit(prompt);
  CHECK(fit.a_hat[0] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(fit.rss == doctest::Approx(0.0).scale(1.0).epsilon(1e-24));
  CHECK(fit.rank == 1);
}

TEST_CASE("ols_fit: recovers noiseless tasks to 1e-10") {
  for (int d : {1, 5}) {
    taskgen::TaskDistribution dist;
    dist.input_dim = d;
    dist.prompt_size = 10;
    dist.query_count = 8;
    dist.seed = 42;
    double worst_coeff = 0.0, mse_acc = 0.0;
    const int tasks = 200;
    for (int idx = 0; idx < tasks; ++idx) {
      const auto task = taskgen::sample_task(dist, static_cast<std::uint64_t>(idx));
      const OlsFit fit = baseline::ols_fit(task.prompt);
      CHECK(fit.rank == d);
      for (int j = 0; j < d; ++j) {
        worst_coeff = std::max(
            worst_coeff, testutil::rel_err(fit.a_hat[static_cast<std::size_t>(j)],
                                           task.weights[static_cast<std::size_t>(j)]));
      }
      double acc = 0.0;
      for (const auto& q : task.queries) {
        const double err = baseline::ols_predict(fit, q.x) - q.target;
        acc += err * err;
      }
      mse_acc += acc / static_cast<double>(task.queries.size());
    }
    CHECK(worst_coeff < 1e-10);
    CHECK(mse_acc / tasks < (d == 1 ? 1e-10 : 1e-8));
  }
}

TEST_CASE("ols prediction MSE agrees with an independent closed-form route") {
  // For d = 1 the estimator is a_hat = sum(x*y) / sum(x*x); computing it
  // that way is an independent oracle for the factorization-based solver.
  taskgen::TaskDistribution dist;
  dist.input_dim = 1;
  dist.prompt_size = 10;
  dist.noise_variance = 0.2;
  dist.query_count = 8;
  dist.seed = 7;
  const int tasks = 10000;
  double mse_solver = 0.0, mse_oracle = 0.0;
  for (int idx = 0; idx < tasks; ++idx) {
    const auto task = taskgen::sample_task(dist, static_cast<std::uint64_t>(idx));
    const OlsFit fit = baseline::ols_fit(task.prompt);

    double sxy = 0.0, sxx = 0.0;
    for (const Example& ex : task.prompt.examples) {
      sxy += ex.x[0] * ex.y;
      sxx += ex.x[0] * ex.x[0];
    }
    const double a_closed = sxy / sxx;
    CHECK(testutil::rel_err(fit.a_hat[0], a_closed) < 1e-10);

    double acc_s = 0.0, acc_o = 0.0;
    for (const auto& q : task.queries) {
      const double es = baseline::ols_predict(fit, q.x) - q.target;
      const double eo = a_closed * q.x[0] - q.target;
      acc_s += es * es;
      acc_o += eo * eo;
    }
    mse_solver += acc_s / 8.0;
    mse_oracle += acc_o / 8.0;
  }
  mse_solver /= tasks;
  mse_oracle /= tasks;
  CHECK(std::abs(mse_solver - mse_oracle) / mse_oracle < 0.02);
  // theory for this estimator: sigma2 / (n - 2) = 0.2 / 8
  CHECK(mse_solver == doctest::Approx(0.025).epsilon(0.10));
}

TEST_CASE("ols_predict: basis vectors and zero fits") {
  OlsFit zero;
  zero.a_hat = {0.0, 0.0, 0.0};
  for (double x : {-2.0, 0.0, 5.5}) {
    const std::vector<double> q = {x, x, x};
    CHECK(baseline::ols_predict(zero, q) == 0.0);
  }
  OlsFit basis;
  basis.a_hat = {0.0, 1.0, 0.0};
  const std::vector<double> q = {3.0, -7.0, 2.0};
  CHECK(baseline::ols_predict(basis, q) == -7.0);

  const std::vector<double> wrong = {1.0};
  CHECK_THROWS_AS(baseline::ols_predict(basis, wrong), ShapeError);
}

TEST_CASE("normal equations hold: X^T (y - X a_hat) ~ 0") {
  taskgen::TaskDistribution dist;
  dist.input_dim = 5;
  dist.prompt_size = 12;
  dist.noise_variance = 1.0;
  dist.seed = 3;
  for (int idx = 0; idx < 50; ++idx) {
    const auto task = taskgen::sample_task(dist, static_cast<std::uint64_t>(idx));
    const OlsFit fit = baseline::ols_fit(task.prompt);
    double y_norm = 0.0;
    for (const Example& ex : task.prompt.examples) y_norm += ex.y * ex.y;
    for (int j = 0; j < 5; ++j) {
      double residual_proj = 0.0;
      for (const Example& ex : task.prompt.examples) {
        const double r = ex.y - baseline::ols_predict(fit, ex.x);
        residual_proj += ex.x[static_cast<std::size_t>(j)] * r;
      }
      CHECK(std::abs(residual_proj) / std::sqrt(y_norm) < 1e-9);
    }
  }
}

TEST_CASE("scale equivariance: scaling y scales a_hat") {
  taskgen::TaskDistribution dist;
  dist.input_dim = 3;
  dist.prompt_size = 9;
  dist.noise_variance = 0.5;
  dist.seed = 9;
  const auto task = taskgen::sample_task(dist, 4);
  const OlsFit base = baseline::ols_fit(task.prompt);

  Prompt doubled = task.prompt;
  for (Example& ex : doubled.examples) ex.y *= 2.0;
  const OlsFit fit2 = baseline::ols_fit(doubled);
  for (int j = 0; j < 3; ++j) {
    // power-of-two scaling is exact in floating point
    CHECK(fit2.a_hat[static_cast<std::size_t>(j)] ==
          2.0 * base.a_hat[static_cast<std::size_t>(j)]);
  }

  Prompt scaled = task.prompt;
  for (Example& ex : scaled.examples) ex.y *= 3.7;
  const OlsFit fit37 = baseline::ols_fit(scaled);
  for (int j = 0; j < 3; ++j) {
    CHECK(testutil::rel_err(fit37.a_hat[static_cast<std::size_t>(j)],
                            3.7 * base.a_hat[static_cast<std::size_t>(j)]) < 1e-12);
  }
}

TEST_CASE("rank deficiency: minimum-norm solution, rank reported") {
  // one example in d = 2: infinitely many interpolants; minimum norm picks
  // the projection onto the row space
  Prompt prompt;
  prompt.examples.push_back({{1.0, 1.0}, 2.0});
  const OlsFit fit = baseline::ols_fit(prompt);
  CHECK(fit.rank == 1);
  CHECK(fit.a_hat[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit.a_hat[1] == doctest::Approx(1.0).epsilon(1e-12));

  // duplicated direction in d = 2
  Prompt dup;
  dup.examples.push_back({{1.0, 0.0}, 3.0});
  dup.examples.push_back({{2.0, 0.0}, 6.0});
  const OlsFit fit2 = baseline::ols_fit(dup);
  CHECK(fit2.rank == 1);
  CHECK(fit2.a_hat[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(fit2.a_hat[1] == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));

  // n >= d with independent rows is full rank almost surely
  taskgen::TaskDistribution dist;
  dist.input_dim = 4;
  dist.prompt_size = 4;
  dist.seed = 12;
  const auto task = taskgen::sample_task(dist, 0);
  CHECK(baseline::ols_fit(task.prompt).rank == 4);
}
