#include "deeposets/baseline.hpp"

#include <Eigen/Dense>

namespace deeposets::baseline {

OlsFit ols_fit(const Prompt& prompt) {
  prompt.validate();
  const int n = prompt.size();
  const int d = prompt.input_dim();

  Eigen::MatrixXd design(n, d);
  Eigen::VectorXd labels(n);
  for (int i = 0; i < n; ++i) {
    const Example& ex = prompt.examples[static_cast<std::size_t>(i)];
    for (int j = 0; j < d; ++j) design(i, j) = ex.x[static_cast<std::size_t>(j)];
    labels(i) = ex.y;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      design, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-10);
  const Eigen::VectorXd solution = svd.solve(labels);

  OlsFit fit;
  fit.a_hat.assign(solution.data(), solution.data() + d);
  fit.rank = static_cast<int>(svd.rank());
  fit.rss = (labels - design * solution).squaredNorm();
  return fit;
}

double ols_predict(const OlsFit& fit, std::span<const double> x_query) {
  if (static_cast<int>(x_query.size()) != fit.dim()) {
    throw ShapeError(msg("ols_predict: query dimension ", x_query.size(),
                         " != fit dimension ", fit.dim()));
  }
  double acc = 0.0;
  for (int j = 0; j < fit.dim(); ++j) {
    acc += fit.a_hat[static_cast<std::size_t>(j)] * x_query[static_cast<std::size_t>(j)];
  }
  return acc;
}

}  // namespace deeposets::baseline
