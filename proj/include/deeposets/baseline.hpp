#pragma once

#include <span>
#include <vector>

#include "deeposets/prompt.hpp"

namespace deeposets::baseline {

// Least-squares fit of y ~ a^T x over the prompt examples (no intercept; the
// task family is homogeneous linear). Rank-deficient designs yield the
// minimum-norm solution.
struct OlsFit {
  std::vector<double> a_hat;
  double rss = 0.0;
  int rank = 0;

  int dim() const { return static_cast<int>(a_hat.size()); }
};

// Solves via a rank-revealing orthogonal factorization of the n x d design
// matrix; rank is decided by a relative singular-value threshold of 1e-10.
OlsFit ols_fit(const Prompt& prompt);

double ols_predict(const OlsFit& fit, std::span<const double> x_query);

}  // namespace deeposets::baseline
