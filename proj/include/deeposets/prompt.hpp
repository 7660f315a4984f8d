#pragma once

#include <vector>

#include "deeposets/common.hpp"

namespace deeposets {

// One labeled in-context example (x, y).
struct Example {
  std::vector<double> x;
  double y = 0.0;
};

// A variable-length set of in-context examples; the unit of inference input.
struct Prompt {
  std::vector<Example> examples;

  int size() const { return static_cast<int>(examples.size()); }
  int input_dim() const {
    return examples.empty() ? 0 : static_cast<int>(examples.front().x.size());
  }

  // n >= 1 and all x share one dimension.
  void validate() const {
    if (examples.empty()) throw ShapeError("prompt: needs at least 1 example");
    const std::size_t d = examples.front().x.size();
    if (d == 0) throw ShapeError("prompt: zero-dimensional examples");
    for (std::size_t i = 0; i < examples.size(); ++i) {
      if (examples[i].x.size() != d) {
        throw ShapeError(msg("prompt: example ", i, " has dimension ",
                             examples[i].x.size(), ", expected ", d));
      }
    }
  }
};

}  // namespace deeposets
