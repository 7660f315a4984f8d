#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "deeposets/model.hpp"

namespace deeposets {

// Adam moments for every trainable parameter, in the fixed subnet order
// {x_embed, y_embed, encoder, branch, trunk} plus the readout bias. Stored
// in training checkpoints so a run can resume bitwise.
struct OptimizerSnapshot {
  long steps = 0;
  std::vector<std::vector<nn::GradientTape::LayerGrad>> first_moments;
  std::vector<std::vector<nn::GradientTape::LayerGrad>> second_moments;
  double b0_first = 0.0;
  double b0_second = 0.0;
};

// A self-describing text snapshot of a model: format version, the full
// ModelConfig, training provenance, and all parameters serialized as decimal
// doubles with 17 significant digits. Load followed by save is
// byte-identical.
struct Checkpoint {
  DeepOSetsModel model;
  std::uint64_t seed = 0;
  long iterations = 0;
  double final_loss = 0.0;
  std::optional<OptimizerSnapshot> optimizer;
};

void save_checkpoint(const Checkpoint& ckpt, std::ostream& os);
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);

// Throws IoError on version mismatch, truncation, or any malformed content.
Checkpoint load_checkpoint(std::istream& is, const std::string& origin = "<stream>");
Checkpoint load_checkpoint(const std::string& path);

// Decimal serialization used throughout the text formats: shortest form of
// "%.17g", which round-trips all finite doubles exactly.
std::string format_double(double value);

// FNV-1a 64-bit content hash, used to stamp reports with the identity of the
// checkpoint they were computed from.
std::uint64_t fnv1a_file_hash(const std::string& path);

}  // namespace deeposets
