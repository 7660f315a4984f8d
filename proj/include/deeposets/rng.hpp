#pragma once

#include <array>
#include <cstdint>

namespace deeposets::rng {

// Philox 4x64 counter-based generator, 10 rounds.
//
// A pure bijective block function: every (counter, key) pair maps to four
// 64-bit words, so any draw in the program is addressable by index without
// sequential state. Streams never overlap as long as their keys differ.
struct Philox4x64 {
  static constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ull;
  static constexpr std::uint64_t kMul1 = 0xCA5A826395121157ull;
  static constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ull;
  static constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73Bull;

  static std::array<std::uint64_t, 4> block(std::array<std::uint64_t, 4> counter,
                                            std::array<std::uint64_t, 2> key);
};

// A deterministic stream of uniform/normal variates addressed by
// (seed, stream_id, draw index). Value type; cheap to copy.
//
// Uniforms come from 53-bit mantissa slices of Philox words. Normals are
// produced pairwise by the Box-Muller transform of consecutive uniforms.
class RandomStream {
 public:
  RandomStream() = default;
  RandomStream(std::uint64_t seed, std::uint64_t stream_id)
      : key_{seed, stream_id} {}

  std::uint64_t next_u64();

  // Uniform on [0, 1).
  double uniform();

  // Uniform on [lo, hi).
  double uniform(double lo, double hi);

  // Standard normal N(0, 1).
  double normal();

  std::uint64_t seed() const { return key_[0]; }
  std::uint64_t stream_id() const { return key_[1]; }

 private:
  void refill();

  std::array<std::uint64_t, 2> key_{0, 0};
  std::array<std::uint64_t, 4> buffer_{};
  std::uint64_t block_index_ = 0;
  int word_pos_ = 4;  // forces refill on first draw
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

// Standard-normal stream (stream id 0 of the given seed).
inline RandomStream gaussian_stream(std::uint64_t seed) {
  return RandomStream(seed, 0);
}

}  // namespace deeposets::rng
