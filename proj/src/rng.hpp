#pragma once

#include <cstdint>
#include <string_view>

namespace fdx {

// Philox4x32-10 counter-based generator. Streams are keyed by
// (seed, label), so per-entity substreams can be drawn in parallel and
// still reproduce the sequential run bit for bit.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : Rng(seed, 0) {}
  Rng(std::uint64_t seed, std::uint64_t stream);

  // Derives the stream id from a stable hash of the label.
  static Rng substream(std::uint64_t seed, std::string_view label);

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  // Uniform on [0, 1), 53-bit resolution.
  double uniform();
  // Uniform on [lo, hi).
  double uniform(double lo, double hi);
  // Standard normal via Box-Muller; pairs are cached.
  double gaussian();
  // Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  void refill();

  std::uint32_t key_[2];
  std::uint32_t counter_[4];
  std::uint32_t block_[4];
  int block_pos_;
  double cached_gauss_;
  bool has_cached_gauss_;
};

// FNV-1a, used for stream labels and anywhere a stable 64-bit hash is needed.
std::uint64_t stable_hash(std::string_view s);

}  // namespace fdx
