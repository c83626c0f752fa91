#pragma once

#include <array>
#include <cstdint>

namespace semilin {

/// Philox4x64-10 counter-based generator (Salmon et al., SC'11). Pure function of
/// (counter, key), so any draw can be reproduced without replaying a sequence.
std::array<std::uint64_t, 4> philox4x64(std::array<std::uint64_t, 4> counter,
                                        std::array<std::uint64_t, 2> key);

/// Uniform in the open interval (0, 1) from the top 53 bits.
inline double to_open_unit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Deterministic stream of draws addressed by (seed, stream, index).
/// Streams are independent for distinct (seed, stream, tag).
class CounterStream {
 public:
  CounterStream(std::uint64_t seed, std::uint64_t stream, std::uint64_t tag = 0)
      : seed_(seed), stream_(stream), tag_(tag) {}

  /// Uniform (0,1) number number `index` of this stream.
  double uniform(std::uint64_t index) const;
  /// Standard normal number `index` of this stream (Box-Muller on block-local pairs).
  double normal(std::uint64_t index) const;

 private:
  std::array<std::uint64_t, 4> block(std::uint64_t block_index) const;

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t tag_;
};

/// Sequential reader over a CounterStream that caches the current block.
class NormalSequence {
 public:
  NormalSequence(std::uint64_t seed, std::uint64_t stream, std::uint64_t tag = 0)
      : seed_(seed), stream_(stream), tag_(tag) {}

  double next();
  double next_uniform();

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t tag_;
  std::uint64_t block_ = 0;
  std::array<double, 4> cache_{};
  int pos_ = 4;
  std::array<std::uint64_t, 4> raw_{};
  int raw_pos_ = 4;
  std::uint64_t raw_block_ = 0;
};

}  // namespace semilin
