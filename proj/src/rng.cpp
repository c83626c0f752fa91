#include "semilin/rng.hpp"

#include <cmath>
#include <numbers>

namespace semilin {

namespace {

constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
  const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
  hi = static_cast<std::uint64_t>(p >> 64);
  lo = static_cast<std::uint64_t>(p);
}

// Box-Muller on a pair of open-interval uniforms.
inline void box_muller(double u1, double u2, double& z0, double& z1) {
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  z0 = r * std::cos(angle);
  z1 = r * std::sin(angle);
}

}  // namespace

std::array<std::uint64_t, 4> philox4x64(std::array<std::uint64_t, 4> c,
                                        std::array<std::uint64_t, 2> k) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      k[0] += kWeyl0;
      k[1] += kWeyl1;
    }
    std::uint64_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
  return c;
}

std::array<std::uint64_t, 4> CounterStream::block(std::uint64_t block_index) const {
  return philox4x64({block_index, stream_, tag_, 0}, {seed_, 0x5EED5EED5EED5EEDULL});
}

double CounterStream::uniform(std::uint64_t index) const {
  return to_open_unit(block(index / 4)[index % 4]);
}

double CounterStream::normal(std::uint64_t index) const {
  const auto b = block(index / 4);
  const std::uint64_t pair = (index % 4) / 2;
  double z0, z1;
  box_muller(to_open_unit(b[2 * pair]), to_open_unit(b[2 * pair + 1]), z0, z1);
  return index % 2 == 0 ? z0 : z1;
}

void NormalSequence::refill() {
  const auto b = philox4x64({block_, stream_, tag_, 0}, {seed_, 0x5EED5EED5EED5EEDULL});
  box_muller(to_open_unit(b[0]), to_open_unit(b[1]), cache_[0], cache_[1]);
  box_muller(to_open_unit(b[2]), to_open_unit(b[3]), cache_[2], cache_[3]);
  ++block_;
  pos_ = 0;
}

double NormalSequence::next() {
  if (pos_ == 4) refill();
  return cache_[pos_++];
}

double NormalSequence::next_uniform() {
  // Uniform draws use a separate tag space so they never alias the normal blocks.
  if (raw_pos_ == 4) {
    raw_ = philox4x64({raw_block_, stream_, tag_ ^ 0x8000000000000000ULL, 0},
                      {seed_, 0x5EED5EED5EED5EEDULL});
    ++raw_block_;
    raw_pos_ = 0;
  }
  return to_open_unit(raw_[raw_pos_++]);
}

}  // namespace semilin
