#include "cgp/rng.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <cmath>

namespace cgp {

namespace {

constexpr std::uint32_t kMult0 = 0xD2511F53u;
constexpr std::uint32_t kMult1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void philox_round(std::array<std::uint32_t, 4>& ctr,
                         std::array<std::uint32_t, 2>& key) noexcept {
  const std::uint64_t p0 = std::uint64_t(kMult0) * ctr[0];
  const std::uint64_t p1 = std::uint64_t(kMult1) * ctr[2];
  const std::array<std::uint32_t, 4> out = {
      static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
      static_cast<std::uint32_t>(p1),
      static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
      static_cast<std::uint32_t>(p0)};
  ctr = out;
  key[0] += kWeyl0;
  key[1] += kWeyl1;
}

inline std::array<std::uint32_t, 4> philox10(
    std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) noexcept {
  for (int r = 0; r < 10; ++r) philox_round(ctr, key);
  return ctr;
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream) noexcept
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      counter_{0, 0, static_cast<std::uint32_t>(stream),
               static_cast<std::uint32_t>(stream >> 32)},
      pos_(2) {}

void Rng::refill() noexcept {
  const auto out = philox10(counter_, key_);
  block_[0] = (std::uint64_t(out[1]) << 32) | out[0];
  block_[1] = (std::uint64_t(out[3]) << 32) | out[2];
  pos_ = 0;
  if (++counter_[0] == 0) ++counter_[1];  // 64-bit block index, streams in [2],[3]
}

std::uint64_t Rng::next_u64() noexcept {
  if (pos_ == 2) refill();
  return block_[pos_++];
}

double Rng::uniform() noexcept {
  const std::uint64_t bits = next_u64() >> 11;  // 53 bits
  return (static_cast<double>(bits) + 0.5) * 0x1p-53;
}

double Rng::normal() noexcept {
  const double u = uniform();
  return 1.4142135623730951 * boost::math::erf_inv(2.0 * u - 1.0);
}

std::uint64_t Rng::derive(std::uint64_t seed, std::uint64_t tag,
                          std::uint64_t index) noexcept {
  const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed),
                                            static_cast<std::uint32_t>(seed >> 32)};
  const std::array<std::uint32_t, 4> ctr = {
      static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32),
      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  const auto out = philox10(ctr, key);
  return (std::uint64_t(out[1]) << 32) | out[0];
}

}  // namespace cgp
