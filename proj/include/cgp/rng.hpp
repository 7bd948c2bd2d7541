#pragma once

#include <array>
#include <cstdint>

namespace cgp {

// Counter-based generator (Philox4x32-10). A (seed, stream) pair names one
// reproducible sequence; distinct streams are statistically independent, so
// parallel tasks can each own a stream without coordinating.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

  std::uint64_t next_u64() noexcept;

  // Uniform on the open interval (0,1).
  double uniform() noexcept;

  // Standard normal via inverse CDF; deterministic given the stream position.
  double normal() noexcept;

  // Stable sub-seed derivation: one Philox block keyed by `seed` over
  // (tag, index). Used to give replicates/chains/grid cells their own seeds.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t tag,
                              std::uint64_t index) noexcept;

 private:
  void refill() noexcept;

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint64_t, 2> block_{};
  int pos_;  // next u64 within block_, 2 forces refill
};

}  // namespace cgp
