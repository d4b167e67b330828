#pragma once

#include <array>
#include <cstdint>
#include <Eigen/Core>

namespace odl {

/// Counter-based Philox4x32-10 generator (Salmon et al. constants).
///
/// Every source of randomness in the library goes through this generator so
/// that results are a pure function of (seed, stream, draw index) and do not
/// depend on platform RNG implementations or thread scheduling.  Independent
/// streams share a seed and differ in the `stream` word, which is placed in
/// the upper half of the 128-bit counter.
class Philox {
 public:
  explicit Philox(std::uint64_t seed, std::uint64_t stream = 0)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        ctr_{0, 0, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)} {}

  std::uint32_t next_u32() {
    if (pos_ == 4) refill();
    return buf_[pos_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return lo | (hi << 32);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller (pairs cached).
  double next_gaussian();

  Eigen::VectorXd gaussian_vector(int n);

  /// Uniform point on the unit sphere in R^n (normalized Gaussian).
  Eigen::VectorXd unit_sphere(int n);

  /// One Philox block for the given counter/key, exposed for known-answer tests.
  static std::array<std::uint32_t, 4> block(const std::array<std::uint32_t, 4>& counter,
                                            const std::array<std::uint32_t, 2>& key);

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> ctr_;
  std::array<std::uint32_t, 4> buf_{};
  int pos_ = 4;
  bool has_cached_gaussian_ = false;
  double cached_gaussian_ = 0.0;
};

/// Derives the seed of child stream `index` from a master seed (SplitMix64
/// finalizer on the advanced state).  Used for per-restart and per-instance
/// streams so parallel work is reproducible regardless of scheduling.
std::uint64_t child_seed(std::uint64_t master, std::uint64_t index);

}  // namespace odl
