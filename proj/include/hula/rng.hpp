#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace hula {

/// Identifies what a random stream is used for, so that distinct parts of an
/// algorithm never share a stream even when they share (seed, step, unit).
enum class StreamPurpose : std::uint32_t {
  generic = 0,
  theta_noise = 1,
  latent_sweep = 2,
  latent_init = 3,
  subsample = 4,
  theta_init = 5,
  simulate = 6,
  mh_proposal = 7,
  mh_accept = 8,
  beta_gibbs = 9,
  predictive = 10,
  split = 11,
};

/// Counter-based random stream (Philox-4x32-10).
///
/// A stream is addressed by (seed, purpose, step, unit). "step" is a logical
/// time index (chain iteration, replication, draw index) and "unit" a spatial
/// index (observation, block). Streams with different addresses are
/// statistically independent, which makes per-observation work reproducible
/// regardless of evaluation order or thread count.
class RngStream {
 public:
  RngStream(std::uint64_t seed, StreamPurpose purpose, std::uint64_t step = 0,
            std::uint64_t unit = 0) {
    key_[0] = static_cast<std::uint32_t>(seed);
    key_[1] = static_cast<std::uint32_t>(seed >> 32);
    counter_[0] = 0;
    counter_[1] = static_cast<std::uint32_t>(unit);
    counter_[2] = static_cast<std::uint32_t>(step);
    counter_[3] = static_cast<std::uint32_t>(purpose) +
                  0x100u * static_cast<std::uint32_t>(step >> 32) +
                  0x100000u * static_cast<std::uint32_t>(unit >> 32);
  }

  std::uint32_t next_u32() {
    if (buf_pos_ == 4) refill();
    return buf_[buf_pos_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return lo | (hi << 32);
  }

  /// Uniform draw on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform integer on [0, bound). bound must be positive.
  std::uint64_t uniform_below(std::uint64_t bound) {
    // rejection on the top of the 64-bit range keeps the draw exactly uniform
    const std::uint64_t limit = bound * ((~std::uint64_t{0}) / bound);
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % bound;
  }

  /// Standard normal draw (Box-Muller, one spare cached per stream).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * kPi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Draw from N(0,1) conditioned on X > lower.
  double std_normal_lower_truncated(double lower) {
    if (lower < 0.45) {
      // plenty of mass to the right of the bound: plain rejection
      double x;
      do {
        x = normal();
      } while (x <= lower);
      return x;
    }
    // tail region: translated-exponential rejection (Robert, 1995)
    const double alpha = 0.5 * (lower + std::sqrt(lower * lower + 4.0));
    for (;;) {
      const double x = lower - std::log(uniform()) / alpha;
      const double d = x - alpha;
      if (uniform() <= std::exp(-0.5 * d * d)) return x;
    }
  }

  double normal_lower_truncated(double mean, double sd, double lower) {
    return mean + sd * std_normal_lower_truncated((lower - mean) / sd);
  }

  double normal_upper_truncated(double mean, double sd, double upper) {
    return mean - sd * std_normal_lower_truncated((mean - upper) / sd);
  }

 private:
  static constexpr double kPi = 3.14159265358979323846;

  static std::uint32_t mul_hi(std::uint32_t a, std::uint32_t b) {
    return static_cast<std::uint32_t>(
        (static_cast<std::uint64_t>(a) * b) >> 32);
  }

  void refill() {
    std::uint32_t c0 = counter_[0], c1 = counter_[1], c2 = counter_[2],
                  c3 = counter_[3];
    std::uint32_t k0 = key_[0], k1 = key_[1];
    for (int round = 0; round < 10; ++round) {
      const std::uint32_t hi0 = mul_hi(kMul0, c0);
      const std::uint32_t lo0 = kMul0 * c0;
      const std::uint32_t hi1 = mul_hi(kMul1, c2);
      const std::uint32_t lo1 = kMul1 * c2;
      const std::uint32_t n0 = hi1 ^ c1 ^ k0;
      const std::uint32_t n1 = lo1;
      const std::uint32_t n2 = hi0 ^ c3 ^ k1;
      const std::uint32_t n3 = lo0;
      c0 = n0;
      c1 = n1;
      c2 = n2;
      c3 = n3;
      k0 += kWeyl0;
      k1 += kWeyl1;
    }
    buf_[0] = c0;
    buf_[1] = c1;
    buf_[2] = c2;
    buf_[3] = c3;
    buf_pos_ = 0;
    ++counter_[0];  // next block of the same stream
  }

  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  std::uint32_t key_[2];
  std::uint32_t counter_[4];
  std::uint32_t buf_[4] = {0, 0, 0, 0};
  int buf_pos_ = 4;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Uniform random size-m subset of {0,...,n-1}, drawn without replacement by
/// partial Fisher-Yates shuffling. Returned indices are sorted ascending.
inline std::vector<int> sample_index_subset(int n, int m, RngStream& rng) {
  if (n <= 0 || m <= 0 || m > n)
    throw std::invalid_argument("sample_index_subset: need 1 <= m <= n");
  std::vector<int> pool(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < m; ++i) {
    const auto j = i + static_cast<int>(rng.uniform_below(
                           static_cast<std::uint64_t>(n - i)));
    std::swap(pool[static_cast<std::size_t>(i)],
              pool[static_cast<std::size_t>(j)]);
  }
  std::vector<int> out(pool.begin(), pool.begin() + m);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace hula
