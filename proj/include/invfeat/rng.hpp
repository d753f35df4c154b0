#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <vector>

#include <Eigen/Core>

#include "invfeat/errors.hpp"

namespace invfeat {

/// Seeded 64-bit PRNG with a bit-exact integer stream, used for every piece of
/// randomness in the library so runs are reproducible from a single seed.
///
/// Recurrence (splitmix-style):
///   state <- state + 0x9E3779B97F4A7C15
///   z <- state
///   z <- (z XOR (z >> 30)) * 0xBF58476D1CE4E5B9
///   z <- (z XOR (z >> 27)) * 0x94D049BB133111EB
///   output z XOR (z >> 31)
///
/// Uniforms take the top 53 bits. Gaussians come from Box-Muller on two
/// consecutive uniforms: u1 = ((z1 >> 11) + 1) * 2^-53 in (0,1],
/// u2 = (z2 >> 11) * 2^-53 in [0,1), returning r*cos(2*pi*u2) first and
/// caching r*sin(2*pi*u2), with r = sqrt(-2 ln u1).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0,1), 53-bit resolution.
  double next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 =
        static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0,1]
    const double u2 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

inline Eigen::VectorXd gaussian_vector(int n, SplitMix64& rng) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.next_gaussian();
  return v;
}

/// Entries drawn row-major so the layout of the stream is well defined.
inline Eigen::MatrixXd gaussian_matrix(int rows, int cols, SplitMix64& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.next_gaussian();
  return m;
}

/// First k entries of a seeded Fisher-Yates pass over {0..n-1}:
/// for i in 0..k-1, swap position i with position i + (next_u64() mod (n-i)).
inline std::vector<int> sample_without_replacement(int n, int k,
                                                   SplitMix64& rng) {
  if (k > n || k < 0 || n < 0)
    throw ArgumentError("sample_without_replacement: need 0 <= k <= n, got k=" +
                        std::to_string(k) + ", n=" + std::to_string(n));
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < k; ++i) {
    const int j = i + static_cast<int>(rng.next_u64() %
                                       static_cast<std::uint64_t>(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

inline std::vector<int> shuffled_indices(int n, SplitMix64& rng) {
  std::vector<int> idx = sample_without_replacement(n, n, rng);
  return idx;
}

}  // namespace invfeat
