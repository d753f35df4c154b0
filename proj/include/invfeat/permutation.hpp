#pragma once

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "invfeat/errors.hpp"
#include "invfeat/rng.hpp"

namespace invfeat {

/// A bijection of {0..n-1}, stored as the image of each index.
class Permutation {
 public:
  explicit Permutation(std::vector<int> map) : map_(std::move(map)) {
    validate();
  }

  static Permutation identity(int n) {
    std::vector<int> m(static_cast<std::size_t>(n));
    std::iota(m.begin(), m.end(), 0);
    return Permutation(std::move(m));
  }

  int n() const { return static_cast<int>(map_.size()); }
  int operator()(int i) const { return map_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& map() const { return map_; }

  Permutation inverse() const {
    std::vector<int> inv(map_.size());
    for (int i = 0; i < n(); ++i) inv[static_cast<std::size_t>(map_[i])] = i;
    return Permutation(std::move(inv));
  }

  bool is_identity() const {
    for (int i = 0; i < n(); ++i)
      if (map_[static_cast<std::size_t>(i)] != i) return false;
    return true;
  }

  friend bool operator==(const Permutation& a, const Permutation& b) {
    return a.map_ == b.map_;
  }

 private:
  void validate() const {
    std::vector<bool> seen(map_.size(), false);
    for (int v : map_) {
      if (v < 0 || v >= n() || seen[static_cast<std::size_t>(v)])
        throw ArgumentError("Permutation: map is not a bijection of {0.." +
                            std::to_string(n() - 1) + "}");
      seen[static_cast<std::size_t>(v)] = true;
    }
  }

  std::vector<int> map_;
};

/// (p∘q)(i) = p(q(i)).
inline Permutation compose(const Permutation& p, const Permutation& q) {
  if (p.n() != q.n())
    throw ArgumentError("compose: size mismatch " + std::to_string(p.n()) +
                        " vs " + std::to_string(q.n()));
  std::vector<int> m(static_cast<std::size_t>(p.n()));
  for (int i = 0; i < p.n(); ++i) m[static_cast<std::size_t>(i)] = p(q(i));
  return Permutation(std::move(m));
}

/// All n! permutations in lexicographic order. Refuses n > 8.
inline std::vector<Permutation> all_permutations(int n) {
  if (n > 8)
    throw SizeLimitError("all_permutations: n=" + std::to_string(n) +
                         " exceeds the n <= 8 enumeration limit");
  if (n < 0) throw ArgumentError("all_permutations: negative n");
  std::vector<int> m(static_cast<std::size_t>(n));
  std::iota(m.begin(), m.end(), 0);
  std::vector<Permutation> out;
  do {
    out.emplace_back(m);
  } while (std::next_permutation(m.begin(), m.end()));
  return out;
}

/// Seeded Fisher-Yates.
inline Permutation random_permutation(int n, SplitMix64& rng) {
  return Permutation(shuffled_indices(n, rng));
}

}  // namespace invfeat
