#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "invfeat/errors.hpp"
#include "invfeat/permutation.hpp"

namespace invfeat {

/// Hard cap for the n! orbit oracles.
inline constexpr int kOrbitEnumerationMaxN = 8;

/// Dense real symmetric n x n matrix. Entries satisfy m(i,j) == m(j,i)
/// exactly; lossy input is symmetrized as (X + X^T)/2 at construction and the
/// max-abs asymmetry of the input is recorded for callers that want to warn.
class SymMatrix {
 public:
  explicit SymMatrix(Eigen::MatrixXd m) {
    if (m.rows() != m.cols() || m.rows() < 1)
      throw ArgumentError("SymMatrix: need a square matrix with n >= 1, got " +
                          std::to_string(m.rows()) + "x" +
                          std::to_string(m.cols()));
    asymmetry_ = 0.0;
    for (int i = 0; i < m.rows(); ++i)
      for (int j = i + 1; j < m.cols(); ++j) {
        asymmetry_ = std::max(asymmetry_, std::abs(m(i, j) - m(j, i)));
        const double v = 0.5 * (m(i, j) + m(j, i));
        m(i, j) = v;
        m(j, i) = v;
      }
    mat_ = std::move(m);
  }

  /// Trusted path for matrices already exactly symmetric (entry copies only).
  static SymMatrix from_symmetric(Eigen::MatrixXd m) {
    SymMatrix out;
    out.mat_ = std::move(m);
    out.asymmetry_ = 0.0;
    return out;
  }

  static SymMatrix zero(int n) {
    return from_symmetric(Eigen::MatrixXd::Zero(n, n));
  }

  static SymMatrix identity(int n) {
    return from_symmetric(Eigen::MatrixXd::Identity(n, n));
  }

  int n() const { return static_cast<int>(mat_.rows()); }
  double operator()(int i, int j) const { return mat_(i, j); }
  const Eigen::MatrixXd& mat() const { return mat_; }

  /// Max-abs asymmetry of the matrix this was constructed from.
  double load_asymmetry() const { return asymmetry_; }

 private:
  SymMatrix() = default;
  Eigen::MatrixXd mat_;
  double asymmetry_ = 0.0;
};

/// Conjugation by the permutation matrix: result[p(i)][p(j)] = X[i][j].
/// Pure entry relocation, no arithmetic.
inline SymMatrix apply_permutation(const SymMatrix& X, const Permutation& p) {
  if (p.n() != X.n())
    throw ArgumentError("apply_permutation: permutation size " +
                        std::to_string(p.n()) + " != matrix size " +
                        std::to_string(X.n()));
  const int n = X.n();
  Eigen::MatrixXd out(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out(p(i), p(j)) = X(i, j);
  return SymMatrix::from_symmetric(std::move(out));
}

inline int offdiag_count(int n) { return n * (n - 1) / 2; }

/// Row-major slot index of the strict upper-triangle pair (i,j), i < j.
/// This convention is shared by every module that touches off-diagonal slots.
inline int offdiag_slot(int n, int i, int j) {
  return i * n - i * (i + 1) / 2 + (j - i - 1);
}

inline std::pair<int, int> offdiag_pair(int n, int slot) {
  for (int i = 0; i < n - 1; ++i) {
    const int row = n - 1 - i;
    if (slot < row) return {i, i + 1 + slot};
    slot -= row;
  }
  throw ArgumentError("offdiag_pair: slot out of range");
}

/// An element of the product group acting independently on the n diagonal
/// slots (sigma) and the n(n-1)/2 off-diagonal slots (tau).
struct DiagOffdiagPermPair {
  Permutation sigma;
  Permutation tau;
};

inline bool operator==(const DiagOffdiagPermPair& a,
                       const DiagOffdiagPermPair& b) {
  return a.sigma == b.sigma && a.tau == b.tau;
}

/// Destination convention matching apply_permutation:
/// out_diag[sigma(i)] = in_diag[i], out_offdiag[tau(s)] = in_offdiag[s].
inline SymMatrix apply_gamma(const SymMatrix& X, const DiagOffdiagPermPair& g) {
  const int n = X.n();
  if (g.sigma.n() != n || g.tau.n() != offdiag_count(n))
    throw ArgumentError(
        "apply_gamma: pair sized (" + std::to_string(g.sigma.n()) + ", " +
        std::to_string(g.tau.n()) + ") does not match matrix size " +
        std::to_string(n));
  Eigen::MatrixXd out(n, n);
  for (int i = 0; i < n; ++i) out(g.sigma(i), g.sigma(i)) = X(i, i);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const auto [a, b] = offdiag_pair(n, g.tau(offdiag_slot(n, i, j)));
      out(a, b) = X(i, j);
      out(b, a) = X(i, j);
    }
  return SymMatrix::from_symmetric(std::move(out));
}

/// The pair (sigma, tau) whose slot action equals conjugation by p:
/// sigma(i) = p(i), tau sends slot (i,j) to slot (sorted(p(i), p(j))).
inline DiagOffdiagPermPair induced_pair(const Permutation& p) {
  const int n = p.n();
  std::vector<int> tau(static_cast<std::size_t>(offdiag_count(n)));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const int a = std::min(p(i), p(j));
      const int b = std::max(p(i), p(j));
      tau[static_cast<std::size_t>(offdiag_slot(n, i, j))] =
          offdiag_slot(n, a, b);
    }
  return {p, Permutation(std::move(tau))};
}

/// γ composition, componentwise.
inline DiagOffdiagPermPair compose(const DiagOffdiagPermPair& g,
                                   const DiagOffdiagPermPair& h) {
  return {compose(g.sigma, h.sigma), compose(g.tau, h.tau)};
}

/// True iff some permutation p makes apply_permutation(X,p) match Y within
/// tol (max-abs). Plain enumeration with early exit; deliberately free of any
/// canonical-form shortcut so it stays independent of the features it tests.
inline bool same_orbit_bruteforce(const SymMatrix& X, const SymMatrix& Y,
                                  double tol) {
  if (X.n() != Y.n())
    throw ArgumentError("same_orbit_bruteforce: size mismatch " +
                        std::to_string(X.n()) + " vs " + std::to_string(Y.n()));
  if (X.n() > kOrbitEnumerationMaxN)
    throw SizeLimitError("same_orbit_bruteforce: n=" + std::to_string(X.n()) +
                         " exceeds the n <= 8 limit (cost n!)");
  if (tol < 0) throw ArgumentError("same_orbit_bruteforce: tol must be >= 0");
  const int n = X.n();
  std::vector<int> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  do {
    bool match = true;
    for (int i = 0; i < n && match; ++i)
      for (int j = i; j < n; ++j)
        if (std::abs(X(i, j) - Y(p[static_cast<std::size_t>(i)],
                                 p[static_cast<std::size_t>(j)])) > tol) {
          match = false;
          break;
        }
    if (match) return true;
  } while (std::next_permutation(p.begin(), p.end()));
  return false;
}

}  // namespace invfeat
