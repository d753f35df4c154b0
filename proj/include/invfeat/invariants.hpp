#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "invfeat/errors.hpp"
#include "invfeat/sym_matrix.hpp"

namespace invfeat {

/// |a-b| <= r*(1 + max(|a|,|b|)): relative on the max-abs scale, absolute
/// near zero. The default r = 1e-9 is the library-wide feature tolerance.
inline bool rel_close(double a, double b, double r = 1e-9) {
  return std::abs(a - b) <= r * (1.0 + std::max(std::abs(a), std::abs(b)));
}

/// The gap |a-b| / (1 + max(|a|,|b|)) that rel_close compares against r.
inline double rel_gap(double a, double b) {
  return std::abs(a - b) / (1.0 + std::max(std::abs(a), std::abs(b)));
}

inline Eigen::VectorXd sorted_descending(Eigen::VectorXd v) {
  std::stable_sort(v.data(), v.data() + v.size(), std::greater<double>());
  return v;
}

/// Sorted diagonal, descending; the k-th entry is the k-th largest X_ii.
inline Eigen::VectorXd f_diag_sorted(const SymMatrix& X) {
  return sorted_descending(X.mat().diagonal());
}

/// Sorted strict upper triangle, descending. Length n(n-1)/2 (empty for n=1).
inline Eigen::VectorXd f_offdiag_sorted(const SymMatrix& X) {
  const int n = X.n();
  Eigen::VectorXd v(offdiag_count(n));
  int s = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) v(s++) = X(i, j);
  return sorted_descending(std::move(v));
}

/// f*(X) = sum over ordered pairs i != j of X_ii * X_ij, evaluated row by row
/// as X_ii * (rowsum_i - X_ii): O(n^2) time, O(1) extra space.
inline double f_star(const SymMatrix& X) {
  const int n = X.n();
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    double rowsum = 0.0;
    for (int j = 0; j < n; ++j) rowsum += X(i, j);
    acc += X(i, i) * (rowsum - X(i, i));
  }
  return acc;
}

/// The conjugation-invariant features of a symmetric matrix: sorted diagonal,
/// sorted off-diagonal, and the mixing invariant f*.
struct FeaturePack {
  Eigen::VectorXd diag_sorted;
  Eigen::VectorXd offdiag_sorted;
  double f_star = 0.0;
};

inline FeaturePack feature_pack(const SymMatrix& X) {
  return {f_diag_sorted(X), f_offdiag_sorted(X), f_star(X)};
}

/// Worst entrywise rel_gap across the two packs (scale-aware deviation).
inline double pack_max_rel_gap(const FeaturePack& a, const FeaturePack& b) {
  if (a.diag_sorted.size() != b.diag_sorted.size() ||
      a.offdiag_sorted.size() != b.offdiag_sorted.size())
    throw ArgumentError("pack_max_rel_gap: size mismatch");
  double worst = rel_gap(a.f_star, b.f_star);
  for (int i = 0; i < a.diag_sorted.size(); ++i)
    worst = std::max(worst, rel_gap(a.diag_sorted(i), b.diag_sorted(i)));
  for (int i = 0; i < a.offdiag_sorted.size(); ++i)
    worst = std::max(worst, rel_gap(a.offdiag_sorted(i), b.offdiag_sorted(i)));
  return worst;
}

inline bool pack_close(const FeaturePack& a, const FeaturePack& b,
                       double rtol = 1e-9) {
  return pack_max_rel_gap(a, b) <= rtol;
}

/// Largest absolute entrywise difference between packs (separation gap).
inline double pack_max_abs_gap(const FeaturePack& a, const FeaturePack& b) {
  double worst = std::abs(a.f_star - b.f_star);
  for (int i = 0; i < a.diag_sorted.size(); ++i)
    worst = std::max(worst, std::abs(a.diag_sorted(i) - b.diag_sorted(i)));
  for (int i = 0; i < a.offdiag_sorted.size(); ++i)
    worst =
        std::max(worst, std::abs(a.offdiag_sorted(i) - b.offdiag_sorted(i)));
  return worst;
}

/// Elementary symmetric polynomials e_1..e_m of the given values, by
/// incremental expansion of prod (T - v_i). These are the alternating-sign
/// coefficients of the unique monic polynomial with those roots.
inline Eigen::VectorXd elementary_symmetric(const Eigen::VectorXd& values) {
  const int m = static_cast<int>(values.size());
  Eigen::VectorXd e = Eigen::VectorXd::Zero(m + 1);
  e(0) = 1.0;
  for (int i = 0; i < m; ++i)
    for (int k = std::min(i + 1, m); k >= 1; --k)
      e(k) += values(i) * e(k - 1);
  return e.tail(m);
}

/// Inverse of elementary_symmetric: descending real roots of
/// T^m - e_1 T^{m-1} + ... + (-1)^m e_m, via companion-matrix eigenvalues.
/// Imaginary residuals above 1e-7 raise a DomainError.
inline Eigen::VectorXd roots_from_elementary(const Eigen::VectorXd& coeffs) {
  const int m = static_cast<int>(coeffs.size());
  if (m == 0) return Eigen::VectorXd(0);
  if (m == 1) {
    Eigen::VectorXd r(1);
    r(0) = coeffs(0);
    return r;
  }
  // Monic coefficients a_k of T^k: a_{m-j} = (-1)^j e_j.
  Eigen::VectorXd a(m);  // a(k) multiplies T^k, k = 0..m-1
  for (int j = 1; j <= m; ++j)
    a(m - j) = (j % 2 == 0 ? 1.0 : -1.0) * coeffs(j - 1);
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(m, m);
  for (int i = 1; i < m; ++i) companion(i, i - 1) = 1.0;
  for (int k = 0; k < m; ++k) companion(k, m - 1) = -a(k);
  Eigen::EigenSolver<Eigen::MatrixXd> es(companion);
  if (es.info() != Eigen::Success)
    throw NumericalError("roots_from_elementary: eigensolver failed");
  const double max_imag = es.eigenvalues().imag().cwiseAbs().maxCoeff();
  if (max_imag > 1e-7)
    throw DomainError(
        "roots_from_elementary: coefficients are not real-rooted within "
        "tolerance (max imaginary residual " +
        std::to_string(max_imag) + ")");
  return sorted_descending(es.eigenvalues().real());
}

/// The elementary-symmetric equivalents of the sorted features.
struct ElementaryPack {
  Eigen::VectorXd e_diag;
  Eigen::VectorXd e_offdiag;
};

inline ElementaryPack elementary_pack(const SymMatrix& X) {
  return {elementary_symmetric(X.mat().diagonal()),
          elementary_symmetric(f_offdiag_sorted(X))};
}

/// Search Γ∖G for an element that fixes f*(X) within tol; a hit certifies
/// that X lies in the f*-part of the explicit bad set. Exhaustive over the
/// full product group, so restricted to n <= 4 (|Γ| <= 17280).
inline std::optional<DiagOffdiagPermPair> bad_set_witness(const SymMatrix& X,
                                                          double tol) {
  const int n = X.n();
  if (n > 4)
    throw SizeLimitError("bad_set_witness: n=" + std::to_string(n) +
                         " exceeds the n <= 4 limit (|Gamma| = n!*(n(n-1)/2)!)");
  if (tol < 0) throw ArgumentError("bad_set_witness: tol must be >= 0");

  const double fs = f_star(X);
  const auto sigmas = all_permutations(n);
  const auto taus = all_permutations(offdiag_count(n));

  // G = image of induced_pair over all n! permutations.
  std::set<std::pair<std::vector<int>, std::vector<int>>> subgroup;
  for (const auto& p : sigmas) {
    const auto g = induced_pair(p);
    subgroup.insert({g.sigma.map(), g.tau.map()});
  }

  for (const auto& sigma : sigmas)
    for (const auto& tau : taus) {
      if (subgroup.count({sigma.map(), tau.map()})) continue;
      const DiagOffdiagPermPair gamma{sigma, tau};
      if (std::abs(f_star(apply_gamma(X, gamma)) - fs) <= tol) return gamma;
    }
  return std::nullopt;
}

}  // namespace invfeat
