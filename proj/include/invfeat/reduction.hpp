#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "invfeat/errors.hpp"
#include "invfeat/pointcloud.hpp"
#include "invfeat/rng.hpp"

namespace invfeat {

enum class IdentifierKind { poly, kmeans };

inline const char* identifier_name(IdentifierKind k) {
  return k == IdentifierKind::poly ? "poly" : "kmeans";
}

/// d x d matrix C_V with (generically) independent columns, O(d)-equivariant
/// and S_n-invariant in V. The handle the O(n) pipeline steers by.
struct IdentifierMatrix {
  Eigen::MatrixXd C;
  IdentifierKind kind = IdentifierKind::poly;
};

/// Scale-relative rank test: |det C| <= 1e-12 * (max column norm)^d.
/// Invariant under uniform scaling of the cloud.
inline bool identifier_is_degenerate(const IdentifierMatrix& id) {
  const int d = static_cast<int>(id.C.rows());
  const double scale = id.C.colwise().norm().maxCoeff();
  const double det = id.C.determinant();
  return std::abs(det) <= 1e-12 * std::pow(scale, d);
}

/// Moment identifiers: column j (1-based) is (1/n) sum_i ||v_i||^{2(j-1)} v_i.
/// Defined and continuous everywhere; O(n d^2).
inline IdentifierMatrix identifiers_poly(const PointCloud& V) {
  const int d = V.d();
  const int n = V.n();
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd v = V.coords().col(i);
    const double q = v.squaredNorm();
    double w = 1.0;
    for (int j = 0; j < d; ++j) {
      C.col(j) += w * v;
      w *= q;
    }
  }
  C /= static_cast<double>(n);
  return {std::move(C), IdentifierKind::poly};
}

namespace detail {

/// Relative tie on the |a|,|b| scale; used for the k-means degeneracy checks.
inline bool norms_tied(double a, double b) {
  return std::abs(a - b) <= 1e-9 * (1.0 + std::max(std::abs(a), std::abs(b)));
}

}  // namespace detail

/// Lloyd's algorithm with k = d and a deterministic, equivariant
/// initialization: the d distinct points of largest norm (exact-duplicate
/// columns collapse first, so repeated points are allowed). Assignment ties
/// break to the lowest centroid index; a cluster that empties keeps its
/// previous centroid. Returns centroids as columns, descending 2-norm.
///
/// Tied norms — at the init selection boundary or between the final
/// centroids — are degenerate-input errors: breaking them arbitrarily would
/// silently destroy equivariance.
inline IdentifierMatrix identifiers_kmeans(const PointCloud& V,
                                           int max_iters = 100) {
  const int d = V.d();
  const int n = V.n();
  if (n < d)
    throw ArgumentError("identifiers_kmeans: need n >= d, got n=" +
                        std::to_string(n) + ", d=" + std::to_string(d));
  if (max_iters < 1)
    throw ArgumentError("identifiers_kmeans: max_iters must be >= 1");

  // Distinct columns by exact value.
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    for (int r = 0; r < d; ++r) {
      if (V.coords()(r, a) != V.coords()(r, b))
        return V.coords()(r, a) < V.coords()(r, b);
    }
    return false;
  });
  std::vector<int> distinct;
  for (int idx : order) {
    if (!distinct.empty() &&
        V.coords().col(distinct.back()) == V.coords().col(idx))
      continue;
    distinct.push_back(idx);
  }
  if (static_cast<int>(distinct.size()) < d)
    throw DegenerateInputError(
        "identifiers_kmeans: fewer than d distinct points (" +
        std::to_string(distinct.size()) + " < " + std::to_string(d) + ")");

  std::stable_sort(distinct.begin(), distinct.end(), [&](int a, int b) {
    return V.coords().col(a).squaredNorm() > V.coords().col(b).squaredNorm();
  });
  const int boundary = std::min<int>(d + 1, static_cast<int>(distinct.size()));
  for (int a = 0; a + 1 < boundary; ++a) {
    const double na = V.coords().col(distinct[a]).norm();
    const double nb = V.coords().col(distinct[a + 1]).norm();
    if (detail::norms_tied(na, nb))
      throw DegenerateInputError(
          "identifiers_kmeans: tied init-point norms (" + std::to_string(na) +
          " vs " + std::to_string(nb) + ")");
  }

  Eigen::MatrixXd centroids(d, d);
  for (int j = 0; j < d; ++j) centroids.col(j) = V.coords().col(distinct[j]);

  std::vector<int> assign(static_cast<std::size_t>(n), -1);
  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = (V.coords().col(i) - centroids.col(0)).squaredNorm();
      for (int j = 1; j < d; ++j) {
        const double dist =
            (V.coords().col(i) - centroids.col(j)).squaredNorm();
        if (dist < best_d) {  // ties keep the lower index
          best_d = dist;
          best = j;
        }
      }
      if (assign[static_cast<std::size_t>(i)] != best) {
        assign[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    if (!changed) break;
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(d, d);
    std::vector<int> counts(static_cast<std::size_t>(d), 0);
    for (int i = 0; i < n; ++i) {
      sums.col(assign[static_cast<std::size_t>(i)]) += V.coords().col(i);
      counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])]++;
    }
    for (int j = 0; j < d; ++j)
      if (counts[static_cast<std::size_t>(j)] > 0)
        centroids.col(j) =
            sums.col(j) / static_cast<double>(counts[static_cast<std::size_t>(j)]);
  }

  std::vector<int> by_norm(static_cast<std::size_t>(d));
  std::iota(by_norm.begin(), by_norm.end(), 0);
  std::stable_sort(by_norm.begin(), by_norm.end(), [&](int a, int b) {
    return centroids.col(a).squaredNorm() > centroids.col(b).squaredNorm();
  });
  for (int a = 0; a + 1 < d; ++a) {
    const double na = centroids.col(by_norm[a]).norm();
    const double nb = centroids.col(by_norm[a + 1]).norm();
    if (detail::norms_tied(na, nb))
      throw DegenerateInputError(
          "identifiers_kmeans: tied centroid norms between clusters " +
          std::to_string(by_norm[a]) + " and " + std::to_string(by_norm[a + 1]) +
          " (" + std::to_string(na) + " vs " + std::to_string(nb) + ")");
  }
  Eigen::MatrixXd C(d, d);
  for (int j = 0; j < d; ++j) C.col(j) = centroids.col(by_norm[j]);
  return {std::move(C), IdentifierKind::kmeans};
}

inline IdentifierMatrix make_identifier(const PointCloud& V,
                                        IdentifierKind kind,
                                        int kmeans_max_iters = 100) {
  return kind == IdentifierKind::poly ? identifiers_poly(V)
                                      : identifiers_kmeans(V, kmeans_max_iters);
}

/// Continuous permutation-orbit separator: m seeded unit directions, each
/// projected onto the columns of M and sorted descending, concatenated.
/// Exactly invariant under column permutation (same multiset, same sort);
/// generically separating for m >= 2d+1.
inline Eigen::VectorXd separator_sorted_projections(const Eigen::MatrixXd& M,
                                                    int m, std::uint64_t seed) {
  if (m < 1) throw ArgumentError("separator_sorted_projections: m must be >= 1");
  const int d = static_cast<int>(M.rows());
  const int n = static_cast<int>(M.cols());
  SplitMix64 rng(seed);
  Eigen::VectorXd out(static_cast<Eigen::Index>(m) * n);
  for (int t = 0; t < m; ++t) {
    Eigen::VectorXd w = gaussian_vector(d, rng);
    double norm = w.norm();
    while (norm < 1e-300) {  // unreachable in practice, keeps the unit contract
      w = gaussian_vector(d, rng);
      norm = w.norm();
    }
    w /= norm;
    out.segment(static_cast<Eigen::Index>(t) * n, n) =
        sorted_descending(M.transpose() * w);
  }
  return out;
}

/// Exact but discontinuous separator: columns sorted lexicographically
/// descending (coordinate 0 major), flattened column by column. Equal outputs
/// iff equal column multisets. Test oracle only — the discontinuity rules it
/// out of any learned pipeline.
inline Eigen::VectorXd separator_canonical(const Eigen::MatrixXd& M) {
  const int d = static_cast<int>(M.rows());
  const int n = static_cast<int>(M.cols());
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    for (int r = 0; r < d; ++r) {
      if (M(r, a) != M(r, b)) return M(r, a) > M(r, b);
    }
    return false;
  });
  Eigen::VectorXd out(static_cast<Eigen::Index>(d) * n);
  for (int c = 0; c < n; ++c)
    out.segment(static_cast<Eigen::Index>(c) * d, d) =
        M.col(order[static_cast<std::size_t>(c)]);
  return out;
}

/// Rank-d PSD completion from the last d rows: X = R^T A^{-1} R, where R is
/// the d x (n+d) bottom block and A the d x d corner. R's last d columns must
/// agree with A (consistency), and A must be safely invertible.
inline SymMatrix reconstruct_gram(const Eigen::MatrixXd& R,
                                  const SymMatrix& A) {
  const int d = A.n();
  if (R.rows() != d || R.cols() < d)
    throw ArgumentError("reconstruct_gram: R must be d x (n+d) with the same d "
                        "as the corner");
  const double corner_dev =
      (R.rightCols(d) - A.mat()).cwiseAbs().maxCoeff();
  if (corner_dev > 1e-8)
    throw ArgumentError(
        "reconstruct_gram: last d columns of R deviate from the corner by " +
        std::to_string(corner_dev));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A.mat());
  const double lmax = es.eigenvalues().cwiseAbs().maxCoeff();
  const double lmin = es.eigenvalues().cwiseAbs().minCoeff();
  if (lmin <= 1e-12 * lmax || lmax == 0.0)
    throw ReconstructionError(
        "reconstruct_gram: corner is singular to working precision "
        "(|lambda| range " +
        std::to_string(lmin) + " .. " + std::to_string(lmax) +
        ", condition estimate " +
        std::to_string(lmax / std::max(lmin, 1e-300)) + ")");
  Eigen::MatrixXd solved = A.mat().ldlt().solve(R);  // A^{-1} R
  Eigen::MatrixXd X = R.transpose() * solved;
  return SymMatrix(std::move(X));  // symmetrizes the float residue
}

/// The O(n) invariant bundle of Theorem-style h(V): separator output on
/// C_V^T V plus the d x d corner C_V^T C_V.
struct HFeatures {
  Eigen::VectorXd separator_out;
  SymMatrix corner;
};

/// h(V) = (D(C_V^T V), C_V^T C_V) for the chosen identifier. Cost
/// O(m n d + n d^2 + n log n) — linear in n for fixed d, m.
inline HFeatures h_features(const PointCloud& V, IdentifierKind kind, int m,
                            std::uint64_t seed, int kmeans_max_iters = 100) {
  const IdentifierMatrix id = make_identifier(V, kind, kmeans_max_iters);
  if (identifier_is_degenerate(id))
    throw BadSetError(std::string("h_features: degenerate input (") +
                      identifier_name(kind) +
                      " identifier is rank-deficient)");
  const Eigen::MatrixXd M = id.C.transpose() * V.coords();
  Eigen::MatrixXd corner = id.C.transpose() * id.C;
  return {separator_sorted_projections(M, m, seed), SymMatrix(std::move(corner))};
}

}  // namespace invfeat
