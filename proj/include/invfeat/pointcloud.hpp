#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "invfeat/errors.hpp"
#include "invfeat/invariants.hpp"
#include "invfeat/rng.hpp"
#include "invfeat/sym_matrix.hpp"

namespace invfeat {

/// n points in R^d, stored as the columns of a d x n matrix.
class PointCloud {
 public:
  explicit PointCloud(Eigen::MatrixXd coords) : coords_(std::move(coords)) {
    if (coords_.rows() < 1 || coords_.cols() < 1)
      throw ArgumentError("PointCloud: need d >= 1 and n >= 1, got " +
                          std::to_string(coords_.rows()) + "x" +
                          std::to_string(coords_.cols()));
    if (!coords_.allFinite())
      throw ArgumentError("PointCloud: coordinates must be finite");
  }

  int d() const { return static_cast<int>(coords_.rows()); }
  int n() const { return static_cast<int>(coords_.cols()); }
  Eigen::VectorXd point(int i) const { return coords_.col(i); }
  const Eigen::MatrixXd& coords() const { return coords_; }

 private:
  Eigen::MatrixXd coords_;
};

/// Gram matrix V^T V: n x n PSD of rank <= d, the complete O(d)-invariant.
inline SymMatrix gram(const PointCloud& V) {
  Eigen::MatrixXd g = V.coords().transpose() * V.coords();
  return SymMatrix(std::move(g));
}

/// Subtract the column mean from every point.
inline PointCloud center(const PointCloud& V) {
  Eigen::VectorXd mean = V.coords().rowwise().mean();
  return PointCloud(V.coords().colwise() - mean);
}

/// The invariant features of the Gram lift; invariant under V -> U V P^T.
inline FeaturePack tilde_feature_pack(const PointCloud& V) {
  return feature_pack(gram(V));
}

/// d x d matrix with U^T U = I within 1e-10 max-abs.
class OrthogonalMatrix {
 public:
  explicit OrthogonalMatrix(Eigen::MatrixXd u) : u_(std::move(u)) {
    if (u_.rows() != u_.cols() || u_.rows() < 1)
      throw ArgumentError("OrthogonalMatrix: need a square matrix");
    const double dev =
        (u_.transpose() * u_ -
         Eigen::MatrixXd::Identity(u_.rows(), u_.cols()))
            .cwiseAbs()
            .maxCoeff();
    if (dev > 1e-10)
      throw ArgumentError(
          "OrthogonalMatrix: U^T U deviates from identity by " +
          std::to_string(dev));
  }

  int d() const { return static_cast<int>(u_.rows()); }
  const Eigen::MatrixXd& mat() const { return u_; }

 private:
  Eigen::MatrixXd u_;
};

/// Deterministic function of the seed: QR of a seeded Gaussian matrix with the
/// sign convention "diagonal of the triangular factor positive". Includes
/// reflections (no determinant fix); O(1) gives {+1} or {-1}.
inline OrthogonalMatrix random_orthogonal(int d, std::uint64_t seed) {
  if (d < 1) throw ArgumentError("random_orthogonal: d must be >= 1");
  SplitMix64 rng(seed);
  const Eigen::MatrixXd g = gaussian_matrix(d, d, rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return OrthogonalMatrix(std::move(q));
}

/// U * V * P_pi^T: column pi(i) of the result is U * v_i.
inline PointCloud transform(const PointCloud& V, const OrthogonalMatrix& U,
                            const Permutation& pi) {
  if (U.d() != V.d() || pi.n() != V.n())
    throw ArgumentError("transform: dimension mismatch");
  Eigen::MatrixXd out(V.d(), V.n());
  for (int i = 0; i < V.n(); ++i) out.col(pi(i)) = U.mat() * V.coords().col(i);
  return PointCloud(std::move(out));
}

/// O(d) x S_n orbit oracle: the Gram matrix determines the cloud up to an
/// orthogonal transformation, so the continuous part of the group is
/// quotiented exactly and only the finite S_n enumeration remains.
inline bool same_orbit_pointcloud(const PointCloud& V, const PointCloud& W,
                                  double tol) {
  if (V.d() != W.d())
    throw ArgumentError("same_orbit_pointcloud: ambient dimension mismatch " +
                        std::to_string(V.d()) + " vs " + std::to_string(W.d()));
  if (V.n() != W.n())
    throw ArgumentError("same_orbit_pointcloud: point count mismatch " +
                        std::to_string(V.n()) + " vs " + std::to_string(W.n()));
  return same_orbit_bruteforce(gram(V), gram(W), tol);
}

}  // namespace invfeat
