#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "invfeat/assignment.hpp"
#include "invfeat/errors.hpp"
#include "invfeat/pointcloud.hpp"
#include "invfeat/rng.hpp"
#include "invfeat/sym_matrix.hpp"

namespace invfeat {

/// Nuclear charges Z_i plus 3D coordinates R_i, one row per atom.
struct Molecule {
  Eigen::VectorXd charges;
  Eigen::MatrixXd coords;  // n x 3

  Molecule(Eigen::VectorXd z, Eigen::MatrixXd r)
      : charges(std::move(z)), coords(std::move(r)) {
    if (charges.size() < 1)
      throw ArgumentError("Molecule: need at least one atom");
    if (coords.rows() != charges.size() || coords.cols() != 3)
      throw ArgumentError("Molecule: coords must be n x 3 with n = #charges");
    for (int i = 0; i < charges.size(); ++i)
      if (!(charges(i) > 0.0))
        throw ArgumentError("Molecule: charges must be positive");
  }

  int size() const { return static_cast<int>(charges.size()); }
};

/// Coulomb matrix: diagonal 0.5 * Z_i^2.4, off-diagonal Z_i Z_j / |R_i - R_j|.
/// Permuting the atoms conjugates the output exactly.
inline SymMatrix coulomb_matrix(const Molecule& mol) {
  const int n = mol.size();
  Eigen::MatrixXd X(n, n);
  for (int i = 0; i < n; ++i)
    X(i, i) = 0.5 * std::pow(mol.charges(i), 2.4);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double dist = (mol.coords.row(i) - mol.coords.row(j)).norm();
      if (dist <= 0.0)
        throw DomainError("coulomb_matrix: coincident nuclei " +
                          std::to_string(i) + " and " + std::to_string(j));
      X(i, j) = mol.charges(i) * mol.charges(j) / dist;
      X(j, i) = X(i, j);
    }
  return SymMatrix::from_symmetric(std::move(X));
}

/// Euclidean distance matrix of the cloud, zero diagonal.
inline SymMatrix pairwise_distances(const PointCloud& V) {
  const int n = V.n();
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      D(i, j) = (V.coords().col(i) - V.coords().col(j)).norm();
      D(j, i) = D(i, j);
    }
  return SymMatrix::from_symmetric(std::move(D));
}

namespace detail {

/// Row-sorted (ascending) distance matrix: row i is point i's local distance
/// distribution, self-distance zero included.
inline Eigen::MatrixXd sorted_distance_rows(const PointCloud& V) {
  const SymMatrix D = pairwise_distances(V);
  const int n = V.n();
  Eigen::MatrixXd out(n, n);
  std::vector<double> row(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) row[static_cast<std::size_t>(j)] = D(i, j);
    std::sort(row.begin(), row.end());
    for (int j = 0; j < n; ++j) out(i, j) = row[static_cast<std::size_t>(j)];
  }
  return out;
}

}  // namespace detail

/// Gromov-Wasserstein lower-bound distance between equal-size clouds with
/// uniform weights. Each point contributes its sorted vector of distances to
/// all n points (self-distance included); the pairwise cost is the
/// 1-Wasserstein distance between those equal-size 1D distributions,
///   c(i,j) = (1/n) * sum_k |sortedRow_i(V)[k] - sortedRow_j(W)[k]|,
/// and the result is (1/n) * (optimal assignment cost under c).
/// Invariant under O(d) x S_n on either argument; ambient dimensions may
/// differ. O(n^3) via the Hungarian solver.
inline double tlb_distance(const PointCloud& V, const PointCloud& W) {
  if (V.n() != W.n())
    throw ArgumentError(
        "tlb_distance: clouds must have equal cardinality (unequal-size "
        "optimal transport is out of scope), got " +
        std::to_string(V.n()) + " vs " + std::to_string(W.n()));
  const int n = V.n();
  const Eigen::MatrixXd sv = detail::sorted_distance_rows(V);
  const Eigen::MatrixXd sw = detail::sorted_distance_rows(W);
  Eigen::MatrixXd cost(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      cost(i, j) = (sv.row(i) - sw.row(j)).cwiseAbs().sum() /
                   static_cast<double>(n);
  return solve_assignment(cost) / static_cast<double>(n);
}

/// k columns chosen by the seeded Fisher-Yates prefix, in selection order.
inline PointCloud downsample(const PointCloud& V, int k, std::uint64_t seed) {
  if (k > V.n() || k < 1)
    throw ArgumentError("downsample: need 1 <= k <= n, got k=" +
                        std::to_string(k) + ", n=" + std::to_string(V.n()));
  SplitMix64 rng(seed);
  const std::vector<int> pick = sample_without_replacement(V.n(), k, rng);
  Eigen::MatrixXd out(V.d(), k);
  for (int i = 0; i < k; ++i) out.col(i) = V.coords().col(pick[i]);
  return PointCloud(std::move(out));
}

enum class CloudFamily { gaussian, two_cluster, shape_mix };

inline CloudFamily parse_cloud_family(const std::string& s) {
  if (s == "gaussian") return CloudFamily::gaussian;
  if (s == "two-cluster") return CloudFamily::two_cluster;
  if (s == "shape-mix") return CloudFamily::shape_mix;
  throw ArgumentError("unknown cloud family '" + s +
                      "' (expected gaussian | two-cluster | shape-mix)");
}

namespace detail {

inline PointCloud synth_one_cloud(int d, int n, CloudFamily family,
                                  SplitMix64& rng) {
  switch (family) {
    case CloudFamily::gaussian:
      return PointCloud(gaussian_matrix(d, n, rng));
    case CloudFamily::two_cluster: {
      // Two jittered blobs at separation ~U[2,6] along a random direction.
      const double sep = 2.0 + 4.0 * rng.next_uniform();
      Eigen::VectorXd dir = gaussian_vector(d, rng);
      dir /= std::max(dir.norm(), 1e-300);
      Eigen::MatrixXd out(d, n);
      const int half = n / 2;
      for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd c = (i < half ? 0.5 * sep : -0.5 * sep) * dir;
        out.col(i) = c + 0.5 * gaussian_vector(d, rng);
      }
      return PointCloud(std::move(out));
    }
    case CloudFamily::shape_mix: {
      // Alternates ellipsoid shells and flattened pancakes; the small
      // isotropic jitter keeps the distribution absolutely continuous.
      const bool shell = (rng.next_u64() & 1) == 0;
      Eigen::MatrixXd out(d, n);
      if (shell) {
        Eigen::VectorXd axes(d);
        for (int r = 0; r < d; ++r) axes(r) = 0.5 + 1.5 * rng.next_uniform();
        for (int i = 0; i < n; ++i) {
          Eigen::VectorXd g = gaussian_vector(d, rng);
          g /= std::max(g.norm(), 1e-300);
          out.col(i) =
              axes.cwiseProduct(g) + 0.03 * gaussian_vector(d, rng);
        }
      } else {
        const double scale = 0.5 + 1.5 * rng.next_uniform();
        for (int i = 0; i < n; ++i) {
          Eigen::VectorXd g = scale * gaussian_vector(d, rng);
          if (d > 1) g(d - 1) *= 0.1;
          out.col(i) = g;
        }
      }
      return PointCloud(std::move(out));
    }
  }
  throw ArgumentError("synth_one_cloud: unreachable family");
}

}  // namespace detail

/// Deterministic per seed; one PRNG stream drives the whole batch.
inline std::vector<PointCloud> synth_clouds(int count, int d, int n,
                                            CloudFamily family,
                                            std::uint64_t seed) {
  if (count < 1 || d < 1 || n < 1)
    throw ArgumentError("synth_clouds: sizes must be positive");
  SplitMix64 rng(seed);
  std::vector<PointCloud> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int c = 0; c < count; ++c)
    out.push_back(detail::synth_one_cloud(d, n, family, rng));
  return out;
}

/// Gaussian symmetric matrices: upper triangle (diagonal included) iid
/// N(0,1), drawn row-major, mirrored. Only "gaussian" is meaningful here.
inline std::vector<SymMatrix> synth_symmatrices(int count, int n,
                                                const std::string& family,
                                                std::uint64_t seed) {
  if (count < 1 || n < 1)
    throw ArgumentError("synth_symmatrices: sizes must be positive");
  if (family != "gaussian")
    throw ArgumentError("synth_symmatrices: unsupported family '" + family +
                        "' (only gaussian)");
  SplitMix64 rng(seed);
  std::vector<SymMatrix> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int c = 0; c < count; ++c) {
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        m(i, j) = rng.next_gaussian();
        m(j, i) = m(i, j);
      }
    out.push_back(SymMatrix::from_symmetric(std::move(m)));
  }
  return out;
}

/// Single gaussian symmetric matrix from an existing stream.
inline SymMatrix random_sym_matrix(int n, SplitMix64& rng) {
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      m(i, j) = rng.next_gaussian();
      m(j, i) = m(i, j);
    }
  return SymMatrix::from_symmetric(std::move(m));
}

}  // namespace invfeat
