#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "invfeat/invariants.hpp"
#include "invfeat/nn/models.hpp"
#include "invfeat/nn/train.hpp"
#include "invfeat/pointcloud.hpp"
#include "invfeat/reduction.hpp"
#include "invfeat/targets.hpp"

namespace invfeat {

/// One row of a property-suite report.
struct CheckReport {
  std::string name;
  bool pass = false;
  double worst = 0.0;  // worst residual / smallest gap, as noted per check
  std::string detail;
};

inline bool all_pass(const std::vector<CheckReport>& reports) {
  for (const auto& r : reports)
    if (!r.pass) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Invariance
// ---------------------------------------------------------------------------

/// FeaturePack invariance under conjugation (exhaustive for small n, sampled
/// above), then tilde- and h-feature invariance under random (U, pi).
inline std::vector<CheckReport> check_invariance(
    const std::vector<int>& exhaustive_ns, const std::vector<int>& sampled_ns,
    int samples, std::uint64_t seed, double rtol_pack = 1e-9,
    double rtol_tilde = 1e-8, double rtol_h = 1e-7) {
  std::vector<CheckReport> out;
  SplitMix64 rng(seed);

  auto pack_check = [&](int n, bool exhaustive) {
    const SymMatrix X = random_sym_matrix(n, rng);
    const FeaturePack base = feature_pack(X);
    double worst = 0.0;
    if (exhaustive) {
      for (const auto& p : all_permutations(n))
        worst = std::max(
            worst, pack_max_rel_gap(base, feature_pack(apply_permutation(X, p))));
    } else {
      for (int s = 0; s < samples; ++s) {
        const Permutation p = random_permutation(n, rng);
        worst = std::max(
            worst, pack_max_rel_gap(base, feature_pack(apply_permutation(X, p))));
      }
    }
    out.push_back({"pack-invariance-n" + std::to_string(n), worst <= rtol_pack,
                   worst,
                   exhaustive ? "exhaustive over S_n" : "sampled permutations"});
  };
  for (int n : exhaustive_ns) pack_check(n, true);
  for (int n : sampled_ns) pack_check(n, false);

  const int d = 3;
  auto cloud_checks = [&](int n) {
    const PointCloud V(gaussian_matrix(d, n, rng));
    const FeaturePack base = tilde_feature_pack(V);
    const HFeatures hbase = h_features(V, IdentifierKind::poly, 2 * d + 1, 7);
    double worst_tilde = 0.0, worst_h = 0.0;
    const int reps = std::min(samples, 25);
    for (int s = 0; s < reps; ++s) {
      const OrthogonalMatrix U = random_orthogonal(d, rng.next_u64());
      const Permutation pi = random_permutation(n, rng);
      const PointCloud W = transform(V, U, pi);
      worst_tilde =
          std::max(worst_tilde, pack_max_rel_gap(base, tilde_feature_pack(W)));
      const HFeatures h = h_features(W, IdentifierKind::poly, 2 * d + 1, 7);
      for (int k = 0; k < h.separator_out.size(); ++k)
        worst_h = std::max(
            worst_h, rel_gap(hbase.separator_out(k), h.separator_out(k)));
      for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j)
          worst_h = std::max(worst_h, rel_gap(hbase.corner(i, j), h.corner(i, j)));
    }
    out.push_back({"tilde-invariance-n" + std::to_string(n),
                   worst_tilde <= rtol_tilde, worst_tilde, "random (U, pi)"});
    out.push_back({"h-invariance-n" + std::to_string(n), worst_h <= rtol_h,
                   worst_h, "random (U, pi), poly identifier"});
  };
  for (int n : exhaustive_ns) cloud_checks(n);
  for (int n : sampled_ns) cloud_checks(n);
  return out;
}

// ---------------------------------------------------------------------------
// Separation
// ---------------------------------------------------------------------------

/// Oracle-distinct gaussian matrix orbits must yield packs differing by more
/// than `gap` in some entry. worst = smallest observed gap.
inline std::vector<CheckReport> check_separation(const std::vector<int>& ns,
                                                 int trials, std::uint64_t seed,
                                                 double gap = 1e-6) {
  std::vector<CheckReport> out;
  SplitMix64 rng(seed);
  for (int n : ns) {
    int separated = 0, distinct = 0;
    double min_gap = std::numeric_limits<double>::infinity();
    for (int t = 0; t < trials; ++t) {
      const SymMatrix X = random_sym_matrix(n, rng);
      const SymMatrix Y = random_sym_matrix(n, rng);
      if (same_orbit_bruteforce(X, Y, 1e-9)) continue;  // measure zero
      ++distinct;
      const double g = pack_max_abs_gap(feature_pack(X), feature_pack(Y));
      min_gap = std::min(min_gap, g);
      if (g > gap) ++separated;
    }
    out.push_back({"separation-n" + std::to_string(n), separated == distinct,
                   min_gap,
                   std::to_string(separated) + "/" + std::to_string(distinct) +
                       " oracle-distinct pairs separated"});
  }
  return out;
}

/// h-feature separation on oracle-distinct cloud orbits.
inline std::vector<CheckReport> check_h_separation(
    int d, const std::vector<int>& ns, int trials, int m, std::uint64_t seed,
    double gap = 1e-6) {
  std::vector<CheckReport> out;
  SplitMix64 rng(seed);
  for (int n : ns) {
    int separated = 0, distinct = 0;
    double min_gap = std::numeric_limits<double>::infinity();
    for (int t = 0; t < trials; ++t) {
      const PointCloud V(gaussian_matrix(d, n, rng));
      const PointCloud W(gaussian_matrix(d, n, rng));
      if (same_orbit_pointcloud(V, W, 1e-9)) continue;
      ++distinct;
      const HFeatures hv = h_features(V, IdentifierKind::poly, m, seed);
      const HFeatures hw = h_features(W, IdentifierKind::poly, m, seed);
      double g = (hv.separator_out - hw.separator_out).cwiseAbs().maxCoeff();
      g = std::max(g,
                   (hv.corner.mat() - hw.corner.mat()).cwiseAbs().maxCoeff());
      min_gap = std::min(min_gap, g);
      if (g > gap) ++separated;
    }
    out.push_back({"h-separation-d" + std::to_string(d) + "-n" + std::to_string(n),
                   separated == distinct, min_gap,
                   std::to_string(separated) + "/" + std::to_string(distinct) +
                       " oracle-distinct pairs separated"});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Bad-set witness
// ---------------------------------------------------------------------------

inline std::vector<CheckReport> check_badset(int n, int trials,
                                             std::uint64_t seed) {
  std::vector<CheckReport> out;
  SplitMix64 rng(seed);
  {
    const SymMatrix constant =
        SymMatrix::from_symmetric(Eigen::MatrixXd::Constant(n, n, 1.0));
    const bool has = bad_set_witness(constant, 1e-12).has_value();
    out.push_back({"badset-constant-matrix", has, has ? 0.0 : 1.0,
                   "constant matrix must yield a witness"});
  }
  {
    Eigen::MatrixXd diag = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) diag(i, i) = static_cast<double>(i + 1);
    const bool has =
        bad_set_witness(SymMatrix::from_symmetric(std::move(diag)), 1e-12)
            .has_value();
    out.push_back({"badset-diagonal-matrix", has, has ? 0.0 : 1.0,
                   "diagonal matrix must yield a witness"});
  }
  {
    int witnesses = 0;
    for (int t = 0; t < trials; ++t)
      if (bad_set_witness(random_sym_matrix(n, rng), 1e-12)) ++witnesses;
    out.push_back({"badset-gaussian-none", witnesses == 0,
                   static_cast<double>(witnesses),
                   std::to_string(witnesses) + "/" + std::to_string(trials) +
                       " gaussian matrices had witnesses"});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gram reconstruction
// ---------------------------------------------------------------------------

inline std::vector<CheckReport> check_reconstruct(int d, int n, int trials,
                                                  std::uint64_t seed,
                                                  double tol = 1e-8) {
  SplitMix64 rng(seed);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const PointCloud V(gaussian_matrix(d, n, rng));
    const IdentifierMatrix id = identifiers_poly(V);
    Eigen::MatrixXd vt(d, n + d);
    vt << V.coords(), id.C;
    const Eigen::MatrixXd truth = vt.transpose() * vt;
    const Eigen::MatrixXd R = id.C.transpose() * vt;
    const SymMatrix A(Eigen::MatrixXd(id.C.transpose() * id.C));
    const SymMatrix rec = reconstruct_gram(R, A);
    worst = std::max(worst, (rec.mat() - truth).norm() / truth.norm());
  }
  return {{"reconstruct-d" + std::to_string(d) + "-n" + std::to_string(n),
           worst <= tol, worst,
           std::to_string(trials) + " random full-rank clouds, poly identifier"}};
}

// ---------------------------------------------------------------------------
// Identifier equivariance
// ---------------------------------------------------------------------------

inline std::vector<CheckReport> check_identifier_equivariance(
    int d, int n, int trials, std::uint64_t seed, double tol = 1e-8) {
  std::vector<CheckReport> out;
  SplitMix64 rng(seed);
  for (IdentifierKind kind : {IdentifierKind::poly, IdentifierKind::kmeans}) {
    double worst = 0.0;
    int used = 0;
    for (int t = 0; t < trials; ++t) {
      const PointCloud V(gaussian_matrix(d, n, rng));
      const OrthogonalMatrix U = random_orthogonal(d, rng.next_u64());
      const Permutation pi = random_permutation(n, rng);
      try {
        const Eigen::MatrixXd lhs =
            make_identifier(transform(V, U, pi), kind).C;
        const Eigen::MatrixXd rhs = U.mat() * make_identifier(V, kind).C;
        worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
        ++used;
      } catch (const DegenerateInputError&) {
        // measure-zero tie; skip the draw
      }
    }
    out.push_back({std::string("equivariance-") + identifier_name(kind),
                   worst <= tol && used > 0, worst,
                   std::to_string(used) + "/" + std::to_string(trials) +
                       " non-degenerate draws"});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gradient checks
// ---------------------------------------------------------------------------

/// Max relative error (on the 1+max scale) between analytic gradients and
/// central finite differences over every entry of every block.
inline double gradcheck_max_rel_err(const std::function<double()>& loss,
                                    const std::function<void()>& grads,
                                    const std::vector<nn::Tensor*>& params,
                                    double h = 1e-5) {
  grads();
  std::vector<Eigen::MatrixXd> analytic;
  analytic.reserve(params.size());
  for (const nn::Tensor* t : params) analytic.push_back(t->grad);
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    nn::Tensor* t = params[k];
    for (int i = 0; i < t->value.rows(); ++i)
      for (int j = 0; j < t->value.cols(); ++j) {
        const double keep = t->value(i, j);
        t->value(i, j) = keep + h;
        const double lp = loss();
        t->value(i, j) = keep - h;
        const double lm = loss();
        t->value(i, j) = keep;
        const double numeric = (lp - lm) / (2.0 * h);
        const double a = analytic[k](i, j);
        worst = std::max(worst, rel_gap(a, numeric));
      }
  }
  return worst;
}

/// Builds small smooth (sigmoid) DS-CI and OI-DS+head models on random data
/// and checks every parameter block against central differences.
inline std::vector<CheckReport> check_gradcheck(std::uint64_t seed,
                                                double step = 1e-5,
                                                double tol = 1e-5) {
  std::vector<CheckReport> out;
  SplitMix64 rng(seed);

  {  // DS-CI, mse and mae
    nn::DsCiConfig cfg;
    cfg.enc_hidden = {6};
    cfg.latent = 5;
    cfg.dec_hidden = {};
    cfg.branch_out = 4;
    cfg.fstar_hidden = {5};
    cfg.comb_hidden = {6};
    cfg.activation = nn::Act::sigmoid;
    nn::DsCi model = nn::make_ds_ci(cfg, rng.next_u64());
    const SymMatrix X = random_sym_matrix(5, rng);
    const nn::DsCiInput in = nn::ds_ci_input(X);
    const std::vector<nn::Tensor*> params = nn::ds_ci_params(model);
    for (nn::Loss loss : {nn::Loss::mse, nn::Loss::mae}) {
      const double target = rng.next_gaussian();
      auto loss_fn = [&]() {
        return nn::loss_eval(loss, nn::ds_ci_forward(model, in)(0), target);
      };
      auto grads_fn = [&]() {
        for (nn::Tensor* t : params) t->zero_grad();
        nn::DsCiCache cache;
        const double pred = nn::ds_ci_forward(model, in, &cache)(0);
        nn::ds_ci_backward(model, cache,
                           Eigen::VectorXd::Constant(
                               1, nn::loss_grad(loss, pred, target)));
      };
      const double worst = gradcheck_max_rel_err(loss_fn, grads_fn, params, step);
      out.push_back({std::string("gradcheck-ds-ci-") + nn::loss_name(loss),
                     worst <= tol, worst, "all parameter blocks"});
    }
  }

  {  // DS-CI+ (binary expansion)
    nn::DsCiConfig cfg;
    cfg.enc_hidden = {5};
    cfg.latent = 4;
    cfg.branch_out = 3;
    cfg.fstar_hidden = {};
    cfg.comb_hidden = {5};
    cfg.activation = nn::Act::sigmoid;
    cfg.expansion = nn::BinaryExpansionConfig{1.0, 7};
    nn::DsCi model = nn::make_ds_ci(cfg, rng.next_u64());
    const SymMatrix X = random_sym_matrix(4, rng);
    const nn::DsCiInput in = nn::ds_ci_input(X);
    const std::vector<nn::Tensor*> params = nn::ds_ci_params(model);
    const double target = rng.next_gaussian();
    auto loss_fn = [&]() {
      return nn::loss_eval(nn::Loss::mse, nn::ds_ci_forward(model, in)(0),
                           target);
    };
    auto grads_fn = [&]() {
      for (nn::Tensor* t : params) t->zero_grad();
      nn::DsCiCache cache;
      const double pred = nn::ds_ci_forward(model, in, &cache)(0);
      nn::ds_ci_backward(model, cache,
                         Eigen::VectorXd::Constant(
                             1, nn::loss_grad(nn::Loss::mse, pred, target)));
    };
    const double worst = gradcheck_max_rel_err(loss_fn, grads_fn, params, step);
    out.push_back({"gradcheck-ds-ci-expansion", worst <= tol, worst,
                   "binary-expansion variant"});
  }

  {  // OI-DS + distance head, end to end through both embeddings
    nn::OiDsConfig cfg;
    cfg.d = 3;
    cfg.enc_hidden = {6};
    cfg.latent = 5;
    cfg.branch_out = 4;
    cfg.corner_hidden = {4};
    cfg.corner_out = 3;
    cfg.comb_hidden = {5};
    cfg.out_dim = 4;
    cfg.activation = nn::Act::sigmoid;
    nn::OiDs model = nn::make_oi_ds(cfg, rng.next_u64());
    nn::GwHead head = nn::make_gw_head(cfg.out_dim, rng.next_u64());
    const PointCloud V(gaussian_matrix(3, 7, rng));
    const PointCloud W(gaussian_matrix(3, 7, rng));
    const nn::OiDsInput iv = nn::oi_ds_input(V, cfg);
    const nn::OiDsInput iw = nn::oi_ds_input(W, cfg);
    std::vector<nn::Tensor*> params = nn::oi_ds_params(model);
    for (nn::Tensor* t : nn::gw_head_params(head)) params.push_back(t);
    const double target = std::abs(rng.next_gaussian()) + 0.5;
    auto loss_fn = [&]() {
      const double pred = nn::gw_predict(head, nn::oi_ds_forward(model, iv),
                                         nn::oi_ds_forward(model, iw));
      return nn::loss_eval(nn::Loss::mse, pred, target);
    };
    auto grads_fn = [&]() {
      for (nn::Tensor* t : params) t->zero_grad();
      nn::OiDsCache cv, cw;
      nn::GwCache gc;
      const Eigen::VectorXd z1 = nn::oi_ds_forward(model, iv, &cv);
      const Eigen::VectorXd z2 = nn::oi_ds_forward(model, iw, &cw);
      const double pred = nn::gw_predict(head, z1, z2, &gc);
      Eigen::VectorXd dz1, dz2;
      nn::gw_backward(head, gc, nn::loss_grad(nn::Loss::mse, pred, target),
                      dz1, dz2);
      nn::oi_ds_backward(model, cv, dz1);
      nn::oi_ds_backward(model, cw, dz2);
    };
    const double worst = gradcheck_max_rel_err(loss_fn, grads_fn, params, step);
    out.push_back({"gradcheck-oi-ds-gw", worst <= tol, worst,
                   "embedding and head blocks, end to end"});
  }
  return out;
}

// ---------------------------------------------------------------------------
// f*-necessity witness search
// ---------------------------------------------------------------------------

struct FStarWitness {
  SymMatrix X, Y;
  double fstar_x, fstar_y;
};

/// Exhaustive search over 3x3 symmetric matrices with entries in {1..9} for a
/// pair with equal sorted diagonal and off-diagonal multisets, distinct
/// orbits (oracle-verified), and different f*. Combos are scanned in
/// lexicographic order; the first hit is returned.
inline std::optional<FStarWitness> find_fstar_witness() {
  auto build = [](const std::array<int, 3>& diag,
                  const std::array<int, 3>& off) {
    Eigen::MatrixXd m(3, 3);
    m << diag[0], off[0], off[1],
         off[0], diag[1], off[2],
         off[1], off[2], diag[2];
    return SymMatrix::from_symmetric(std::move(m));
  };
  for (int d1 = 1; d1 <= 9; ++d1)
    for (int d2 = d1; d2 <= 9; ++d2)
      for (int d3 = d2; d3 <= 9; ++d3)
        for (int o1 = 1; o1 <= 9; ++o1)
          for (int o2 = o1; o2 <= 9; ++o2)
            for (int o3 = o2; o3 <= 9; ++o3) {
              std::array<int, 3> diag{d1, d2, d3};
              std::array<int, 3> off{o1, o2, o3};
              // all distinct arrangements of the two multisets
              std::vector<SymMatrix> arrangements;
              std::vector<double> fstars;
              std::array<int, 3> dp = diag;
              std::sort(dp.begin(), dp.end());
              do {
                std::array<int, 3> op = off;
                std::sort(op.begin(), op.end());
                do {
                  arrangements.push_back(build(dp, op));
                  fstars.push_back(f_star(arrangements.back()));
                } while (std::next_permutation(op.begin(), op.end()));
              } while (std::next_permutation(dp.begin(), dp.end()));
              // f* is invariant, so distinct f* values certify distinct
              // orbits; the oracle confirms below.
              int lo = 0, hi = 0;
              for (std::size_t k = 1; k < fstars.size(); ++k) {
                if (fstars[k] < fstars[static_cast<std::size_t>(lo)])
                  lo = static_cast<int>(k);
                if (fstars[k] > fstars[static_cast<std::size_t>(hi)])
                  hi = static_cast<int>(k);
              }
              if (fstars[static_cast<std::size_t>(hi)] -
                      fstars[static_cast<std::size_t>(lo)] >
                  0.0) {
                const SymMatrix& X = arrangements[static_cast<std::size_t>(lo)];
                const SymMatrix& Y = arrangements[static_cast<std::size_t>(hi)];
                if (!same_orbit_bruteforce(X, Y, 0.0))
                  return FStarWitness{X, Y, fstars[static_cast<std::size_t>(lo)],
                                      fstars[static_cast<std::size_t>(hi)]};
              }
            }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Scaling
// ---------------------------------------------------------------------------

struct BenchPoint {
  int n;
  int reps;
  double seconds_per_call;
};

/// Wall-times h_features over a size ladder, repeating each size until the
/// cumulative time passes min_total_ms to push down timer noise.
inline std::vector<BenchPoint> bench_h_features(const std::vector<int>& sizes,
                                                int d, int m,
                                                std::uint64_t seed,
                                                double min_total_ms = 200.0) {
  std::vector<BenchPoint> out;
  for (int n : sizes) {
    SplitMix64 rng(seed);
    const PointCloud V(gaussian_matrix(d, n, rng));
    h_features(V, IdentifierKind::poly, m, seed);  // warm-up
    int reps = 0;
    double total = 0.0;
    volatile double sink = 0.0;
    while (total * 1000.0 < min_total_ms) {
      const auto t0 = std::chrono::steady_clock::now();
      const HFeatures h = h_features(V, IdentifierKind::poly, m, seed);
      const auto t1 = std::chrono::steady_clock::now();
      sink = sink + h.separator_out(0);
      total += std::chrono::duration<double>(t1 - t0).count();
      ++reps;
    }
    out.push_back({n, reps, total / reps});
  }
  return out;
}

/// Least-squares slope of log(t) against log(n).
inline double loglog_slope(const std::vector<BenchPoint>& pts) {
  const int k = static_cast<int>(pts.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& p : pts) {
    const double x = std::log(static_cast<double>(p.n));
    const double y = std::log(p.seconds_per_call);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

// ---------------------------------------------------------------------------
// Rank correlation
// ---------------------------------------------------------------------------

/// Spearman rank correlation with average ranks for ties.
inline double spearman_rank_correlation(const std::vector<double>& a,
                                        const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2)
    throw ArgumentError("spearman_rank_correlation: need two equal-length "
                        "series of size >= 2");
  auto ranks = [](const std::vector<double>& v) {
    const int n = static_cast<int>(v.size());
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int x, int y) { return v[static_cast<std::size_t>(x)] <
                                         v[static_cast<std::size_t>(y)]; });
    std::vector<double> r(static_cast<std::size_t>(n));
    int i = 0;
    while (i < n) {
      int j = i;
      while (j + 1 < n &&
             v[static_cast<std::size_t>(order[static_cast<std::size_t>(j + 1)])] ==
                 v[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])])
        ++j;
      const double avg = 0.5 * (i + j) + 1.0;
      for (int k = i; k <= j; ++k)
        r[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = avg;
      i = j + 1;
    }
    return r;
  };
  const std::vector<double> ra = ranks(a), rb = ranks(b);
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= static_cast<double>(ra.size());
  mb /= static_cast<double>(rb.size());
  double cov = 0, va = 0, vb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  return cov / std::sqrt(va * vb);
}

}  // namespace invfeat
