#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "invfeat/invariants.hpp"
#include "invfeat/nn/deepsets.hpp"
#include "invfeat/nn/mlp.hpp"
#include "invfeat/pointcloud.hpp"
#include "invfeat/reduction.hpp"
#include "invfeat/sym_matrix.hpp"

namespace invfeat::nn {

/// Sigmoid-grid lift of a scalar: component k is
/// sigmoid((x - c_k)/theta) with c_k = theta*(k - (dim-1)/2), k = 0..dim-1
/// (symmetric grid centered at 0, spacing theta, offsets ascending).
inline Eigen::VectorXd binary_expansion(double x, double theta, int dim) {
  if (theta <= 0.0) throw ArgumentError("binary_expansion: theta must be > 0");
  if (dim < 1) throw ArgumentError("binary_expansion: dim must be >= 1");
  Eigen::VectorXd out(dim);
  for (int k = 0; k < dim; ++k) {
    const double c = theta * (k - 0.5 * (dim - 1));
    out(k) = sigmoid((x - c) / theta);
  }
  return out;
}

struct BinaryExpansionConfig {
  double theta = 1.0;
  int dim = 100;
};

/// Per-coordinate affine (x - shift) / scale applied to model inputs. The
/// same map hits every element of a set, so invariance is untouched. Filled
/// in by training when standardization is on; identity by default.
struct AffineScaler {
  Eigen::VectorXd shift;
  Eigen::VectorXd scale;

  static AffineScaler identity(int dim) {
    return {Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim)};
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& v) const {
    return (v - shift).cwiseQuotient(scale);
  }
  double apply1(double x) const { return (x - shift(0)) / scale(0); }
};

// ---------------------------------------------------------------------------
// DS-CI: DeepSet over the diagonal multiset, DeepSet over the off-diagonal
// multiset, an MLP on f*, combined by a final MLP. With an expansion config
// every scalar set element and f* are lifted before the encoders (DS-CI+).
// ---------------------------------------------------------------------------

struct DsCiConfig {
  std::vector<int> enc_hidden{32};
  int latent = 32;
  std::vector<int> dec_hidden{};
  int branch_out = 32;
  std::vector<int> fstar_hidden{32};
  std::vector<int> comb_hidden{64, 32};
  int out_dim = 1;
  Act activation = Act::relu;
  std::optional<BinaryExpansionConfig> expansion;

  int elem_dim() const { return expansion ? expansion->dim : 1; }
};

struct DsCi {
  DsCiConfig config;
  DeepSets ds_diag;
  DeepSets ds_off;
  Mlp mlp_fstar;
  Mlp combiner;
  AffineScaler scale_diag = AffineScaler::identity(1);
  AffineScaler scale_off = AffineScaler::identity(1);
  AffineScaler scale_fstar = AffineScaler::identity(1);
};

inline DsCi make_ds_ci(const DsCiConfig& cfg, std::uint64_t seed) {
  SplitMix64 rng(seed);
  DsCi m;
  m.config = cfg;
  const int e = cfg.elem_dim();
  m.ds_diag = make_deepsets("ds1", e, cfg.enc_hidden, cfg.latent,
                            cfg.dec_hidden, cfg.branch_out, cfg.activation, rng);
  m.ds_off = make_deepsets("ds2", e, cfg.enc_hidden, cfg.latent,
                           cfg.dec_hidden, cfg.branch_out, cfg.activation, rng);
  m.mlp_fstar =
      make_mlp("mlp3", e, cfg.fstar_hidden, cfg.branch_out, cfg.activation, rng);
  m.combiner = make_mlp("mlpc", 3 * cfg.branch_out, cfg.comb_hidden,
                        cfg.out_dim, cfg.activation, rng);
  return m;
}

inline std::vector<Tensor*> ds_ci_params(DsCi& m) {
  std::vector<Tensor*> out;
  append_deepsets_params(m.ds_diag, out);
  append_deepsets_params(m.ds_off, out);
  append_mlp_params(m.mlp_fstar, out);
  append_mlp_params(m.combiner, out);
  return out;
}

/// The fixed inputs DS-CI consumes: the invariant multisets in canonical
/// (descending) order plus f*; computed once per matrix.
struct DsCiInput {
  Eigen::VectorXd diag_sorted;
  Eigen::VectorXd off_sorted;
  double fstar = 0.0;
};

inline DsCiInput ds_ci_input(const SymMatrix& X) {
  return {f_diag_sorted(X), f_offdiag_sorted(X), f_star(X)};
}

struct DsCiCache {
  DeepSetsCache diag, off;
  MlpCache fstar, comb;
};

namespace detail {

inline std::vector<Eigen::VectorXd> lift_scalars(
    const Eigen::VectorXd& values, const AffineScaler& scaler,
    const std::optional<BinaryExpansionConfig>& expansion) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<std::size_t>(values.size()));
  for (int i = 0; i < values.size(); ++i) {
    const double s = scaler.apply1(values(i));
    if (expansion) {
      out.push_back(binary_expansion(s, expansion->theta, expansion->dim));
    } else {
      Eigen::VectorXd v(1);
      v(0) = s;
      out.push_back(std::move(v));
    }
  }
  return out;
}

}  // namespace detail

inline Eigen::VectorXd ds_ci_forward(const DsCi& m, const DsCiInput& in,
                                     DsCiCache* cache = nullptr) {
  const auto diag_elems =
      detail::lift_scalars(in.diag_sorted, m.scale_diag, m.config.expansion);
  const auto off_elems =
      detail::lift_scalars(in.off_sorted, m.scale_off, m.config.expansion);
  Eigen::VectorXd fstar_in;
  {
    const double s = m.scale_fstar.apply1(in.fstar);
    if (m.config.expansion) {
      fstar_in = binary_expansion(s, m.config.expansion->theta,
                                  m.config.expansion->dim);
    } else {
      fstar_in = Eigen::VectorXd::Constant(1, s);
    }
  }
  const Eigen::VectorXd out1 =
      deepsets_forward(m.ds_diag, diag_elems, cache ? &cache->diag : nullptr);
  const Eigen::VectorXd out2 =
      deepsets_forward(m.ds_off, off_elems, cache ? &cache->off : nullptr);
  const Eigen::VectorXd out3 =
      mlp_forward(m.mlp_fstar, fstar_in, cache ? &cache->fstar : nullptr);
  Eigen::VectorXd comb_in(out1.size() + out2.size() + out3.size());
  comb_in << out1, out2, out3;
  return mlp_forward(m.combiner, comb_in, cache ? &cache->comb : nullptr);
}

inline Eigen::VectorXd ds_ci_forward(const DsCi& m, const SymMatrix& X,
                                     DsCiCache* cache = nullptr) {
  return ds_ci_forward(m, ds_ci_input(X), cache);
}

inline void ds_ci_backward(DsCi& m, const DsCiCache& cache,
                           const Eigen::VectorXd& dout) {
  const Eigen::VectorXd dcomb = mlp_backward(m.combiner, cache.comb, dout);
  const int k = m.config.branch_out;
  deepsets_backward(m.ds_diag, cache.diag, dcomb.segment(0, k));
  deepsets_backward(m.ds_off, cache.off, dcomb.segment(k, k));
  mlp_backward(m.mlp_fstar, cache.fstar, dcomb.segment(2 * k, k));
}

// ---------------------------------------------------------------------------
// OI-DS: DeepSet over the columns of C_V^T V plus an MLP on the flattened
// upper triangle of C_V^T C_V, combined by a final MLP. C_V is a constant
// feature extractor; no gradient flows through the identifier.
// ---------------------------------------------------------------------------

struct OiDsConfig {
  IdentifierKind identifier = IdentifierKind::poly;
  int kmeans_max_iters = 100;
  int d = 3;  // ambient dimension the model is built for
  std::vector<int> enc_hidden{32};
  int latent = 32;
  std::vector<int> dec_hidden{};
  int branch_out = 32;
  std::vector<int> corner_hidden{16};
  int corner_out = 16;
  std::vector<int> comb_hidden{32};
  int out_dim = 8;
  Act activation = Act::relu;

  int corner_dim() const { return d * (d + 1) / 2; }
};

struct OiDs {
  OiDsConfig config;
  DeepSets ds_cols;
  Mlp mlp_corner;
  Mlp combiner;
  AffineScaler scale_cols = AffineScaler::identity(3);
  AffineScaler scale_corner = AffineScaler::identity(6);
};

inline OiDs make_oi_ds(const OiDsConfig& cfg, std::uint64_t seed) {
  SplitMix64 rng(seed);
  OiDs m;
  m.config = cfg;
  m.ds_cols = make_deepsets("ds", cfg.d, cfg.enc_hidden, cfg.latent,
                            cfg.dec_hidden, cfg.branch_out, cfg.activation, rng);
  m.mlp_corner = make_mlp("mlp4", cfg.corner_dim(), cfg.corner_hidden,
                          cfg.corner_out, cfg.activation, rng);
  m.combiner = make_mlp("mlpo", cfg.branch_out + cfg.corner_out,
                        cfg.comb_hidden, cfg.out_dim, cfg.activation, rng);
  m.scale_cols = AffineScaler::identity(cfg.d);
  m.scale_corner = AffineScaler::identity(cfg.corner_dim());
  return m;
}

inline std::vector<Tensor*> oi_ds_params(OiDs& m) {
  std::vector<Tensor*> out;
  append_deepsets_params(m.ds_cols, out);
  append_mlp_params(m.mlp_corner, out);
  append_mlp_params(m.combiner, out);
  return out;
}

inline Eigen::VectorXd upper_triangle_flat(const Eigen::MatrixXd& A) {
  const int d = static_cast<int>(A.rows());
  Eigen::VectorXd out(d * (d + 1) / 2);
  int s = 0;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) out(s++) = A(i, j);
  return out;
}

/// Columns of M sorted lexicographically descending (coordinate 0 major);
/// the canonical order that makes set summation deterministic.
inline Eigen::MatrixXd lex_sorted_columns_desc(const Eigen::MatrixXd& M) {
  const int d = static_cast<int>(M.rows());
  const int n = static_cast<int>(M.cols());
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    for (int r = 0; r < d; ++r)
      if (M(r, a) != M(r, b)) return M(r, a) > M(r, b);
    return false;
  });
  Eigen::MatrixXd out(d, n);
  for (int c = 0; c < n; ++c) out.col(c) = M.col(order[static_cast<std::size_t>(c)]);
  return out;
}

/// The fixed inputs OI-DS consumes for one cloud: canonically sorted columns
/// of C_V^T V and the flattened corner. Throws BadSetError on rank-deficient
/// identifiers (degenerate input).
struct OiDsInput {
  Eigen::MatrixXd cols;          // d x n, lex-sorted descending
  Eigen::VectorXd corner_upper;  // d(d+1)/2
};

inline OiDsInput oi_ds_input(const PointCloud& V, const OiDsConfig& cfg) {
  if (V.d() != cfg.d)
    throw ArgumentError("oi_ds_input: cloud dimension " + std::to_string(V.d()) +
                        " != model dimension " + std::to_string(cfg.d));
  const IdentifierMatrix id =
      make_identifier(V, cfg.identifier, cfg.kmeans_max_iters);
  if (identifier_is_degenerate(id))
    throw BadSetError(std::string("oi_ds_input: degenerate input (") +
                      identifier_name(cfg.identifier) +
                      " identifier is rank-deficient)");
  OiDsInput in;
  in.cols = lex_sorted_columns_desc(id.C.transpose() * V.coords());
  in.corner_upper = upper_triangle_flat(id.C.transpose() * id.C);
  return in;
}

struct OiDsCache {
  DeepSetsCache cols;
  MlpCache corner, comb;
};

inline Eigen::VectorXd oi_ds_forward(const OiDs& m, const OiDsInput& in,
                                     OiDsCache* cache = nullptr) {
  std::vector<Eigen::VectorXd> elems;
  elems.reserve(static_cast<std::size_t>(in.cols.cols()));
  for (int c = 0; c < in.cols.cols(); ++c)
    elems.push_back(m.scale_cols.apply(in.cols.col(c)));
  const Eigen::VectorXd out1 =
      deepsets_forward(m.ds_cols, elems, cache ? &cache->cols : nullptr);
  const Eigen::VectorXd out2 =
      mlp_forward(m.mlp_corner, m.scale_corner.apply(in.corner_upper),
                  cache ? &cache->corner : nullptr);
  Eigen::VectorXd comb_in(out1.size() + out2.size());
  comb_in << out1, out2;
  return mlp_forward(m.combiner, comb_in, cache ? &cache->comb : nullptr);
}

inline Eigen::VectorXd oi_ds_forward(const OiDs& m, const PointCloud& V,
                                     OiDsCache* cache = nullptr) {
  return oi_ds_forward(m, oi_ds_input(V, m.config), cache);
}

inline void oi_ds_backward(OiDs& m, const OiDsCache& cache,
                           const Eigen::VectorXd& dout) {
  const Eigen::VectorXd dcomb = mlp_backward(m.combiner, cache.comb, dout);
  deepsets_backward(m.ds_cols, cache.cols,
                    dcomb.segment(0, m.config.branch_out));
  mlp_backward(m.mlp_corner, cache.corner,
               dcomb.segment(m.config.branch_out, m.config.corner_out));
}

// ---------------------------------------------------------------------------
// Distance-prediction head: a * ||W (z1 - z2)||^2 + b, symmetric in (z1, z2).
// ---------------------------------------------------------------------------

struct GwHead {
  Tensor W;  // t x t
  Tensor a;  // 1 x 1
  Tensor b;  // 1 x 1

  explicit GwHead(int t) : W("gw.W", t, t), a("gw.a", 1, 1), b("gw.b", 1, 1) {}
};

/// W starts Glorot-uniform, a = 1, b = 0.
inline GwHead make_gw_head(int t, std::uint64_t seed) {
  GwHead h(t);
  SplitMix64 rng(seed);
  const double bound = std::sqrt(6.0 / static_cast<double>(2 * t));
  for (int i = 0; i < t; ++i)
    for (int j = 0; j < t; ++j)
      h.W.value(i, j) = bound * (2.0 * rng.next_uniform() - 1.0);
  h.a.value(0, 0) = 1.0;
  h.b.value(0, 0) = 0.0;
  return h;
}

inline std::vector<Tensor*> gw_head_params(GwHead& h) {
  return {&h.W, &h.a, &h.b};
}

struct GwCache {
  Eigen::VectorXd diff;  // z1 - z2
  Eigen::VectorXd r;     // W (z1 - z2)
};

inline double gw_predict(const GwHead& h, const Eigen::VectorXd& z1,
                         const Eigen::VectorXd& z2, GwCache* cache = nullptr) {
  if (z1.size() != h.W.value.cols() || z2.size() != h.W.value.cols())
    throw ArgumentError("gw_predict: embedding dim " + std::to_string(z1.size()) +
                        "/" + std::to_string(z2.size()) + " != head dim " +
                        std::to_string(h.W.value.cols()));
  const Eigen::VectorXd diff = z1 - z2;
  const Eigen::VectorXd r = h.W.value * diff;
  if (cache) {
    cache->diff = diff;
    cache->r = r;
  }
  return h.a.value(0, 0) * r.squaredNorm() + h.b.value(0, 0);
}

/// Accumulates head gradients and reports dloss/dz1, dloss/dz2.
inline void gw_backward(GwHead& h, const GwCache& cache, double dpred,
                        Eigen::VectorXd& dz1, Eigen::VectorXd& dz2) {
  h.a.grad(0, 0) += dpred * cache.r.squaredNorm();
  h.b.grad(0, 0) += dpred;
  const Eigen::VectorXd dr = dpred * h.a.value(0, 0) * 2.0 * cache.r;
  h.W.grad.noalias() += dr * cache.diff.transpose();
  const Eigen::VectorXd ddiff = h.W.value.transpose() * dr;
  dz1 = ddiff;
  dz2 = -ddiff;
}

}  // namespace invfeat::nn
