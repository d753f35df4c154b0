#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "invfeat/errors.hpp"
#include "invfeat/nn/models.hpp"
#include "invfeat/rng.hpp"

namespace invfeat::nn {

struct TrainConfig {
  int epochs = 1000;
  AdamConfig adam;  // lr 0.01
  Loss loss = Loss::mae;
  std::uint64_t seed = 0;
  int minibatch = 0;  // 0 = full batch
  double split_train = 0.8;
  double split_val = 0.1;  // remainder is the test split
  bool standardize = true;
};

struct SplitIndices {
  std::vector<int> train, val, test;
};

/// Seeded shuffle, then floor(f_train*n) / floor(f_val*n) / remainder.
inline SplitIndices split_dataset(int n, double f_train, double f_val,
                                  SplitMix64& rng) {
  if (n < 1) throw ArgumentError("split_dataset: empty dataset");
  if (f_train < 0 || f_val < 0 || f_train + f_val > 1.0 + 1e-12)
    throw ArgumentError("split_dataset: invalid split fractions");
  const std::vector<int> idx = shuffled_indices(n, rng);
  const int n_train = static_cast<int>(std::floor(f_train * n));
  const int n_val = static_cast<int>(std::floor(f_val * n));
  SplitIndices s;
  s.train.assign(idx.begin(), idx.begin() + n_train);
  s.val.assign(idx.begin() + n_train, idx.begin() + n_train + n_val);
  s.test.assign(idx.begin() + n_train + n_val, idx.end());
  if (s.train.empty()) throw ArgumentError("split_dataset: empty train split");
  return s;
}

/// Loss trace and split bookkeeping. Row e of the loss vectors is evaluated
/// at the post-update parameters of epoch e; row 0 is the initial parameters.
/// The model is left holding the best-validation parameters.
struct TrainResult {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  int best_epoch = 0;
  double best_val = 0.0;
  SplitIndices split;
};

inline std::vector<Eigen::MatrixXd> snapshot_params(
    const std::vector<Tensor*>& params) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(params.size());
  for (const Tensor* t : params) out.push_back(t->value);
  return out;
}

inline void restore_params(const std::vector<Tensor*>& params,
                           const std::vector<Eigen::MatrixXd>& snap) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = snap[i];
}

namespace detail {

inline void mean_std(const std::vector<double>& xs, double& mean,
                     double& stdev) {
  mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(xs.size());
  stdev = std::max(std::sqrt(var), 1e-12);
}

inline void check_finite_loss(double loss, int epoch, double lr) {
  if (!std::isfinite(loss))
    throw NumericalError(
        "training loss is not finite at epoch " + std::to_string(epoch) +
        "; try a lower learning rate (current lr=" + std::to_string(lr) + ")");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// DS-CI regression on symmetric matrices (scalar targets).
// ---------------------------------------------------------------------------

struct MatrixDataset {
  std::vector<SymMatrix> matrices;
  std::vector<double> targets;
};

/// Pooled mean/std of each input branch over the train split.
inline void standardize_ds_ci(DsCi& model, const std::vector<DsCiInput>& inputs,
                              const std::vector<int>& train_idx) {
  std::vector<double> diag, off, fstar;
  for (int i : train_idx) {
    const auto& in = inputs[static_cast<std::size_t>(i)];
    for (int k = 0; k < in.diag_sorted.size(); ++k)
      diag.push_back(in.diag_sorted(k));
    for (int k = 0; k < in.off_sorted.size(); ++k)
      off.push_back(in.off_sorted(k));
    fstar.push_back(in.fstar);
  }
  double m, s;
  detail::mean_std(diag, m, s);
  model.scale_diag = {Eigen::VectorXd::Constant(1, m),
                      Eigen::VectorXd::Constant(1, s)};
  if (!off.empty()) {
    detail::mean_std(off, m, s);
    model.scale_off = {Eigen::VectorXd::Constant(1, m),
                       Eigen::VectorXd::Constant(1, s)};
  }
  detail::mean_std(fstar, m, s);
  model.scale_fstar = {Eigen::VectorXd::Constant(1, m),
                       Eigen::VectorXd::Constant(1, s)};
}

inline double ds_ci_dataset_loss(const DsCi& model,
                                 const std::vector<DsCiInput>& inputs,
                                 const std::vector<double>& targets,
                                 const std::vector<int>& idx, Loss loss) {
  if (idx.empty()) return 0.0;
  double acc = 0.0;
  for (int i : idx)
    acc += loss_eval(loss,
                     ds_ci_forward(model, inputs[static_cast<std::size_t>(i)])(0),
                     targets[static_cast<std::size_t>(i)]);
  return acc / static_cast<double>(idx.size());
}

/// Deterministic given the seed. Returns the loss trace; the model holds the
/// best-validation parameters on return (best train-loss epoch when the
/// validation split is empty).
inline TrainResult train_ds_ci(DsCi& model, const MatrixDataset& data,
                               const TrainConfig& cfg) {
  if (data.matrices.empty())
    throw ArgumentError("train_ds_ci: empty dataset");
  if (data.matrices.size() != data.targets.size())
    throw ArgumentError("train_ds_ci: matrices/targets size mismatch");
  if (model.config.out_dim != 1)
    throw ArgumentError("train_ds_ci: scalar regression needs out_dim == 1");

  std::vector<DsCiInput> inputs;
  inputs.reserve(data.matrices.size());
  for (const auto& X : data.matrices) inputs.push_back(ds_ci_input(X));

  SplitMix64 rng(cfg.seed);
  TrainResult res;
  res.split = split_dataset(static_cast<int>(data.matrices.size()),
                            cfg.split_train, cfg.split_val, rng);
  if (cfg.standardize) standardize_ds_ci(model, inputs, res.split.train);

  const std::vector<Tensor*> params = ds_ci_params(model);
  Adam opt(params, cfg.adam);

  const auto& val_idx = res.split.val.empty() ? res.split.train : res.split.val;
  auto record = [&](int epoch) {
    const double tl =
        ds_ci_dataset_loss(model, inputs, data.targets, res.split.train, cfg.loss);
    const double vl =
        ds_ci_dataset_loss(model, inputs, data.targets, val_idx, cfg.loss);
    detail::check_finite_loss(tl, epoch, cfg.adam.lr);
    res.train_loss.push_back(tl);
    res.val_loss.push_back(vl);
    return vl;
  };

  std::vector<Eigen::MatrixXd> best = snapshot_params(params);
  res.best_val = record(0);
  res.best_epoch = 0;

  std::vector<int> order = res.split.train;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (cfg.minibatch > 0) order = [&] {
      std::vector<int> o = res.split.train;
      const std::vector<int> sh =
          shuffled_indices(static_cast<int>(o.size()), rng);
      std::vector<int> out(o.size());
      for (std::size_t k = 0; k < o.size(); ++k)
        out[k] = o[static_cast<std::size_t>(sh[k])];
      return out;
    }();
    const int bs = cfg.minibatch > 0 ? cfg.minibatch
                                     : static_cast<int>(order.size());
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(bs)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(bs));
      for (Tensor* t : params) t->zero_grad();
      const double inv = 1.0 / static_cast<double>(end - start);
      for (std::size_t k = start; k < end; ++k) {
        const int i = order[k];
        DsCiCache cache;
        const double pred =
            ds_ci_forward(model, inputs[static_cast<std::size_t>(i)], &cache)(0);
        const double d =
            inv * loss_grad(cfg.loss, pred, data.targets[static_cast<std::size_t>(i)]);
        ds_ci_backward(model, cache, Eigen::VectorXd::Constant(1, d));
      }
      opt.step();
    }
    const double vl = record(epoch);
    if (vl < res.best_val) {
      res.best_val = vl;
      res.best_epoch = epoch;
      best = snapshot_params(params);
    }
  }
  restore_params(params, best);
  return res;
}

// ---------------------------------------------------------------------------
// OI-DS + distance head on cloud pairs, trained end-to-end full batch.
// ---------------------------------------------------------------------------

struct CloudPairDataset {
  std::vector<PointCloud> clouds;
  struct Pair {
    int i, j;
    double target;
  };
  std::vector<Pair> pairs;
};

inline void standardize_oi_ds(OiDs& model, const std::vector<OiDsInput>& inputs,
                              const std::set<int>& cloud_idx) {
  const int d = model.config.d;
  const int cdim = model.config.corner_dim();
  Eigen::VectorXd cshift = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd cscale = Eigen::VectorXd::Ones(d);
  for (int r = 0; r < d; ++r) {
    std::vector<double> xs;
    for (int c : cloud_idx) {
      const auto& in = inputs[static_cast<std::size_t>(c)];
      for (int k = 0; k < in.cols.cols(); ++k) xs.push_back(in.cols(r, k));
    }
    detail::mean_std(xs, cshift(r), cscale(r));
  }
  model.scale_cols = {cshift, cscale};
  Eigen::VectorXd kshift = Eigen::VectorXd::Zero(cdim);
  Eigen::VectorXd kscale = Eigen::VectorXd::Ones(cdim);
  for (int r = 0; r < cdim; ++r) {
    std::vector<double> xs;
    for (int c : cloud_idx)
      xs.push_back(inputs[static_cast<std::size_t>(c)].corner_upper(r));
    detail::mean_std(xs, kshift(r), kscale(r));
  }
  model.scale_corner = {kshift, kscale};
}

inline double gw_dataset_loss(const OiDs& model, const GwHead& head,
                              const std::vector<OiDsInput>& inputs,
                              const std::vector<CloudPairDataset::Pair>& pairs,
                              const std::vector<int>& idx, Loss loss) {
  if (idx.empty()) return 0.0;
  // One embedding per referenced cloud, reused across pairs.
  std::set<int> used;
  for (int k : idx) {
    used.insert(pairs[static_cast<std::size_t>(k)].i);
    used.insert(pairs[static_cast<std::size_t>(k)].j);
  }
  std::vector<Eigen::VectorXd> z(inputs.size());
  for (int c : used)
    z[static_cast<std::size_t>(c)] =
        oi_ds_forward(model, inputs[static_cast<std::size_t>(c)]);
  double acc = 0.0;
  for (int k : idx) {
    const auto& p = pairs[static_cast<std::size_t>(k)];
    acc += loss_eval(loss,
                     gw_predict(head, z[static_cast<std::size_t>(p.i)],
                                z[static_cast<std::size_t>(p.j)]),
                     p.target);
  }
  return acc / static_cast<double>(idx.size());
}

/// Full-batch end-to-end training of the embedding and the head. Embeddings
/// are computed once per epoch and pair gradients accumulate into per-cloud
/// embedding gradients before a single backward pass per cloud.
inline TrainResult train_oi_ds_gw(OiDs& model, GwHead& head,
                                  const CloudPairDataset& data,
                                  const TrainConfig& cfg) {
  if (data.pairs.empty()) throw ArgumentError("train_oi_ds_gw: empty dataset");
  if (cfg.minibatch > 0)
    throw ArgumentError("train_oi_ds_gw: the pair task is full-batch only");
  if (head.W.value.cols() != model.config.out_dim)
    throw ArgumentError("train_oi_ds_gw: head dim != embedding dim");

  std::vector<OiDsInput> inputs;
  inputs.reserve(data.clouds.size());
  for (const auto& V : data.clouds)
    inputs.push_back(oi_ds_input(V, model.config));

  SplitMix64 rng(cfg.seed);
  TrainResult res;
  res.split = split_dataset(static_cast<int>(data.pairs.size()),
                            cfg.split_train, cfg.split_val, rng);

  std::set<int> train_clouds;
  for (int k : res.split.train) {
    train_clouds.insert(data.pairs[static_cast<std::size_t>(k)].i);
    train_clouds.insert(data.pairs[static_cast<std::size_t>(k)].j);
  }
  if (cfg.standardize) standardize_oi_ds(model, inputs, train_clouds);

  std::vector<Tensor*> params = oi_ds_params(model);
  for (Tensor* t : gw_head_params(head)) params.push_back(t);
  Adam opt(params, cfg.adam);

  const auto& val_idx = res.split.val.empty() ? res.split.train : res.split.val;
  auto record = [&](int epoch) {
    const double tl = gw_dataset_loss(model, head, inputs, data.pairs,
                                      res.split.train, cfg.loss);
    const double vl =
        gw_dataset_loss(model, head, inputs, data.pairs, val_idx, cfg.loss);
    detail::check_finite_loss(tl, epoch, cfg.adam.lr);
    res.train_loss.push_back(tl);
    res.val_loss.push_back(vl);
    return vl;
  };

  std::vector<Eigen::MatrixXd> best = snapshot_params(params);
  res.best_val = record(0);
  res.best_epoch = 0;

  const double inv = 1.0 / static_cast<double>(res.split.train.size());
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (Tensor* t : params) t->zero_grad();
    std::vector<OiDsCache> caches(inputs.size());
    std::vector<Eigen::VectorXd> z(inputs.size());
    std::vector<Eigen::VectorXd> dz(inputs.size());
    for (int c : train_clouds) {
      z[static_cast<std::size_t>(c)] = oi_ds_forward(
          model, inputs[static_cast<std::size_t>(c)], &caches[static_cast<std::size_t>(c)]);
      dz[static_cast<std::size_t>(c)] =
          Eigen::VectorXd::Zero(model.config.out_dim);
    }
    for (int k : res.split.train) {
      const auto& p = data.pairs[static_cast<std::size_t>(k)];
      GwCache gc;
      const double pred = gw_predict(head, z[static_cast<std::size_t>(p.i)],
                                     z[static_cast<std::size_t>(p.j)], &gc);
      const double d = inv * loss_grad(cfg.loss, pred, p.target);
      Eigen::VectorXd dz1, dz2;
      gw_backward(head, gc, d, dz1, dz2);
      dz[static_cast<std::size_t>(p.i)] += dz1;
      dz[static_cast<std::size_t>(p.j)] += dz2;
    }
    for (int c : train_clouds)
      oi_ds_backward(model, caches[static_cast<std::size_t>(c)],
                     dz[static_cast<std::size_t>(c)]);
    opt.step();

    const double vl = record(epoch);
    if (vl < res.best_val) {
      res.best_val = vl;
      res.best_epoch = epoch;
      best = snapshot_params(params);
    }
  }
  restore_params(params, best);
  return res;
}

}  // namespace invfeat::nn
