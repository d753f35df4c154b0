#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "invfeat/errors.hpp"
#include "invfeat/rng.hpp"

namespace invfeat::nn {

/// A named parameter block with its gradient accumulator.
struct Tensor {
  std::string name;
  Eigen::MatrixXd value;
  Eigen::MatrixXd grad;

  Tensor(std::string n, int rows, int cols)
      : name(std::move(n)),
        value(Eigen::MatrixXd::Zero(rows, cols)),
        grad(Eigen::MatrixXd::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(); }
};

enum class Act { relu, sigmoid, identity };

inline const char* act_name(Act a) {
  switch (a) {
    case Act::relu: return "relu";
    case Act::sigmoid: return "sigmoid";
    case Act::identity: return "identity";
  }
  return "?";
}

inline Act parse_act(const std::string& s) {
  if (s == "relu") return Act::relu;
  if (s == "sigmoid") return Act::sigmoid;
  if (s == "identity") return Act::identity;
  throw ArgumentError("unknown activation '" + s + "'");
}

inline double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                  : std::exp(x) / (1.0 + std::exp(x));
}

inline Eigen::VectorXd act_apply(Act a, const Eigen::VectorXd& pre) {
  switch (a) {
    case Act::relu: return pre.cwiseMax(0.0);
    case Act::sigmoid: {
      Eigen::VectorXd out(pre.size());
      for (int i = 0; i < pre.size(); ++i) out(i) = sigmoid(pre(i));
      return out;
    }
    case Act::identity: return pre;
  }
  return pre;
}

/// Derivative w.r.t. the pre-activation. relu'(0) taken as 0.
inline Eigen::VectorXd act_deriv(Act a, const Eigen::VectorXd& pre) {
  switch (a) {
    case Act::relu: {
      Eigen::VectorXd out(pre.size());
      for (int i = 0; i < pre.size(); ++i) out(i) = pre(i) > 0.0 ? 1.0 : 0.0;
      return out;
    }
    case Act::sigmoid: {
      Eigen::VectorXd out(pre.size());
      for (int i = 0; i < pre.size(); ++i) {
        const double s = sigmoid(pre(i));
        out(i) = s * (1.0 - s);
      }
      return out;
    }
    case Act::identity: return Eigen::VectorXd::Ones(pre.size());
  }
  return Eigen::VectorXd::Ones(pre.size());
}

struct MlpLayer {
  Tensor W;  // out x in
  Tensor b;  // out x 1
  Act act;

  MlpLayer(const std::string& name, int in, int out, Act a)
      : W(name + ".W", out, in), b(name + ".b", out, 1), act(a) {}
};

/// Plain multi-layer perceptron; the final layer is linear unless configured
/// otherwise. Weights start Glorot-uniform (+-sqrt(6/(fan_in+fan_out))) from
/// the library PRNG, biases zero.
struct Mlp {
  std::vector<MlpLayer> layers;

  int in_dim() const { return static_cast<int>(layers.front().W.value.cols()); }
  int out_dim() const { return static_cast<int>(layers.back().W.value.rows()); }
};

inline Mlp make_mlp(const std::string& name, int in,
                    const std::vector<int>& hidden, int out, Act hidden_act,
                    SplitMix64& rng, Act final_act = Act::identity) {
  if (in < 1 || out < 1) throw ArgumentError("make_mlp: dims must be >= 1");
  Mlp mlp;
  std::vector<int> dims;
  dims.push_back(in);
  for (int h : hidden) {
    if (h < 1) throw ArgumentError("make_mlp: hidden dims must be >= 1");
    dims.push_back(h);
  }
  dims.push_back(out);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const bool last = (l + 2 == dims.size());
    MlpLayer layer(name + ".L" + std::to_string(l), dims[l], dims[l + 1],
                   last ? final_act : hidden_act);
    const double bound =
        std::sqrt(6.0 / static_cast<double>(dims[l] + dims[l + 1]));
    for (int i = 0; i < layer.W.value.rows(); ++i)
      for (int j = 0; j < layer.W.value.cols(); ++j)
        layer.W.value(i, j) = bound * (2.0 * rng.next_uniform() - 1.0);
    mlp.layers.push_back(std::move(layer));
  }
  return mlp;
}

/// Per-call forward state needed by the backward pass.
struct MlpCache {
  std::vector<Eigen::VectorXd> inputs;  // input to each layer
  std::vector<Eigen::VectorXd> pre;     // pre-activation of each layer
};

inline Eigen::VectorXd mlp_forward(const Mlp& mlp, const Eigen::VectorXd& x,
                                   MlpCache* cache = nullptr) {
  if (x.size() != mlp.in_dim())
    throw ArgumentError("mlp_forward: input dim " + std::to_string(x.size()) +
                        " != expected " + std::to_string(mlp.in_dim()));
  Eigen::VectorXd cur = x;
  if (cache) {
    cache->inputs.clear();
    cache->pre.clear();
  }
  for (const auto& layer : mlp.layers) {
    Eigen::VectorXd pre = layer.W.value * cur + layer.b.value.col(0);
    if (cache) {
      cache->inputs.push_back(cur);
      cache->pre.push_back(pre);
    }
    cur = act_apply(layer.act, pre);
  }
  return cur;
}

/// Accumulates parameter gradients and returns the gradient w.r.t. the input.
inline Eigen::VectorXd mlp_backward(Mlp& mlp, const MlpCache& cache,
                                    Eigen::VectorXd dout) {
  for (int l = static_cast<int>(mlp.layers.size()) - 1; l >= 0; --l) {
    auto& layer = mlp.layers[static_cast<std::size_t>(l)];
    const Eigen::VectorXd dpre =
        dout.cwiseProduct(act_deriv(layer.act, cache.pre[static_cast<std::size_t>(l)]));
    layer.W.grad.noalias() +=
        dpre * cache.inputs[static_cast<std::size_t>(l)].transpose();
    layer.b.grad.col(0) += dpre;
    dout = layer.W.value.transpose() * dpre;
  }
  return dout;
}

inline void append_mlp_params(Mlp& mlp, std::vector<Tensor*>& out) {
  for (auto& layer : mlp.layers) {
    out.push_back(&layer.W);
    out.push_back(&layer.b);
  }
}

enum class Loss { mae, mse };

inline Loss parse_loss(const std::string& s) {
  if (s == "mae") return Loss::mae;
  if (s == "mse") return Loss::mse;
  throw ArgumentError("unknown loss '" + s + "' (expected mae | mse)");
}

inline const char* loss_name(Loss l) { return l == Loss::mae ? "mae" : "mse"; }

inline double loss_eval(Loss l, double pred, double target) {
  const double r = pred - target;
  return l == Loss::mae ? std::abs(r) : r * r;
}

/// d(loss)/d(pred). MAE subgradient at zero residual is 0.
inline double loss_grad(Loss l, double pred, double target) {
  const double r = pred - target;
  if (l == Loss::mse) return 2.0 * r;
  return r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0);
}

struct AdamConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam over a fixed set of parameter blocks; moment accumulators mirror the
/// block shapes.
class Adam {
 public:
  Adam(std::vector<Tensor*> params, AdamConfig cfg)
      : params_(std::move(params)), cfg_(cfg) {
    for (const Tensor* t : params_) {
      m_.emplace_back(Eigen::MatrixXd::Zero(t->value.rows(), t->value.cols()));
      v_.emplace_back(Eigen::MatrixXd::Zero(t->value.rows(), t->value.cols()));
    }
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
    for (std::size_t k = 0; k < params_.size(); ++k) {
      Tensor& p = *params_[k];
      m_[k] = cfg_.beta1 * m_[k] + (1.0 - cfg_.beta1) * p.grad;
      v_[k] = cfg_.beta2 * v_[k] +
              (1.0 - cfg_.beta2) * p.grad.cwiseProduct(p.grad);
      const Eigen::MatrixXd mhat = m_[k] / bc1;
      const Eigen::MatrixXd vhat = v_[k] / bc2;
      p.value -= cfg_.lr * (mhat.array() / (vhat.array().sqrt() + cfg_.eps))
                              .matrix();
    }
  }

  long steps_taken() const { return t_; }

 private:
  std::vector<Tensor*> params_;
  AdamConfig cfg_;
  std::vector<Eigen::MatrixXd> m_, v_;
  long t_ = 0;
};

}  // namespace invfeat::nn
