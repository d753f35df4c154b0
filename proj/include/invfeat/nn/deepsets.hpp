#pragma once

#include <vector>

#include <Eigen/Core>

#include "invfeat/nn/mlp.hpp"

namespace invfeat::nn {

/// DeepSets: decoder(sum_i encoder(x_i)). Callers feed the elements in
/// canonical (sorted) order so the floating-point summation order is
/// permutation-independent and the invariance is exact, not approximate.
struct DeepSets {
  Mlp encoder;  // element dim -> latent
  Mlp decoder;  // latent -> output
};

inline DeepSets make_deepsets(const std::string& name, int elem_dim,
                              const std::vector<int>& enc_hidden, int latent,
                              const std::vector<int>& dec_hidden, int out,
                              Act act, SplitMix64& rng) {
  DeepSets ds;
  ds.encoder = make_mlp(name + ".enc", elem_dim, enc_hidden, latent, act, rng);
  ds.decoder = make_mlp(name + ".dec", latent, dec_hidden, out, act, rng);
  return ds;
}

struct DeepSetsCache {
  std::vector<MlpCache> enc;
  MlpCache dec;
};

inline Eigen::VectorXd deepsets_forward(
    const DeepSets& ds, const std::vector<Eigen::VectorXd>& elements,
    DeepSetsCache* cache = nullptr) {
  Eigen::VectorXd pooled =
      Eigen::VectorXd::Zero(ds.encoder.out_dim());
  if (cache) {
    cache->enc.clear();
    cache->enc.resize(elements.size());
  }
  for (std::size_t i = 0; i < elements.size(); ++i) {
    MlpCache* ec = cache ? &cache->enc[i] : nullptr;
    pooled += mlp_forward(ds.encoder, elements[i], ec);
  }
  return mlp_forward(ds.decoder, pooled, cache ? &cache->dec : nullptr);
}

/// The set elements are constants, so only parameter gradients accumulate.
inline void deepsets_backward(DeepSets& ds, const DeepSetsCache& cache,
                              const Eigen::VectorXd& dout) {
  const Eigen::VectorXd dpooled = mlp_backward(ds.decoder, cache.dec, dout);
  for (const auto& ec : cache.enc) mlp_backward(ds.encoder, ec, dpooled);
}

inline void append_deepsets_params(DeepSets& ds, std::vector<Tensor*>& out) {
  append_mlp_params(ds.encoder, out);
  append_mlp_params(ds.decoder, out);
}

}  // namespace invfeat::nn
