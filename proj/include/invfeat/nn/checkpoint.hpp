#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "invfeat/errors.hpp"
#include "invfeat/io.hpp"
#include "invfeat/nn/models.hpp"

namespace invfeat::nn {

// Checkpoint = <prefix>.json manifest + <prefix>.bin weight blob. The blob
// holds each parameter block in manifest order, entries row-major,
// little-endian IEEE-754 float64.

namespace detail {

inline void append_double_le(std::string& buf, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  if constexpr (std::endian::native == std::endian::big)
    bits = __builtin_bswap64(bits);
  char raw[8];
  std::memcpy(raw, &bits, 8);
  buf.append(raw, 8);
}

inline double read_double_le(const char* p) {
  std::uint64_t bits;
  std::memcpy(&bits, p, sizeof(bits));
  if constexpr (std::endian::native == std::endian::big)
    bits = __builtin_bswap64(bits);
  double v;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

inline void check_keys(const nlohmann::json& j,
                       const std::vector<std::string>& allowed,
                       const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const auto& a : allowed)
      if (key == a) {
        ok = true;
        break;
      }
    if (!ok) throw ParseError(where + ": unknown key '" + key + "'");
  }
}

inline nlohmann::json scaler_to_json(const AffineScaler& s) {
  nlohmann::json j;
  j["shift"] = std::vector<double>(s.shift.data(), s.shift.data() + s.shift.size());
  j["scale"] = std::vector<double>(s.scale.data(), s.scale.data() + s.scale.size());
  return j;
}

inline AffineScaler scaler_from_json(const nlohmann::json& j,
                                     const std::string& where) {
  check_keys(j, {"shift", "scale"}, where);
  const auto sh = j.at("shift").get<std::vector<double>>();
  const auto sc = j.at("scale").get<std::vector<double>>();
  if (sh.size() != sc.size())
    throw ParseError(where + ": shift/scale size mismatch");
  AffineScaler s;
  s.shift = Eigen::Map<const Eigen::VectorXd>(sh.data(),
                                              static_cast<Eigen::Index>(sh.size()));
  s.scale = Eigen::Map<const Eigen::VectorXd>(sc.data(),
                                              static_cast<Eigen::Index>(sc.size()));
  return s;
}

inline std::string blob_from_params(const std::vector<Tensor*>& params) {
  std::string blob;
  for (const Tensor* t : params)
    for (int i = 0; i < t->value.rows(); ++i)
      for (int j = 0; j < t->value.cols(); ++j)
        append_double_le(blob, t->value(i, j));
  return blob;
}

inline nlohmann::json blocks_json(const std::vector<Tensor*>& params) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const Tensor* t : params)
    blocks.push_back({{"name", t->name},
                      {"rows", t->value.rows()},
                      {"cols", t->value.cols()}});
  return blocks;
}

inline void load_blob_into_params(const std::string& blob_path,
                                  const nlohmann::json& blocks,
                                  const std::vector<Tensor*>& params) {
  if (blocks.size() != params.size())
    throw ParseError(blob_path + ": manifest lists " +
                     std::to_string(blocks.size()) + " blocks, model has " +
                     std::to_string(params.size()));
  std::ifstream in(blob_path, std::ios::binary);
  if (!in) throw ParseError("cannot open weight blob: " + blob_path);
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string blob = ss.str();
  std::size_t expect = 0;
  for (const Tensor* t : params)
    expect += static_cast<std::size_t>(t->value.size()) * 8;
  if (blob.size() != expect)
    throw ParseError(blob_path + ": blob is " + std::to_string(blob.size()) +
                     " bytes, expected " + std::to_string(expect));
  std::size_t off = 0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor* t = params[k];
    const auto& blk = blocks[k];
    if (blk.at("rows").get<int>() != t->value.rows() ||
        blk.at("cols").get<int>() != t->value.cols())
      throw ParseError(blob_path + ": block '" + t->name + "' shape mismatch");
    for (int i = 0; i < t->value.rows(); ++i)
      for (int j = 0; j < t->value.cols(); ++j) {
        t->value(i, j) = read_double_le(blob.data() + off);
        off += 8;
      }
  }
}

}  // namespace detail

inline nlohmann::json ds_ci_config_to_json(const DsCiConfig& c) {
  nlohmann::json j;
  j["enc_hidden"] = c.enc_hidden;
  j["latent"] = c.latent;
  j["dec_hidden"] = c.dec_hidden;
  j["branch_out"] = c.branch_out;
  j["fstar_hidden"] = c.fstar_hidden;
  j["comb_hidden"] = c.comb_hidden;
  j["out_dim"] = c.out_dim;
  j["activation"] = act_name(c.activation);
  if (c.expansion)
    j["expansion"] = {{"theta", c.expansion->theta}, {"dim", c.expansion->dim}};
  else
    j["expansion"] = nullptr;
  return j;
}

inline DsCiConfig ds_ci_config_from_json(const nlohmann::json& j) {
  detail::check_keys(j,
                     {"enc_hidden", "latent", "dec_hidden", "branch_out",
                      "fstar_hidden", "comb_hidden", "out_dim", "activation",
                      "expansion"},
                     "ds-ci config");
  DsCiConfig c;
  if (j.contains("enc_hidden")) c.enc_hidden = j["enc_hidden"].get<std::vector<int>>();
  if (j.contains("latent")) c.latent = j["latent"].get<int>();
  if (j.contains("dec_hidden")) c.dec_hidden = j["dec_hidden"].get<std::vector<int>>();
  if (j.contains("branch_out")) c.branch_out = j["branch_out"].get<int>();
  if (j.contains("fstar_hidden")) c.fstar_hidden = j["fstar_hidden"].get<std::vector<int>>();
  if (j.contains("comb_hidden")) c.comb_hidden = j["comb_hidden"].get<std::vector<int>>();
  if (j.contains("out_dim")) c.out_dim = j["out_dim"].get<int>();
  if (j.contains("activation")) c.activation = parse_act(j["activation"].get<std::string>());
  if (j.contains("expansion") && !j["expansion"].is_null()) {
    detail::check_keys(j["expansion"], {"theta", "dim"}, "expansion");
    BinaryExpansionConfig e;
    e.theta = j["expansion"].at("theta").get<double>();
    e.dim = j["expansion"].at("dim").get<int>();
    c.expansion = e;
  }
  return c;
}

inline nlohmann::json oi_ds_config_to_json(const OiDsConfig& c) {
  nlohmann::json j;
  j["identifier"] = identifier_name(c.identifier);
  j["kmeans_max_iters"] = c.kmeans_max_iters;
  j["d"] = c.d;
  j["enc_hidden"] = c.enc_hidden;
  j["latent"] = c.latent;
  j["dec_hidden"] = c.dec_hidden;
  j["branch_out"] = c.branch_out;
  j["corner_hidden"] = c.corner_hidden;
  j["corner_out"] = c.corner_out;
  j["comb_hidden"] = c.comb_hidden;
  j["out_dim"] = c.out_dim;
  j["activation"] = act_name(c.activation);
  return j;
}

inline OiDsConfig oi_ds_config_from_json(const nlohmann::json& j) {
  detail::check_keys(j,
                     {"identifier", "kmeans_max_iters", "d", "enc_hidden",
                      "latent", "dec_hidden", "branch_out", "corner_hidden",
                      "corner_out", "comb_hidden", "out_dim", "activation"},
                     "oi-ds config");
  OiDsConfig c;
  if (j.contains("identifier")) {
    const auto s = j["identifier"].get<std::string>();
    if (s == "poly") c.identifier = IdentifierKind::poly;
    else if (s == "kmeans") c.identifier = IdentifierKind::kmeans;
    else throw ParseError("oi-ds config: unknown identifier '" + s + "'");
  }
  if (j.contains("kmeans_max_iters")) c.kmeans_max_iters = j["kmeans_max_iters"].get<int>();
  if (j.contains("d")) c.d = j["d"].get<int>();
  if (j.contains("enc_hidden")) c.enc_hidden = j["enc_hidden"].get<std::vector<int>>();
  if (j.contains("latent")) c.latent = j["latent"].get<int>();
  if (j.contains("dec_hidden")) c.dec_hidden = j["dec_hidden"].get<std::vector<int>>();
  if (j.contains("branch_out")) c.branch_out = j["branch_out"].get<int>();
  if (j.contains("corner_hidden")) c.corner_hidden = j["corner_hidden"].get<std::vector<int>>();
  if (j.contains("corner_out")) c.corner_out = j["corner_out"].get<int>();
  if (j.contains("comb_hidden")) c.comb_hidden = j["comb_hidden"].get<std::vector<int>>();
  if (j.contains("out_dim")) c.out_dim = j["out_dim"].get<int>();
  if (j.contains("activation")) c.activation = parse_act(j["activation"].get<std::string>());
  return c;
}

inline void save_ds_ci_checkpoint(const std::string& prefix, DsCi& model,
                                  const nlohmann::json& meta = {}) {
  const std::vector<Tensor*> params = ds_ci_params(model);
  nlohmann::json j;
  j["format"] = "invfeat-checkpoint-v1";
  j["model_type"] = "ds-ci";
  j["config"] = ds_ci_config_to_json(model.config);
  j["scalers"] = {{"diag", detail::scaler_to_json(model.scale_diag)},
                  {"off", detail::scaler_to_json(model.scale_off)},
                  {"fstar", detail::scaler_to_json(model.scale_fstar)}};
  if (!meta.is_null() && !meta.empty()) j["meta"] = meta;
  const std::string blob_name =
      std::filesystem::path(prefix).filename().string() + ".bin";
  j["weights"] = {{"file", blob_name},
                  {"dtype", "float64-le"},
                  {"order", "row-major"},
                  {"blocks", detail::blocks_json(params)}};
  atomic_write(prefix + ".bin", detail::blob_from_params(params));
  atomic_write(prefix + ".json", j.dump(2) + "\n");
}

inline std::string checkpoint_model_type(const std::string& manifest_path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(invfeat::detail::read_file(manifest_path));
  } catch (...) {
    throw ParseError("cannot parse checkpoint manifest: " + manifest_path);
  }
  return j.at("model_type").get<std::string>();
}

namespace detail {

inline nlohmann::json parse_manifest(const std::string& manifest_path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(invfeat::detail::read_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(manifest_path + ": invalid JSON: " + std::string(e.what()));
  }
  if (!j.is_object() || j.value("format", "") != "invfeat-checkpoint-v1")
    throw ParseError(manifest_path + ": not an invfeat-checkpoint-v1 manifest");
  return j;
}

inline std::string blob_path_for(const std::string& manifest_path,
                                 const nlohmann::json& j) {
  const auto base = std::filesystem::path(manifest_path).parent_path();
  return (base / j.at("weights").at("file").get<std::string>()).string();
}

}  // namespace detail

inline DsCi load_ds_ci_checkpoint(const std::string& manifest_path,
                                  nlohmann::json* meta_out = nullptr) {
  const nlohmann::json j = detail::parse_manifest(manifest_path);
  if (j.at("model_type").get<std::string>() != "ds-ci")
    throw ParseError(manifest_path + ": expected a ds-ci checkpoint");
  DsCi model = make_ds_ci(ds_ci_config_from_json(j.at("config")), 0);
  model.scale_diag = detail::scaler_from_json(j.at("scalers").at("diag"), "scalers.diag");
  model.scale_off = detail::scaler_from_json(j.at("scalers").at("off"), "scalers.off");
  model.scale_fstar = detail::scaler_from_json(j.at("scalers").at("fstar"), "scalers.fstar");
  const std::vector<Tensor*> params = ds_ci_params(model);
  detail::load_blob_into_params(detail::blob_path_for(manifest_path, j),
                                j.at("weights").at("blocks"), params);
  if (meta_out) *meta_out = j.value("meta", nlohmann::json());
  return model;
}

inline void save_oi_ds_gw_checkpoint(const std::string& prefix, OiDs& model,
                                     GwHead& head,
                                     const nlohmann::json& meta = {}) {
  std::vector<Tensor*> params = oi_ds_params(model);
  for (Tensor* t : gw_head_params(head)) params.push_back(t);
  nlohmann::json j;
  j["format"] = "invfeat-checkpoint-v1";
  j["model_type"] = "oi-ds-gw";
  j["config"] = oi_ds_config_to_json(model.config);
  j["scalers"] = {{"cols", detail::scaler_to_json(model.scale_cols)},
                  {"corner", detail::scaler_to_json(model.scale_corner)}};
  if (!meta.is_null() && !meta.empty()) j["meta"] = meta;
  const std::string blob_name =
      std::filesystem::path(prefix).filename().string() + ".bin";
  j["weights"] = {{"file", blob_name},
                  {"dtype", "float64-le"},
                  {"order", "row-major"},
                  {"blocks", detail::blocks_json(params)}};
  atomic_write(prefix + ".bin", detail::blob_from_params(params));
  atomic_write(prefix + ".json", j.dump(2) + "\n");
}

inline std::pair<OiDs, GwHead> load_oi_ds_gw_checkpoint(
    const std::string& manifest_path, nlohmann::json* meta_out = nullptr) {
  const nlohmann::json j = detail::parse_manifest(manifest_path);
  if (j.at("model_type").get<std::string>() != "oi-ds-gw")
    throw ParseError(manifest_path + ": expected an oi-ds-gw checkpoint");
  OiDs model = make_oi_ds(oi_ds_config_from_json(j.at("config")), 0);
  model.scale_cols = detail::scaler_from_json(j.at("scalers").at("cols"), "scalers.cols");
  model.scale_corner = detail::scaler_from_json(j.at("scalers").at("corner"), "scalers.corner");
  GwHead head(model.config.out_dim);
  std::vector<Tensor*> params = oi_ds_params(model);
  for (Tensor* t : gw_head_params(head)) params.push_back(t);
  detail::load_blob_into_params(detail::blob_path_for(manifest_path, j),
                                j.at("weights").at("blocks"), params);
  if (meta_out) *meta_out = j.value("meta", nlohmann::json());
  return {std::move(model), std::move(head)};
}

}  // namespace invfeat::nn
