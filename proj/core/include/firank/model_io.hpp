#pragma once

#include <string>

#include <json.hpp>

#include "firank/checkpoint.hpp"
#include "firank/model.hpp"

namespace firank {

inline nlohmann::json layer_config_to_json(const LayerConfig& c) {
  return {{"list_len", c.list_len}, {"tasks", c.tasks},   {"d", c.d},
          {"heads", c.heads},       {"d_k", c.d_k},       {"d_v", c.d_v},
          {"d_f", c.d_f},           {"r_k", c.r_k},       {"r_v", c.r_v},
          {"prune_last", c.prune_last},
          {"residual_ln", c.residual_ln},
          {"tie_output", c.tie_output},
          {"tie_ffn", c.tie_ffn}};
}

inline LayerConfig layer_config_from_json(const nlohmann::json& j) {
  LayerConfig c;
  c.list_len = j.at("list_len").get<int64_t>();
  c.tasks = j.at("tasks").get<int64_t>();
  c.d = j.at("d").get<int64_t>();
  c.heads = j.at("heads").get<int64_t>();
  c.d_k = j.at("d_k").get<int64_t>();
  c.d_v = j.at("d_v").get<int64_t>();
  c.d_f = j.at("d_f").get<int64_t>();
  c.r_k = j.at("r_k").get<int64_t>();
  c.r_v = j.at("r_v").get<int64_t>();
  c.prune_last = j.at("prune_last").get<bool>();
  c.residual_ln = j.at("residual_ln").get<bool>();
  c.tie_output = j.at("tie_output").get<bool>();
  c.tie_ffn = j.at("tie_ffn").get<bool>();
  return c;
}

template <class Real>
void save_model(const std::string& path, RankingModel<Real>& m,
                nlohmann::json extra = nlohmann::json::object()) {
  CheckpointWriter w;
  ParamSet<Real> params = m.params();
  for (const auto& item : params.items()) w.add(item.name, *item.tensor);
  // Normalization stats ride along as non-trainable tensors.
  for (int64_t k = 0; k < m.dense_pre.stats.feature_count(); ++k) {
    const EmpiricalCdf& cdf = m.dense_pre.stats.feature(k);
    const auto& knots = cdf.knots();
    const auto& ranks = cdf.ranks();
    w.add("stats.dense" + std::to_string(k) + ".knots",
          Tensor<double>({1, static_cast<int64_t>(knots.size())}, knots));
    w.add("stats.dense" + std::to_string(k) + ".ranks",
          Tensor<double>({1, static_cast<int64_t>(ranks.size())}, ranks));
  }

  nlohmann::json config;
  config["schema"] = nlohmann::json::parse(schema_to_json(m.schema));
  config["kind"] = layer_kind_name(m.kind);
  config["n_layers"] = m.stack.depth();
  config["layer"] = layer_config_to_json(m.layer_cfg);
  config["dtype"] = dtype_name(dtype_of<Real>());
  config["extra"] = std::move(extra);
  w.set_config(std::move(config));
  w.write(path);
}

template <class Real>
RankingModel<Real> load_model(const std::string& path) {
  const Checkpoint ck = Checkpoint::load(path);
  const nlohmann::json& config = ck.config();
  if (config.value("dtype", "") != dtype_name(dtype_of<Real>())) {
    throw VersionError("checkpoint: dtype does not match the requested precision");
  }
  FeatureSchema schema = schema_from_json(config.at("schema").dump());
  const LayerKind kind = layer_kind_from_name(config.at("kind").get<std::string>());
  const int64_t n_layers = config.at("n_layers").get<int64_t>();
  const LayerConfig cfg = layer_config_from_json(config.at("layer"));

  RankingModel<Real> m = RankingModel<Real>::make(schema, cfg, kind, n_layers, 0);
  ParamSet<Real> params = m.params();
  for (const auto& item : params.items()) {
    if (!ck.has(item.name)) {
      throw VersionError("checkpoint: missing tensor '" + item.name + "'");
    }
    Tensor<Real> t = ck.template get<Real>(item.name);
    if (t.shape != item.tensor->shape) {
      throw VersionError("checkpoint: shape mismatch for '" + item.name + "'");
    }
    *item.tensor = std::move(t);
  }
  if (schema.dense_count > 0 && ck.has("stats.dense0.knots")) {
    DenseCdf stats;
    for (int64_t k = 0; k < schema.dense_count; ++k) {
      const Tensor<double> knots =
          ck.template get<double>("stats.dense" + std::to_string(k) + ".knots");
      const Tensor<double> ranks =
          ck.template get<double>("stats.dense" + std::to_string(k) + ".ranks");
      stats.add_feature(EmpiricalCdf::from_knots(knots.data, ranks.data));
    }
    m.dense_pre.stats = std::move(stats);
  }
  return m;
}

}  // namespace firank
