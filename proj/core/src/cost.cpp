#include "firank/cost.hpp"

#include <json.hpp>

#include "firank/error.hpp"

namespace firank {

namespace {

// Large enough for every desk-scale config while keeping L^2 d^2 within
// 64-bit range.
constexpr long long kMaxExtent = 1 << 14;

CostReport base(CostVariant v, const char* convention, const CostConfig& cfg, bool pruned) {
  CostReport r;
  r.variant = v;
  r.convention = convention;
  r.cfg = cfg;
  r.pruned = pruned;
  return r;
}

}  // namespace

void CostConfig::validate() const {
  const long long dims[] = {L, d, H, d_k, d_v, d_f, r_k, r_v, t};
  for (long long x : dims) {
    if (x < 1) throw ConfigError("cost: all extents must be >= 1");
    if (x > kMaxExtent) throw ConfigError("cost: extent exceeds supported range");
  }
  if (t > L) throw ConfigError("cost: t must be <= L");
}

const char* cost_variant_name(CostVariant v) {
  switch (v) {
    case CostVariant::homo: return "homo";
    case CostVariant::hetero: return "hetero";
    case CostVariant::hiformer_dense: return "hiformer_dense";
    case CostVariant::hiformer_lowrank: return "hiformer_lowrank";
  }
  return "?";
}

long long CostReport::total_flops() const {
  long long s = 0;
  for (const CostStage& st : stages) s += st.flops;
  return s;
}

long long CostReport::total_params() const {
  long long s = 0;
  for (const CostStage& st : stages) s += st.params;
  return s;
}

const CostStage* CostReport::stage(const std::string& name) const {
  for (const CostStage& st : stages) {
    if (st.name == name) return &st;
  }
  return nullptr;
}

CostReport flops_dense_hiformer(const CostConfig& cfg) {
  cfg.validate();
  CostReport r = base(CostVariant::hiformer_dense, "paper_form", cfg, false);
  const long long L = cfg.L, d = cfg.d;
  r.stages = {
      {"q_projection", L * L * d * d, 0},
      {"k_projection", L * L * d * d, 0},
      {"v_projection", L * L * d * d, 0},
      {"attention_scores", L * L * d, 0},
      {"attention_mix", L * L * d, 0},
      {"output_projection", L * d * d, 0},
      {"ffn", 8 * L * d * d, 0},
  };
  return r;
}

CostReport flops_lowrank_hiformer(const CostConfig& cfg) {
  cfg.validate();
  CostReport r = base(CostVariant::hiformer_lowrank, "paper_form", cfg, false);
  const long long L = cfg.L, d = cfg.d;
  r.stages = {
      {"q_projection", L * cfg.r_k * (d + cfg.d_k), 0},
      {"k_projection", L * cfg.r_k * (d + cfg.d_k), 0},
      {"v_projection", L * cfg.r_v * (d + cfg.d_v), 0},
      {"attention_scores", L * L * d, 0},
      {"attention_mix", L * L * d, 0},
      {"output_projection", L * d * d, 0},
      {"ffn", 8 * L * d * d, 0},
  };
  if (cfg.r_k > L * cfg.d_k || cfg.r_k > L * d) {
    r.notes.push_back("r_k exceeds the full rank of the composite key/query map");
  }
  if (cfg.r_v > L * cfg.d_v || cfg.r_v > L * d) {
    r.notes.push_back("r_v exceeds the full rank of the composite value map");
  }
  return r;
}

CostReport flops_pruned_last_layer(const CostConfig& cfg) {
  cfg.validate();
  CostReport r = base(CostVariant::hiformer_lowrank, "paper_form", cfg, true);
  const long long L = cfg.L, d = cfg.d, t = cfg.t;
  r.stages = {
      {"q_projection", t * cfg.r_k * (d + cfg.d_k), 0},
      {"k_projection", L * cfg.r_k * (d + cfg.d_k), 0},
      {"v_projection", L * cfg.r_v * (d + cfg.d_v), 0},
      {"attention_scores", L * t * d, 0},
      {"attention_mix", L * t * d, 0},
      {"output_projection", t * d * d, 0},
      {"ffn", 8 * t * d * d, 0},
  };
  return r;
}

namespace {

CostReport flops_per_position(CostVariant v, const CostConfig& cfg, bool pruned) {
  cfg.validate();
  CostReport r = base(v, "paper_form", cfg, pruned);
  const long long L = cfg.L, d = cfg.d;
  const long long q_rows = pruned ? cfg.t : L;
  r.stages = {
      {"q_projection", q_rows * d * d, 0},
      {"k_projection", L * d * d, 0},
      {"v_projection", L * d * d, 0},
      {"attention_scores", q_rows * L * d, 0},
      {"attention_mix", q_rows * L * d, 0},
      {"output_projection", q_rows * d * d, 0},
      {"ffn", 8 * q_rows * d * d, 0},
  };
  return r;
}

}  // namespace

CostReport flops_homo(const CostConfig& cfg, bool pruned) {
  return flops_per_position(CostVariant::homo, cfg, pruned);
}

CostReport flops_hetero(const CostConfig& cfg, bool pruned) {
  // Same ops as the homogeneous layer; only the parameterization differs,
  // so the per-stage counts are derived independently from the per-feature
  // structure: each of the L positions applies one d x d_k (or d_v) map per
  // head, exactly like the shared-weight layer does.
  cfg.validate();
  CostReport r = base(CostVariant::hetero, "paper_form", cfg, pruned);
  const long long L = cfg.L, d = cfg.d;
  const long long q_rows = pruned ? cfg.t : L;
  long long q_proj = 0, k_proj = 0, v_proj = 0;
  for (long long i = 0; i < q_rows; ++i) q_proj += d * d;
  for (long long j = 0; j < L; ++j) {
    k_proj += d * d;
    v_proj += d * d;
  }
  r.stages = {
      {"q_projection", q_proj, 0},
      {"k_projection", k_proj, 0},
      {"v_projection", v_proj, 0},
      {"attention_scores", q_rows * L * d, 0},
      {"attention_mix", q_rows * L * d, 0},
      {"output_projection", q_rows * d * d, 0},
      {"ffn", 8 * q_rows * d * d, 0},
  };
  return r;
}

FlopParity flops_equal_homo_hetero(const CostConfig& cfg, bool pruned) {
  FlopParity p;
  p.homo = flops_homo(cfg, pruned);
  p.hetero = flops_hetero(cfg, pruned);
  p.equal = p.homo.stages.size() == p.hetero.stages.size();
  if (p.equal) {
    for (size_t i = 0; i < p.homo.stages.size(); ++i) {
      const CostStage& a = p.homo.stages[i];
      const CostStage& b = p.hetero.stages[i];
      if (a.name != b.name || a.flops != b.flops) {
        p.equal = false;
        break;
      }
    }
  }
  return p;
}

CostReport exact_flops(CostVariant v, const CostConfig& cfg, bool pruned) {
  cfg.validate();
  CostReport r = base(v, "exact", cfg, pruned);
  const long long L = cfg.L, d = cfg.d, H = cfg.H;
  const long long q_rows = pruned ? cfg.t : L;
  long long q_proj = 0, k_proj = 0, v_proj = 0;
  switch (v) {
    case CostVariant::homo:
    case CostVariant::hetero:
      q_proj = 2 * H * q_rows * d * cfg.d_k;
      k_proj = 2 * H * L * d * cfg.d_k;
      v_proj = 2 * H * L * d * cfg.d_v;
      break;
    case CostVariant::hiformer_dense:
      // Full composite maps: (1 x Ld) times (Ld x q_rows*d_k) etc.
      q_proj = 2 * H * (L * d) * (q_rows * cfg.d_k);
      k_proj = 2 * H * (L * d) * (L * cfg.d_k);
      v_proj = 2 * H * (L * d) * (L * cfg.d_v);
      break;
    case CostVariant::hiformer_lowrank:
      // Factored: through rank r, only the query block shrinks when pruned.
      q_proj = 2 * H * (L * d * cfg.r_k + cfg.r_k * q_rows * cfg.d_k);
      k_proj = 2 * H * (L * d * cfg.r_k + cfg.r_k * L * cfg.d_k);
      v_proj = 2 * H * (L * d * cfg.r_v + cfg.r_v * L * cfg.d_v);
      break;
  }
  r.stages = {
      {"q_projection", q_proj, 0},
      {"k_projection", k_proj, 0},
      {"v_projection", v_proj, 0},
      {"attention_scores", 2 * H * q_rows * L * cfg.d_k, 0},
      {"attention_mix", 2 * H * q_rows * L * cfg.d_v, 0},
      {"output_projection", 2 * q_rows * (H * cfg.d_v) * d, 0},
      {"ffn", 4 * q_rows * d * cfg.d_f, 0},
  };
  return r;
}

CostReport params_count(CostVariant v, const CostConfig& cfg,
                        const ParamCountOptions& opts) {
  cfg.validate();
  CostReport r = base(v, "exact", cfg, false);
  const long long L = cfg.L, d = cfg.d, H = cfg.H;
  long long q = 0, k = 0, vv = 0;
  switch (v) {
    case CostVariant::homo:
      q = H * d * cfg.d_k;
      k = H * d * cfg.d_k;
      vv = H * d * cfg.d_v;
      break;
    case CostVariant::hetero:
      q = L * H * d * cfg.d_k;
      k = L * H * d * cfg.d_k;
      vv = L * H * d * cfg.d_v;
      break;
    case CostVariant::hiformer_dense:
      q = H * (L * d) * (L * cfg.d_k);
      k = H * (L * d) * (L * cfg.d_k);
      vv = H * (L * d) * (L * cfg.d_v);
      break;
    case CostVariant::hiformer_lowrank:
      q = H * cfg.r_k * (L * d + L * cfg.d_k);
      k = H * cfg.r_k * (L * d + L * cfg.d_k);
      vv = H * cfg.r_v * (L * d + L * cfg.d_v);
      break;
  }
  const long long out_copies =
      (v == CostVariant::homo) ? 1 : (opts.tie_output ? 1 : L);
  const long long ffn_copies =
      (v == CostVariant::homo) ? 1 : (opts.tie_ffn ? 1 : L);
  const long long ffn_one = d * cfg.d_f + cfg.d_f + cfg.d_f * d + d;
  r.stages = {
      {"q_projection", 0, q},
      {"k_projection", 0, k},
      {"v_projection", 0, vv},
      {"output_projection", 0, out_copies * (H * cfg.d_v) * d},
      {"ffn", 0, ffn_copies * ffn_one},
  };
  if (opts.residual_ln) r.stages.push_back({"layer_norm", 0, 4 * d});
  if (opts.position_encoding && v == CostVariant::homo) {
    r.stages.push_back({"position_encoding", 0, L * d});
  }
  return r;
}

bool lowrank_breakeven(const CostConfig& cfg) {
  return 2 * cfg.r_k < cfg.L * cfg.d_k && 2 * cfg.r_v < cfg.L * cfg.d_v;
}

long long projection_flops(const CostReport& r) {
  long long s = 0;
  for (const char* name : {"q_projection", "k_projection", "v_projection"}) {
    const CostStage* st = r.stage(name);
    if (st != nullptr) s += st->flops;
  }
  return s;
}

long long projection_params(const CostReport& r) {
  long long s = 0;
  for (const char* name : {"q_projection", "k_projection", "v_projection"}) {
    const CostStage* st = r.stage(name);
    if (st != nullptr) s += st->params;
  }
  return s;
}

std::string cost_reports_csv(const std::vector<CostReport>& reports) {
  std::string out =
      "variant,convention,pruned,L,d,H,d_k,d_v,d_f,r_k,r_v,t,stage,flops,params\n";
  for (const CostReport& r : reports) {
    const std::string prefix = std::string(cost_variant_name(r.variant)) + "," +
                               r.convention + "," + (r.pruned ? "1" : "0") + "," +
                               std::to_string(r.cfg.L) + "," + std::to_string(r.cfg.d) +
                               "," + std::to_string(r.cfg.H) + "," +
                               std::to_string(r.cfg.d_k) + "," + std::to_string(r.cfg.d_v) +
                               "," + std::to_string(r.cfg.d_f) + "," +
                               std::to_string(r.cfg.r_k) + "," + std::to_string(r.cfg.r_v) +
                               "," + std::to_string(r.cfg.t) + ",";
    for (const CostStage& st : r.stages) {
      out += prefix + st.name + "," + std::to_string(st.flops) + "," +
             std::to_string(st.params) + "\n";
    }
    out += prefix + "total," + std::to_string(r.total_flops()) + "," +
           std::to_string(r.total_params()) + "\n";
  }
  return out;
}

std::string cost_reports_json(const std::vector<CostReport>& reports) {
  nlohmann::json arr = nlohmann::json::array();
  for (const CostReport& r : reports) {
    nlohmann::json j;
    j["variant"] = cost_variant_name(r.variant);
    j["convention"] = r.convention;
    j["pruned"] = r.pruned;
    j["config"] = {{"L", r.cfg.L},     {"d", r.cfg.d},     {"H", r.cfg.H},
                   {"d_k", r.cfg.d_k}, {"d_v", r.cfg.d_v}, {"d_f", r.cfg.d_f},
                   {"r_k", r.cfg.r_k}, {"r_v", r.cfg.r_v}, {"t", r.cfg.t}};
    nlohmann::json stages = nlohmann::json::array();
    for (const CostStage& st : r.stages) {
      stages.push_back({{"stage", st.name}, {"flops", st.flops}, {"params", st.params}});
    }
    j["stages"] = stages;
    j["total_flops"] = r.total_flops();
    j["total_params"] = r.total_params();
    j["notes"] = r.notes;
    arr.push_back(j);
  }
  return arr.dump(2) + "\n";
}

}  // namespace firank
