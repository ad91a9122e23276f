#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace firank {

// Sizing knobs of the analytical cost model; integers only.
struct CostConfig {
  long long L = 36;
  long long d = 128;
  long long H = 4;
  long long d_k = 16;
  long long d_v = 64;
  long long d_f = 512;
  long long r_k = 128;
  long long r_v = 1024;
  long long t = 1;

  void validate() const;
};

struct CostStage {
  std::string name;
  long long flops = 0;
  long long params = 0;
};

enum class CostVariant {
  homo,
  hetero,
  hiformer_dense,
  hiformer_lowrank,
};

const char* cost_variant_name(CostVariant v);

// Per-stage FLOPs and parameter counts for one layer.  Two conventions:
//   paper_form — the closed forms as printed, with the head dimension folded
//                (H*d_k = H*d_v = d, d_f = 4d) and coefficients taken as the
//                definition of a FLOP;
//   exact      — 2 * multiply-accumulate counts derived from the actual
//                tensor shapes, heads explicit.
struct CostReport {
  CostVariant variant = CostVariant::homo;
  std::string convention;  // "paper_form" or "exact"
  CostConfig cfg;
  bool pruned = false;
  std::vector<CostStage> stages;
  std::vector<std::string> notes;

  long long total_flops() const;
  long long total_params() const;
  const CostStage* stage(const std::string& name) const;
};

// Dense composite layer, paper form: q/k/v projections L^2 d^2 each,
// attention scores + mix L^2 d each, output L d^2, FFN 8 L d^2.
CostReport flops_dense_hiformer(const CostConfig& cfg);

// Low-rank composite layer, paper form: each projection L r (d + d_out).
CostReport flops_lowrank_hiformer(const CostConfig& cfg);

// Last-layer pruning on the low-rank layer, paper form: query projection and
// output/FFN shrink to t rows, attention to L t d.
CostReport flops_pruned_last_layer(const CostConfig& cfg);

// Per-position projection layers, paper form.  Homogeneous and
// heterogeneous layers run the same ops with different parameterizations.
CostReport flops_homo(const CostConfig& cfg, bool pruned = false);
CostReport flops_hetero(const CostConfig& cfg, bool pruned = false);

// Computes both reports independently and checks stage-wise equality.
struct FlopParity {
  CostReport homo;
  CostReport hetero;
  bool equal = false;
};
FlopParity flops_equal_homo_hetero(const CostConfig& cfg, bool pruned = false);

// Shape-derived counts (2 * MAC, heads explicit) for any variant.
CostReport exact_flops(CostVariant v, const CostConfig& cfg, bool pruned = false);

struct ParamCountOptions {
  bool residual_ln = false;
  bool position_encoding = false;
  bool tie_output = false;
  bool tie_ffn = false;
};

// Parameter counts per stage; mirrors exactly what the layers allocate
// (layer norm and position encodings broken out as their own stages).
CostReport params_count(CostVariant v, const CostConfig& cfg,
                        const ParamCountOptions& opts = {});

// The stated break-even condition for the low-rank approximation:
// r_k < L d_k / 2 and r_v < L d_v / 2.
bool lowrank_breakeven(const CostConfig& cfg);

// Projection-stage FLOPs only (q+k+v), for break-even comparisons.
long long projection_flops(const CostReport& r);
long long projection_params(const CostReport& r);

std::string cost_reports_csv(const std::vector<CostReport>& reports);
std::string cost_reports_json(const std::vector<CostReport>& reports);

}  // namespace firank
