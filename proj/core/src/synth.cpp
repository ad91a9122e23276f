#include "firank/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "firank/error.hpp"
#include "firank/kernels.hpp"
#include "firank/metrics.hpp"
#include "firank/rng.hpp"

namespace firank {

namespace {

// Stream ids of the generator; each value in each stream is a pure function
// of (seed, stream, counter), so any row can be produced independently.
constexpr uint64_t kStreamLatents = 1;
constexpr uint64_t kStreamMixing = 2;
constexpr uint64_t kStreamWeights = 3;
constexpr uint64_t kStreamIds = 4;
constexpr uint64_t kStreamDense = 5;
constexpr uint64_t kStreamLabel = 6;

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void draw_ids(const SynthSpec& spec, int64_t row, int32_t* out) {
  const int64_t nc = spec.categorical_count();
  for (int64_t f = 0; f < nc; ++f) {
    const uint64_t word =
        CounterRng::at(spec.seed, kStreamIds, static_cast<uint64_t>(row * nc + f));
    const uint64_t vocab = static_cast<uint64_t>(spec.vocab_sizes[static_cast<size_t>(f)]);
    out[f] = static_cast<int32_t>((static_cast<unsigned __int128>(word) * vocab) >> 64);
  }
}

// Expected positive rate at bias b over the first n sampled id rows.
double expected_rate(const SynthSpec& spec, double b, int64_t n) {
  std::vector<int32_t> ids(static_cast<size_t>(spec.categorical_count()));
  double acc = 0;
  SynthSpec probe = spec;
  probe.bias = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    draw_ids(spec, i, ids.data());
    acc += logistic(b + true_logit(probe, ids.data()));
  }
  return acc / static_cast<double>(n);
}

}  // namespace

void SynthSpec::validate() const {
  if (pairs.empty()) {
    throw ConfigError("synth: empty pair set (labels would be feature-independent)");
  }
  if (latent_dim < 1) throw ConfigError("synth: latent_dim must be >= 1");
  for (const PlantedPair& p : pairs) {
    if (p.a < 0 || p.b < 0 || p.a >= categorical_count() || p.b >= categorical_count()) {
      throw ConfigError("synth: pair references unknown feature");
    }
    if (p.a == p.b) throw ConfigError("synth: pair must join two distinct features");
    if (p.mixing.rank() != 2 || p.mixing.rows() != latent_dim ||
        p.mixing.cols() != latent_dim) {
      throw ConfigError("synth: mixing matrix must be u x u");
    }
  }
  if (static_cast<int64_t>(latents.size()) != categorical_count()) {
    throw ConfigError("synth: one latent matrix per categorical feature required");
  }
  for (int64_t f = 0; f < categorical_count(); ++f) {
    const Tensor<double>& u = latents[static_cast<size_t>(f)];
    if (u.rows() != vocab_sizes[static_cast<size_t>(f)] || u.cols() != latent_dim) {
      throw ConfigError("synth: latent matrix shape mismatch");
    }
  }
  if (n_train < 1 || n_valid < 0 || n_test < 0) {
    throw ConfigError("synth: split sizes invalid");
  }
}

SynthSpec make_synth_spec(uint64_t seed, int64_t n_pairs, int64_t n_train,
                          int64_t n_valid, int64_t n_test) {
  if (n_pairs < 1) {
    throw ConfigError("synth: need at least one planted pair");
  }
  SynthSpec spec;
  spec.seed = seed;
  spec.vocab_sizes.assign(8, 100);
  spec.dense_count = 4;
  spec.latent_dim = 8;
  spec.n_train = n_train;
  spec.n_valid = n_valid;
  spec.n_test = n_test;

  // Pairs reuse features (0..3 each appear in several) with distinct dense
  // mixing matrices, which is exactly what a single shared bilinear form
  // cannot fit.
  const std::vector<std::pair<int64_t, int64_t>> canonical = {
      {0, 1}, {0, 2}, {1, 2}, {0, 3}, {1, 3}, {2, 3},
      {4, 5}, {4, 6}, {5, 7}, {6, 7}, {3, 4}, {2, 5}};
  if (n_pairs > static_cast<int64_t>(canonical.size())) {
    throw ConfigError("synth: at most " + std::to_string(canonical.size()) +
                      " planted pairs supported");
  }

  CounterRng latent_rng(seed, kStreamLatents);
  for (int64_t v : spec.vocab_sizes) {
    Tensor<double> u = Tensor<double>::zeros({v, spec.latent_dim});
    fill_uniform(u, latent_rng, -1.0, 1.0);
    spec.latents.push_back(std::move(u));
  }

  CounterRng mix_rng(seed, kStreamMixing);
  CounterRng w_rng(seed, kStreamWeights);
  const double mix_scale = 3.0 / static_cast<double>(spec.latent_dim);
  for (int64_t p = 0; p < n_pairs; ++p) {
    PlantedPair pp;
    pp.a = canonical[static_cast<size_t>(p)].first;
    pp.b = canonical[static_cast<size_t>(p)].second;
    pp.mixing = Tensor<double>::zeros({spec.latent_dim, spec.latent_dim});
    fill_uniform(pp.mixing, mix_rng, -mix_scale, mix_scale);
    const double mag = w_rng.uniform(1.0, 2.0);
    pp.weight = (p % 2 == 0) ? mag : -mag;
    spec.pairs.push_back(std::move(pp));
  }

  // Dense distractors from assorted monotone transforms.
  const double los[] = {-2.0, 0.0, 10.0, -1.0};
  const double his[] = {3.0, 1.0, 5000.0, 1.0};
  const double pows[] = {1.0, 2.0, 3.0, 0.5};
  for (int64_t k = 0; k < spec.dense_count; ++k) {
    spec.dense_lo.push_back(los[k % 4]);
    spec.dense_hi.push_back(his[k % 4]);
    spec.dense_power.push_back(pows[k % 4]);
  }

  // Bisect the bias to the target expected rate over a fixed probe sample.
  const int64_t probe_n = 20000;
  double lo = -20.0, hi = 20.0;
  for (int iter = 0; iter < 60; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (expected_rate(spec, mid, probe_n) < spec.target_rate) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  spec.bias = 0.5 * (lo + hi);
  spec.validate();
  return spec;
}

double true_logit(const SynthSpec& spec, const int32_t* ids) {
  double logit = spec.bias;
  std::vector<double> tmp(static_cast<size_t>(spec.latent_dim));
  for (const PlantedPair& p : spec.pairs) {
    const Tensor<double>& ua = spec.latents[static_cast<size_t>(p.a)];
    const Tensor<double>& ub = spec.latents[static_cast<size_t>(p.b)];
    const int32_t ia = ids[p.a], ib = ids[p.b];
    if (ia < 0 || ia >= ua.rows() || ib < 0 || ib >= ub.rows()) {
      throw DataError("synth: id outside latent table");
    }
    const double* va = ua.row(ia);
    const double* vb = ub.row(ib);
    // va^T * mixing * vb
    double acc = 0;
    for (int64_t r = 0; r < spec.latent_dim; ++r) {
      double rowacc = 0;
      const double* mrow = p.mixing.row(r);
      for (int64_t c = 0; c < spec.latent_dim; ++c) rowacc += mrow[c] * vb[c];
      acc += va[r] * rowacc;
    }
    logit += p.weight * acc;
  }
  return logit;
}

Dataset generate_rows(const SynthSpec& spec, int64_t first, int64_t count) {
  spec.validate();
  if (count < 1) throw ConfigError("synth: row count must be >= 1");
  Dataset ds;
  ds.num_categorical = spec.categorical_count();
  ds.num_dense = spec.dense_count;
  ds.reserve(count);

  std::vector<int32_t> ids(static_cast<size_t>(ds.num_categorical));
  for (int64_t i = 0; i < count; ++i) {
    const int64_t row = first + i;
    draw_ids(spec, row, ids.data());
    for (int32_t id : ids) ds.ids.push_back(id);

    CounterRng dense_rng(spec.seed, kStreamDense);
    dense_rng.seek(static_cast<uint64_t>(row * spec.dense_count));
    for (int64_t k = 0; k < spec.dense_count; ++k) {
      const double u = dense_rng.uniform();
      const double v = spec.dense_lo[static_cast<size_t>(k)] +
                       (spec.dense_hi[static_cast<size_t>(k)] -
                        spec.dense_lo[static_cast<size_t>(k)]) *
                           std::pow(u, spec.dense_power[static_cast<size_t>(k)]);
      // Quantized to the CSV's 6 decimals so file and memory agree exactly.
      ds.dense.push_back(std::round(v * 1e6) / 1e6);
    }

    const double p = logistic(true_logit(spec, ids.data()));
    CounterRng label_rng(spec.seed, kStreamLabel);
    label_rng.seek(static_cast<uint64_t>(row));
    ds.labels.push_back(label_rng.uniform() < p ? 1 : 0);
  }
  return ds;
}

Dataset generate_split(const SynthSpec& spec, const std::string& split) {
  if (split == "train") return generate_rows(spec, 0, spec.n_train);
  if (split == "valid") return generate_rows(spec, spec.n_train, spec.n_valid);
  if (split == "test") return generate_rows(spec, spec.n_train + spec.n_valid, spec.n_test);
  throw ConfigError("synth: unknown split '" + split + "'");
}

FeatureSchema schema_for(const SynthSpec& spec, int64_t dense_groups, int64_t tasks,
                         int64_t model_dim) {
  FeatureSchema s;
  s.categorical_vocab_sizes = spec.vocab_sizes;
  s.dense_count = spec.dense_count;
  s.dense_group_count = spec.dense_count > 0 ? dense_groups : 0;
  s.task_count = tasks;
  s.model_dim = model_dim;
  s.validate();
  return s;
}

OracleMetrics oracle_metrics(const SynthSpec& spec, const Dataset& ds) {
  if (ds.num_categorical != spec.categorical_count()) {
    throw DataError("oracle: dataset does not match spec");
  }
  std::vector<double> probs(static_cast<size_t>(ds.size()));
  double rate = 0;
  for (int64_t i = 0; i < ds.size(); ++i) {
    probs[static_cast<size_t>(i)] = logistic(true_logit(spec, ds.ids_row(i)));
    rate += ds.labels[static_cast<size_t>(i)];
  }
  OracleMetrics m;
  m.auc = auc(probs, ds.labels);
  m.logloss = logloss(probs, ds.labels);
  m.base_rate = rate / static_cast<double>(ds.size());
  return m;
}

std::string synth_spec_to_json(const SynthSpec& spec) {
  nlohmann::json j;
  j["vocab_sizes"] = spec.vocab_sizes;
  j["dense_count"] = spec.dense_count;
  j["latent_dim"] = spec.latent_dim;
  j["bias"] = spec.bias;
  j["target_rate"] = spec.target_rate;
  j["seed"] = spec.seed;
  j["n_train"] = spec.n_train;
  j["n_valid"] = spec.n_valid;
  j["n_test"] = spec.n_test;
  j["dense_lo"] = spec.dense_lo;
  j["dense_hi"] = spec.dense_hi;
  j["dense_power"] = spec.dense_power;
  nlohmann::json pairs = nlohmann::json::array();
  for (const PlantedPair& p : spec.pairs) {
    pairs.push_back({{"a", p.a}, {"b", p.b}, {"weight", p.weight}, {"mixing", p.mixing.data}});
  }
  j["pairs"] = pairs;
  nlohmann::json lat = nlohmann::json::array();
  for (const Tensor<double>& u : spec.latents) lat.push_back(u.data);
  j["latents"] = lat;
  return j.dump() + "\n";
}

SynthSpec synth_spec_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("synth spec: invalid JSON: ") + e.what());
  }
  SynthSpec spec;
  try {
    spec.vocab_sizes = j.at("vocab_sizes").get<std::vector<int64_t>>();
    spec.dense_count = j.at("dense_count").get<int64_t>();
    spec.latent_dim = j.at("latent_dim").get<int64_t>();
    spec.bias = j.at("bias").get<double>();
    spec.target_rate = j.at("target_rate").get<double>();
    spec.seed = j.at("seed").get<uint64_t>();
    spec.n_train = j.at("n_train").get<int64_t>();
    spec.n_valid = j.at("n_valid").get<int64_t>();
    spec.n_test = j.at("n_test").get<int64_t>();
    spec.dense_lo = j.at("dense_lo").get<std::vector<double>>();
    spec.dense_hi = j.at("dense_hi").get<std::vector<double>>();
    spec.dense_power = j.at("dense_power").get<std::vector<double>>();
    for (const auto& pj : j.at("pairs")) {
      PlantedPair p;
      p.a = pj.at("a").get<int64_t>();
      p.b = pj.at("b").get<int64_t>();
      p.weight = pj.at("weight").get<double>();
      p.mixing = Tensor<double>({spec.latent_dim, spec.latent_dim},
                                pj.at("mixing").get<std::vector<double>>());
      spec.pairs.push_back(std::move(p));
    }
    const auto& lat = j.at("latents");
    for (size_t f = 0; f < lat.size(); ++f) {
      spec.latents.push_back(Tensor<double>(
          {spec.vocab_sizes.at(f), spec.latent_dim}, lat[f].get<std::vector<double>>()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("synth spec: missing or mistyped field: ") + e.what());
  }
  spec.validate();
  return spec;
}

SynthSpec load_synth_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("synth spec: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return synth_spec_from_json(ss.str());
}

void save_synth_spec(const std::string& path, const SynthSpec& spec) {
  std::ofstream out(path);
  if (!out) throw DataError("synth spec: cannot write " + path);
  out << synth_spec_to_json(spec);
}

}  // namespace firank
