// SPDX-License-Identifier: Apache-2.0
//
// Copyright (C) 2026 The gpip authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "gpip/experiment.hpp"

#include "gpip/baselines.hpp"
#include "gpip/channel.hpp"
#include "gpip/coop.hpp"
#include "gpip/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>

namespace gpip {

namespace {

using json = nlohmann::json;

const char* to_string(Scenario s) { return s == Scenario::link ? "link" : "system"; }
const char* to_string(ChannelModel m) { return m == ChannelModel::iid ? "iid" : "one_ring"; }
const char* to_string(CsitModel m) {
  switch (m) {
    case CsitModel::perfect: return "perfect";
    case CsitModel::additive: return "additive";
    case CsitModel::tdd: return "tdd";
    case CsitModel::fdd: return "fdd";
  }
  return "?";
}
const char* to_string(CovarianceKnowledge k) {
  switch (k) {
    case CovarianceKnowledge::full: return "full";
    case CovarianceKnowledge::scalar: return "scalar";
    case CovarianceKnowledge::none: return "none";
  }
  return "?";
}
const char* to_string(WeightRule w) { return w == WeightRule::uniform ? "uniform" : "pf"; }

template <class E>
E parse_enum(const std::string& field, const std::string& value, std::initializer_list<E> all) {
  for (E e : all)
    if (value == to_string(e)) return e;
  throw ConfigInvalid(field + ": unknown value '" + value + "'");
}

// Reads keys from one JSON object and rejects whatever is left unread.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigInvalid(name("") + "must be an object");
  }

  template <class T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigInvalid(name(key) + ": " + e.what());
    }
  }

  bool has(const char* key) const { return j_.contains(key); }

  Section child(const char* key) {
    seen_.insert(key);
    static const json empty = json::object();
    return Section(j_.contains(key) ? j_.at(key) : empty, name(key) + ".");
  }

  void ignore(const char* key) { seen_.insert(key); }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigInvalid(name(k) + ": unknown key");
    }
  }

  std::string name(const std::string& key) const { return path_ + key; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

}  // namespace

const std::vector<std::string>& known_algorithms() {
  static const std::vector<std::string> names{"gpip",  "gpip_nocov", "gpip_covfree", "gpip_local", "mrt",
                                              "zf",    "zf_wf",      "rzf",          "rrzf",       "sus_zf",
                                              "rank_adaptive_zf",    "zf_dpc"};
  return names;
}

double ExperimentConfig::effective_pilot_length() const {
  return pilot_length > 0 ? pilot_length : static_cast<double>(cluster_size * users_per_cell);
}

GpipOptions ExperimentConfig::gpip_options() const {
  GpipOptions o;
  o.tolerance = tolerance;
  o.max_iterations = max_iterations;
  o.selection_threshold = selection_threshold;
  return o;
}

// ----------------------------------------------------------------------------
// Config parsing
// ----------------------------------------------------------------------------

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigInvalid(std::string("config: ") + e.what());
  }
  ExperimentConfig c;
  Section root(j, "");
  std::string s;

  s = to_string(c.scenario);
  root.read("scenario", s);
  c.scenario = parse_enum("scenario", s, {Scenario::link, Scenario::system});
  root.read("N", c.n_antennas);
  root.read("K", c.users_per_cell);
  root.read("L", c.n_cells);
  root.read("C", c.cluster_size);
  root.read("snr_db", c.snr_db);
  root.read("n_trials", c.n_trials);
  if (!root.has("seed")) throw ConfigInvalid("seed: required");
  root.read("seed", c.seed);
  root.read("output_dir", c.output_dir);
  root.read("algorithms", c.algorithms);
  root.ignore("notes");
  root.ignore("outputs");

  {
    Section sys = root.child("system");
    sys.read("bs_power_dbm", c.bs_power_dbm);
    sys.read("pilot_power_dbm", c.pilot_power_dbm);
    sys.read("bandwidth_hz", c.bandwidth_hz);
    sys.read("noise_psd_dbm_hz", c.noise_psd_dbm_hz);
    sys.read("noise_figure_db", c.noise_figure_db);
    sys.read("inter_site_distance_m", c.inter_site_distance_m);
    sys.read("min_distance_m", c.min_distance_m);
    sys.read("shadowing_db", c.shadowing_db);
    sys.read("n_drops", c.n_drops);
    sys.read("blocks_per_drop", c.blocks_per_drop);
    sys.finish();
  }
  {
    Section ch = root.child("channel");
    s = to_string(c.channel);
    ch.read("model", s);
    c.channel = parse_enum("channel.model", s, {ChannelModel::iid, ChannelModel::one_ring});
    ch.read("angular_spread_rad", c.angular_spread_rad);
    ch.finish();
  }
  {
    Section cs = root.child("csit");
    s = to_string(c.csit);
    cs.read("model", s);
    c.csit = parse_enum("csit.model", s, {CsitModel::perfect, CsitModel::additive, CsitModel::tdd, CsitModel::fdd});
    cs.read("error_variance", c.error_variance);
    cs.read("kappa", c.kappa);
    cs.read("pilot_length", c.pilot_length);
    s = to_string(c.knowledge);
    cs.read("covariance_knowledge", s);
    c.knowledge = parse_enum("csit.covariance_knowledge", s,
                             {CovarianceKnowledge::full, CovarianceKnowledge::scalar, CovarianceKnowledge::none});
    cs.finish();
  }
  {
    Section w = root.child("weights");
    s = to_string(c.weights);
    w.read("rule", s);
    c.weights = parse_enum("weights.rule", s, {WeightRule::uniform, WeightRule::pf});
    w.read("smoothing", c.pf_smoothing);
    w.read("floor", c.pf_floor);
    w.finish();
  }
  {
    Section g = root.child("gpip");
    g.read("tolerance", c.tolerance);
    g.read("selection_threshold", c.selection_threshold);
    g.read("max_iterations", c.max_iterations);
    g.finish();
  }
  {
    Section b = root.child("baselines");
    b.read("sus_alpha", c.sus_alpha);
    b.read("rzf_ridge_scale", c.rzf_ridge_scale);
    b.finish();
  }
  root.finish();
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigInvalid("config: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void validate(const ExperimentConfig& c) {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigInvalid(msg);
  };
  require(c.n_antennas >= 1, "N: must be at least 1");
  require(c.users_per_cell >= 1, "K: must be at least 1");
  require(c.n_cells >= 1, "L: must be at least 1");
  require(c.cluster_size >= 1 && c.cluster_size <= c.n_cells, "C: must satisfy 1 ≤ C ≤ L");
  require(!c.algorithms.empty(), "algorithms: list is empty");
  std::set<std::string> seen;
  for (const auto& a : c.algorithms) {
    const auto& known = known_algorithms();
    require(std::find(known.begin(), known.end(), a) != known.end(), "algorithms: unknown algorithm '" + a + "'");
    require(seen.insert(a).second, "algorithms: duplicate '" + a + "'");
    if (a == "zf" || a == "zf_wf" || a == "zf_dpc") {
      require(c.users_per_cell <= c.n_antennas, "algorithms: '" + a + "' needs K ≤ N");
    }
  }
  require(c.angular_spread_rad > 0, "channel.angular_spread_rad: must be positive");
  require(c.error_variance >= 0, "csit.error_variance: must be nonnegative");
  require(c.kappa >= 0 && c.kappa <= 1, "csit.kappa: must lie in [0, 1]");
  require(c.pilot_length >= 0, "csit.pilot_length: must be nonnegative");
  require(c.pf_smoothing > 0 && c.pf_smoothing <= 1, "weights.smoothing: must lie in (0, 1]");
  require(c.pf_floor > 0, "weights.floor: must be positive");
  require(c.tolerance > 0, "gpip.tolerance: must be positive");
  require(c.selection_threshold >= 0, "gpip.selection_threshold: must be nonnegative");
  require(c.max_iterations >= 1, "gpip.max_iterations: must be at least 1");
  require(c.sus_alpha > 0 && c.sus_alpha <= 1, "baselines.sus_alpha: must lie in (0, 1]");
  require(c.rzf_ridge_scale > 0, "baselines.rzf_ridge_scale: must be positive");
  require(!c.output_dir.empty(), "output_dir: must not be empty");

  if (c.scenario == Scenario::link) {
    require(!c.snr_db.empty(), "snr_db: list is empty");
    require(c.n_trials >= 1, "n_trials: must be at least 1");
    require(c.n_cells == 1 && c.cluster_size == 1, "L, C: link level is single cell");
    require(c.weights == WeightRule::uniform, "weights.rule: pf needs the system scenario");
  } else {
    require(c.n_drops >= 1, "system.n_drops: must be at least 1");
    require(c.blocks_per_drop >= 1, "system.blocks_per_drop: must be at least 1");
    require(c.csit == CsitModel::perfect || c.csit == CsitModel::tdd, "csit.model: system level supports perfect or tdd");
    require(c.inter_site_distance_m > 0, "system.inter_site_distance_m: must be positive");
    require(c.min_distance_m >= kMinimumDistanceKm * 1000.0 && c.min_distance_m < c.inter_site_distance_m / 2,
            "system.min_distance_m: must lie in [40 m, ISD/2)");
    require(c.bandwidth_hz > 0, "system.bandwidth_hz: must be positive");
    require(c.shadowing_db >= 0, "system.shadowing_db: must be nonnegative");
    for (const auto& a : c.algorithms) {
      require(a != "zf_dpc" && a != "gpip_covfree", "algorithms: '" + a + "' is link level only");
    }
  }
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["scenario"] = to_string(c.scenario);
  j["N"] = c.n_antennas;
  j["K"] = c.users_per_cell;
  j["L"] = c.n_cells;
  j["C"] = c.cluster_size;
  j["snr_db"] = c.snr_db;
  j["n_trials"] = c.n_trials;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  j["algorithms"] = c.algorithms;
  j["system"] = {{"bs_power_dbm", c.bs_power_dbm},
                 {"pilot_power_dbm", c.pilot_power_dbm},
                 {"bandwidth_hz", c.bandwidth_hz},
                 {"noise_psd_dbm_hz", c.noise_psd_dbm_hz},
                 {"noise_figure_db", c.noise_figure_db},
                 {"inter_site_distance_m", c.inter_site_distance_m},
                 {"min_distance_m", c.min_distance_m},
                 {"shadowing_db", c.shadowing_db},
                 {"n_drops", c.n_drops},
                 {"blocks_per_drop", c.blocks_per_drop}};
  j["channel"] = {{"model", to_string(c.channel)}, {"angular_spread_rad", c.angular_spread_rad}};
  j["csit"] = {{"model", to_string(c.csit)},
               {"error_variance", c.error_variance},
               {"kappa", c.kappa},
               {"pilot_length", c.pilot_length},
               {"covariance_knowledge", to_string(c.knowledge)}};
  j["weights"] = {{"rule", to_string(c.weights)}, {"smoothing", c.pf_smoothing}, {"floor", c.pf_floor}};
  j["gpip"] = {{"tolerance", c.tolerance},
               {"selection_threshold", c.selection_threshold},
               {"max_iterations", c.max_iterations}};
  j["baselines"] = {{"sus_alpha", c.sus_alpha}, {"rzf_ridge_scale", c.rzf_ridge_scale}};
  return j.dump(2);
}

// ----------------------------------------------------------------------------
// Per-cell precoder design
// ----------------------------------------------------------------------------

namespace {

// What the transmitter believes about Φ, per the knowledge setting.
HermitianMatrix believed_covariance(const HermitianMatrix& phi, CovarianceKnowledge k) {
  const Index n = phi.dim();
  switch (k) {
    case CovarianceKnowledge::full: return phi;
    case CovarianceKnowledge::scalar: {
      HermitianMatrix s = HermitianMatrix::identity(n);
      s *= phi.trace() / static_cast<double>(n);
      return s;
    }
    case CovarianceKnowledge::none: return HermitianMatrix::zero(n);
  }
  return phi;
}

struct CellDesign {
  ComplexMatrix precoder;      // N×K, power in the columns
  std::optional<GpipResult> gpip;
  std::optional<DpcResult> dpc;
};

// Single-cell design from estimates, believed Φ and per-user σ̃²/P.
CellDesign design_cell(const std::string& alg, const ExperimentConfig& cfg, const ComplexMatrix& est,
                       const std::vector<HermitianMatrix>& phi, const RealVector& noise, const Weights& w) {
  const Index n = est.rows();
  const Index k = est.cols();
  const double rho = noise.mean();
  CellDesign d;
  if (alg == "gpip" || alg == "gpip_local" || alg == "gpip_nocov") {
    std::vector<ComplexVector> cols;
    std::vector<HermitianMatrix> covs;
    for (Index u = 0; u < k; ++u) {
      cols.emplace_back(est.col(u));
      covs.push_back(alg == "gpip_nocov" ? HermitianMatrix::zero(n) : phi[static_cast<std::size_t>(u)]);
    }
    const ChannelSet cs = ChannelSet::single_cell(cols, covs);
    const auto pairs = build_effective_pairs(cs, 0, noise);
    d.gpip = gpip_iterate(pairs, w, mrt_initialization(pairs), cfg.gpip_options());
    d.precoder = d.gpip->precoder.as_matrix(0);
  } else if (alg == "gpip_covfree") {
    ScalarCovarianceProblem prob;
    prob.alpha.resize(k);
    for (Index u = 0; u < k; ++u) {
      prob.estimates.emplace_back(est.col(u));
      prob.alpha(u) = phi[static_cast<std::size_t>(u)].trace() / static_cast<double>(n);
    }
    prob.noise_ratio = noise;
    const auto pairs = prob.to_pairs();
    d.gpip = gpip_covfree(prob, w, mrt_initialization(pairs), cfg.gpip_options());
    d.precoder = d.gpip->precoder.as_matrix(0);
  } else if (alg == "mrt") {
    d.precoder = mrt(est).columns;
  } else if (alg == "zf") {
    d.precoder = zf(est, ZfPower::equal, rho).columns;
  } else if (alg == "zf_wf") {
    d.precoder = zf(est, ZfPower::waterfill, rho).columns;
  } else if (alg == "rzf") {
    d.precoder = rzf(est, rho, cfg.rzf_ridge_scale).columns;
  } else if (alg == "rrzf") {
    d.precoder = rrzf(est, phi, rho).columns;
  } else if (alg == "sus_zf") {
    d.precoder = sus_zf(est, rho, cfg.sus_alpha).precoder.columns;
  } else if (alg == "rank_adaptive_zf") {
    d.precoder = rank_adaptive_zf(est, rho).precoder.columns;
  } else if (alg == "zf_dpc") {
    d.dpc = zf_dpc_waterfilling(est, rho);
    d.precoder = ComplexMatrix::Zero(n, k);
  } else {
    throw ConfigInvalid("algorithms: unknown algorithm '" + alg + "'");
  }
  return d;
}

void fill_gpip_stats(AlgorithmSample& s, const GpipResult& r) {
  s.iterations = r.iterations;
  s.kkt_residual = r.kkt_residual;
  s.converged = r.converged;
}

std::vector<SummaryRow> summarize(const std::vector<std::string>& algs, double snr_db,
                                  const std::vector<const AlgorithmSample*>& by_alg_flat, std::size_t per_alg) {
  std::vector<SummaryRow> rows;
  for (std::size_t a = 0; a < algs.size(); ++a) {
    SummaryRow r;
    r.algorithm = algs[a];
    r.snr_db = snr_db;
    std::vector<double> se;
    double iters = 0.0;
    double kkt = 0.0;
    Index runs = 0;
    for (std::size_t t = 0; t < per_alg; ++t) {
      const AlgorithmSample& s = *by_alg_flat[a * per_alg + t];
      se.push_back(s.sum_se);
      if (s.iterations >= 0) {
        iters += s.iterations;
        kkt += s.kkt_residual;
        ++runs;
        if (!s.converged) ++r.not_converged;
      }
    }
    r.sum_se = mean_with_ci(se);
    if (runs > 0) {
      r.mean_iterations = iters / static_cast<double>(runs);
      r.mean_kkt_residual = kkt / static_cast<double>(runs);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace

// ----------------------------------------------------------------------------
// Link level
// ----------------------------------------------------------------------------

LinkTrial run_link_trial(const ExperimentConfig& cfg, Index snr_index, Index trial) {
  const Index n = cfg.n_antennas;
  const Index k = cfg.users_per_cell;
  const double snr = cfg.snr_db.at(static_cast<std::size_t>(snr_index));
  const double noise_ratio = db_to_linear(-snr);

  LinkTrial out;
  out.snr_index = snr_index;
  out.trial = trial;
  out.seed = derive_seed(cfg.seed, {static_cast<std::uint64_t>(trial)});
  Rng rng(out.seed);

  const ArrayGeometry geom = uniform_circular_array(n);
  std::uniform_real_distribution<double> azimuth(-std::numbers::pi, std::numbers::pi);
  ComplexMatrix h_true(n, k);
  ComplexMatrix est(n, k);
  std::vector<HermitianMatrix> phi_true;
  for (Index u = 0; u < k; ++u) {
    HermitianMatrix r = HermitianMatrix::identity(n);
    if (cfg.channel == ChannelModel::one_ring) r = one_ring_correlation(geom, {azimuth(rng), cfg.angular_spread_rad, 1.0});
    CsitDraw d;
    switch (cfg.csit) {
      case CsitModel::perfect:
        d.true_channel = sample_channel(r, rng);
        d.estimate = d.true_channel;
        d.error_cov = HermitianMatrix::zero(n);
        break;
      case CsitModel::additive: {
        HermitianMatrix phi = HermitianMatrix::identity(n);
        phi *= cfg.error_variance;
        d = additive_error_csit(sample_channel(r, rng), phi, rng);
        break;
      }
      case CsitModel::tdd:
        d = mmse_csit_tdd(r, {}, noise_ratio, cfg.effective_pilot_length(), 1.0, rng);
        break;
      case CsitModel::fdd:
        d = fdd_quantized_csit(r, cfg.kappa, rng);
        break;
    }
    h_true.col(u) = d.true_channel;
    est.col(u) = d.estimate;
    phi_true.push_back(believed_covariance(d.error_cov, cfg.knowledge));
  }

  const RealVector noise = RealVector::Constant(k, noise_ratio);
  const Weights w = uniform_weights(k);
  for (const auto& alg : cfg.algorithms) {
    const CellDesign d = design_cell(alg, cfg, est, phi_true, noise, w);
    AlgorithmSample s;
    if (d.dpc) {
      s.sum_se = d.dpc->rate;
      s.user_rates = RealVector::Zero(k);
      s.user_powers = RealVector::Zero(k);
      for (std::size_t i = 0; i < d.dpc->ordering.size(); ++i) {
        const Index u = d.dpc->ordering[i];
        const Index ii = static_cast<Index>(i);
        s.user_powers(u) = d.dpc->powers(ii);
        s.user_rates(u) = std::log2(1.0 + d.dpc->powers(ii) * d.dpc->gains(ii) / noise_ratio);
      }
    } else {
      const RateReport rep = true_sinr(h_true, d.precoder, noise_ratio);
      s.sum_se = rep.sum_rate;
      s.user_rates = rep.rate;
      s.user_powers = d.precoder.colwise().squaredNorm().transpose();
    }
    if (d.gpip) {
      fill_gpip_stats(s, *d.gpip);
      s.gpip_rows.push_back(gpip_csv_row(out.seed, snr, *d.gpip));
    }
    out.samples.push_back(std::move(s));
  }
  return out;
}

LinkLevelResults simulate_link_level(const ExperimentConfig& cfg) {
  validate(cfg);
  if (cfg.scenario != Scenario::link) throw ConfigInvalid("scenario: expected link");
  LinkLevelResults res;
  res.config = cfg;
  const std::size_t n_alg = cfg.algorithms.size();
  for (Index si = 0; si < static_cast<Index>(cfg.snr_db.size()); ++si) {
    const std::size_t first = res.trials.size();
    for (Index t = 0; t < cfg.n_trials; ++t) res.trials.push_back(run_link_trial(cfg, si, t));
    std::vector<const AlgorithmSample*> flat(n_alg * static_cast<std::size_t>(cfg.n_trials));
    for (std::size_t a = 0; a < n_alg; ++a)
      for (Index t = 0; t < cfg.n_trials; ++t)
        flat[a * static_cast<std::size_t>(cfg.n_trials) + static_cast<std::size_t>(t)] =
            &res.trials[first + static_cast<std::size_t>(t)].samples[a];
    auto rows = summarize(cfg.algorithms, cfg.snr_db[static_cast<std::size_t>(si)], flat,
                          static_cast<std::size_t>(cfg.n_trials));
    res.summary.insert(res.summary.end(), rows.begin(), rows.end());
  }
  return res;
}

MeanEstimate ergodic_sum_se(const ExperimentConfig& config, const std::string& algorithm, Index n_trials,
                            std::uint64_t seed) {
  ExperimentConfig c = config;
  c.scenario = Scenario::link;
  c.algorithms = {algorithm};
  c.n_trials = n_trials;
  c.seed = seed;
  c.snr_db = {config.snr_db.at(0)};
  return simulate_link_level(c).summary.front().sum_se;
}

// ----------------------------------------------------------------------------
// System level
// ----------------------------------------------------------------------------

namespace {

struct DropGeometry {
  // r[(j·L + l)·K + k] = R_{j,l,k} scaled by P/σ²
  std::vector<HermitianMatrix> r;
  RealVector noise_local;  // σ̃²/P per user l·K + k, all other cells as interference
  RealVector noise_coop;   // σ̄²/P, interference from outside the cluster only
};

DropGeometry drop_geometry(const ExperimentConfig& cfg, const Topology& topo, const std::vector<Index>& cluster_of,
                           Rng& rng) {
  const Index n = cfg.n_antennas;
  const Index l_cells = cfg.n_cells;
  const Index k = cfg.users_per_cell;
  const double sigma2_dbm = cfg.noise_psd_dbm_hz + 10.0 * std::log10(cfg.bandwidth_hz) + cfg.noise_figure_db;
  const double snr_scale_db = cfg.bs_power_dbm - sigma2_dbm;
  const ArrayGeometry geom = uniform_circular_array(n);
  std::normal_distribution<double> shadow(0.0, cfg.shadowing_db);

  DropGeometry g;
  g.noise_local = RealVector::Ones(l_cells * k);
  g.noise_coop = RealVector::Ones(l_cells * k);
  for (Index j = 0; j < l_cells; ++j)
    for (Index l = 0; l < l_cells; ++l)
      for (Index u = 0; u < k; ++u) {
        const double d_km = topo.distance(j, l, u) / 1000.0;
        const double gain_db = snr_scale_db - okumura_hata_pathloss(d_km) + shadow(rng);
        const double beta = db_to_linear(gain_db);
        HermitianMatrix r = HermitianMatrix::identity(n);
        if (cfg.channel == ChannelModel::one_ring) {
          r = one_ring_correlation(geom, {topo.azimuth(j, l, u), cfg.angular_spread_rad, beta});
        } else {
          r *= beta;
        }
        if (j != l) {
          const double iso = r.trace() / static_cast<double>(n);
          g.noise_local(l * k + u) += iso;
          if (cluster_of[static_cast<std::size_t>(j)] != cluster_of[static_cast<std::size_t>(l)]) {
            g.noise_coop(l * k + u) += iso;
          }
        }
        g.r.push_back(std::move(r));
      }
  return g;
}

}  // namespace

SystemLevelResults simulate_system_level(const ExperimentConfig& cfg) {
  validate(cfg);
  if (cfg.scenario != Scenario::system) throw ConfigInvalid("scenario: expected system");
  const Index n = cfg.n_antennas;
  const Index l_cells = cfg.n_cells;
  const Index k = cfg.users_per_cell;
  const std::size_t n_alg = cfg.algorithms.size();
  const double pilot_ratio = db_to_linear(cfg.pilot_power_dbm - cfg.bs_power_dbm);  // p_ul / P
  const double tau = cfg.effective_pilot_length();
  const PfOptions pf{cfg.pf_smoothing, cfg.pf_floor};

  const auto sites = hexagonal_sites(l_cells, cfg.inter_site_distance_m);
  const auto clusters = form_clusters(sites, cfg.cluster_size, derive_seed(cfg.seed, {0}));
  std::vector<Index> cluster_of(static_cast<std::size_t>(l_cells));
  std::vector<Index> position_of(static_cast<std::size_t>(l_cells));
  for (std::size_t c = 0; c < clusters.size(); ++c)
    for (Index p = 0; p < clusters[c].size(); ++p) {
      cluster_of[static_cast<std::size_t>(clusters[c].cells[static_cast<std::size_t>(p)])] = static_cast<Index>(c);
      position_of[static_cast<std::size_t>(clusters[c].cells[static_cast<std::size_t>(p)])] = p;
    }
  auto link_index = [&](Index j, Index l, Index u) { return static_cast<std::size_t>((j * l_cells + l) * k + u); };

  SystemLevelResults res;
  res.config = cfg;
  res.per_user_mean.assign(n_alg, {});

  for (Index drop = 0; drop < cfg.n_drops; ++drop) {
    Rng drop_rng(derive_seed(cfg.seed, {1, static_cast<std::uint64_t>(drop)}));
    const Topology topo =
        drop_users(sites, k, cfg.inter_site_distance_m, cfg.min_distance_m, drop_rng);
    const DropGeometry geo = drop_geometry(cfg, topo, cluster_of, drop_rng);

    std::vector<RealVector> long_term(n_alg, RealVector::Ones(l_cells * k));
    std::vector<RealVector> drop_rates(n_alg, RealVector::Zero(l_cells * k));

    for (Index b = 0; b < cfg.blocks_per_drop; ++b) {
      Rng rng(derive_seed(cfg.seed, {2, static_cast<std::uint64_t>(drop), static_cast<std::uint64_t>(b)}));
      ChannelSet cs(n, l_cells, k);
      for (Index j = 0; j < l_cells; ++j)
        for (Index l = 0; l < l_cells; ++l)
          for (Index u = 0; u < k; ++u) {
            Link& link = cs.link(j, l, u);
            const HermitianMatrix& r = geo.r[link_index(j, l, u)];
            const bool estimated = cluster_of[static_cast<std::size_t>(j)] == cluster_of[static_cast<std::size_t>(l)];
            if (!estimated) {
              link.true_channel = sample_channel(r, rng);
              continue;
            }
            if (cfg.csit == CsitModel::perfect) {
              link.true_channel = sample_channel(r, rng);
              link.estimate = link.true_channel;
              link.error_cov = HermitianMatrix::zero(n);
              continue;
            }
            // Same pilot as (l, u): users u of cells outside the cluster at the same position.
            std::vector<HermitianMatrix> interferers;
            for (Index m = 0; m < l_cells; ++m) {
              if (cluster_of[static_cast<std::size_t>(m)] == cluster_of[static_cast<std::size_t>(l)]) continue;
              if (position_of[static_cast<std::size_t>(m)] != position_of[static_cast<std::size_t>(l)]) continue;
              interferers.push_back(geo.r[link_index(j, m, u)]);
            }
            CsitDraw d = mmse_csit_tdd(r, interferers, 1.0, tau, pilot_ratio, rng);
            link.true_channel = std::move(d.true_channel);
            link.estimate = std::move(d.estimate);
            link.error_cov = believed_covariance(d.error_cov, cfg.knowledge);
          }

      SystemBlock blk;
      blk.drop = drop;
      blk.block = b;
      for (std::size_t a = 0; a < n_alg; ++a) {
        const std::string& alg = cfg.algorithms[a];
        const Weights w = cfg.weights == WeightRule::pf ? pf_weights(long_term[a], pf) : uniform_weights(l_cells * k);
        std::vector<ComplexMatrix> precoders(static_cast<std::size_t>(l_cells));
        AlgorithmSample s;
        double iters = 0.0;
        double kkt = 0.0;
        int runs = 0;
        auto record = [&](const GpipResult& r, Index lead) {
          iters += r.iterations;
          kkt += r.kkt_residual;
          ++runs;
          s.converged = s.converged && r.converged;
          s.gpip_rows.push_back(alg + ',' + std::to_string(drop) + ',' + std::to_string(b) + ',' +
                                std::to_string(lead) + ',' + std::to_string(r.iterations) + ',' +
                                fmt(r.objective.log2_value) + ',' + fmt(r.kkt_residual) + ',' +
                                std::to_string(r.schedule.active.size()) + ',' + (r.converged ? "1" : "0"));
        };

        if (alg == "gpip") {
          for (const auto& cl : clusters) {
            const Index cs_size = cl.size();
            RealVector noise(cs_size * k);
            Weights wc(cs_size * k);
            for (Index c = 0; c < cs_size; ++c)
              for (Index u = 0; u < k; ++u) {
                const Index cell = cl.cells[static_cast<std::size_t>(c)];
                noise(c * k + u) = geo.noise_coop(cell * k + u);
                wc(c * k + u) = w(cell * k + u);
              }
            const auto pairs = build_coop_pairs(cs, cl, noise);
            const CoopResult r = gpip_coop(pairs, wc, mrt_initialization(pairs), cfg.gpip_options());
            for (Index c = 0; c < cs_size; ++c)
              precoders[static_cast<std::size_t>(cl.cells[static_cast<std::size_t>(c)])] = r.scaled.as_matrix(c);
            record(r.gpip, cl.cells.front());
          }
        } else {
          for (Index l = 0; l < l_cells; ++l) {
            std::vector<HermitianMatrix> phi;
            for (Index u = 0; u < k; ++u) phi.push_back(cs.link(l, l, u).error_cov);
            const RealVector noise = geo.noise_local.segment(l * k, k);
            const Weights wl = w.segment(l * k, k);
            const std::string local = alg == "gpip_local" ? "gpip" : alg;
            const CellDesign d = design_cell(local, cfg, cs.estimate_matrix(l, l), phi, noise, wl);
            precoders[static_cast<std::size_t>(l)] = d.precoder;
            if (d.gpip) record(*d.gpip, l);
          }
        }

        const RateReport rep = true_sinr(cs, precoders, 1.0, w);
        s.sum_se = rep.sum_rate / static_cast<double>(l_cells);
        s.user_rates = rep.rate;
        s.user_powers.resize(l_cells * k);
        for (Index l = 0; l < l_cells; ++l)
          s.user_powers.segment(l * k, k) = precoders[static_cast<std::size_t>(l)].colwise().squaredNorm().transpose();
        if (runs > 0) {
          s.iterations = static_cast<int>(std::lround(iters / runs));
          s.kkt_residual = kkt / runs;
        }
        long_term[a] = pf_update(long_term[a], rep.rate, pf);
        drop_rates[a] += rep.rate;
        blk.samples.push_back(std::move(s));
      }
      res.blocks.push_back(std::move(blk));
    }
    for (std::size_t a = 0; a < n_alg; ++a) {
      const RealVector mean = drop_rates[a] / static_cast<double>(cfg.blocks_per_drop);
      res.per_user_mean[a].insert(res.per_user_mean[a].end(), mean.data(), mean.data() + mean.size());
    }
  }

  std::vector<const AlgorithmSample*> flat(n_alg * res.blocks.size());
  for (std::size_t a = 0; a < n_alg; ++a)
    for (std::size_t t = 0; t < res.blocks.size(); ++t) flat[a * res.blocks.size() + t] = &res.blocks[t].samples[a];
  res.summary = summarize(cfg.algorithms, std::numeric_limits<double>::quiet_NaN(), flat, res.blocks.size());
  return res;
}

// ----------------------------------------------------------------------------
// Output
// ----------------------------------------------------------------------------

namespace {

std::ofstream open_csv(const std::filesystem::path& dir, const std::string& name, const std::string& header) {
  std::ofstream out(dir / name, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
  out << header << '\n';
  return out;
}

std::string snr_field(double snr) { return std::isnan(snr) ? std::string() : fmt(snr); }

void write_summary(const std::filesystem::path& dir, const std::vector<SummaryRow>& rows) {
  auto out = open_csv(dir, "summary.csv",
                      "algorithm,snr_db,mean_sum_se,ci_half_width,n_samples,mean_iterations,mean_kkt_residual,"
                      "not_converged");
  for (const auto& r : rows) {
    out << r.algorithm << ',' << snr_field(r.snr_db) << ',' << fmt(r.sum_se.mean) << ',' << fmt(r.sum_se.half_width)
        << ',' << r.sum_se.n << ',';
    if (r.mean_iterations >= 0) out << fmt(r.mean_iterations) << ',' << fmt(r.mean_kkt_residual);
    else out << ',';
    out << ',' << r.not_converged << '\n';
  }
}

void write_cdf(const std::filesystem::path& dir, const std::string& alg,
               const std::vector<std::pair<double, std::vector<double>>>& by_snr) {
  auto out = open_csv(dir, "cdf_" + alg + ".csv", "snr_db,rate,quantile");
  for (const auto& [snr, samples] : by_snr) {
    const CdfCurve c = rate_cdf(samples);
    for (std::size_t i = 0; i < c.values.size(); ++i)
      out << snr_field(snr) << ',' << fmt(c.values[i]) << ',' << fmt(c.quantiles[i]) << '\n';
  }
}

void write_manifest(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                    const std::vector<std::string>& outputs) {
  json j = json::parse(config_to_json(cfg));
  j["outputs"] = outputs;
  std::vector<std::string> notes{
      "SNR is P/sigma^2 in dB; link-level effective noise has no inter-cell term.",
      "Rates are log2(1 + SINR) on the true channels through the designed precoders."};
  if (cfg.scenario == Scenario::system) {
    notes.push_back("No wrap-around: edge cells see fewer interferers.");
    notes.push_back("Noise power = noise_psd_dbm_hz + 10 log10(bandwidth_hz) + noise_figure_db.");
    notes.push_back("Channels are scaled by sqrt(P/sigma^2); per-cell sum SE is averaged over cells.");
  }
  j["notes"] = notes;
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest.json");
  out << j.dump(2) << '\n';
}

std::vector<std::string> output_names(const ExperimentConfig& cfg) {
  std::vector<std::string> v{"summary.csv", "per_user.csv", "trials.csv", "gpip_runs.csv"};
  for (const auto& a : cfg.algorithms) v.push_back("cdf_" + a + ".csv");
  return v;
}

}  // namespace

void run_link_level(const ExperimentConfig& cfg) {
  const LinkLevelResults res = simulate_link_level(cfg);
  const std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);
  write_summary(dir, res.summary);

  auto trials = open_csv(dir, "trials.csv", "algorithm,snr_db,trial,seed,sum_se");
  auto per_user = open_csv(dir, "per_user.csv", "algorithm,snr_db,trial,user,rate,power");
  auto runs = open_csv(dir, "gpip_runs.csv", "algorithm," + gpip_csv_header(cfg.users_per_cell));
  for (std::size_t a = 0; a < cfg.algorithms.size(); ++a) {
    const std::string& alg = cfg.algorithms[a];
    std::vector<std::pair<double, std::vector<double>>> cdf;
    for (const auto& t : res.trials) {
      const double snr = cfg.snr_db[static_cast<std::size_t>(t.snr_index)];
      const AlgorithmSample& s = t.samples[a];
      if (cdf.empty() || cdf.back().first != snr) cdf.emplace_back(snr, std::vector<double>{});
      trials << alg << ',' << fmt(snr) << ',' << t.trial << ',' << t.seed << ',' << fmt(s.sum_se) << '\n';
      for (Index u = 0; u < s.user_rates.size(); ++u) {
        per_user << alg << ',' << fmt(snr) << ',' << t.trial << ',' << u << ',' << fmt(s.user_rates(u)) << ','
                 << fmt(s.user_powers(u)) << '\n';
        cdf.back().second.push_back(s.user_rates(u));
      }
      for (const auto& row : s.gpip_rows) runs << alg << ',' << row << '\n';
    }
    write_cdf(dir, alg, cdf);
  }
  write_manifest(dir, cfg, output_names(cfg));
}

void run_system_level(const ExperimentConfig& cfg) {
  const SystemLevelResults res = simulate_system_level(cfg);
  const std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);
  write_summary(dir, res.summary);

  const Index lk = cfg.n_cells * cfg.users_per_cell;
  auto trials = open_csv(dir, "trials.csv", "algorithm,drop,block,cell_sum_se");
  auto per_user =
      open_csv(dir, "per_user.csv", "algorithm,drop,block,cell,user,rate,power");
  auto runs = open_csv(dir, "gpip_runs.csv",
                       "algorithm,drop,block,lead_cell,iterations,objective_log2,kkt_residual,active_count,converged");
  for (std::size_t a = 0; a < cfg.algorithms.size(); ++a) {
    const std::string& alg = cfg.algorithms[a];
    for (const auto& blk : res.blocks) {
      const AlgorithmSample& s = blk.samples[a];
      trials << alg << ',' << blk.drop << ',' << blk.block << ',' << fmt(s.sum_se) << '\n';
      for (Index i = 0; i < lk; ++i) {
        per_user << alg << ',' << blk.drop << ',' << blk.block << ',' << i / cfg.users_per_cell << ','
                 << i % cfg.users_per_cell << ',' << fmt(s.user_rates(i)) << ',' << fmt(s.user_powers(i)) << '\n';
      }
      for (const auto& row : s.gpip_rows) runs << row << '\n';
    }
    write_cdf(dir, alg, {{std::numeric_limits<double>::quiet_NaN(), res.per_user_mean[a]}});
  }
  write_manifest(dir, cfg, output_names(cfg));
}

void run_experiment(const ExperimentConfig& cfg) {
  if (cfg.scenario == Scenario::link) run_link_level(cfg);
  else run_system_level(cfg);
}

}  // namespace gpip
