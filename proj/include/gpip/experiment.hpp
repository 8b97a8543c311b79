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

#pragma once

#include "gpip/eval.hpp"
#include "gpip/gpip.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace gpip {

class ConfigInvalid : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Scenario { link, system };
enum class ChannelModel { iid, one_ring };
enum class CsitModel { perfect, additive, tdd, fdd };
enum class CovarianceKnowledge { full, scalar, none };
enum class WeightRule { uniform, pf };

/// Algorithms understood by the runners.
const std::vector<std::string>& known_algorithms();

struct ExperimentConfig {
  Scenario scenario = Scenario::link;
  Index n_antennas = 8;      // N
  Index users_per_cell = 8;  // K
  Index n_cells = 1;         // L
  Index cluster_size = 1;    // C

  // Link level: per-SNR campaign, P/σ² in dB.
  std::vector<double> snr_db{0.0, 10.0};
  Index n_trials = 500;

  // System level.
  double bs_power_dbm = 40.0;
  double pilot_power_dbm = 20.0;
  double bandwidth_hz = 20e6;
  double noise_psd_dbm_hz = -174.0;
  double noise_figure_db = 9.0;
  double inter_site_distance_m = 1000.0;
  double min_distance_m = 40.0;
  double shadowing_db = 8.0;
  Index n_drops = 100;
  Index blocks_per_drop = 10;

  ChannelModel channel = ChannelModel::iid;
  double angular_spread_rad = 0.5235987755982988;  // π/6

  CsitModel csit = CsitModel::perfect;
  double error_variance = 0.1;  // additive model, Φ = error_variance·I
  double kappa = 0.5;           // fdd model
  double pilot_length = 0.0;    // τ; 0 selects C·K
  CovarianceKnowledge knowledge = CovarianceKnowledge::full;

  std::vector<std::string> algorithms{"gpip", "mrt"};
  WeightRule weights = WeightRule::uniform;
  double pf_smoothing = 0.1;
  double pf_floor = 1e-3;

  double tolerance = 0.01;
  double selection_threshold = 1e-2;
  int max_iterations = 100;
  double sus_alpha = 0.3;
  double rzf_ridge_scale = 1.0;

  std::uint64_t seed = 0;
  std::string output_dir = "out";

  double effective_pilot_length() const;
  GpipOptions gpip_options() const;
};

/// Parses and validates a JSON config. The seed is mandatory; unknown keys
/// are rejected except the manifest's "notes" and "outputs".
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
void validate(const ExperimentConfig& config);  // throws ConfigInvalid
std::string config_to_json(const ExperimentConfig& config);

/// Outcome of one algorithm on one channel realization.
struct AlgorithmSample {
  double sum_se = 0.0;
  RealVector user_rates;
  RealVector user_powers;
  int iterations = -1;  // GPIP variants only
  double kkt_residual = 0.0;
  bool converged = true;
  std::vector<std::string> gpip_rows;  // gpip_runs.csv rows, GPIP variants only
};

struct LinkTrial {
  Index snr_index = 0;
  Index trial = 0;
  std::uint64_t seed = 0;
  std::vector<AlgorithmSample> samples;  // indexed like config.algorithms
};

struct SummaryRow {
  std::string algorithm;
  double snr_db = 0.0;  // NaN at system level
  MeanEstimate sum_se;
  double mean_iterations = -1.0;
  double mean_kkt_residual = 0.0;
  Index not_converged = 0;
};

struct LinkLevelResults {
  ExperimentConfig config;
  std::vector<LinkTrial> trials;  // ordered by (snr_index, trial)
  std::vector<SummaryRow> summary;
};

/// One trial of the link-level campaign; channels depend only on
/// (seed, trial), so every SNR and algorithm sees the same draws.
LinkTrial run_link_trial(const ExperimentConfig& config, Index snr_index, Index trial);
LinkLevelResults simulate_link_level(const ExperimentConfig& config);

/// Monte Carlo mean sum SE of one algorithm at config.snr_db.front().
MeanEstimate ergodic_sum_se(const ExperimentConfig& config, const std::string& algorithm, Index n_trials,
                            std::uint64_t seed);

struct SystemBlock {
  Index drop = 0;
  Index block = 0;
  std::vector<AlgorithmSample> samples;  // user rates over all L·K users
};

struct SystemLevelResults {
  ExperimentConfig config;
  std::vector<SystemBlock> blocks;
  std::vector<SummaryRow> summary;  // mean per-cell sum SE
  // [algorithm][drop·L·K + user]: rate averaged over the drop's blocks
  std::vector<std::vector<double>> per_user_mean;
};

SystemLevelResults simulate_system_level(const ExperimentConfig& config);

/// Simulate and write summary.csv, per_user.csv, trials.csv,
/// cdf_<alg>.csv, gpip_runs.csv and manifest.json to config.output_dir.
void run_link_level(const ExperimentConfig& config);
void run_system_level(const ExperimentConfig& config);
void run_experiment(const ExperimentConfig& config);

}  // namespace gpip
