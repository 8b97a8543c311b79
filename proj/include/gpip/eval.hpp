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

#include "gpip/channel.hpp"
#include "gpip/numerics.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace gpip {

struct RateReport {
  RealVector sinr;
  RealVector rate;  // log₂(1 + sinr)
  double sum_rate = 0.0;
  double weighted_sum_rate = 0.0;
};

RateReport make_report(RealVector sinr, const RealVector& weights);

/// Received SINR on the true channels. precoders[ℓ] is the N×K matrix of
/// BS ℓ with power folded into the columns; noise_ratio is σ²/P. User
/// (ℓ, k) sits at index ℓ·K + k. Links without a true channel are skipped.
RateReport true_sinr(const ChannelSet& channels, std::span<const ComplexMatrix> precoders, double noise_ratio,
                     const RealVector& weights = {});

/// Single-cell shorthand; column k of h is the true channel of user k.
RateReport true_sinr(const ComplexMatrix& h, const ComplexMatrix& f, double noise_ratio,
                     const RealVector& weights = {});

/// Rate lower bound seen by the transmitter:
/// |ĥ_kᴴf_k|² / (Σ_{i≠k}|ĥ_kᴴf_i|² + Σ_i f_iᴴΦ_kf_i + σ̃²_k/P).
/// An empty error_covs span means Φ = 0.
RateReport gmi_rate_lb(const ComplexMatrix& estimates, std::span<const HermitianMatrix> error_covs,
                       const ComplexMatrix& f, const RealVector& noise_ratios, const RealVector& weights = {});

struct MeanEstimate {
  double mean = 0.0;
  double half_width = 0.0;  // 95 % normal approximation
  Index n = 0;
};

/// Sample mean with 1.96·s/√n, accumulated in index order.
MeanEstimate mean_with_ci(std::span<const double> samples);

/// Runs trial(t, derive_seed(seed, {t})) for t = 0 … n_trials−1 and averages.
MeanEstimate ergodic_mean(const std::function<double(Index, std::uint64_t)>& trial, Index n_trials,
                          std::uint64_t seed);

struct PfOptions {
  double smoothing = 0.1;  // δ
  double rate_floor = 1e-3;
};

/// w_k = 1 / max(T_k, floor), rescaled to mean 1.
RealVector pf_weights(const RealVector& long_term_rates, const PfOptions& opt = {});

/// T ← (1 − δ)·T + δ·r.
RealVector pf_update(const RealVector& long_term_rates, const RealVector& served, const PfOptions& opt = {});

struct CdfCurve {
  std::vector<double> values;     // ascending
  std::vector<double> quantiles;  // i / n
};

CdfCurve rate_cdf(std::vector<double> samples);

}  // namespace gpip
