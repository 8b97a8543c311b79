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

#include "gpip/eval.hpp"

#include "gpip/random.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gpip {

RateReport make_report(RealVector sinr, const RealVector& weights) {
  RateReport r;
  r.rate = (1.0 + sinr.array()).log2();
  r.sinr = std::move(sinr);
  r.sum_rate = r.rate.sum();
  if (weights.size() == 0) {
    r.weighted_sum_rate = r.sum_rate;
  } else {
    if (weights.size() != r.rate.size()) throw DimensionMismatch("RateReport: one weight per user");
    r.weighted_sum_rate = weights.dot(r.rate);
  }
  return r;
}

RateReport true_sinr(const ChannelSet& channels, std::span<const ComplexMatrix> precoders, double noise_ratio,
                     const RealVector& weights) {
  const Index l = channels.n_cells();
  const Index k = channels.users_per_cell();
  if (static_cast<Index>(precoders.size()) != l) throw DimensionMismatch("true_sinr: one precoder per cell");
  for (const auto& f : precoders)
    if (f.rows() != channels.n_antennas() || f.cols() != k) throw DimensionMismatch("true_sinr: precoder shape");

  RealVector sinr(l * k);
  for (Index cell = 0; cell < l; ++cell) {
    for (Index u = 0; u < k; ++u) {
      double desired = 0.0;
      double interference = noise_ratio;
      for (Index bs = 0; bs < l; ++bs) {
        const ComplexVector& h = channels.link(bs, cell, u).true_channel;
        if (h.size() == 0) continue;
        const RealVector g = (precoders[static_cast<std::size_t>(bs)].adjoint() * h).cwiseAbs2();
        if (bs == cell) {
          desired = g(u);
          interference += g.sum() - g(u);
        } else {
          interference += g.sum();
        }
      }
      sinr(cell * k + u) = desired / interference;
    }
  }
  return make_report(std::move(sinr), weights);
}

RateReport true_sinr(const ComplexMatrix& h, const ComplexMatrix& f, double noise_ratio, const RealVector& weights) {
  if (h.rows() != f.rows() || h.cols() != f.cols()) throw DimensionMismatch("true_sinr: shapes");
  const RealMatrix g = (h.adjoint() * f).cwiseAbs2();  // g(k, i) = |h_kᴴ f_i|²
  RealVector sinr(h.cols());
  for (Index u = 0; u < h.cols(); ++u) sinr(u) = g(u, u) / (g.row(u).sum() - g(u, u) + noise_ratio);
  return make_report(std::move(sinr), weights);
}

RateReport gmi_rate_lb(const ComplexMatrix& estimates, std::span<const HermitianMatrix> error_covs,
                       const ComplexMatrix& f, const RealVector& noise_ratios, const RealVector& weights) {
  const Index k = estimates.cols();
  if (f.rows() != estimates.rows() || f.cols() != k || noise_ratios.size() != k) {
    throw DimensionMismatch("gmi_rate_lb: shapes");
  }
  if (!error_covs.empty() && static_cast<Index>(error_covs.size()) != k) {
    throw DimensionMismatch("gmi_rate_lb: one error covariance per user");
  }
  const RealMatrix g = (estimates.adjoint() * f).cwiseAbs2();
  RealVector sinr(k);
  for (Index u = 0; u < k; ++u) {
    double denom = g.row(u).sum() - g(u, u) + noise_ratios(u);
    if (!error_covs.empty()) {
      const auto& phi = error_covs[static_cast<std::size_t>(u)].matrix();
      denom += (f.conjugate().cwiseProduct(phi * f)).sum().real();
    }
    sinr(u) = g(u, u) / denom;
  }
  return make_report(std::move(sinr), weights);
}

MeanEstimate mean_with_ci(std::span<const double> samples) {
  MeanEstimate m;
  m.n = static_cast<Index>(samples.size());
  if (m.n == 0) throw std::invalid_argument("mean_with_ci: no samples");
  double s = 0.0;
  for (double x : samples) s += x;
  m.mean = s / static_cast<double>(m.n);
  if (m.n > 1) {
    double v = 0.0;
    for (double x : samples) v += (x - m.mean) * (x - m.mean);
    v /= static_cast<double>(m.n - 1);
    m.half_width = 1.96 * std::sqrt(v / static_cast<double>(m.n));
  }
  return m;
}

MeanEstimate ergodic_mean(const std::function<double(Index, std::uint64_t)>& trial, Index n_trials,
                          std::uint64_t seed) {
  if (n_trials < 1) throw std::invalid_argument("ergodic_mean: n_trials must be at least 1");
  std::vector<double> v(static_cast<std::size_t>(n_trials));
  for (Index t = 0; t < n_trials; ++t) v[static_cast<std::size_t>(t)] = trial(t, derive_seed(seed, {static_cast<std::uint64_t>(t)}));
  return mean_with_ci(v);
}

RealVector pf_weights(const RealVector& long_term_rates, const PfOptions& opt) {
  if (long_term_rates.size() == 0) throw std::invalid_argument("pf_weights: empty");
  RealVector w = long_term_rates.cwiseMax(opt.rate_floor).cwiseInverse();
  return w / w.mean();
}

RealVector pf_update(const RealVector& long_term_rates, const RealVector& served, const PfOptions& opt) {
  if (served.size() != long_term_rates.size()) throw DimensionMismatch("pf_update: sizes");
  return ((1.0 - opt.smoothing) * long_term_rates + opt.smoothing * served).cwiseMax(opt.rate_floor);
}

CdfCurve rate_cdf(std::vector<double> samples) {
  if (samples.empty()) throw std::invalid_argument("rate_cdf: no samples");
  std::sort(samples.begin(), samples.end());
  CdfCurve c;
  const double n = static_cast<double>(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) c.quantiles.push_back(static_cast<double>(i + 1) / n);
  c.values = std::move(samples);
  return c;
}

}  // namespace gpip
