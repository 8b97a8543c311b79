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

#include "gpip/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gpip {

namespace {

constexpr double kRankTolerance = 1e-10;

// Unnormalized ZF columns Ĥ(ĤᴴĤ)⁻¹.
ComplexMatrix zf_columns(const ComplexMatrix& h) {
  if (h.cols() == 0) throw DimensionMismatch("zf: no users");
  if (h.cols() > h.rows()) throw RankDeficient("zf: more users than antennas");
  const HermitianMatrix gram(h.adjoint() * h);
  try {
    return solve_hermitian(gram, ComplexMatrix(h.adjoint())).adjoint();
  } catch (const NotPositiveDefinite&) {
    throw RankDeficient("zf: channel matrix is rank deficient");
  }
}

// Per-user gain 1/‖col‖² and unit columns.
void normalize_zf(const ComplexMatrix& raw, ComplexMatrix& unit, RealVector& gains) {
  unit = raw;
  gains.resize(raw.cols());
  for (Index k = 0; k < raw.cols(); ++k) {
    const double n2 = raw.col(k).squaredNorm();
    gains(k) = 1.0 / n2;
    unit.col(k) /= std::sqrt(n2);
  }
}

ComplexMatrix subset(const ComplexMatrix& h, const std::vector<Index>& idx) {
  ComplexMatrix s(h.rows(), static_cast<Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) s.col(static_cast<Index>(i)) = h.col(idx[i]);
  return s;
}

// Equal-power ZF rate of a user subset; −∞ when rank deficient.
double zf_equal_rate(const ComplexMatrix& h, const std::vector<Index>& idx, double noise_ratio) {
  ComplexMatrix raw;
  try {
    raw = zf_columns(subset(h, idx));
  } catch (const RankDeficient&) {
    return -std::numeric_limits<double>::infinity();
  }
  ComplexMatrix unit;
  RealVector g;
  normalize_zf(raw, unit, g);
  const RealVector p = RealVector::Constant(g.size(), 1.0 / static_cast<double>(g.size()));
  return sum_log_rate(p, g, noise_ratio);
}

Selection zf_on_subset(const ComplexMatrix& h, std::vector<Index> idx, double noise_ratio, ZfPower power) {
  Selection s;
  s.selected = std::move(idx);
  s.precoder.columns = ComplexMatrix::Zero(h.rows(), h.cols());
  const ComplexMatrix hs = subset(h, s.selected);
  ComplexMatrix unit;
  RealVector g;
  normalize_zf(zf_columns(hs), unit, g);
  const RealVector p = power == ZfPower::waterfill
                           ? waterfill(g, 1.0, noise_ratio)
                           : RealVector::Constant(g.size(), 1.0 / static_cast<double>(g.size()));
  for (std::size_t i = 0; i < s.selected.size(); ++i) {
    s.precoder.columns.col(s.selected[i]) = std::sqrt(p(static_cast<Index>(i))) * unit.col(static_cast<Index>(i));
  }
  s.rate = sum_log_rate(p, g, noise_ratio);
  return s;
}

}  // namespace

double sum_log_rate(const RealVector& powers, const RealVector& gains, double noise) {
  return (1.0 + powers.array() * gains.array() / noise).log2().sum();
}

PrecoderMatrix mrt(const ComplexMatrix& h) {
  const double n = h.norm();
  if (!(n > 0)) throw std::invalid_argument("mrt: zero channel");
  return {h / n};
}

PrecoderMatrix zf(const ComplexMatrix& h, ZfPower power, double noise_ratio) {
  ComplexMatrix unit;
  RealVector g;
  normalize_zf(zf_columns(h), unit, g);
  const RealVector p = power == ZfPower::waterfill
                           ? waterfill(g, 1.0, noise_ratio)
                           : RealVector::Constant(g.size(), 1.0 / static_cast<double>(g.size()));
  return {unit * p.cwiseSqrt().cast<Complex>().asDiagonal()};
}

PrecoderMatrix rrzf(const ComplexMatrix& h, std::span<const HermitianMatrix> error_covs, double noise_ratio) {
  if (!(noise_ratio > 0)) throw std::invalid_argument("rrzf: noise ratio must be positive");
  HermitianMatrix m(h * h.adjoint());
  for (const auto& phi : error_covs) {
    if (phi.dim() != h.rows()) throw DimensionMismatch("rrzf: error covariance size");
    m += phi;
  }
  m.add_ridge(noise_ratio);
  ComplexMatrix f = solve_hermitian(m, h);
  f /= f.norm();
  return {f};
}

PrecoderMatrix rzf(const ComplexMatrix& h, double noise_ratio, double ridge_scale) {
  return rrzf(h, {}, ridge_scale * noise_ratio);
}

RealVector waterfill(const RealVector& gains, double total_power, double noise) {
  if (!(total_power > 0)) throw std::invalid_argument("waterfill: total power must be positive");
  if ((gains.array() < 0).any()) throw std::invalid_argument("waterfill: negative gain");
  if (!(gains.maxCoeff() > 0)) throw std::invalid_argument("waterfill: no positive gain");
  const Index k = gains.size();
  RealVector floor_level(k);
  for (Index i = 0; i < k; ++i)
    floor_level(i) = gains(i) > 0 ? noise / gains(i) : std::numeric_limits<double>::infinity();
  auto filled = [&](double mu) { return (mu - floor_level.array()).max(0.0).sum(); };

  double lo = floor_level.minCoeff();
  double hi = lo + total_power;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (filled(mid) < total_power ? lo : hi) = mid;
  }
  RealVector p = (0.5 * (lo + hi) - floor_level.array()).max(0.0);
  const double s = p.sum();
  if (s > 0) p *= total_power / s;
  return p;
}

Selection sus_zf(const ComplexMatrix& h, double noise_ratio, double alpha_sus) {
  const Index k = h.cols();
  if (k < 1) throw DimensionMismatch("sus_zf: no users");
  std::vector<Index> candidates(static_cast<std::size_t>(k));
  for (Index i = 0; i < k; ++i) candidates[static_cast<std::size_t>(i)] = i;
  std::vector<Index> selected;
  std::vector<ComplexVector> basis;  // orthogonal components g of the selected users
  const double scale = h.colwise().norm().maxCoeff();

  while (!candidates.empty() && static_cast<Index>(selected.size()) < h.rows()) {
    Index best = -1;
    double best_norm = 0.0;
    ComplexVector best_g;
    for (Index c : candidates) {
      ComplexVector g = h.col(c);
      for (const auto& b : basis) g -= b * (b.dot(h.col(c)) / b.squaredNorm());
      const double gn = g.norm();
      if (gn > best_norm) {
        best = c;
        best_norm = gn;
        best_g = std::move(g);
      }
    }
    if (best < 0 || best_norm <= kRankTolerance * scale) break;
    selected.push_back(best);
    basis.push_back(best_g);
    std::vector<Index> next;
    for (Index c : candidates) {
      if (c == best) continue;
      const double corr = std::abs(h.col(c).dot(best_g)) / (h.col(c).norm() * best_norm);
      if (corr < alpha_sus) next.push_back(c);
    }
    candidates = std::move(next);
  }
  return zf_on_subset(h, std::move(selected), noise_ratio, ZfPower::waterfill);
}

Selection rank_adaptive_zf(const ComplexMatrix& h, double noise_ratio) {
  const Index k = h.cols();
  if (k < 1) throw DimensionMismatch("rank_adaptive_zf: no users");
  Index first = 0;
  h.colwise().squaredNorm().maxCoeff(&first);
  std::vector<Index> selected{first};
  double rate = zf_equal_rate(h, selected, noise_ratio);

  while (static_cast<Index>(selected.size()) < std::min(k, h.rows())) {
    Index best = -1;
    double best_rate = rate;
    for (Index c = 0; c < k; ++c) {
      if (std::find(selected.begin(), selected.end(), c) != selected.end()) continue;
      auto trial = selected;
      trial.push_back(c);
      const double r = zf_equal_rate(h, trial, noise_ratio);
      if (r > best_rate) {
        best = c;
        best_rate = r;
      }
    }
    if (best < 0) break;
    selected.push_back(best);
    rate = best_rate;
  }
  return zf_on_subset(h, std::move(selected), noise_ratio, ZfPower::equal);
}

DpcResult zf_dpc_waterfilling(const ComplexMatrix& h, double noise_ratio) {
  const Index k = h.cols();
  if (k < 1) throw DimensionMismatch("zf_dpc: no users");
  if (k > h.rows()) throw RankDeficient("zf_dpc: more users than antennas");
  ComplexMatrix residual = h;
  std::vector<bool> used(static_cast<std::size_t>(k), false);
  const double scale = h.colwise().norm().maxCoeff();
  DpcResult r;
  r.gains.resize(k);
  for (Index step = 0; step < k; ++step) {
    Index best = -1;
    double best_norm = -1.0;
    for (Index c = 0; c < k; ++c) {
      if (used[static_cast<std::size_t>(c)]) continue;
      const double n = residual.col(c).norm();
      if (n > best_norm) {
        best = c;
        best_norm = n;
      }
    }
    if (best_norm <= kRankTolerance * scale) throw RankDeficient("zf_dpc: channel matrix is rank deficient");
    used[static_cast<std::size_t>(best)] = true;
    r.ordering.push_back(best);
    r.gains(step) = best_norm * best_norm;
    const ComplexVector q = residual.col(best) / best_norm;
    for (Index c = 0; c < k; ++c) {
      if (!used[static_cast<std::size_t>(c)]) residual.col(c) -= q * q.dot(residual.col(c));
    }
  }
  r.powers = waterfill(r.gains, 1.0, noise_ratio);
  r.rate = sum_log_rate(r.powers, r.gains, noise_ratio);
  return r;
}

}  // namespace gpip
