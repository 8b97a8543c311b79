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

#include "gpip/numerics.hpp"

#include <span>
#include <stdexcept>
#include <vector>

namespace gpip {

class RankDeficient : public NumericsError {
 public:
  using NumericsError::NumericsError;
};

/// Columns are the per-user precoders f_k with power folded in, so
/// ‖f_k‖² is the power of user k and Σ‖f_k‖² ≤ 1.
struct PrecoderMatrix {
  ComplexMatrix columns;

  Index n_antennas() const { return columns.rows(); }
  Index n_users() const { return columns.cols(); }
  RealVector powers() const { return columns.colwise().squaredNorm().transpose(); }
  double total_power() const { return columns.squaredNorm(); }
};

/// F = Ĥ / ‖Ĥ‖_F.
PrecoderMatrix mrt(const ComplexMatrix& h);

enum class ZfPower { equal, waterfill };

/// Columns of Ĥ(ĤᴴĤ)⁻¹ normalized to unit norm, then given equal power
/// 1/K or water-filled powers over gains 1/‖col_k‖² (before
/// normalization). noise_ratio is σ²/P and only matters for water-filling.
PrecoderMatrix zf(const ComplexMatrix& h, ZfPower power = ZfPower::equal, double noise_ratio = 1.0);

/// (ĤĤᴴ + ΣΦ_k + ρ·I)⁻¹Ĥ scaled to unit Frobenius norm.
PrecoderMatrix rrzf(const ComplexMatrix& h, std::span<const HermitianMatrix> error_covs, double noise_ratio);

/// rrzf without error covariances and ridge ridge_scale·σ²/P.
PrecoderMatrix rzf(const ComplexMatrix& h, double noise_ratio, double ridge_scale = 1.0);

/// p_k = max(0, μ − noise/g_k) with Σp_k = total_power; μ by bisection.
/// Zero gains get zero power.
RealVector waterfill(const RealVector& gains, double total_power, double noise = 1.0);

struct Selection {
  std::vector<Index> selected;  // in selection order
  PrecoderMatrix precoder;      // N×K, zero columns for unselected users
  double rate = 0.0;            // ZF sum rate on the estimates
};

/// Semi-orthogonal user selection, then ZF with water-filling on the
/// selected set.
Selection sus_zf(const ComplexMatrix& h, double noise_ratio, double alpha_sus = 0.3);

/// Greedy ZF selection with equal power: start from the strongest user, add
/// the user that maximizes the sum rate, stop when nothing increases it.
Selection rank_adaptive_zf(const ComplexMatrix& h, double noise_ratio);

struct DpcResult {
  std::vector<Index> ordering;  // encoding order
  RealVector gains;             // |r_kk|² in encoding order
  RealVector powers;            // in encoding order
  double rate = 0.0;
};

/// QR-based ZF-DPC with greedy max-residual ordering and water-filling.
DpcResult zf_dpc_waterfilling(const ComplexMatrix& h, double noise_ratio);

/// Σ log₂(1 + p_k·g_k / noise).
double sum_log_rate(const RealVector& powers, const RealVector& gains, double noise);

}  // namespace gpip
