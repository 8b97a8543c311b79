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
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gpip {

/// Stacked precoder f = [f_{0,0}; …; f_{0,K-1}; f_{1,0}; …] with one
/// N-vector per (cell group, user). The single-cell case has one group.
struct PrecoderStack {
  ComplexVector stacked;
  Index n_antennas = 0;
  Index users_per_group = 0;
  Index n_groups = 1;

  PrecoderStack() = default;
  PrecoderStack(ComplexVector f, Index n_antennas, Index users_per_group, Index n_groups = 1);

  static PrecoderStack zero(Index n_antennas, Index users_per_group, Index n_groups = 1);

  Index n_segments() const { return users_per_group * n_groups; }
  auto segment(Index group, Index user) { return stacked.segment((group * users_per_group + user) * n_antennas, n_antennas); }
  auto segment(Index group, Index user) const {
    return stacked.segment((group * users_per_group + user) * n_antennas, n_antennas);
  }
  auto group_segment(Index group) const {
    return stacked.segment(group * users_per_group * n_antennas, users_per_group * n_antennas);
  }
  /// N × K precoder matrix of one group; column k is f_{group,k}.
  ComplexMatrix as_matrix(Index group = 0) const;
  RealVector segment_powers() const;
  double norm() const { return stacked.norm(); }
};

using Weights = RealVector;

Weights uniform_weights(Index n);

/// One Rayleigh quotient fᴴAf / fᴴBf of the lifted problem.
///
/// A is block diagonal with n_groups × users_per_group blocks of size N.
/// Every user block of group j equals group_blocks[j] = ĥ_jĥ_jᴴ + Φ_j + ρ·I,
/// where ĥ_j is the estimate of the link from the j-th transmitter of the
/// group to this pair's user. B equals A except that ĥĥᴴ of the desired
/// link is removed from block (group, user).
struct EffectivePair {
  std::vector<HermitianMatrix> group_blocks;
  ComplexVector desired;
  Index group = 0;
  Index user = 0;
  Index users_per_group = 0;
  double noise_ratio = 0.0;

  Index block_dim() const { return desired.size(); }
  Index n_groups() const { return static_cast<Index>(group_blocks.size()); }
  Index dim() const { return n_groups() * users_per_group * block_dim(); }

  double quadratic_a(const ComplexVector& f) const;
  double quadratic_b(const ComplexVector& f) const;

  HermitianMatrix a_block(Index group, Index user) const;
  HermitianMatrix b_block(Index group, Index user) const;
  BlockDiagonal a_matrix() const;
  BlockDiagonal b_matrix() const;
};

/// Pair for user k of `cell`, built from the single-cell links
/// (cell → cell). Missing error covariances count as zero.
EffectivePair build_effective_pair(const ChannelSet& csit, Index cell, Index user, double noise_ratio);

/// All K pairs of one cell; noise_ratios holds σ̃²_k / P per user.
std::vector<EffectivePair> build_effective_pairs(const ChannelSet& csit, Index cell, const RealVector& noise_ratios);

/// λ(f) = Π (fᴴA_kf / fᴴB_kf)^{w_k}, kept in the log domain.
struct Objective {
  double log2_value = 0.0;
  double lambda() const { return std::exp2(log2_value); }
};

Objective objective_lambda(std::span<const EffectivePair> pairs, const Weights& w, const ComplexVector& f);

/// Self-consistent pencil (Ā(f), B̄(f)) of the first-order condition.
///
/// Ā = Σ c_i A_i and B̄ = Σ d_i B_i with c_i ∝ w_i / fᴴA_if and
/// d_i ∝ w_i / fᴴB_if, both divided by one shared factor (the largest
/// coefficient). In this scaling the stationarity condition
/// Ā_true f = λ·B̄_true f reads Ā f = B̄ f; equivalently b_bar stores λ·B̄.
struct WeightedPencil {
  Index n_antennas = 0;
  Index users_per_group = 0;
  Index n_groups = 0;
  RealVector a_coeff;
  RealVector b_coeff;
  std::vector<HermitianMatrix> a_groups;  // Ā block of group j, shared by all its users
  std::vector<HermitianMatrix> b_blocks;  // B̄ block (j, i) at index j·K + i
  Objective objective;

  const HermitianMatrix& a_block(Index group, Index /*user*/) const {
    return a_groups[static_cast<std::size_t>(group)];
  }
  const HermitianMatrix& b_block(Index group, Index user) const {
    return b_blocks[static_cast<std::size_t>(group * users_per_group + user)];
  }
  ComplexVector apply_a(const ComplexVector& f) const;
  ComplexVector apply_b(const ComplexVector& f) const;
  BlockDiagonal a_bar() const;
  BlockDiagonal b_bar() const;
};

WeightedPencil build_weighted_pair(std::span<const EffectivePair> pairs, const Weights& w, const ComplexVector& f);

/// ‖Āf − λB̄f‖₂ / ‖Āf‖₂.
double kkt_residual(std::span<const EffectivePair> pairs, const Weights& w, const ComplexVector& f);
double kkt_residual(const WeightedPencil& pencil, const ComplexVector& f);

struct GpipOptions {
  double tolerance = 0.01;
  int max_iterations = 100;
  double selection_threshold = 1e-2;
};

struct Schedule {
  std::vector<Index> active;  // stacked segment indices (group·K + user)
  RealVector powers;          // P·‖f_k‖² per segment
};

struct GpipResult {
  PrecoderStack precoder;
  Objective objective;
  int iterations = 0;
  bool converged = false;
  double kkt_residual = 0.0;
  Schedule schedule;
  RealVector per_user_power;
  std::vector<double> trajectory;  // log2 λ, entry 0 is the initial point
  int non_monotone_steps = 0;
  bool returned_best_iterate = false;
};

/// MRT start: f_{g,k} = ĥ of the pair that owns segment (g, k), normalized.
PrecoderStack mrt_initialization(std::span<const EffectivePair> pairs);

/// Fixed-point iteration f ← normalize(B̄(f)⁻¹ Ā(f) f) with per-block
/// Cholesky solves. Stops when successive unit-norm iterates are within
/// tolerance. Returns the last iterate unless an earlier one had a larger
/// objective (beyond rounding). When max_iterations is exhausted the result
/// carries converged = false and the best iterate seen.
GpipResult gpip_iterate(std::span<const EffectivePair> pairs, const Weights& w, const PrecoderStack& init,
                        const GpipOptions& opt = {});

/// Single-cell problem with scalar error covariances Φ̂_k = α_k·I.
struct ScalarCovarianceProblem {
  std::vector<ComplexVector> estimates;
  RealVector alpha;         // α_k ≥ 0
  RealVector noise_ratio;   // σ̃²_k / P

  Index n_antennas() const { return estimates.empty() ? 0 : estimates.front().size(); }
  Index n_users() const { return static_cast<Index>(estimates.size()); }
  /// Equivalent pairs for the general path.
  std::vector<EffectivePair> to_pairs() const;
};

/// Inverses of the K diagonal blocks of B̄(f), each built from δ⁻¹·I by
/// K − 1 Sherman-Morrison updates. Scaled as WeightedPencil::b_blocks.
std::vector<HermitianMatrix> covfree_block_inverses(const ScalarCovarianceProblem& prob, const Weights& w,
                                                    const ComplexVector& f);

/// Same iteration as gpip_iterate, covariance-free fast path.
GpipResult gpip_covfree(const ScalarCovarianceProblem& prob, const Weights& w, const PrecoderStack& init,
                        const GpipOptions& opt = {});

/// User k is active iff ‖f_k‖₂ ≥ threshold; powers are P·‖f_k‖².
Schedule extract_schedule(const PrecoderStack& f, double threshold, double total_power = 1.0);

/// CSV row: seed,N,K,SNR_dB,iterations,objective_log2,kkt_residual,active_count,power_0..power_{K-1}
std::string gpip_csv_header(Index n_users);
std::string gpip_csv_row(std::uint64_t seed, double snr_db, const GpipResult& r);

}  // namespace gpip
