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

#include "gpip/gpip.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace gpip {

/// Cooperation cluster: indices of the cells whose BSs jointly design
/// precoders. Position c in `cells` is group c of the stacked precoder.
struct Cluster {
  std::vector<Index> cells;
  Index size() const { return static_cast<Index>(cells.size()); }
  Index position(Index cell) const;  // throws std::out_of_range
};

/// Quotient of user k in cell `cell`. Block (c, i) of A equals
/// ĥ_{j,ℓ,k}ĥ_{j,ℓ,k}ᴴ + Φ_{j,ℓ,k} + (σ̄²/P)·I with j = cluster.cells[c];
/// B drops ĥ_{ℓ,ℓ,k}ĥ_{ℓ,ℓ,k}ᴴ from block (position(ℓ), k).
EffectivePair build_coop_pair(const ChannelSet& csit, const Cluster& cluster, Index cell, Index user,
                              double noise_ratio);

/// All C·K pairs; noise_ratios(c·K + k) belongs to user k of cluster.cells[c].
std::vector<EffectivePair> build_coop_pairs(const ChannelSet& csit, const Cluster& cluster,
                                            const RealVector& noise_ratios);

Objective lambda_coop(std::span<const EffectivePair> pairs, const Weights& w, const ComplexVector& f);

struct CoopResult {
  GpipResult gpip;       // iteration under the sum-power relaxation
  PrecoderStack scaled;  // after per-BS rescaling, max_ℓ ‖f_ℓ‖ = 1
  RealVector cell_norms; // ‖f_ℓ‖₂ of `scaled`
};

/// Runs the fixed point on the cooperative pencil, then divides the unit
/// stack by its largest per-cell norm.
CoopResult gpip_coop(std::span<const EffectivePair> pairs, const Weights& w, const PrecoderStack& init,
                     const GpipOptions& opt = {});

/// Partitions n_cells sites into clusters of `size` adjacent cells. Seeds
/// are taken in a seeded random order; each seed grabs its nearest free
/// neighbours. The last cluster may be smaller.
std::vector<Cluster> form_clusters(const std::vector<Eigen::Vector2d>& sites, Index size, std::uint64_t seed);

/// gpip CSV row extended with the cell index and per-cell norms. Powers are
/// listed for all C·K segments.
std::string coop_csv_header(Index n_users, Index cluster_size);
std::string coop_csv_row(std::uint64_t seed, double snr_db, Index cell, const CoopResult& r);

}  // namespace gpip
