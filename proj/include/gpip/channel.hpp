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
#include "gpip/random.hpp"

#include <cmath>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

namespace gpip {

// ----------------------------------------------------------------------------
// Array geometry and the one-ring spatial correlation model
// ----------------------------------------------------------------------------

struct ArrayGeometry {
  std::vector<Eigen::Vector2d> positions;  // meters
  double wavelength = 1.0;                 // meters

  Index n_antennas() const { return static_cast<Index>(positions.size()); }
};

/// Radius of an N-element uniform circular array in wavelengths, chosen so
/// adjacent elements sit λ/2 apart.
double uca_radius_factor(Index n_antennas);

ArrayGeometry uniform_circular_array(Index n_antennas, double wavelength = 1.0);

struct OneRingParams {
  double azimuth = 0.0;           // θ, radians
  double angular_spread = 0.0;    // Δ, radians, > 0
  double large_scale_gain = 1.0;  // β, linear, > 0
};

inline constexpr int kOneRingNodes = 512;

/// Plane-wave response a(α)_n = exp(-j·2π/λ·[cos α, sin α]·r_n).
ComplexVector steering_vector(const ArrayGeometry& geom, double angle);

/// One-ring correlation matrix: β times the average of a(α)a(α)ᴴ over
/// α ∈ [θ−Δ, θ+Δ], by n_nodes-point Gauss-Legendre quadrature. The result is PSD by
/// construction and its diagonal equals β exactly.
HermitianMatrix one_ring_correlation(const ArrayGeometry& geom, const OneRingParams& p,
                                     int n_nodes = kOneRingNodes);

// ----------------------------------------------------------------------------
// Fading and path loss
// ----------------------------------------------------------------------------

/// h = R^{1/2}·g with g ~ CN(0, I).
ComplexVector sample_channel(const HermitianMatrix& r, Rng& rng);
ComplexVector sample_channel(const HermitianMatrix& r, std::uint64_t seed);

class BelowMinimumDistance : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr double kMinimumDistanceKm = 0.04;

/// Okumura-Hata loss in dB at 2 GHz with 32 m / 1.5 m antenna heights.
double okumura_hata_pathloss(double distance_km);

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

// ----------------------------------------------------------------------------
// Imperfect CSIT
// ----------------------------------------------------------------------------

/// One jointly drawn (h, ĥ) pair and the error covariance the transmitter
/// attributes to ĥ. Internally h = ĥ + e.
struct CsitDraw {
  ComplexVector true_channel;
  ComplexVector estimate;
  HermitianMatrix error_cov;
};

/// Φ = R − R·(R + ΣR_int + σ²/(τ·p)·I)⁻¹·R, evaluated with a Cholesky solve.
HermitianMatrix tdd_error_covariance(const HermitianMatrix& r_serving,
                                     std::span<const HermitianMatrix> r_interferers, double noise_var,
                                     double pilot_len, double pilot_power);

/// TDD uplink-pilot MMSE model. Draws ĥ ~ CN(0, R − Φ) and e ~ CN(0, Φ)
/// independently and returns h = ĥ + e as the true channel.
CsitDraw mmse_csit_tdd(const HermitianMatrix& r_serving, std::span<const HermitianMatrix> r_interferers,
                       double noise_var, double pilot_len, double pilot_power, Rng& rng);

/// Quantized-feedback model: h = UΛ^{1/2}g, ĥ = UΛ^{1/2}(√(1−κ²)·g + κ·v).
/// The reported error covariance is κ²·R.
CsitDraw fdd_quantized_csit(const HermitianMatrix& r, double kappa, Rng& rng);

/// ĥ = h + e with e ~ CN(0, Φ); Φ is passed through unchanged.
CsitDraw additive_error_csit(const ComplexVector& true_channel, const HermitianMatrix& error_cov, Rng& rng);

/// Scalar error variance used when the transmitter does not know R:
/// α = β·(1 − β / (Σβ_j + σ²/(τ·p))).
double scalar_error_variance(double beta_serving, double beta_sum, double noise_var, double pilot_len,
                             double pilot_power);

// ----------------------------------------------------------------------------
// Hexagonal topology
// ----------------------------------------------------------------------------

/// First n_cells sites of a hexagonal lattice, center cell first, then ring
/// by ring.
std::vector<Eigen::Vector2d> hexagonal_sites(Index n_cells, double inter_site_distance);

struct Topology {
  double inter_site_distance = 1000.0;
  double min_distance = 40.0;
  std::vector<Eigen::Vector2d> sites;
  std::vector<std::vector<Eigen::Vector2d>> users;  // [cell][user]

  Index n_cells() const { return static_cast<Index>(sites.size()); }
  Index users_per_cell() const { return users.empty() ? 0 : static_cast<Index>(users.front().size()); }
  /// Distance in meters from BS j to user k of cell l.
  double distance(Index bs, Index cell, Index user) const;
  /// Azimuth of user (cell, user) seen from BS j, radians.
  double azimuth(Index bs, Index cell, Index user) const;
};

/// Drops users uniformly over each hexagonal cell, excluding the disc of
/// radius min_distance around the site.
Topology drop_users(std::vector<Eigen::Vector2d> sites, Index users_per_cell, double inter_site_distance,
                    double min_distance, Rng& rng);

// ----------------------------------------------------------------------------
// Channel set for one coherence block
// ----------------------------------------------------------------------------

struct Link {
  ComplexVector true_channel;
  ComplexVector estimate;     // empty when the link is not estimated
  HermitianMatrix error_cov;  // covariance the BS attributes to the estimate
};

/// All links h_{j,l,k} from BS j to user k of cell l.
class ChannelSet {
 public:
  ChannelSet() = default;
  ChannelSet(Index n_antennas, Index n_cells, Index users_per_cell);

  /// Single-cell set from estimates and error covariances; the true channels
  /// are taken equal to the estimates.
  static ChannelSet single_cell(std::span<const ComplexVector> estimates,
                                std::span<const HermitianMatrix> error_covs);

  Index n_antennas() const { return n_antennas_; }
  Index n_cells() const { return n_cells_; }
  Index users_per_cell() const { return users_per_cell_; }

  Link& link(Index bs, Index cell, Index user) { return links_[offset(bs, cell, user)]; }
  const Link& link(Index bs, Index cell, Index user) const { return links_[offset(bs, cell, user)]; }

  /// N×K matrix of estimates ĥ_{bs,cell,·}.
  ComplexMatrix estimate_matrix(Index bs, Index cell) const;
  ComplexMatrix true_matrix(Index bs, Index cell) const;

 private:
  std::size_t offset(Index bs, Index cell, Index user) const;

  Index n_antennas_ = 0;
  Index n_cells_ = 0;
  Index users_per_cell_ = 0;
  std::vector<Link> links_;
};

/// One row per link and kind (true / estimate):
/// bs,cell,user,kind,re_0,im_0,...,re_{N-1},im_{N-1}
void write_channel_csv(const ChannelSet& set, std::ostream& out);

}  // namespace gpip
