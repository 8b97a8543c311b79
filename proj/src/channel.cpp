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

#include "gpip/channel.hpp"

#include <array>
#include <map>
#include <mutex>
#include <numbers>
#include <ostream>

namespace gpip {

namespace {

struct QuadratureRule {
  std::vector<double> nodes;    // on [−1, 1]
  std::vector<double> weights;  // sum to 2
};

// Gauss-Legendre nodes by Newton iteration on P_n.
QuadratureRule gauss_legendre(int n) {
  QuadratureRule q;
  q.nodes.resize(static_cast<std::size_t>(n));
  q.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= n; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    q.nodes[static_cast<std::size_t>(i)] = -x;
    q.nodes[static_cast<std::size_t>(n - 1 - i)] = x;
    q.weights[static_cast<std::size_t>(i)] = w;
    q.weights[static_cast<std::size_t>(n - 1 - i)] = w;
  }
  return q;
}

const QuadratureRule& cached_rule(int n) {
  static std::mutex mu;
  static std::map<int, QuadratureRule> rules;
  const std::lock_guard<std::mutex> lock(mu);
  auto it = rules.find(n);
  if (it == rules.end()) it = rules.emplace(n, gauss_legendre(n)).first;
  return it->second;
}

}  // namespace

double uca_radius_factor(Index n_antennas) {
  const double step = 2.0 * std::numbers::pi / static_cast<double>(n_antennas);
  const double c = 1.0 - std::cos(step);
  const double s = std::sin(step);
  return 0.5 / std::sqrt(c * c + s * s);
}

ArrayGeometry uniform_circular_array(Index n_antennas, double wavelength) {
  if (n_antennas < 1) throw std::invalid_argument("uniform_circular_array: need at least one antenna");
  if (!(wavelength > 0)) throw std::invalid_argument("uniform_circular_array: wavelength must be positive");
  ArrayGeometry g;
  g.wavelength = wavelength;
  if (n_antennas == 1) {
    g.positions.emplace_back(0.0, 0.0);
    return g;
  }
  const double radius = wavelength * uca_radius_factor(n_antennas);
  for (Index n = 0; n < n_antennas; ++n) {
    const double phi = 2.0 * std::numbers::pi * static_cast<double>(n) / static_cast<double>(n_antennas);
    g.positions.emplace_back(radius * std::cos(phi), radius * std::sin(phi));
  }
  return g;
}

ComplexVector steering_vector(const ArrayGeometry& geom, double angle) {
  const double k = 2.0 * std::numbers::pi / geom.wavelength;
  const Eigen::Vector2d wave(std::cos(angle), std::sin(angle));
  ComplexVector a(geom.n_antennas());
  for (Index n = 0; n < geom.n_antennas(); ++n) {
    a(n) = std::polar(1.0, -k * wave.dot(geom.positions[static_cast<std::size_t>(n)]));
  }
  return a;
}

HermitianMatrix one_ring_correlation(const ArrayGeometry& geom, const OneRingParams& p, int n_nodes) {
  if (!(p.angular_spread > 0)) throw std::invalid_argument("one_ring_correlation: angular spread must be positive");
  if (!(p.large_scale_gain > 0)) throw std::invalid_argument("one_ring_correlation: gain must be positive");
  if (n_nodes < 1) throw std::invalid_argument("one_ring_correlation: need at least one node");

  const Index n = geom.n_antennas();
  const QuadratureRule& q = cached_rule(n_nodes);
  ComplexMatrix samples(n, n_nodes);
  for (int m = 0; m < n_nodes; ++m) {
    const auto idx = static_cast<std::size_t>(m);
    samples.col(m) = std::sqrt(0.5 * q.weights[idx]) * steering_vector(geom, p.azimuth + p.angular_spread * q.nodes[idx]);
  }
  ComplexMatrix r = p.large_scale_gain * (samples * samples.adjoint());
  // Unit-modulus entries make the diagonal exactly β; rounding is removed here.
  r.diagonal().setConstant(Complex(p.large_scale_gain, 0.0));
  return HermitianMatrix(r);
}

ComplexVector sample_channel(const HermitianMatrix& r, Rng& rng) {
  const ComplexVector g = standard_complex_gaussian(rng, r.dim());
  return hermitian_sqrt(r) * g;
}

ComplexVector sample_channel(const HermitianMatrix& r, std::uint64_t seed) {
  Rng rng(seed);
  return sample_channel(r, rng);
}

double okumura_hata_pathloss(double distance_km) {
  if (!(distance_km >= kMinimumDistanceKm)) {
    throw BelowMinimumDistance("okumura_hata_pathloss: distance below 0.04 km");
  }
  return 135.1047 + 35.0413 * std::log10(distance_km);
}

HermitianMatrix tdd_error_covariance(const HermitianMatrix& r_serving,
                                     std::span<const HermitianMatrix> r_interferers, double noise_var,
                                     double pilot_len, double pilot_power) {
  if (!(pilot_len * pilot_power > 0)) throw std::invalid_argument("tdd_error_covariance: τ·p must be positive");
  HermitianMatrix s = r_serving;
  for (const auto& ri : r_interferers) {
    if (ri.dim() != s.dim()) throw DimensionMismatch("tdd_error_covariance: interferer size");
    s += ri;
  }
  s.add_ridge(noise_var / (pilot_len * pilot_power));
  const ComplexMatrix x = solve_hermitian(s, r_serving.matrix());
  return HermitianMatrix(r_serving.matrix() - r_serving.matrix() * x);
}

namespace {

void check_psd(const HermitianMatrix& m, double trace_ref, const char* what) {
  if (m.dim() == 0) return;
  const double lo = hermitian_eigenvalues(m).minCoeff();
  if (lo < -1e-9 * std::max(trace_ref, 0.0)) {
    throw NumericsError(std::string(what) + ": matrix is not PSD");
  }
}

}  // namespace

CsitDraw mmse_csit_tdd(const HermitianMatrix& r_serving, std::span<const HermitianMatrix> r_interferers,
                       double noise_var, double pilot_len, double pilot_power, Rng& rng) {
  HermitianMatrix phi = tdd_error_covariance(r_serving, r_interferers, noise_var, pilot_len, pilot_power);
  const HermitianMatrix r_hat = r_serving - phi;
  check_psd(phi, r_serving.trace(), "mmse_csit_tdd: error covariance");
  check_psd(r_hat, r_serving.trace(), "mmse_csit_tdd: estimate covariance");

  const ComplexVector g_hat = standard_complex_gaussian(rng, r_serving.dim());
  const ComplexVector g_err = standard_complex_gaussian(rng, r_serving.dim());
  CsitDraw d;
  d.estimate = hermitian_sqrt(r_hat) * g_hat;
  d.true_channel = d.estimate + hermitian_sqrt(phi) * g_err;
  d.error_cov = std::move(phi);
  return d;
}

CsitDraw fdd_quantized_csit(const HermitianMatrix& r, double kappa, Rng& rng) {
  if (!(kappa >= 0.0 && kappa <= 1.0)) throw std::invalid_argument("fdd_quantized_csit: κ must lie in [0, 1]");
  const Index n = r.dim();
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(r.matrix());
  if (es.info() != Eigen::Success) throw EigenFailure("fdd_quantized_csit: eigensolver did not converge");
  const RealVector& lam = es.eigenvalues();
  const double cut = kEigenClipRelative * std::max(lam.maxCoeff(), 0.0);

  // Coloring U·Λ^{1/2} restricted to the nonzero eigenvalues.
  std::vector<Index> keep;
  for (Index i = 0; i < n; ++i) {
    if (lam(i) > cut && lam(i) > 0) keep.push_back(i);
  }
  ComplexMatrix color(n, static_cast<Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    color.col(static_cast<Index>(c)) = es.eigenvectors().col(keep[c]) * std::sqrt(lam(keep[c]));
  }

  const Index rank = color.cols();
  const ComplexVector g = standard_complex_gaussian(rng, rank);
  const ComplexVector v = standard_complex_gaussian(rng, rank);
  CsitDraw d;
  d.true_channel = color * g;
  d.estimate = color * (std::sqrt(1.0 - kappa * kappa) * g + kappa * v);
  d.error_cov = (kappa * kappa) * r;
  return d;
}

CsitDraw additive_error_csit(const ComplexVector& true_channel, const HermitianMatrix& error_cov, Rng& rng) {
  if (error_cov.dim() != true_channel.size()) throw DimensionMismatch("additive_error_csit: covariance size");
  const ComplexVector g = standard_complex_gaussian(rng, true_channel.size());
  CsitDraw d;
  d.true_channel = true_channel;
  d.estimate = true_channel + hermitian_sqrt(error_cov) * g;
  d.error_cov = error_cov;
  return d;
}

double scalar_error_variance(double beta_serving, double beta_sum, double noise_var, double pilot_len,
                             double pilot_power) {
  if (!(pilot_len * pilot_power > 0)) throw std::invalid_argument("scalar_error_variance: τ·p must be positive");
  return beta_serving * (1.0 - beta_serving / (beta_sum + noise_var / (pilot_len * pilot_power)));
}

std::vector<Eigen::Vector2d> hexagonal_sites(Index n_cells, double inter_site_distance) {
  if (n_cells < 1) throw std::invalid_argument("hexagonal_sites: need at least one cell");
  static constexpr std::array<std::array<int, 2>, 6> kDirs{{{1, 0}, {1, -1}, {0, -1}, {-1, 0}, {-1, 1}, {0, 1}}};
  std::vector<std::array<int, 2>> axial{{0, 0}};
  for (int ring = 1; static_cast<Index>(axial.size()) < n_cells; ++ring) {
    std::array<int, 2> h{kDirs[4][0] * ring, kDirs[4][1] * ring};
    for (const auto& d : kDirs) {
      for (int s = 0; s < ring; ++s) {
        axial.push_back(h);
        h = {h[0] + d[0], h[1] + d[1]};
      }
    }
  }
  axial.resize(static_cast<std::size_t>(n_cells));
  std::vector<Eigen::Vector2d> sites;
  sites.reserve(axial.size());
  for (const auto& a : axial) {
    sites.emplace_back(inter_site_distance * (a[0] + 0.5 * a[1]), inter_site_distance * (std::sqrt(3.0) / 2.0) * a[1]);
  }
  return sites;
}

double Topology::distance(Index bs, Index cell, Index user) const {
  return (users[static_cast<std::size_t>(cell)][static_cast<std::size_t>(user)] -
          sites[static_cast<std::size_t>(bs)])
      .norm();
}

double Topology::azimuth(Index bs, Index cell, Index user) const {
  const Eigen::Vector2d d = users[static_cast<std::size_t>(cell)][static_cast<std::size_t>(user)] -
                            sites[static_cast<std::size_t>(bs)];
  return std::atan2(d.y(), d.x());
}

Topology drop_users(std::vector<Eigen::Vector2d> sites, Index users_per_cell, double inter_site_distance,
                    double min_distance, Rng& rng) {
  if (users_per_cell < 1) throw std::invalid_argument("drop_users: need at least one user per cell");
  if (!(min_distance < inter_site_distance / 2)) throw std::invalid_argument("drop_users: exclusion disc too large");
  Topology t;
  t.inter_site_distance = inter_site_distance;
  t.min_distance = min_distance;
  t.sites = std::move(sites);

  const double half = inter_site_distance / 2.0;
  const double ymax = inter_site_distance / std::sqrt(3.0);
  const std::array<Eigen::Vector2d, 3> normals{Eigen::Vector2d(1.0, 0.0),
                                               Eigen::Vector2d(0.5, std::sqrt(3.0) / 2.0),
                                               Eigen::Vector2d(-0.5, std::sqrt(3.0) / 2.0)};
  std::uniform_real_distribution<double> ux(-half, half);
  std::uniform_real_distribution<double> uy(-ymax, ymax);
  for (const auto& site : t.sites) {
    std::vector<Eigen::Vector2d> cell_users;
    while (static_cast<Index>(cell_users.size()) < users_per_cell) {
      const Eigen::Vector2d p(ux(rng), uy(rng));
      bool inside = p.norm() >= min_distance;
      for (const auto& nrm : normals) inside = inside && std::abs(p.dot(nrm)) <= half;
      if (inside) cell_users.push_back(site + p);
    }
    t.users.push_back(std::move(cell_users));
  }
  return t;
}

ChannelSet::ChannelSet(Index n_antennas, Index n_cells, Index users_per_cell)
    : n_antennas_(n_antennas),
      n_cells_(n_cells),
      users_per_cell_(users_per_cell),
      links_(static_cast<std::size_t>(n_cells * n_cells * users_per_cell)) {}

ChannelSet ChannelSet::single_cell(std::span<const ComplexVector> estimates,
                                   std::span<const HermitianMatrix> error_covs) {
  if (estimates.empty() || estimates.size() != error_covs.size()) {
    throw DimensionMismatch("ChannelSet::single_cell: need one covariance per estimate");
  }
  const Index n = estimates.front().size();
  ChannelSet s(n, 1, static_cast<Index>(estimates.size()));
  for (std::size_t k = 0; k < estimates.size(); ++k) {
    if (estimates[k].size() != n || error_covs[k].dim() != n) {
      throw DimensionMismatch("ChannelSet::single_cell: inconsistent antenna count");
    }
    Link& l = s.link(0, 0, static_cast<Index>(k));
    l.true_channel = estimates[k];
    l.estimate = estimates[k];
    l.error_cov = error_covs[k];
  }
  return s;
}

std::size_t ChannelSet::offset(Index bs, Index cell, Index user) const {
  if (bs < 0 || bs >= n_cells_ || cell < 0 || cell >= n_cells_ || user < 0 || user >= users_per_cell_) {
    throw std::out_of_range("ChannelSet: link index out of range");
  }
  return static_cast<std::size_t>((bs * n_cells_ + cell) * users_per_cell_ + user);
}

ComplexMatrix ChannelSet::estimate_matrix(Index bs, Index cell) const {
  ComplexMatrix m(n_antennas_, users_per_cell_);
  for (Index k = 0; k < users_per_cell_; ++k) m.col(k) = link(bs, cell, k).estimate;
  return m;
}

ComplexMatrix ChannelSet::true_matrix(Index bs, Index cell) const {
  ComplexMatrix m(n_antennas_, users_per_cell_);
  for (Index k = 0; k < users_per_cell_; ++k) m.col(k) = link(bs, cell, k).true_channel;
  return m;
}

void write_channel_csv(const ChannelSet& set, std::ostream& out) {
  out << "bs,cell,user,kind";
  for (Index n = 0; n < set.n_antennas(); ++n) out << ",re_" << n << ",im_" << n;
  out << '\n';
  char buf[64];
  auto row = [&](Index j, Index l, Index k, const char* kind, const ComplexVector& v) {
    out << j << ',' << l << ',' << k << ',' << kind;
    for (Index n = 0; n < v.size(); ++n) {
      std::snprintf(buf, sizeof buf, ",%.17g,%.17g", v(n).real(), v(n).imag());
      out << buf;
    }
    out << '\n';
  };
  for (Index j = 0; j < set.n_cells(); ++j) {
    for (Index l = 0; l < set.n_cells(); ++l) {
      for (Index k = 0; k < set.users_per_cell(); ++k) {
        const Link& lk = set.link(j, l, k);
        if (lk.true_channel.size() > 0) row(j, l, k, "true", lk.true_channel);
        if (lk.estimate.size() > 0) row(j, l, k, "estimate", lk.estimate);
      }
    }
  }
}

}  // namespace gpip
