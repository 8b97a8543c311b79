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

#include <doctest.h>

#include <numbers>
#include <sstream>

using namespace gpip;

namespace {

// Trapezoid rule over [θ−Δ, θ+Δ] with n_nodes points, evaluated entry by entry.
ComplexMatrix trapezoid_one_ring(const ArrayGeometry& g, double theta, double delta, double beta, int n_nodes) {
  const Index n = g.n_antennas();
  ComplexMatrix r = ComplexMatrix::Zero(n, n);
  const double k = 2.0 * std::numbers::pi / g.wavelength;
  const double h = 2.0 * delta / (n_nodes - 1);
  for (Index a = 0; a < n; ++a) {
    for (Index b = 0; b < n; ++b) {
      const Eigen::Vector2d dr = g.positions[static_cast<std::size_t>(a)] - g.positions[static_cast<std::size_t>(b)];
      Complex acc = 0.0;
      for (int m = 0; m < n_nodes; ++m) {
        const double alpha = theta - delta + m * h;
        const double wgt = (m == 0 || m == n_nodes - 1) ? 0.5 : 1.0;
        acc += wgt * std::polar(1.0, -k * (std::cos(alpha) * dr.x() + std::sin(alpha) * dr.y()));
      }
      r(a, b) = beta * acc * h / (2.0 * delta);
    }
  }
  return r;
}

ComplexMatrix sample_cov(const std::vector<ComplexVector>& xs) {
  const Index n = xs.front().size();
  ComplexMatrix c = ComplexMatrix::Zero(n, n);
  for (const auto& x : xs) c += x * x.adjoint();
  return c / static_cast<double>(xs.size());
}

}  // namespace

TEST_SUITE("channel") {

TEST_CASE("uniform circular array has half-wavelength spacing") {
  for (Index n : {2, 3, 4, 8, 16, 64}) {
    const ArrayGeometry g = uniform_circular_array(n, 0.15);
    for (Index i = 0; i < n; ++i) {
      const double d = (g.positions[static_cast<std::size_t>(i)] - g.positions[static_cast<std::size_t>((i + 1) % n)]).norm();
      CHECK(std::abs(d - 0.075) < 1e-9);
    }
  }
  CHECK(uniform_circular_array(1).n_antennas() == 1);
}

TEST_CASE("one-ring diagonal, Hermitian PSD, trace") {
  for (Index n : {4, 8, 16, 32}) {
    const ArrayGeometry g = uniform_circular_array(n);
    for (double delta : {0.05, 0.3, std::numbers::pi / 6, 1.2}) {
      const HermitianMatrix r = one_ring_correlation(g, {0.7, delta, 2.5});
      for (Index i = 0; i < n; ++i) CHECK(std::abs(r(i, i) - 2.5) < 1e-6 * 2.5);
      CHECK(std::abs(r.trace() - static_cast<double>(n) * 2.5) < 1e-5 * static_cast<double>(n) * 2.5);
      CHECK(hermitian_eigenvalues(r).minCoeff() >= -1e-9 * 2.5);
    }
  }
}

TEST_CASE("one-ring zero-spread limit is rank one") {
  const ArrayGeometry g = uniform_circular_array(8);
  const HermitianMatrix r = one_ring_correlation(g, {0.4, 1e-9, 1.0});
  const RealVector ev = hermitian_eigenvalues(r);
  CHECK(ev(ev.size() - 2) / ev(ev.size() - 1) < 1e-4);
  const ComplexVector a = steering_vector(g, 0.4);
  CHECK(max_abs(ComplexMatrix(r.matrix() - a * a.adjoint())) < 1e-6);
}

TEST_CASE("one-ring matches a 200000-node trapezoid reference") {
  for (const Index n : {4, 16}) {
    const ArrayGeometry g = uniform_circular_array(n);
    const HermitianMatrix r = one_ring_correlation(g, {0.3, std::numbers::pi / 6, 1.0});
    const ComplexMatrix ref = trapezoid_one_ring(g, 0.3, std::numbers::pi / 6, 1.0, 200000);
    CHECK(max_abs(ComplexMatrix(r.matrix() - ref)) < 1e-6);
  }
}

TEST_CASE("sample_channel") {
  CHECK(sample_channel(HermitianMatrix::zero(3), 1).norm() == 0.0);
  CHECK(sample_channel(HermitianMatrix::identity(3), 9) == sample_channel(HermitianMatrix::identity(3), 9));

  Rng rng(1);
  std::vector<ComplexVector> xs;
  for (int i = 0; i < 100000; ++i) xs.push_back(sample_channel(HermitianMatrix::identity(3), rng));
  CHECK(max_abs(ComplexMatrix(sample_cov(xs) - ComplexMatrix::Identity(3, 3))) < 0.05);

  Rng rng2(2);
  const ComplexVector v = standard_complex_gaussian(rng2, 4);
  const HermitianMatrix r1 = HermitianMatrix::outer(v);
  const ComplexVector u = v / v.norm();
  for (int i = 0; i < 50; ++i) {
    const ComplexVector h = sample_channel(r1, rng2);
    const ComplexVector off = h - u * u.dot(h);
    CHECK(off.norm() < 1e-8 * std::max(1.0, h.norm()));
  }
}

TEST_CASE("Okumura-Hata path loss") {
  CHECK(okumura_hata_pathloss(1.0) == doctest::Approx(135.1047).epsilon(1e-12));
  CHECK(okumura_hata_pathloss(10.0) == doctest::Approx(170.146).epsilon(1e-6));
  CHECK(okumura_hata_pathloss(0.04) == doctest::Approx(135.1047 + 35.0413 * std::log10(0.04)));
  CHECK_THROWS_AS(okumura_hata_pathloss(0.039), BelowMinimumDistance);
}

TEST_CASE("TDD error covariance") {
  const HermitianMatrix r = one_ring_correlation(uniform_circular_array(4), {0.3, 0.5, 1.0});
  const HermitianMatrix phi = tdd_error_covariance(r, {}, 1.0, 1e12, 1.0);
  CHECK(max_abs(phi.matrix()) < 1e-6 * r.trace());

  const std::vector<HermitianMatrix> one{HermitianMatrix::identity(3)};
  const HermitianMatrix phi2 = tdd_error_covariance(HermitianMatrix::identity(3), one, 1.0, 1.0, 1.0);
  CHECK(max_abs(ComplexMatrix(phi2.matrix() - (2.0 / 3.0) * ComplexMatrix::Identity(3, 3))) < 1e-14);

  // closed form through an explicit inverse
  Rng rng(4);
  ComplexMatrix g(4, 4);
  for (Index c = 0; c < 4; ++c) g.col(c) = standard_complex_gaussian(rng, 4);
  const HermitianMatrix rs(g * g.adjoint());
  for (Index c = 0; c < 4; ++c) g.col(c) = standard_complex_gaussian(rng, 4);
  const std::vector<HermitianMatrix> ints{HermitianMatrix(0.3 * g * g.adjoint())};
  const ComplexMatrix s = rs.matrix() + ints[0].matrix() + 0.2 * ComplexMatrix::Identity(4, 4);
  const ComplexMatrix ref = rs.matrix() - rs.matrix() * s.inverse() * rs.matrix();
  CHECK(max_abs(ComplexMatrix(tdd_error_covariance(rs, ints, 1.0, 5.0, 1.0).matrix() - ref)) < 1e-8);
}

TEST_CASE("TDD draws: Φ ⪯ R and the estimate is independent of the error") {
  Rng rng(8);
  const HermitianMatrix r = one_ring_correlation(uniform_circular_array(3), {0.2, 0.4, 1.0});
  const std::vector<HermitianMatrix> ints{one_ring_correlation(uniform_circular_array(3), {1.9, 0.4, 0.5})};
  std::vector<ComplexVector> est, err;
  HermitianMatrix phi;
  for (int i = 0; i < 100000; ++i) {
    CsitDraw d = mmse_csit_tdd(r, ints, 1.0, 2.0, 1.0, rng);
    est.push_back(d.estimate);
    err.push_back(d.true_channel - d.estimate);
    phi = d.error_cov;
  }
  CHECK(hermitian_eigenvalues(r - phi).minCoeff() >= -1e-9 * r.trace());
  CHECK(max_abs(ComplexMatrix(sample_cov(err) - phi.matrix())) < 0.05 * max_abs(phi.matrix()) + 0.01);
  ComplexMatrix cross = ComplexMatrix::Zero(3, 3);
  for (std::size_t i = 0; i < est.size(); ++i) cross += est[i] * err[i].adjoint();
  CHECK(max_abs(ComplexMatrix(cross / static_cast<double>(est.size()))) < 0.02);
}

TEST_CASE("FDD quantized CSIT") {
  Rng rng(5);
  const HermitianMatrix r = one_ring_correlation(uniform_circular_array(4), {0.0, 0.5, 1.0});
  const CsitDraw d0 = fdd_quantized_csit(r, 0.0, rng);
  CHECK((d0.true_channel - d0.estimate).norm() < 1e-12);
  CHECK(max_abs(d0.error_cov.matrix()) == 0.0);

  // κ = 1: estimate uncorrelated with the channel
  ComplexMatrix cross = ComplexMatrix::Zero(4, 4);
  const int m = 50000;
  for (int i = 0; i < m; ++i) {
    const CsitDraw d = fdd_quantized_csit(r, 1.0, rng);
    cross += d.estimate * d.true_channel.adjoint();
  }
  CHECK(max_abs(ComplexMatrix(cross / m)) < 0.03);

  std::vector<ComplexVector> xs;
  for (int i = 0; i < 100000; ++i) xs.push_back(fdd_quantized_csit(HermitianMatrix::identity(3), 0.5, rng).estimate);
  CHECK(max_abs(ComplexMatrix(sample_cov(xs) - ComplexMatrix::Identity(3, 3))) < 0.05);
  CHECK_THROWS_AS(fdd_quantized_csit(r, 1.5, rng), std::invalid_argument);
}

TEST_CASE("additive CSIT error") {
  Rng rng(6);
  const ComplexVector h = standard_complex_gaussian(rng, 2);
  CHECK(additive_error_csit(h, HermitianMatrix::zero(2), rng).estimate == h);

  HermitianMatrix phi = HermitianMatrix::identity(3);
  phi *= 0.1;
  std::vector<ComplexVector> errs;
  const ComplexVector h3 = standard_complex_gaussian(rng, 3);
  for (int i = 0; i < 100000; ++i) errs.push_back(additive_error_csit(h3, phi, rng).estimate - h3);
  CHECK(max_abs(ComplexMatrix(sample_cov(errs) - phi.matrix())) < 0.005);

  RealVector d(2);
  d << 0.1, 0.0;
  for (int i = 0; i < 100; ++i) CHECK(additive_error_csit(h, HermitianMatrix::diagonal(d), rng).estimate(1) == h(1));
}

TEST_CASE("scalar error variance") {
  CHECK(scalar_error_variance(1.0, 2.0, 1.0, 1.0, 1.0) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("hexagonal sites and user drops") {
  const auto sites = hexagonal_sites(19, 1000.0);
  REQUIRE(sites.size() == 19);
  CHECK(sites[0].norm() == 0.0);
  for (std::size_t i = 1; i < 7; ++i) CHECK(sites[i].norm() == doctest::Approx(1000.0));
  for (std::size_t i = 7; i < 19; ++i) CHECK(sites[i].norm() > 1500.0);
  for (std::size_t i = 0; i < 19; ++i)
    for (std::size_t j = i + 1; j < 19; ++j) CHECK((sites[i] - sites[j]).norm() > 999.0);

  Rng rng(3);
  const Topology t = drop_users(sites, 10, 1000.0, 40.0, rng);
  CHECK(t.users_per_cell() == 10);
  for (Index l = 0; l < 19; ++l)
    for (Index k = 0; k < 10; ++k) {
      for (Index j = 0; j < 19; ++j) CHECK(t.distance(j, l, k) >= 40.0);
      // own site is the nearest
      for (Index j = 0; j < 19; ++j) CHECK(t.distance(l, l, k) <= t.distance(j, l, k) + 1e-9);
    }
}

TEST_CASE("channel CSV dump") {
  ChannelSet s(2, 1, 1);
  s.link(0, 0, 0).true_channel = ComplexVector::Ones(2);
  std::ostringstream os;
  write_channel_csv(s, os);
  CHECK(os.str() == "bs,cell,user,kind,re_0,im_0,re_1,im_1\n0,0,0,true,1,0,1,0\n");
}

}  // TEST_SUITE
