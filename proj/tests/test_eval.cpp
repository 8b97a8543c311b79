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
#include "gpip/gpip.hpp"
#include "gpip/random.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>

using namespace gpip;

TEST_SUITE("eval") {

TEST_CASE("single user matched filter SINR") {
  Rng rng(1);
  const ComplexMatrix h = standard_complex_gaussian(rng, 4);
  const RateReport r = true_sinr(h, ComplexMatrix(h / h.norm()), 0.25);
  CHECK(r.sinr(0) == doctest::Approx(h.squaredNorm() / 0.25));
  CHECK(r.rate(0) == doctest::Approx(std::log2(1.0 + r.sinr(0))));
  CHECK(r.sum_rate == r.rate.sum());
}

TEST_CASE("zero-forcing nulls intra-cell interference") {
  Rng rng(2);
  ComplexMatrix h(4, 3);
  for (Index c = 0; c < 3; ++c) h.col(c) = standard_complex_gaussian(rng, 4);
  ComplexMatrix f = h * (h.adjoint() * h).inverse();
  for (Index c = 0; c < 3; ++c) f.col(c) /= f.col(c).norm() * std::sqrt(3.0);
  const RealMatrix g = (h.adjoint() * f).cwiseAbs2();
  for (Index k = 0; k < 3; ++k)
    for (Index i = 0; i < 3; ++i)
      if (i != k) CHECK(g(k, i) < 1e-15);
  const RateReport r = true_sinr(h, f, 0.1);
  for (Index k = 0; k < 3; ++k) CHECK(r.sinr(k) == doctest::Approx(g(k, k) / 0.1).epsilon(1e-12));
}

TEST_CASE("two-cell SINR against a term-by-term sum") {
  Rng rng(3);
  const Index n = 3, k = 2, l = 2;
  ChannelSet cs(n, l, k);
  for (Index j = 0; j < l; ++j)
    for (Index c = 0; c < l; ++c)
      for (Index u = 0; u < k; ++u) cs.link(j, c, u).true_channel = standard_complex_gaussian(rng, n);
  std::vector<ComplexMatrix> f;
  for (Index j = 0; j < l; ++j) {
    ComplexMatrix m(n, k);
    for (Index u = 0; u < k; ++u) m.col(u) = standard_complex_gaussian(rng, n);
    f.push_back(m / m.norm());
  }
  const double noise = 0.3;
  const RateReport r = true_sinr(cs, f, noise);
  for (Index c = 0; c < l; ++c)
    for (Index u = 0; u < k; ++u) {
      const ComplexVector& h = cs.link(c, c, u).true_channel;
      const double desired = std::norm(h.dot(f[static_cast<std::size_t>(c)].col(u)));
      double iui = 0.0, ici = 0.0;
      for (Index i = 0; i < k; ++i)
        if (i != u) iui += std::norm(h.dot(f[static_cast<std::size_t>(c)].col(i)));
      for (Index j = 0; j < l; ++j) {
        if (j == c) continue;
        for (Index i = 0; i < k; ++i)
          ici += std::norm(cs.link(j, c, u).true_channel.dot(f[static_cast<std::size_t>(j)].col(i)));
      }
      CHECK(std::abs(r.sinr(c * k + u) - desired / (iui + ici + noise)) < 1e-12);
    }
}

TEST_CASE("GMI lower bound") {
  Rng rng(4);
  ComplexMatrix h(3, 3);
  for (Index c = 0; c < 3; ++c) h.col(c) = standard_complex_gaussian(rng, 3);
  ComplexMatrix f(3, 3);
  for (Index c = 0; c < 3; ++c) f.col(c) = standard_complex_gaussian(rng, 3);
  f /= f.norm();
  const RealVector noise = RealVector::Constant(3, 0.2);
  const RateReport a = gmi_rate_lb(h, {}, f, noise);
  const RateReport b = true_sinr(h, f, 0.2);
  CHECK(max_abs(RealVector(a.rate - b.rate)) < 1e-12);

  ComplexMatrix f0 = f;
  f0.col(1).setZero();
  CHECK(gmi_rate_lb(h, {}, f0, noise).rate(1) == 0.0);

  // cross-module identity with the Rayleigh-quotient objective
  for (std::uint64_t s = 0; s < 10; ++s) {
    const oracle::Instance in = oracle::random_instance(4, 3, 1, -0.2, 0.3, 60 + s, true);
    const auto pairs = oracle::to_pairs(in);
    ComplexMatrix est(4, 3);
    std::vector<HermitianMatrix> phi;
    for (Index u = 0; u < 3; ++u) {
      est.col(u) = in.users[static_cast<std::size_t>(u)].channels[0];
      phi.emplace_back(in.users[static_cast<std::size_t>(u)].phi[0]);
    }
    Rng r2(s);
    const ComplexVector fv = oracle::random_unit(12, r2);
    const PrecoderStack st(fv, 4, 3);
    const RateReport g = gmi_rate_lb(est, phi, st.as_matrix(), RealVector::Constant(3, 0.3), in.w);
    CHECK(std::abs(objective_lambda(pairs, in.w, fv).log2_value - g.weighted_sum_rate) < 1e-9);
  }
}

TEST_CASE("Monte Carlo mean") {
  auto zero = [](Index, std::uint64_t seed) {
    Rng rng(seed);
    const ComplexMatrix h = standard_complex_gaussian(rng, 2);
    return true_sinr(h, ComplexMatrix::Zero(2, 1), 1.0).sum_rate;
  };
  CHECK(ergodic_mean(zero, 50, 1).mean == 0.0);

  auto trial = [](Index, std::uint64_t seed) {
    Rng rng(seed);
    const ComplexMatrix h = standard_complex_gaussian(rng, 2);
    return std::log2(1.0 + h.squaredNorm());
  };
  const MeanEstimate a = ergodic_mean(trial, 400, 7);
  const MeanEstimate b = ergodic_mean(trial, 400, 7);
  CHECK(a.mean == b.mean);
  CHECK(a.half_width == b.half_width);

  // half-width shrinks as 1/√n
  const MeanEstimate c = ergodic_mean(trial, 1600, 7);
  const MeanEstimate d = ergodic_mean(trial, 6400, 7);
  for (double ratio : {a.half_width / c.half_width, c.half_width / d.half_width}) {
    CHECK(ratio > 2.0 / 1.5);
    CHECK(ratio < 2.0 * 1.5);
  }
}

TEST_CASE("proportional-fair weights") {
  RealVector eq = RealVector::Constant(4, 2.0);
  CHECK(max_abs(RealVector(pf_weights(eq) - RealVector::Ones(4))) < 1e-15);

  RealVector r(2);
  r << 1.0, 3.0;
  const RealVector w = pf_weights(r);
  CHECK(w(0) == doctest::Approx(1.5));
  CHECK(w(1) == doctest::Approx(0.5));

  RealVector starve(3);
  starve << 2.0, 0.0, 1.0;
  Index top = -1;
  pf_weights(starve).maxCoeff(&top);
  CHECK(top == 1);

  const RealVector t = pf_update(r, RealVector::Zero(2));
  CHECK(t(0) == doctest::Approx(0.9));
  CHECK(t(1) == doctest::Approx(2.7));
}

TEST_CASE("rate CDF") {
  const CdfCurve c = rate_cdf({3.0, 1.0, 2.0});
  CHECK(c.values == std::vector<double>{1.0, 2.0, 3.0});
  CHECK(c.quantiles[0] == doctest::Approx(1.0 / 3.0));
  CHECK(c.quantiles[2] == 1.0);

  const CdfCurve k = rate_cdf({5.0, 5.0});
  CHECK(k.values == std::vector<double>{5.0, 5.0});

  Rng rng(9);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::vector<double> xs(1000);
  for (auto& x : xs) x = u(rng);
  std::vector<double> sorted = xs;
  std::stable_sort(sorted.begin(), sorted.end());
  CHECK(rate_cdf(xs).values == sorted);
  const CdfCurve cdf = rate_cdf(xs);
  CHECK(std::is_sorted(cdf.quantiles.begin(), cdf.quantiles.end()));
}

}  // TEST_SUITE
