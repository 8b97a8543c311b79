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

#include "gpip/coop.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <chrono>

using namespace gpip;

namespace {

// Cluster-wide channel set holding the instance's estimates; cell c is group c.
ChannelSet to_channel_set(const oracle::Instance& in) {
  ChannelSet cs(in.n, in.groups, in.k);
  for (const auto& u : in.users) {
    for (Index g = 0; g < in.groups; ++g) {
      Link& l = cs.link(g, u.home, u.user);
      l.true_channel = u.channels[static_cast<std::size_t>(g)];
      l.estimate = l.true_channel;
      l.error_cov = HermitianMatrix(u.phi[static_cast<std::size_t>(g)]);
    }
  }
  return cs;
}

Cluster all_cells(Index c) {
  Cluster cl;
  for (Index i = 0; i < c; ++i) cl.cells.push_back(i);
  return cl;
}

RealVector noise_of(const oracle::Instance& in) {
  RealVector v(static_cast<Index>(in.users.size()));
  for (std::size_t q = 0; q < in.users.size(); ++q) v(static_cast<Index>(q)) = in.users[q].noise;
  return v;
}

}  // namespace

TEST_SUITE("coop") {

TEST_CASE("one-cell cluster reproduces the single-cell pair") {
  const oracle::Instance in = oracle::random_instance(3, 3, 1, -0.2, 0.4, 21);
  const ChannelSet cs = to_channel_set(in);
  for (Index k = 0; k < 3; ++k) {
    const EffectivePair a = build_coop_pair(cs, all_cells(1), 0, k, 0.4);
    const EffectivePair b = build_effective_pair(cs, 0, k, 0.4);
    CHECK(a.a_matrix().to_dense() == b.a_matrix().to_dense());
    CHECK(a.b_matrix().to_dense() == b.b_matrix().to_dense());
  }
}

TEST_CASE("cooperative quadratic forms") {
  const oracle::Instance in = oracle::random_instance(2, 2, 2, -0.2, 0.3, 22);
  const ChannelSet cs = to_channel_set(in);
  const auto pairs = build_coop_pairs(cs, all_cells(2), noise_of(in));
  Rng rng(1);
  for (int t = 0; t < 20; ++t) {
    const ComplexVector f = oracle::random_unit(8, rng);
    for (std::size_t q = 0; q < pairs.size(); ++q) {
      const auto& u = in.users[q];
      CHECK(std::abs(pairs[q].quadratic_a(f) - oracle::direct_a(in, u, f)) < 1e-10);
      CHECK(std::abs(pairs[q].quadratic_b(f) - oracle::direct_b(in, u, f)) < 1e-10);
      const double gap = pairs[q].quadratic_a(f) - pairs[q].quadratic_b(f);
      const ComplexVector fk = f.segment((u.home * 2 + u.user) * 2, 2);
      CHECK(std::abs(gap - std::norm(u.channels[static_cast<std::size_t>(u.home)].dot(fk))) < 1e-12);
    }
    CHECK(std::abs(lambda_coop(pairs, in.w, f).log2_value - oracle::sinr_form_rate(in, f)) < 1e-9);
  }
}

TEST_CASE("one-cell cooperative GPIP equals single-cell GPIP") {
  const oracle::Instance in = oracle::random_instance(4, 3, 1, 0.1, 0.2, 23, true);
  const ChannelSet cs = to_channel_set(in);
  const auto coop = build_coop_pairs(cs, all_cells(1), noise_of(in));
  const auto single = build_effective_pairs(cs, 0, noise_of(in));
  const CoopResult c = gpip_coop(coop, in.w, mrt_initialization(coop));
  const GpipResult s = gpip_iterate(single, in.w, mrt_initialization(single));
  CHECK(max_abs(ComplexVector(c.scaled.stacked - s.precoder.stacked)) < 1e-10);
  CHECK(c.cell_norms(0) == doctest::Approx(1.0));
  CHECK(std::abs(lambda_coop(coop, in.w, s.precoder.stacked).log2_value -
                 objective_lambda(single, in.w, s.precoder.stacked).log2_value) < 1e-12);
}

TEST_CASE("rescaling enforces the per-BS constraint") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const oracle::Instance in = oracle::random_instance(4, 3, 3, 0.05, 0.3, 30 + s);
    const auto pairs = build_coop_pairs(to_channel_set(in), all_cells(3), noise_of(in));
    const CoopResult r = gpip_coop(pairs, in.w, mrt_initialization(pairs));
    double top = 0.0;
    for (Index g = 0; g < 3; ++g) {
      const double n = r.scaled.group_segment(g).norm();
      CHECK(n <= 1.0 + 1e-12);
      CHECK(n == doctest::Approx(r.cell_norms(g)));
      top = std::max(top, n);
    }
    CHECK(std::abs(top - 1.0) < 1e-12);
  }
}

TEST_CASE("mirrored two-cell instance splits power evenly") {
  oracle::Instance in = oracle::random_instance(3, 2, 2, 0.0, 0.3, 24);
  // user i of cell 1 sees cell 0's channels with the transmitters swapped
  for (Index i = 0; i < 2; ++i) {
    auto& u0 = in.users[static_cast<std::size_t>(i)];
    auto& u1 = in.users[static_cast<std::size_t>(2 + i)];
    u1.channels = {u0.channels[1], u0.channels[0]};
    u1.phi = {u0.phi[1], u0.phi[0]};
  }
  const auto pairs = build_coop_pairs(to_channel_set(in), all_cells(2), noise_of(in));
  const CoopResult r = gpip_coop(pairs, in.w, mrt_initialization(pairs));
  CHECK(std::abs(r.cell_norms(0) - r.cell_norms(1)) < 1e-6);
}

TEST_CASE("cooperative GPIP is near the random-search optimum") {
  for (std::uint64_t s = 0; s < 2; ++s) {
    const oracle::Instance in = oracle::random_instance(2, 2, 2, 0.0, 0.3, 40 + s);
    const auto pairs = build_coop_pairs(to_channel_set(in), all_cells(2), noise_of(in));
    GpipOptions opt;
    opt.tolerance = 1e-6;
    opt.max_iterations = 5000;
    const CoopResult r = gpip_coop(pairs, in.w, mrt_initialization(pairs), opt);
    const double best = oracle::random_search(in, 20000, s);
    CHECK(lambda_coop(pairs, in.w, r.scaled.stacked).lambda() >= 0.99 * std::exp2(best));
  }
}

TEST_CASE("cluster formation partitions the sites") {
  const auto sites = hexagonal_sites(19, 1000.0);
  for (Index c : {1, 2, 3, 7}) {
    const auto clusters = form_clusters(sites, c, 5);
    std::vector<int> count(19, 0);
    for (const auto& cl : clusters) {
      CHECK(cl.size() <= c);
      for (Index i : cl.cells) ++count[static_cast<std::size_t>(i)];
    }
    for (int n : count) CHECK(n == 1);
  }
  CHECK(form_clusters(sites, 3, 5)[0].cells == form_clusters(sites, 3, 5)[0].cells);
  // a 3-cluster is a triangle of neighbours
  for (const auto& cl : form_clusters(hexagonal_sites(7, 1000.0), 3, 9)) {
    if (cl.size() < 2) continue;
    CHECK((sites[static_cast<std::size_t>(cl.cells[0])] - sites[static_cast<std::size_t>(cl.cells[1])]).norm() <
          1000.0 * 1.8);
  }
}

TEST_CASE("per-iteration cost grows about quadratically with the cluster size") {
  auto per_iteration = [](Index c) {
    const oracle::Instance in = oracle::random_instance(8, 4, c, 0.05, 0.3, 50);
    const auto pairs = build_coop_pairs(to_channel_set(in), all_cells(c), noise_of(in));
    GpipOptions opt;
    opt.tolerance = 1e-300;
    opt.max_iterations = 40;
    const PrecoderStack init = mrt_initialization(pairs);
    double best = 1e300;
    for (int rep = 0; rep < 3; ++rep) {
      const auto t0 = std::chrono::steady_clock::now();
      const GpipResult r = gpip_iterate(pairs, in.w, init, opt);
      const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      best = std::min(best, dt / r.iterations);
    }
    return best;
  };
  const double t2 = per_iteration(2);
  const double t4 = per_iteration(4);
  const double ratio = t4 / t2;
  MESSAGE("t(C=4)/t(C=2) = " << ratio);
  CHECK(ratio > 2.0);
  CHECK(ratio < 8.0);
}

TEST_CASE("CSV row carries cell index and norms") {
  const oracle::Instance in = oracle::random_instance(2, 2, 2, 0.0, 0.3, 25);
  const auto pairs = build_coop_pairs(to_channel_set(in), all_cells(2), noise_of(in));
  const CoopResult r = gpip_coop(pairs, in.w, mrt_initialization(pairs));
  const std::string h = coop_csv_header(2, 2);
  const std::string row = coop_csv_row(1, 0.0, 0, r);
  CHECK(std::count(h.begin(), h.end(), ',') == std::count(row.begin(), row.end(), ','));
  CHECK(h.rfind("cell,seed,", 0) == 0);
}

}  // TEST_SUITE
