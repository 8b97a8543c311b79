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

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <random>
#include <stdexcept>

namespace gpip {

Index Cluster::position(Index cell) const {
  const auto it = std::find(cells.begin(), cells.end(), cell);
  if (it == cells.end()) throw std::out_of_range("Cluster: cell not in cluster");
  return static_cast<Index>(it - cells.begin());
}

EffectivePair build_coop_pair(const ChannelSet& csit, const Cluster& cluster, Index cell, Index user,
                              double noise_ratio) {
  if (!(noise_ratio > 0)) throw std::invalid_argument("build_coop_pair: noise ratio must be positive");
  if (cluster.size() == 0) throw std::invalid_argument("build_coop_pair: empty cluster");
  const Index n = csit.n_antennas();
  EffectivePair p;
  for (Index bs : cluster.cells) {
    const Link& link = csit.link(bs, cell, user);
    if (link.estimate.size() != n) throw DimensionMismatch("build_coop_pair: missing or malformed estimate");
    HermitianMatrix blk = HermitianMatrix::outer(link.estimate);
    if (link.error_cov.dim() == n) {
      blk += link.error_cov;
    } else if (link.error_cov.dim() != 0) {
      throw DimensionMismatch("build_coop_pair: error covariance size");
    }
    blk.add_ridge(noise_ratio);
    p.group_blocks.push_back(std::move(blk));
  }
  p.group = cluster.position(cell);
  p.desired = csit.link(cell, cell, user).estimate;
  p.user = user;
  p.users_per_group = csit.users_per_cell();
  p.noise_ratio = noise_ratio;
  return p;
}

std::vector<EffectivePair> build_coop_pairs(const ChannelSet& csit, const Cluster& cluster,
                                            const RealVector& noise_ratios) {
  const Index k = csit.users_per_cell();
  if (noise_ratios.size() != cluster.size() * k) throw DimensionMismatch("build_coop_pairs: noise ratios");
  std::vector<EffectivePair> pairs;
  for (Index c = 0; c < cluster.size(); ++c)
    for (Index u = 0; u < k; ++u)
      pairs.push_back(build_coop_pair(csit, cluster, cluster.cells[static_cast<std::size_t>(c)], u,
                                      noise_ratios(c * k + u)));
  return pairs;
}

Objective lambda_coop(std::span<const EffectivePair> pairs, const Weights& w, const ComplexVector& f) {
  return objective_lambda(pairs, w, f);
}

CoopResult gpip_coop(std::span<const EffectivePair> pairs, const Weights& w, const PrecoderStack& init,
                     const GpipOptions& opt) {
  CoopResult r;
  r.gpip = gpip_iterate(pairs, w, init, opt);
  const PrecoderStack& f = r.gpip.precoder;
  RealVector norms(f.n_groups);
  for (Index g = 0; g < f.n_groups; ++g) norms(g) = f.group_segment(g).norm();
  const double top = norms.maxCoeff();
  r.scaled = f;
  r.scaled.stacked /= top;
  r.cell_norms = norms / top;
  return r;
}

std::vector<Cluster> form_clusters(const std::vector<Eigen::Vector2d>& sites, Index size, std::uint64_t seed) {
  if (size < 1) throw std::invalid_argument("form_clusters: size must be at least 1");
  const Index n = static_cast<Index>(sites.size());
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<bool> taken(static_cast<std::size_t>(n), false);
  std::vector<Cluster> out;
  for (Index s : order) {
    if (taken[static_cast<std::size_t>(s)]) continue;
    std::vector<Index> free;
    for (Index j = 0; j < n; ++j)
      if (!taken[static_cast<std::size_t>(j)] && j != s) free.push_back(j);
    std::stable_sort(free.begin(), free.end(), [&](Index a, Index b) {
      return (sites[static_cast<std::size_t>(a)] - sites[static_cast<std::size_t>(s)]).norm() <
             (sites[static_cast<std::size_t>(b)] - sites[static_cast<std::size_t>(s)]).norm();
    });
    Cluster c;
    c.cells.push_back(s);
    for (std::size_t i = 0; i < free.size() && c.size() < size; ++i) c.cells.push_back(free[i]);
    for (Index j : c.cells) taken[static_cast<std::size_t>(j)] = true;
    out.push_back(std::move(c));
  }
  return out;
}

std::string coop_csv_header(Index n_users, Index cluster_size) {
  std::string h = "cell," + gpip_csv_header(n_users * cluster_size);
  for (Index c = 0; c < cluster_size; ++c) h += ",cell_norm_" + std::to_string(c);
  return h;
}

std::string coop_csv_row(std::uint64_t seed, double snr_db, Index cell, const CoopResult& r) {
  std::string row = std::to_string(cell) + ',' + gpip_csv_row(seed, snr_db, r.gpip);
  char buf[32];
  for (Index c = 0; c < r.cell_norms.size(); ++c) {
    std::snprintf(buf, sizeof buf, ",%.10g", r.cell_norms(c));
    row += buf;
  }
  return row;
}

}  // namespace gpip
