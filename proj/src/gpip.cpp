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

#include "gpip/gpip.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

namespace gpip {

PrecoderStack::PrecoderStack(ComplexVector f, Index n_antennas_, Index users_per_group_, Index n_groups_)
    : stacked(std::move(f)), n_antennas(n_antennas_), users_per_group(users_per_group_), n_groups(n_groups_) {
  if (stacked.size() != n_antennas * users_per_group * n_groups) {
    throw DimensionMismatch("PrecoderStack: length is not N·K·groups");
  }
}

PrecoderStack PrecoderStack::zero(Index n_antennas, Index users_per_group, Index n_groups) {
  return PrecoderStack(ComplexVector::Zero(n_antennas * users_per_group * n_groups), n_antennas, users_per_group,
                       n_groups);
}

ComplexMatrix PrecoderStack::as_matrix(Index group) const {
  ComplexMatrix m(n_antennas, users_per_group);
  for (Index k = 0; k < users_per_group; ++k) m.col(k) = segment(group, k);
  return m;
}

RealVector PrecoderStack::segment_powers() const {
  RealVector p(n_segments());
  for (Index s = 0; s < n_segments(); ++s) p(s) = stacked.segment(s * n_antennas, n_antennas).squaredNorm();
  return p;
}

Weights uniform_weights(Index n) { return Weights::Ones(n); }

// ----------------------------------------------------------------------------
// EffectivePair
// ----------------------------------------------------------------------------

namespace {

// Σ_i f_{j,i}ᴴ M f_{j,i} over the K segments of group j.
double group_quadratic(const HermitianMatrix& m, const ComplexVector& f, Index group, Index users, Index n) {
  const auto seg = f.segment(group * users * n, users * n);
  const Eigen::Map<const ComplexMatrix> fj(seg.data(), n, users);
  return (fj.conjugate().cwiseProduct(m.matrix() * fj)).sum().real();
}

}  // namespace

double EffectivePair::quadratic_a(const ComplexVector& f) const {
  if (f.size() != dim()) throw DimensionMismatch("EffectivePair: precoder length");
  double acc = 0.0;
  for (Index j = 0; j < n_groups(); ++j) {
    acc += group_quadratic(group_blocks[static_cast<std::size_t>(j)], f, j, users_per_group, block_dim());
  }
  return acc;
}

double EffectivePair::quadratic_b(const ComplexVector& f) const {
  const auto seg = f.segment((group * users_per_group + user) * block_dim(), block_dim());
  return quadratic_a(f) - std::norm(desired.dot(seg));
}

HermitianMatrix EffectivePair::a_block(Index g, Index /*u*/) const { return group_blocks[static_cast<std::size_t>(g)]; }

HermitianMatrix EffectivePair::b_block(Index g, Index u) const {
  HermitianMatrix b = group_blocks[static_cast<std::size_t>(g)];
  if (g == group && u == user) b -= HermitianMatrix::outer(desired);
  return b;
}

BlockDiagonal EffectivePair::a_matrix() const {
  std::vector<HermitianMatrix> blocks;
  for (Index j = 0; j < n_groups(); ++j)
    for (Index i = 0; i < users_per_group; ++i) blocks.push_back(a_block(j, i));
  return BlockDiagonal(std::move(blocks));
}

BlockDiagonal EffectivePair::b_matrix() const {
  std::vector<HermitianMatrix> blocks;
  for (Index j = 0; j < n_groups(); ++j)
    for (Index i = 0; i < users_per_group; ++i) blocks.push_back(b_block(j, i));
  return BlockDiagonal(std::move(blocks));
}

EffectivePair build_effective_pair(const ChannelSet& csit, Index cell, Index user, double noise_ratio) {
  if (!(noise_ratio > 0)) throw std::invalid_argument("build_effective_pair: noise ratio must be positive");
  const Link& link = csit.link(cell, cell, user);
  const Index n = csit.n_antennas();
  if (link.estimate.size() != n) throw DimensionMismatch("build_effective_pair: missing or malformed estimate");
  HermitianMatrix block = HermitianMatrix::outer(link.estimate);
  if (link.error_cov.dim() == n) {
    block += link.error_cov;
  } else if (link.error_cov.dim() != 0) {
    throw DimensionMismatch("build_effective_pair: error covariance size");
  }
  block.add_ridge(noise_ratio);

  EffectivePair p;
  p.group_blocks.push_back(std::move(block));
  p.desired = link.estimate;
  p.group = 0;
  p.user = user;
  p.users_per_group = csit.users_per_cell();
  p.noise_ratio = noise_ratio;
  return p;
}

std::vector<EffectivePair> build_effective_pairs(const ChannelSet& csit, Index cell, const RealVector& noise_ratios) {
  if (noise_ratios.size() != csit.users_per_cell()) throw DimensionMismatch("build_effective_pairs: noise ratios");
  std::vector<EffectivePair> pairs;
  for (Index k = 0; k < csit.users_per_cell(); ++k) pairs.push_back(build_effective_pair(csit, cell, k, noise_ratios(k)));
  return pairs;
}

// ----------------------------------------------------------------------------
// Objective and weighted pencil
// ----------------------------------------------------------------------------

namespace {

void check_problem(std::span<const EffectivePair> pairs, const Weights& w, const ComplexVector& f) {
  if (pairs.empty()) throw std::invalid_argument("gpip: no pairs");
  if (w.size() != static_cast<Index>(pairs.size())) throw DimensionMismatch("gpip: one weight per pair required");
  if ((w.array() <= 0).any()) throw std::invalid_argument("gpip: weights must be positive");
  const auto& p0 = pairs.front();
  for (const auto& p : pairs) {
    if (p.block_dim() != p0.block_dim() || p.n_groups() != p0.n_groups() || p.users_per_group != p0.users_per_group) {
      throw DimensionMismatch("gpip: pairs disagree on dimensions");
    }
  }
  if (f.size() != p0.dim()) throw DimensionMismatch("gpip: precoder length");
}

struct QuotientTerms {
  RealVector log_a;
  RealVector log_b;
};

QuotientTerms quotient_terms(std::span<const EffectivePair> pairs, const ComplexVector& f) {
  QuotientTerms t{RealVector(static_cast<Index>(pairs.size())), RealVector(static_cast<Index>(pairs.size()))};
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const double a = pairs[p].quadratic_a(f);
    const double b = a - std::norm(pairs[p].desired.dot(
                              f.segment((pairs[p].group * pairs[p].users_per_group + pairs[p].user) *
                                            pairs[p].block_dim(),
                                        pairs[p].block_dim())));
    t.log_a(static_cast<Index>(p)) = std::log(a);
    t.log_b(static_cast<Index>(p)) = std::log(b);
  }
  return t;
}

Objective objective_from_logs(const RealVector& log_a, const RealVector& log_b, const Weights& w) {
  return {w.dot(log_a - log_b) / std::numbers::ln2};
}

// c_i ∝ w_i / a_i, d_i ∝ w_i / b_i, divided by their joint maximum.
void pencil_coefficients(const RealVector& log_a, const RealVector& log_b, const Weights& w, RealVector& c,
                         RealVector& d) {
  const RealVector lw = w.array().log();
  const RealVector lc = lw - log_a;
  const RealVector ld = lw - log_b;
  const double shift = std::max(lc.maxCoeff(), ld.maxCoeff());
  c = (lc.array() - shift).exp();
  d = (ld.array() - shift).exp();
}

}  // namespace

Objective objective_lambda(std::span<const EffectivePair> pairs, const Weights& w, const ComplexVector& f) {
  check_problem(pairs, w, f);
  if (!(f.norm() > 0)) throw std::invalid_argument("objective_lambda: zero precoder");
  const auto t = quotient_terms(pairs, f);
  return objective_from_logs(t.log_a, t.log_b, w);
}

ComplexVector WeightedPencil::apply_a(const ComplexVector& f) const {
  ComplexVector y(f.size());
  const Index n = n_antennas;
  for (Index j = 0; j < n_groups; ++j)
    for (Index i = 0; i < users_per_group; ++i) {
      const Index off = (j * users_per_group + i) * n;
      y.segment(off, n).noalias() = a_block(j, i).matrix() * f.segment(off, n);
    }
  return y;
}

ComplexVector WeightedPencil::apply_b(const ComplexVector& f) const {
  ComplexVector y(f.size());
  const Index n = n_antennas;
  for (Index j = 0; j < n_groups; ++j)
    for (Index i = 0; i < users_per_group; ++i) {
      const Index off = (j * users_per_group + i) * n;
      y.segment(off, n).noalias() = b_block(j, i).matrix() * f.segment(off, n);
    }
  return y;
}

BlockDiagonal WeightedPencil::a_bar() const {
  std::vector<HermitianMatrix> blocks;
  for (Index j = 0; j < n_groups; ++j)
    for (Index i = 0; i < users_per_group; ++i) blocks.push_back(a_block(j, i));
  return BlockDiagonal(std::move(blocks));
}

BlockDiagonal WeightedPencil::b_bar() const { return BlockDiagonal(b_blocks); }

WeightedPencil build_weighted_pair(std::span<const EffectivePair> pairs, const Weights& w, const ComplexVector& f) {
  check_problem(pairs, w, f);
  const auto t = quotient_terms(pairs, f);
  const auto& p0 = pairs.front();

  WeightedPencil pen;
  pen.n_antennas = p0.block_dim();
  pen.users_per_group = p0.users_per_group;
  pen.n_groups = p0.n_groups();
  pen.objective = objective_from_logs(t.log_a, t.log_b, w);
  pencil_coefficients(t.log_a, t.log_b, w, pen.a_coeff, pen.b_coeff);

  const Index n = pen.n_antennas;
  std::vector<HermitianMatrix> b_groups;
  for (Index j = 0; j < pen.n_groups; ++j) {
    HermitianMatrix a = HermitianMatrix::zero(n);
    HermitianMatrix b = HermitianMatrix::zero(n);
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const auto& blk = pairs[p].group_blocks[static_cast<std::size_t>(j)];
      a += pen.a_coeff(static_cast<Index>(p)) * blk;
      b += pen.b_coeff(static_cast<Index>(p)) * blk;
    }
    pen.a_groups.push_back(std::move(a));
    b_groups.push_back(std::move(b));
  }
  for (Index j = 0; j < pen.n_groups; ++j)
    for (Index i = 0; i < pen.users_per_group; ++i) pen.b_blocks.push_back(b_groups[static_cast<std::size_t>(j)]);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    auto& blk = pen.b_blocks[static_cast<std::size_t>(pairs[p].group * pen.users_per_group + pairs[p].user)];
    blk -= pen.b_coeff(static_cast<Index>(p)) * HermitianMatrix::outer(pairs[p].desired);
  }
  return pen;
}

double kkt_residual(const WeightedPencil& pencil, const ComplexVector& f) {
  const ComplexVector af = pencil.apply_a(f);
  return (af - pencil.apply_b(f)).norm() / af.norm();
}

double kkt_residual(std::span<const EffectivePair> pairs, const Weights& w, const ComplexVector& f) {
  return kkt_residual(build_weighted_pair(pairs, w, f), f);
}

// ----------------------------------------------------------------------------
// Fixed-point driver shared by the general and covariance-free paths
// ----------------------------------------------------------------------------

namespace {

struct FixedPointOps {
  std::function<ComplexVector(const ComplexVector&)> step;
  std::function<Objective(const ComplexVector&)> objective;
  std::function<double(const ComplexVector&)> kkt;
};

GpipResult run_fixed_point(const PrecoderStack& init, const FixedPointOps& ops, const GpipOptions& opt) {
  if (!(opt.tolerance > 0)) throw std::invalid_argument("gpip: tolerance must be positive");
  if (opt.max_iterations < 1) throw std::invalid_argument("gpip: max_iterations must be at least 1");
  const double n0 = init.norm();
  if (!(n0 > 0)) throw std::invalid_argument("gpip: initial precoder is zero");

  GpipResult r;
  ComplexVector f = init.stacked / n0;
  Objective obj = ops.objective(f);
  r.trajectory.push_back(obj.log2_value);
  ComplexVector best = f;
  Objective best_obj = obj;

  for (int m = 1; m <= opt.max_iterations; ++m) {
    ComplexVector g = ops.step(f);
    const double gn = g.norm();
    if (!(gn > 0) || !std::isfinite(gn)) throw NumericsError("gpip: iterate collapsed");
    g /= gn;
    const double dist = (g - f).norm();
    f = std::move(g);
    const Objective next = ops.objective(f);
    if (next.log2_value < obj.log2_value) ++r.non_monotone_steps;
    obj = next;
    r.trajectory.push_back(obj.log2_value);
    r.iterations = m;
    if (obj.log2_value > best_obj.log2_value) {
      best = f;
      best_obj = obj;
    }
    if (dist <= opt.tolerance) {
      r.converged = true;
      break;
    }
  }

  const double slack = 1e-12 * std::max(1.0, std::abs(best_obj.log2_value));
  if (!r.converged || obj.log2_value < best_obj.log2_value - slack) {
    r.returned_best_iterate = obj.log2_value < best_obj.log2_value;
    f = best;
    obj = best_obj;
  }
  r.precoder = PrecoderStack(f, init.n_antennas, init.users_per_group, init.n_groups);
  r.objective = obj;
  r.kkt_residual = ops.kkt(f);
  r.per_user_power = r.precoder.segment_powers();
  r.schedule = extract_schedule(r.precoder, opt.selection_threshold);
  return r;
}

}  // namespace

PrecoderStack mrt_initialization(std::span<const EffectivePair> pairs) {
  if (pairs.empty()) throw std::invalid_argument("mrt_initialization: no pairs");
  const auto& p0 = pairs.front();
  PrecoderStack s = PrecoderStack::zero(p0.block_dim(), p0.users_per_group, p0.n_groups());
  for (const auto& p : pairs) s.segment(p.group, p.user) = p.desired;
  const double nrm = s.norm();
  if (nrm > 0) s.stacked /= nrm;
  return s;
}

GpipResult gpip_iterate(std::span<const EffectivePair> pairs, const Weights& w, const PrecoderStack& init,
                        const GpipOptions& opt) {
  check_problem(pairs, w, init.stacked);
  FixedPointOps ops;
  ops.step = [&](const ComplexVector& f) {
    const WeightedPencil pen = build_weighted_pair(pairs, w, f);
    const ComplexVector af = pen.apply_a(f);
    ComplexVector g(f.size());
    const Index n = pen.n_antennas;
    for (Index j = 0; j < pen.n_groups; ++j)
      for (Index i = 0; i < pen.users_per_group; ++i) {
        const Index off = (j * pen.users_per_group + i) * n;
        g.segment(off, n) = solve_hermitian(pen.b_block(j, i), ComplexMatrix(af.segment(off, n)));
      }
    return g;
  };
  ops.objective = [&](const ComplexVector& f) { return objective_lambda(pairs, w, f); };
  ops.kkt = [&](const ComplexVector& f) { return kkt_residual(pairs, w, f); };
  return run_fixed_point(init, ops, opt);
}

// ----------------------------------------------------------------------------
// Covariance-free path
// ----------------------------------------------------------------------------

std::vector<EffectivePair> ScalarCovarianceProblem::to_pairs() const {
  const Index n = n_antennas();
  std::vector<EffectivePair> pairs;
  for (Index k = 0; k < n_users(); ++k) {
    EffectivePair p;
    HermitianMatrix blk = HermitianMatrix::outer(estimates[static_cast<std::size_t>(k)]);
    blk.add_ridge(alpha(k) + noise_ratio(k));
    p.group_blocks.push_back(std::move(blk));
    p.desired = estimates[static_cast<std::size_t>(k)];
    p.user = k;
    p.users_per_group = n_users();
    p.noise_ratio = noise_ratio(k);
    pairs.push_back(std::move(p));
  }
  (void)n;
  return pairs;
}

namespace {

void check_scalar_problem(const ScalarCovarianceProblem& prob, const Weights& w, const ComplexVector& f) {
  const Index k = prob.n_users();
  if (k == 0) throw std::invalid_argument("gpip_covfree: no users");
  if (prob.alpha.size() != k || prob.noise_ratio.size() != k || w.size() != k) {
    throw DimensionMismatch("gpip_covfree: per-user arrays disagree");
  }
  for (const auto& h : prob.estimates)
    if (h.size() != prob.n_antennas()) throw DimensionMismatch("gpip_covfree: estimate length");
  if ((prob.alpha.array() < 0).any()) throw std::invalid_argument("gpip_covfree: α must be nonnegative");
  if ((prob.noise_ratio.array() <= 0).any()) throw std::invalid_argument("gpip_covfree: noise ratio must be positive");
  if ((w.array() <= 0).any()) throw std::invalid_argument("gpip_covfree: weights must be positive");
  if (f.size() != k * prob.n_antennas()) throw DimensionMismatch("gpip_covfree: precoder length");
}

// Everything one iteration needs, computed in O(K²N).
struct ScalarState {
  ComplexMatrix proj;  // proj(p, i) = ĥ_pᴴ f_i
  RealVector log_a;
  RealVector log_b;
  RealVector c;
  RealVector d;
  double gamma = 0.0;  // Ā = Σ c_p ĥ_pĥ_pᴴ + γ·I
  double delta = 0.0;  // B̄_i = Σ_{p≠i} d_p ĥ_pĥ_pᴴ + δ·I
};

ScalarState scalar_state(const ScalarCovarianceProblem& prob, const Weights& w, const ComplexVector& f) {
  const Index k = prob.n_users();
  const Index n = prob.n_antennas();
  const Eigen::Map<const ComplexMatrix> fm(f.data(), n, k);
  ComplexMatrix h(n, k);
  for (Index p = 0; p < k; ++p) h.col(p) = prob.estimates[static_cast<std::size_t>(p)];

  ScalarState s;
  s.proj = h.adjoint() * fm;
  const double fnorm2 = f.squaredNorm();
  s.log_a.resize(k);
  s.log_b.resize(k);
  for (Index p = 0; p < k; ++p) {
    const double a = s.proj.row(p).squaredNorm() + (prob.alpha(p) + prob.noise_ratio(p)) * fnorm2;
    s.log_a(p) = std::log(a);
    s.log_b(p) = std::log(a - std::norm(s.proj(p, p)));
  }
  pencil_coefficients(s.log_a, s.log_b, w, s.c, s.d);
  const RealVector ridge = prob.alpha + prob.noise_ratio;
  s.gamma = s.c.dot(ridge);
  s.delta = s.d.dot(ridge);
  return s;
}

HermitianMatrix block_inverse(const ScalarCovarianceProblem& prob, const ScalarState& s, Index block) {
  const Index n = prob.n_antennas();
  HermitianMatrix inv = HermitianMatrix::identity(n);
  inv *= 1.0 / s.delta;
  for (Index p = 0; p < prob.n_users(); ++p) {
    if (p == block) continue;
    inv = rank1_inverse_update(inv, prob.estimates[static_cast<std::size_t>(p)], s.d(p));
  }
  return inv;
}

}  // namespace

std::vector<HermitianMatrix> covfree_block_inverses(const ScalarCovarianceProblem& prob, const Weights& w,
                                                    const ComplexVector& f) {
  check_scalar_problem(prob, w, f);
  const ScalarState s = scalar_state(prob, w, f);
  std::vector<HermitianMatrix> out;
  for (Index i = 0; i < prob.n_users(); ++i) out.push_back(block_inverse(prob, s, i));
  return out;
}

GpipResult gpip_covfree(const ScalarCovarianceProblem& prob, const Weights& w, const PrecoderStack& init,
                        const GpipOptions& opt) {
  check_scalar_problem(prob, w, init.stacked);
  const Index k = prob.n_users();
  const Index n = prob.n_antennas();
  ComplexMatrix h(n, k);
  for (Index p = 0; p < k; ++p) h.col(p) = prob.estimates[static_cast<std::size_t>(p)];

  // Ā f_i for every i at once: H·diag(c)·(Hᴴ F) + γ F.
  auto apply_a = [&](const ScalarState& s, const ComplexVector& f) {
    const Eigen::Map<const ComplexMatrix> fm(f.data(), n, k);
    ComplexMatrix out = h * (s.c.cast<Complex>().asDiagonal() * s.proj) + s.gamma * fm;
    return out;
  };

  FixedPointOps ops;
  ops.step = [&](const ComplexVector& f) {
    const ScalarState s = scalar_state(prob, w, f);
    const ComplexMatrix af = apply_a(s, f);
    ComplexVector g(f.size());
    for (Index i = 0; i < k; ++i) g.segment(i * n, n) = block_inverse(prob, s, i).matrix() * af.col(i);
    return g;
  };
  ops.objective = [&](const ComplexVector& f) {
    const ScalarState s = scalar_state(prob, w, f);
    return objective_from_logs(s.log_a, s.log_b, w);
  };
  ops.kkt = [&](const ComplexVector& f) {
    const ScalarState s = scalar_state(prob, w, f);
    const Eigen::Map<const ComplexMatrix> fm(f.data(), n, k);
    const ComplexMatrix af = apply_a(s, f);
    // B̄_i f_i = Σ_p d_p ĥ_p (ĥ_pᴴ f_i) − d_i ĥ_i (ĥ_iᴴ f_i) + δ f_i
    ComplexMatrix bf = h * (s.d.cast<Complex>().asDiagonal() * s.proj) + s.delta * fm;
    for (Index i = 0; i < k; ++i) bf.col(i) -= s.d(i) * h.col(i) * s.proj(i, i);
    return (af - bf).norm() / af.norm();
  };
  return run_fixed_point(init, ops, opt);
}

// ----------------------------------------------------------------------------
// Schedule extraction and CSV
// ----------------------------------------------------------------------------

Schedule extract_schedule(const PrecoderStack& f, double threshold, double total_power) {
  if (!(threshold >= 0)) throw std::invalid_argument("extract_schedule: threshold must be nonnegative");
  Schedule s;
  s.powers = total_power * f.segment_powers();
  for (Index k = 0; k < f.n_segments(); ++k) {
    const double nrm = f.stacked.segment(k * f.n_antennas, f.n_antennas).norm();
    if (nrm >= threshold && nrm > 0) s.active.push_back(k);
  }
  return s;
}

std::string gpip_csv_header(Index n_users) {
  std::string h = "seed,N,K,SNR_dB,iterations,objective_log2,kkt_residual,active_count";
  for (Index k = 0; k < n_users; ++k) h += ",power_" + std::to_string(k);
  return h;
}

std::string gpip_csv_row(std::uint64_t seed, double snr_db, const GpipResult& r) {
  char buf[96];
  std::string row = std::to_string(seed) + ',' + std::to_string(r.precoder.n_antennas) + ',' +
                    std::to_string(r.precoder.n_segments());
  std::snprintf(buf, sizeof buf, ",%.10g,%d,%.12g,%.6e,%zu", snr_db, r.iterations, r.objective.log2_value,
                r.kkt_residual, r.schedule.active.size());
  row += buf;
  for (Index k = 0; k < r.per_user_power.size(); ++k) {
    std::snprintf(buf, sizeof buf, ",%.10g", r.per_user_power(k));
    row += buf;
  }
  return row;
}

}  // namespace gpip
