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

// Independent reference implementations used by the tests. They share no
// code with the library beyond the basic types.

#pragma once

#include "gpip/gpip.hpp"
#include "gpip/random.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

using gpip::Complex;
using gpip::ComplexMatrix;
using gpip::ComplexVector;
using gpip::Index;
using gpip::RealVector;

// One user of a (possibly cooperative) instance in plain form.
// channels[c] is ĥ from transmitter c to this user; phi[c] its error
// covariance; the user's own data rides on segment (home, user).
struct User {
  std::vector<ComplexVector> channels;
  std::vector<ComplexMatrix> phi;
  Index home = 0;
  Index user = 0;
  double noise = 1.0;
};

struct Instance {
  Index n = 0;       // antennas per transmitter
  Index k = 0;       // users per transmitter
  Index groups = 1;  // transmitters
  std::vector<User> users;
  RealVector w;
};

inline ComplexVector seg(const ComplexVector& f, const Instance& in, Index g, Index i) {
  return f.segment((g * in.k + i) * in.n, in.n);
}

// Desired signal, interference and noise terms summed one by one.
struct Terms {
  double desired = 0.0;
  double interference = 0.0;
  double error = 0.0;
  double noise = 0.0;
};

inline Terms direct_terms(const Instance& in, const User& u, const ComplexVector& f) {
  Terms t;
  t.noise = u.noise * f.squaredNorm();
  for (Index g = 0; g < in.groups; ++g) {
    for (Index i = 0; i < in.k; ++i) {
      const ComplexVector fi = seg(f, in, g, i);
      const double p = std::norm(u.channels[static_cast<std::size_t>(g)].dot(fi));
      if (g == u.home && i == u.user) t.desired += p;
      else t.interference += p;
      t.error += (fi.adjoint() * u.phi[static_cast<std::size_t>(g)] * fi)(0, 0).real();
    }
  }
  return t;
}

// fᴴAf and fᴴBf as term-by-term sums.
inline double direct_a(const Instance& in, const User& u, const ComplexVector& f) {
  const Terms t = direct_terms(in, u, f);
  return t.desired + t.interference + t.error + t.noise;
}
inline double direct_b(const Instance& in, const User& u, const ComplexVector& f) {
  const Terms t = direct_terms(in, u, f);
  return t.interference + t.error + t.noise;
}

// Weighted sum of log₂(1 + SINR_lb) with f scaled to unit power.
inline double sinr_form_rate(const Instance& in, const ComplexVector& f_in) {
  const ComplexVector f = f_in / f_in.norm();
  double s = 0.0;
  for (std::size_t q = 0; q < in.users.size(); ++q) {
    const Terms t = direct_terms(in, in.users[q], f);
    s += in.w(static_cast<Index>(q)) * std::log2(1.0 + t.desired / (t.interference + t.error + t.noise));
  }
  return s;
}

inline std::vector<gpip::EffectivePair> to_pairs(const Instance& in) {
  std::vector<gpip::EffectivePair> pairs;
  for (const auto& u : in.users) {
    gpip::EffectivePair p;
    for (Index g = 0; g < in.groups; ++g) {
      ComplexMatrix blk = u.channels[static_cast<std::size_t>(g)] * u.channels[static_cast<std::size_t>(g)].adjoint() +
                          u.phi[static_cast<std::size_t>(g)] + u.noise * ComplexMatrix::Identity(in.n, in.n);
      p.group_blocks.emplace_back(blk);
    }
    p.desired = u.channels[static_cast<std::size_t>(u.home)];
    p.group = u.home;
    p.user = u.user;
    p.users_per_group = in.k;
    p.noise_ratio = u.noise;
    pairs.push_back(std::move(p));
  }
  return pairs;
}

inline ComplexMatrix random_psd(Index n, double scale, gpip::Rng& rng) {
  ComplexMatrix g(n, n);
  for (Index c = 0; c < n; ++c) g.col(c) = gpip::standard_complex_gaussian(rng, n);
  return scale * g * g.adjoint() / static_cast<double>(n);
}

// Random instance; phi_scale < 0 draws random PSD covariances of size
// |phi_scale|, otherwise Φ = phi_scale·I.
inline Instance random_instance(Index n, Index k, Index groups, double phi_scale, double noise, std::uint64_t seed,
                                bool random_weights = false) {
  gpip::Rng rng(seed);
  Instance in;
  in.n = n;
  in.k = k;
  in.groups = groups;
  std::uniform_real_distribution<double> wd(0.5, 2.0);
  in.w.resize(k * groups);
  for (Index g = 0; g < groups; ++g) {
    for (Index i = 0; i < k; ++i) {
      User u;
      u.home = g;
      u.user = i;
      u.noise = noise;
      for (Index c = 0; c < groups; ++c) {
        const double gain = c == g ? 1.0 : 0.25;
        u.channels.push_back(std::sqrt(gain) * gpip::standard_complex_gaussian(rng, n));
        if (phi_scale < 0) u.phi.push_back(random_psd(n, -phi_scale * gain, rng));
        else u.phi.push_back(phi_scale * gain * ComplexMatrix::Identity(n, n));
      }
      in.users.push_back(std::move(u));
      in.w(g * k + i) = random_weights ? wd(rng) : 1.0;
    }
  }
  return in;
}

inline ComplexVector random_unit(Index dim, gpip::Rng& rng) {
  ComplexVector f = gpip::standard_complex_gaussian(rng, dim);
  return f / f.norm();
}

// log₂ objective via dense NK×NK matrices.
inline double dense_log2_lambda(const Instance& in, const ComplexVector& f) {
  double s = 0.0;
  for (std::size_t q = 0; q < in.users.size(); ++q) {
    s += in.w(static_cast<Index>(q)) *
         std::log2(direct_a(in, in.users[q], f) / direct_b(in, in.users[q], f));
  }
  return s;
}

// Complex gradient ∂φ/∂f̄ of φ = ln λ by central differences: perturbing
// entry n by h gives 2h·Re g_n and by i·h gives 2h·Im g_n.
inline ComplexVector fd_gradient(const std::function<double(const ComplexVector&)>& phi, const ComplexVector& f,
                                 double h = 1e-6) {
  ComplexVector g(f.size());
  for (Index n = 0; n < f.size(); ++n) {
    ComplexVector p = f;
    ComplexVector m = f;
    p(n) += h;
    m(n) -= h;
    const double re = (phi(p) - phi(m)) / (4.0 * h);
    p = f;
    m = f;
    p(n) += Complex(0.0, h);
    m(n) -= Complex(0.0, h);
    const double im = (phi(p) - phi(m)) / (4.0 * h);
    g(n) = Complex(re, im);
  }
  return g;
}

// Best log₂ objective from n_samples random unit vectors, then a
// projected-gradient polish of the top few.
inline double random_search(const Instance& in, Index n_samples, std::uint64_t seed,
                            const std::function<ComplexVector(const ComplexVector&)>& project =
                                [](const ComplexVector& f) { return ComplexVector(f / f.norm()); }) {
  gpip::Rng rng(seed);
  const Index dim = in.n * in.k * in.groups;
  std::vector<std::pair<double, ComplexVector>> top;
  const std::size_t keep = 5;
  for (Index s = 0; s < n_samples; ++s) {
    const ComplexVector f = project(gpip::standard_complex_gaussian(rng, dim));
    const double v = sinr_form_rate(in, f);
    if (top.size() < keep || v > top.back().first) {
      top.emplace_back(v, f);
      std::sort(top.begin(), top.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
      if (top.size() > keep) top.pop_back();
    }
  }
  auto phi = [&](const ComplexVector& f) { return sinr_form_rate(in, project(f)) * std::log(2.0); };
  double best = top.front().first;
  for (auto& [v, f] : top) {
    ComplexVector x = f;
    double fx = v;
    double step = 0.1;
    for (int it = 0; it < 300 && step > 1e-9; ++it) {
      const ComplexVector g = fd_gradient(phi, x, 1e-7);
      const ComplexVector y = project(x + step * g / std::max(g.norm(), 1e-300));
      const double fy = sinr_form_rate(in, y);
      if (fy > fx) {
        x = y;
        fx = fy;
        step *= 1.5;
      } else {
        step *= 0.5;
      }
    }
    best = std::max(best, fx);
  }
  return best;
}

}  // namespace oracle
