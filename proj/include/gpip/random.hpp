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

#include <cstdint>
#include <initializer_list>
#include <random>

namespace gpip {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent per-trial seed streams.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = mix_seed(master);
  for (auto p : path) s = mix_seed(s ^ mix_seed(p + 0x632be59bd9b4e019ULL));
  return s;
}

/// Vector of IID CN(0, 1) entries.
inline ComplexVector standard_complex_gaussian(Rng& rng, Index n) {
  std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
  ComplexVector g(n);
  for (Index i = 0; i < n; ++i) {
    const double re = nd(rng);
    const double im = nd(rng);
    g(i) = Complex(re, im);
  }
  return g;
}

}  // namespace gpip
