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

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

// Dense complex linear-algebra kernels. Everything here is templated on the
// real scalar type; the rest of the library instantiates it with double.
namespace gpip {

template <typename Real>
using ComplexMatrixT = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Real>
using ComplexVectorT = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1>;

using Complex = std::complex<double>;
using ComplexMatrix = ComplexMatrixT<double>;
using ComplexVector = ComplexVectorT<double>;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;
using Index = Eigen::Index;

class NumericsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotPositiveDefinite : public NumericsError {
 public:
  using NumericsError::NumericsError;
};

class DenominatorUnderflow : public NumericsError {
 public:
  using NumericsError::NumericsError;
};

class EigenFailure : public NumericsError {
 public:
  using NumericsError::NumericsError;
};

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr double kPivotTolerance = 1e-12;
inline constexpr double kShermanMorrisonFloor = 1e-14;
inline constexpr double kEigenClipRelative = 1e-12;

/// Square matrix with exact conjugate symmetry. The upper triangle of the
/// input is authoritative; the lower triangle is mirrored from it and the
/// diagonal is forced real.
template <typename Real>
class HermitianT {
 public:
  using Matrix = ComplexMatrixT<Real>;

  HermitianT() = default;

  explicit HermitianT(const Matrix& m) : m_(m) {
    if (m.rows() != m.cols()) {
      throw DimensionMismatch("HermitianT: matrix is not square");
    }
    symmetrize();
  }

  static HermitianT identity(Index n) { return HermitianT(Matrix::Identity(n, n)); }
  static HermitianT zero(Index n) { return HermitianT(Matrix::Zero(n, n)); }

  static HermitianT diagonal(const Eigen::Matrix<Real, Eigen::Dynamic, 1>& d) {
    return HermitianT(d.template cast<std::complex<Real>>().asDiagonal().toDenseMatrix());
  }

  /// h·hᴴ
  static HermitianT outer(const ComplexVectorT<Real>& h) { return HermitianT(h * h.adjoint()); }

  Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  std::complex<Real> operator()(Index r, Index c) const { return m_(r, c); }

  HermitianT& operator+=(const HermitianT& o) {
    m_ += o.m_;
    return *this;
  }
  HermitianT& operator-=(const HermitianT& o) {
    m_ -= o.m_;
    return *this;
  }
  HermitianT& operator*=(Real s) {
    m_ *= s;
    return *this;
  }
  friend HermitianT operator+(HermitianT a, const HermitianT& b) { return a += b; }
  friend HermitianT operator-(HermitianT a, const HermitianT& b) { return a -= b; }
  friend HermitianT operator*(Real s, HermitianT a) { return a *= s; }

  /// Adds s·I.
  HermitianT& add_ridge(Real s) {
    m_.diagonal().array() += std::complex<Real>(s, 0);
    return *this;
  }

  /// xᴴ·M·x, which is real for Hermitian M.
  template <typename Derived>
  Real quadratic_form(const Eigen::MatrixBase<Derived>& x) const {
    return (x.adjoint() * m_ * x).value().real();
  }

  Real trace() const { return m_.diagonal().real().sum(); }

 private:
  void symmetrize() {
    const Index n = m_.rows();
    for (Index c = 0; c < n; ++c) {
      m_(c, c) = std::complex<Real>(m_(c, c).real(), 0);
      for (Index r = c + 1; r < n; ++r) m_(r, c) = std::conj(m_(c, r));
    }
  }

  Matrix m_;
};

using HermitianMatrix = HermitianT<double>;

/// Block-diagonal Hermitian operator. Only the diagonal blocks are stored.
template <typename Real>
class BlockDiagonalT {
 public:
  BlockDiagonalT() = default;
  explicit BlockDiagonalT(std::vector<HermitianT<Real>> blocks) : blocks_(std::move(blocks)) {
    for (const auto& b : blocks_) {
      if (b.dim() != block_dim()) throw DimensionMismatch("BlockDiagonalT: blocks differ in size");
    }
  }

  Index block_count() const { return static_cast<Index>(blocks_.size()); }
  Index block_dim() const { return blocks_.empty() ? 0 : blocks_.front().dim(); }
  Index dim() const { return block_count() * block_dim(); }
  const HermitianT<Real>& block(Index i) const { return blocks_[static_cast<std::size_t>(i)]; }
  const std::vector<HermitianT<Real>>& blocks() const { return blocks_; }

  ComplexVectorT<Real> operator*(const ComplexVectorT<Real>& x) const {
    if (x.size() != dim()) throw DimensionMismatch("BlockDiagonalT: vector length");
    ComplexVectorT<Real> y(dim());
    const Index n = block_dim();
    for (Index b = 0; b < block_count(); ++b) {
      y.segment(b * n, n).noalias() = block(b).matrix() * x.segment(b * n, n);
    }
    return y;
  }

  Real quadratic_form(const ComplexVectorT<Real>& x) const {
    if (x.size() != dim()) throw DimensionMismatch("BlockDiagonalT: vector length");
    Real acc = 0;
    const Index n = block_dim();
    for (Index b = 0; b < block_count(); ++b) acc += block(b).quadratic_form(x.segment(b * n, n));
    return acc;
  }

  ComplexMatrixT<Real> to_dense() const {
    ComplexMatrixT<Real> d = ComplexMatrixT<Real>::Zero(dim(), dim());
    const Index n = block_dim();
    for (Index b = 0; b < block_count(); ++b) d.block(b * n, b * n, n, n) = block(b).matrix();
    return d;
  }

 private:
  std::vector<HermitianT<Real>> blocks_;
};

using BlockDiagonal = BlockDiagonalT<double>;

/// Lower-triangular Cholesky factor L with L·Lᴴ = M.
template <typename Real>
struct LowerTriangularFactor {
  ComplexMatrixT<Real> lower;

  Index dim() const { return lower.rows(); }

  /// Solves (L·Lᴴ)·X = B.
  ComplexMatrixT<Real> solve(const ComplexMatrixT<Real>& rhs) const {
    if (rhs.rows() != dim()) throw DimensionMismatch("LowerTriangularFactor::solve: rhs rows");
    ComplexMatrixT<Real> y = lower.template triangularView<Eigen::Lower>().solve(rhs);
    return lower.adjoint().template triangularView<Eigen::Upper>().solve(y);
  }

  ComplexMatrixT<Real> reconstruct() const { return lower * lower.adjoint(); }
};

/// Plain (unpivoted) Cholesky-Crout factorization. A pivot at or below
/// kPivotTolerance times the largest diagonal magnitude is rejected.
template <typename Real>
LowerTriangularFactor<Real> cholesky_factor(const HermitianT<Real>& m) {
  using C = std::complex<Real>;
  const Index n = m.dim();
  const auto& a = m.matrix();
  Real scale = 0;
  for (Index i = 0; i < n; ++i) scale = std::max(scale, std::abs(a(i, i).real()));
  const Real floor = static_cast<Real>(kPivotTolerance) * (scale > 0 ? scale : Real(1));

  ComplexMatrixT<Real> l = ComplexMatrixT<Real>::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    Real pivot = a(j, j).real();
    for (Index k = 0; k < j; ++k) pivot -= std::norm(l(j, k));
    if (!(pivot > floor)) {
      throw NotPositiveDefinite("cholesky_factor: pivot " + std::to_string(pivot) + " at column " +
                                std::to_string(j));
    }
    const Real d = std::sqrt(pivot);
    l(j, j) = C(d, 0);
    for (Index i = j + 1; i < n; ++i) {
      C s = a(i, j);
      for (Index k = 0; k < j; ++k) s -= l(i, k) * std::conj(l(j, k));
      l(i, j) = s / d;
    }
  }
  return {std::move(l)};
}

/// Solves M·X = B through a Cholesky factorization; M is never inverted.
template <typename Real>
ComplexMatrixT<Real> solve_hermitian(const HermitianT<Real>& m, const ComplexMatrixT<Real>& rhs) {
  if (rhs.rows() != m.dim()) throw DimensionMismatch("solve_hermitian: rhs rows");
  return cholesky_factor(m).solve(rhs);
}

/// Explicit inverse, built column by column from the Cholesky factor.
template <typename Real>
HermitianT<Real> inverse_via_cholesky(const HermitianT<Real>& m) {
  return HermitianT<Real>(solve_hermitian(m, ComplexMatrixT<Real>(ComplexMatrixT<Real>::Identity(m.dim(), m.dim()))));
}

/// Given inv = M⁻¹, returns (M + c·u·uᴴ)⁻¹ by the Sherman-Morrison identity.
template <typename Real>
HermitianT<Real> rank1_inverse_update(const HermitianT<Real>& inv, const ComplexVectorT<Real>& u, Real c) {
  if (u.size() != inv.dim()) throw DimensionMismatch("rank1_inverse_update: vector length");
  if (!(c > 0)) throw std::invalid_argument("rank1_inverse_update: c must be positive");
  const ComplexVectorT<Real> iu = inv.matrix() * u;
  const Real denom = Real(1) / c + u.dot(iu).real();
  if (std::abs(denom) < static_cast<Real>(kShermanMorrisonFloor)) {
    throw DenominatorUnderflow("rank1_inverse_update: denominator underflow");
  }
  return HermitianT<Real>(inv.matrix() - (iu * iu.adjoint()) / denom);
}

/// Principal square root S = U·Λ^{1/2}·Uᴴ of a PSD matrix, S·Sᴴ = M.
/// Eigenvalues below kEigenClipRelative times the largest are set to zero.
template <typename Real>
ComplexMatrixT<Real> hermitian_sqrt(const HermitianT<Real>& m) {
  const Index n = m.dim();
  if (n == 0) return {};
  Eigen::SelfAdjointEigenSolver<ComplexMatrixT<Real>> es(m.matrix());
  if (es.info() != Eigen::Success) throw EigenFailure("hermitian_sqrt: eigensolver did not converge");
  Eigen::Matrix<Real, Eigen::Dynamic, 1> lam = es.eigenvalues();
  const Real top = std::max(lam.maxCoeff(), Real(0));
  const Real cut = static_cast<Real>(kEigenClipRelative) * top;
  for (Index i = 0; i < n; ++i) lam(i) = lam(i) > cut && lam(i) > 0 ? std::sqrt(lam(i)) : Real(0);
  const auto& u = es.eigenvectors();
  return u * lam.template cast<std::complex<Real>>().asDiagonal() * u.adjoint();
}

/// Eigenvalues in ascending order.
template <typename Real>
Eigen::Matrix<Real, Eigen::Dynamic, 1> hermitian_eigenvalues(const HermitianT<Real>& m) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrixT<Real>> es(m.matrix(), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw EigenFailure("hermitian_eigenvalues: eigensolver did not converge");
  return es.eigenvalues();
}

template <typename Derived>
typename Derived::RealScalar max_abs(const Eigen::MatrixBase<Derived>& m) {
  return m.size() == 0 ? typename Derived::RealScalar(0) : m.cwiseAbs().maxCoeff();
}

}  // namespace gpip
