// This file is part of psdfit, a library for fitting nonnegative and
// cone-valued functions with positive semidefinite kernel models.
//
// Copyright (c) 2026 The psdfit authors
// SPDX-License-Identifier: MIT

#ifndef PSDFIT_SPECTRAL_HPP
#define PSDFIT_SPECTRAL_HPP

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "psdfit/common.hpp"

// Spectral primitives shared by the whole library.  Everything here pins a
// convention that the solver and the regularizer calculus depend on:
//
//  * eigendecompositions of symmetric matrices are returned with eigenvalues
//    in descending order;
//  * the "negative part" of a symmetric matrix M is the positive semidefinite
//    magnitude of its negative spectral component,
//        neg_part(M) = U max(0, -Lambda) U^T,
//    so that M = pos_part(M) - neg_part(M) with both parts PSD and
//    pos_part(M) * neg_part(M) = 0.  (An alternative convention keeps the
//    sign, U min(0, Lambda) U^T = -neg_part(M); every formula in this library
//    uses the PSD-magnitude convention above.)
//
// Eigen's SelfAdjointEigenSolver does the numerical work; the value of this
// module is the fixed conventions and the Gram factor contract below.

namespace psdfit {

// Symmetric eigendecomposition with eigenvalues sorted in descending order.
// Invariant: vectors * values.asDiagonal() * vectors^T reconstructs the input
// (to machine precision relative to its operator norm).
template <class Scalar>
struct EigenDecomp {
  VectorX<Scalar> values;   // descending
  MatrixX<Scalar> vectors;  // orthonormal columns, aligned with `values`
};

namespace detail {

template <class Scalar>
void check_square_symmetric(const MatrixX<Scalar>& m, Scalar tol, const char* who) {
  require(m.rows() == m.cols(), std::string(who) + ": matrix must be square");
  if (m.rows() == 0) return;
  const Scalar scale = std::max(Scalar(1), m.template lpNorm<Eigen::Infinity>());
  const Scalar asym = (m - m.transpose()).template lpNorm<Eigen::Infinity>();
  require(asym <= tol * scale, std::string(who) + ": matrix is not symmetric within tolerance");
}

}  // namespace detail

// Eigendecomposition of a symmetric matrix, descending eigenvalue order.
// The input must be symmetric up to `symmetry_tol` relative to its magnitude
// (validation error otherwise); it is symmetrized before factorization so the
// decomposition is exact for the symmetrized operator.
template <class Scalar>
EigenDecomp<Scalar> eig_sym(const MatrixX<Scalar>& m, Scalar symmetry_tol = Scalar(1e-8)) {
  detail::check_square_symmetric(m, symmetry_tol, "eig_sym");
  const MatrixX<Scalar> sym = (m + m.transpose()) / Scalar(2);
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> solver(sym);
  if (solver.info() != Eigen::Success) throw NumericError("eig_sym: eigendecomposition failed");
  // Eigen returns ascending order; flip to descending.
  EigenDecomp<Scalar> out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

// U f(Lambda) U^T for an elementwise eigenvalue map f.
template <class Scalar, class Fn>
MatrixX<Scalar> spectral_map(const EigenDecomp<Scalar>& d, Fn&& f) {
  VectorX<Scalar> mapped = d.values.unaryExpr([&](Scalar v) { return f(v); });
  return d.vectors * mapped.asDiagonal() * d.vectors.transpose();
}

// Positive spectral part: U max(0, Lambda) U^T (PSD).
template <class Scalar>
MatrixX<Scalar> pos_part(const EigenDecomp<Scalar>& d) {
  return spectral_map(d, [](Scalar v) { return std::max(Scalar(0), v); });
}

template <class Scalar>
MatrixX<Scalar> pos_part(const MatrixX<Scalar>& m) {
  return pos_part(eig_sym(m));
}

// Negative spectral part in the PSD-magnitude convention:
// U max(0, -Lambda) U^T, so M = pos_part(M) - neg_part(M).
template <class Scalar>
MatrixX<Scalar> neg_part(const EigenDecomp<Scalar>& d) {
  return spectral_map(d, [](Scalar v) { return std::max(Scalar(0), -v); });
}

template <class Scalar>
MatrixX<Scalar> neg_part(const MatrixX<Scalar>& m) {
  return neg_part(eig_sym(m));
}

// Nuclear, Frobenius, and operator norms of a symmetric matrix, all read off
// the spectrum (for symmetric matrices the singular values are |eigenvalues|).
template <class Scalar>
struct SpectralNorms {
  Scalar nuclear;        // sum of |eigenvalues|
  Scalar frobenius;      // sqrt of sum of squares
  Scalar operator_norm;  // max |eigenvalue|
};

template <class Scalar>
SpectralNorms<Scalar> spectral_norms(const EigenDecomp<Scalar>& d) {
  const VectorX<Scalar> abs = d.values.cwiseAbs();
  SpectralNorms<Scalar> out;
  out.nuclear = abs.sum();
  out.frobenius = std::sqrt(abs.squaredNorm());
  out.operator_norm = abs.size() > 0 ? abs.maxCoeff() : Scalar(0);
  return out;
}

template <class Scalar>
SpectralNorms<Scalar> spectral_norms(const MatrixX<Scalar>& m) {
  return spectral_norms(eig_sym(m));
}

// A factor V of a PSD Gram matrix K with V^T V = K, used to pass between the
// kernel expansion coefficients (anchor coordinates, n-dimensional) and the
// coordinates of the finite-dimensional model (feature coordinates,
// r-dimensional with r = rank V).
//
// The factor is built from an economy eigendecomposition K = U S U^T by
// V = S^{1/2} U^T (rows = kept eigendirections), so V V^T = S is diagonal and
// (V V^T)^{-1} is trivially available.  This single path handles full-rank and
// rank-deficient Gram matrices uniformly; for full-rank K any factorization
// (e.g. Cholesky) would do, but the eigen route costs the same here and keeps
// one code path.
template <class Scalar>
struct GramFactor {
  MatrixX<Scalar> V;            // r x n with V^T V ~= K
  VectorX<Scalar> eigenvalues;  // kept eigenvalues of K (descending) = diag(V V^T)
  Index rank = 0;               // r
  bool full_rank = true;

  Index n() const { return V.cols(); }

  // (V V^T)^{-1} x, using the diagonal structure of V V^T.
  VectorX<Scalar> vvt_solve(const VectorX<Scalar>& x) const {
    return x.cwiseQuotient(eigenvalues);
  }

  // Transports a feature-coordinate matrix A (r x r) to anchor coordinates:
  // B = V^T (V V^T)^{-1} A (V V^T)^{-1} V, so that the model evaluates as
  // v(x)^T B v(x) wherever it evaluated as Phi(x)^T A Phi(x).
  MatrixX<Scalar> to_anchor_coordinates(const MatrixX<Scalar>& a) const {
    detail::require(a.rows() == rank && a.cols() == rank,
                    "GramFactor::to_anchor_coordinates: matrix must be rank x rank");
    const MatrixX<Scalar> w = eigenvalues.cwiseInverse().asDiagonal() * V;  // (VV^T)^{-1} V
    MatrixX<Scalar> b = w.transpose() * a * w;
    return ((b + b.transpose()) / Scalar(2)).eval();
  }
};

// Factors a symmetric PSD matrix K, dropping eigenvalues <= rel_tol * max
// eigenvalue.  Preconditions: K symmetric (within 1e-8 relative), eigenvalues
// >= -rel_tol relative to the largest (more negative -> validation error), and
// K != 0.  Postconditions: V is rank x n with ||V^T V - K|| <= rel_tol * ||K||
// (machine precision when nothing is dropped); full_rank marks rank == n.
template <class Scalar>
GramFactor<Scalar> factor_gram(const MatrixX<Scalar>& k, Scalar rel_tol = Scalar(1e-10)) {
  detail::require(rel_tol > Scalar(0), "factor_gram: rel_tol must be positive");
  const EigenDecomp<Scalar> d = eig_sym(k);
  const Index n = d.values.size();
  detail::require(n > 0, "factor_gram: empty matrix");
  const Scalar max_ev = d.values[0];
  detail::require(max_ev > Scalar(0), "factor_gram: matrix has no positive eigenvalue");
  const Scalar floor = -rel_tol * std::max(max_ev, Scalar(1));
  if (d.values[n - 1] < floor) {
    throw ValidationError("factor_gram: matrix has a negative eigenvalue beyond tolerance");
  }
  Index rank = 0;
  while (rank < n && d.values[rank] > rel_tol * max_ev) ++rank;

  GramFactor<Scalar> out;
  out.rank = rank;
  out.full_rank = (rank == n);
  out.eigenvalues = d.values.head(rank);
  out.V = out.eigenvalues.cwiseSqrt().asDiagonal() * d.vectors.leftCols(rank).transpose();
  return out;
}

}  // namespace psdfit

#endif  // PSDFIT_SPECTRAL_HPP
