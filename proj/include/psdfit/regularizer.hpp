// This file is part of psdfit, a library for fitting nonnegative and
// cone-valued functions with positive semidefinite kernel models.
//
// Copyright (c) 2026 The psdfit authors
// SPDX-License-Identifier: MIT

#ifndef PSDFIT_REGULARIZER_HPP
#define PSDFIT_REGULARIZER_HPP

#include "psdfit/common.hpp"
#include "psdfit/spectral.hpp"

// The cone-restricted spectral regularizer and its convex conjugate.
//
// On symmetric matrices,
//     Omega(A) = lambda1 ||A||_* + (lambda2 / 2) ||A||_F^2   if A is PSD,
//              = +infinity                                    otherwise.
// Restricting to the PSD cone makes the conjugate a smooth spectral function:
//     Omega*(B)      = (1 / (2 lambda2)) || pos_part(B - lambda1 I) ||_F^2,
//     grad Omega*(B) = (1 / lambda2)        pos_part(B - lambda1 I),
// and grad Omega* is (1/lambda2)-Lipschitz.  These two functions are the
// entire interface between the solver's smooth dual machinery and the model's
// regularization; the nuclear term acts as a spectral shift, the Frobenius
// term as the smoothing.

namespace psdfit {

template <class Scalar>
struct RegSpec {
  Scalar lambda1 = Scalar(0);  // nuclear-norm weight, >= 0
  Scalar lambda2 = Scalar(1);  // Frobenius weight, > 0
};

namespace detail {
template <class Scalar>
void check_reg(const RegSpec<Scalar>& reg) {
  require(reg.lambda1 >= Scalar(0), "RegSpec: lambda1 must be nonnegative");
  require(reg.lambda2 > Scalar(0), "RegSpec: lambda2 must be positive");
}
}  // namespace detail

// Omega(B); +infinity when B has an eigenvalue below -1e-9.  For PSD B the
// nuclear norm equals the trace, but it is computed spectrally here so the
// value is correct for any symmetric input inside the tolerance band.
template <class Scalar>
ExtendedReal<Scalar> omega_value(const RegSpec<Scalar>& reg, const MatrixX<Scalar>& b) {
  detail::check_reg(reg);
  const EigenDecomp<Scalar> d = eig_sym(b);
  if (d.values.size() > 0 && d.values[d.values.size() - 1] < Scalar(-1e-9)) {
    return ExtendedReal<Scalar>::pos_infinity();
  }
  const SpectralNorms<Scalar> norms = spectral_norms(d);
  return ExtendedReal<Scalar>::finite(reg.lambda1 * norms.nuclear +
                                      reg.lambda2 / Scalar(2) * norms.frobenius *
                                          norms.frobenius);
}

// Omega*(B) = (1 / (2 lambda2)) sum_i max(0, mu_i - lambda1)^2 over the
// eigenvalues mu_i of B.  Finite everywhere, convex, differentiable.
template <class Scalar>
Scalar omega_conj_value(const RegSpec<Scalar>& reg, const MatrixX<Scalar>& b) {
  detail::check_reg(reg);
  const EigenDecomp<Scalar> d = eig_sym(b);
  Scalar acc = 0;
  for (Index i = 0; i < d.values.size(); ++i) {
    const Scalar shifted = d.values[i] - reg.lambda1;
    if (shifted > Scalar(0)) acc += shifted * shifted;
  }
  return acc / (Scalar(2) * reg.lambda2);
}

// grad Omega*(B) = (1 / lambda2) pos_part(B - lambda1 I); PSD for every B, and
// exactly the argmax in the conjugate's definition, so the Fenchel-Young
// inequality holds with equality at (grad Omega*(B), B).
template <class Scalar>
MatrixX<Scalar> omega_conj_grad(const RegSpec<Scalar>& reg, const MatrixX<Scalar>& b) {
  detail::check_reg(reg);
  EigenDecomp<Scalar> d = eig_sym(b);
  d.values.array() -= reg.lambda1;
  return pos_part(d) / reg.lambda2;
}

}  // namespace psdfit

#endif  // PSDFIT_REGULARIZER_HPP
