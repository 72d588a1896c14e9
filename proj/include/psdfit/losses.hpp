// This file is part of psdfit, a library for fitting nonnegative and
// cone-valued functions with positive semidefinite kernel models.
//
// Copyright (c) 2026 The psdfit authors
// SPDX-License-Identifier: MIT

#ifndef PSDFIT_LOSSES_HPP
#define PSDFIT_LOSSES_HPP

#include <array>
#include <cmath>

#include "psdfit/common.hpp"

// Separable loss terms, their convex conjugates, and proximal operators.
//
// A loss term is a closed convex function of one model value z (or, for the
// heteroscedastic Gaussian term, of a pair (u, z)).  The dual solver only
// touches losses through three maps:
//   loss_value      ell(z)            extended-real
//   loss_conjugate  ell*(a) = sup_z a z - ell(z)
//   prox_conjugate  prox_{step ell*}(a)
// The conjugate prox is always evaluated through the Moreau identity
//   prox_{g f*}(a) = a - g prox_{f/g}(a/g),
// so each term only has to provide its primal prox, which is closed-form for
// every shipped term except the heteroscedastic pair (a guarded 1-d
// root-find, tolerance 1e-12).
//
// Shipped terms (y = label, w = weight, tau = quantile level):
//   square   ell(z) = (z - y)^2 / 2
//   neglog   ell(z) = -w log z             (z > 0)
//   pinball  ell(z) = tau (y-z)_+ + (1-tau)(z-y)_+
//   hetero   ell(u, z) = -log(z)/2 + z y^2/2 - y u + u^2/(2z)   (z > 0)
//            the negative log-likelihood of N(mu, v) at y in the natural
//            parametrization u = mu/v, z = 1/v; jointly convex.
//   zero     ell(z) = 0
// plus a composable domain restriction `nonneg_domain` that adds the
// indicator of {z >= 0} (the primal prox is then clamped at 0, which is exact
// for one-dimensional convex functions).  `zero` with `nonneg_domain` is the
// pure nonnegativity indicator used by baseline models with pointwise
// constraints; both extensions are solver plumbing rather than part of the
// statistical loss menu.

namespace psdfit {

enum class LossKind { square, neglog, pinball, hetero, zero };

template <class Scalar>
struct LossTerm {
  LossKind kind = LossKind::square;
  Scalar label = Scalar(0);      // y (square, pinball, hetero)
  Scalar weight = Scalar(1);     // w (neglog), > 0
  Scalar quantile = Scalar(0.5); // tau (pinball), in (0, 1)
  bool nonneg_domain = false;    // adds the indicator of {z >= 0}

  int arity() const { return kind == LossKind::hetero ? 2 : 1; }

  static LossTerm square(Scalar y) { return {LossKind::square, y, 1, Scalar(0.5), false}; }
  static LossTerm neglog(Scalar w) { return {LossKind::neglog, 0, w, Scalar(0.5), false}; }
  static LossTerm pinball(Scalar tau, Scalar y) {
    return {LossKind::pinball, y, 1, tau, false};
  }
  static LossTerm hetero(Scalar y) { return {LossKind::hetero, y, 1, Scalar(0.5), false}; }
  static LossTerm nonneg_indicator() { return {LossKind::zero, 0, 1, Scalar(0.5), true}; }
};

namespace detail {

template <class Scalar>
void check_term(const LossTerm<Scalar>& t, int expected_arity) {
  if (t.kind == LossKind::neglog) require(t.weight > Scalar(0), "LossTerm: weight must be > 0");
  if (t.kind == LossKind::pinball) {
    require(t.quantile > Scalar(0) && t.quantile < Scalar(1),
            "LossTerm: quantile level must lie in (0, 1)");
  }
  if (t.kind == LossKind::hetero) {
    require(!t.nonneg_domain, "LossTerm: hetero already restricts z > 0");
  }
  require(t.arity() == expected_arity, "LossTerm: scalar/pair API mismatch for this term");
}

// Loss values treat domain violations within this band as roundoff and
// project; beyond it the value is +infinity.  This keeps reported primal
// objectives finite for recovered solutions whose constraint activity is
// exact only up to machine precision.
template <class Scalar>
constexpr Scalar domain_slack() {
  return Scalar(1e-9);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Values

template <class Scalar>
ExtendedReal<Scalar> loss_value(const LossTerm<Scalar>& t, Scalar z) {
  detail::check_term(t, 1);
  using XR = ExtendedReal<Scalar>;
  if (t.nonneg_domain) {
    if (z < -detail::domain_slack<Scalar>()) return XR::pos_infinity();
    z = std::max(Scalar(0), z);
  }
  switch (t.kind) {
    case LossKind::square: {
      const Scalar r = z - t.label;
      return XR::finite(r * r / Scalar(2));
    }
    case LossKind::neglog:
      if (z <= Scalar(0)) return XR::pos_infinity();
      return XR::finite(-t.weight * std::log(z));
    case LossKind::pinball: {
      const Scalar under = std::max(Scalar(0), t.label - z);
      const Scalar over = std::max(Scalar(0), z - t.label);
      return XR::finite(t.quantile * under + (Scalar(1) - t.quantile) * over);
    }
    case LossKind::zero:
      return XR::finite(Scalar(0));
    case LossKind::hetero:
      throw ValidationError("loss_value: hetero term takes a (u, z) pair");
  }
  throw ValidationError("loss_value: unknown loss kind");
}

template <class Scalar>
ExtendedReal<Scalar> loss_value(const LossTerm<Scalar>& t, Scalar u, Scalar z) {
  detail::check_term(t, 2);
  using XR = ExtendedReal<Scalar>;
  if (z <= Scalar(0)) return XR::pos_infinity();
  const Scalar y = t.label;
  return XR::finite(-std::log(z) / Scalar(2) + z * y * y / Scalar(2) - y * u +
                    u * u / (Scalar(2) * z));
}

// ---------------------------------------------------------------------------
// Conjugates

template <class Scalar>
ExtendedReal<Scalar> loss_conjugate(const LossTerm<Scalar>& t, Scalar a) {
  detail::check_term(t, 1);
  using XR = ExtendedReal<Scalar>;
  const Scalar y = t.label;
  switch (t.kind) {
    case LossKind::square:
      if (!t.nonneg_domain) return XR::finite(a * a / Scalar(2) + a * y);
      // sup_{z>=0} a z - (z-y)^2/2: the unconstrained argmax y+a is clamped.
      if (y + a >= Scalar(0)) return XR::finite(a * a / Scalar(2) + a * y);
      return XR::finite(-y * y / Scalar(2));
    case LossKind::neglog:
      if (a >= Scalar(0)) return XR::pos_infinity();
      return XR::finite(-t.weight + t.weight * std::log(t.weight / (-a)));
    case LossKind::pinball: {
      const Scalar tau = t.quantile;
      if (!t.nonneg_domain) {
        if (a < -tau || a > Scalar(1) - tau) return XR::pos_infinity();
        return XR::finite(a * y);
      }
      // Domain-restricted pinball: sup over z >= 0 only.
      if (a > Scalar(1) - tau) return XR::pos_infinity();
      if (y < Scalar(0)) return XR::finite((Scalar(1) - tau) * y);  // argmax at z = 0
      if (a >= -tau) return XR::finite(a * y);
      return XR::finite(-tau * y);
    }
    case LossKind::zero:
      if (t.nonneg_domain) {
        // Indicator of {z >= 0}: conjugate is the indicator of {a <= 0}.
        return a <= Scalar(0) ? XR::finite(Scalar(0)) : XR::pos_infinity();
      }
      return a == Scalar(0) ? XR::finite(Scalar(0)) : XR::pos_infinity();
    case LossKind::hetero:
      throw ValidationError("loss_conjugate: hetero term takes an (a, b) pair");
  }
  throw ValidationError("loss_conjugate: unknown loss kind");
}

// Conjugate of the heteroscedastic pair term.  Maximizing over u first gives
// u* = (a + y) z, collapsing the supremum to sup_{z>0} c z + log(z)/2 with
//     c = b + (a + y)^2 / 2 - y^2 / 2,
// finite iff c < 0 with value -1/2 - log(-2c)/2.
template <class Scalar>
ExtendedReal<Scalar> loss_conjugate(const LossTerm<Scalar>& t, Scalar a, Scalar b) {
  detail::check_term(t, 2);
  using XR = ExtendedReal<Scalar>;
  const Scalar y = t.label;
  const Scalar c = b + (a + y) * (a + y) / Scalar(2) - y * y / Scalar(2);
  if (c >= Scalar(0)) return XR::pos_infinity();
  return XR::finite(Scalar(-0.5) - std::log(Scalar(-2) * c) / Scalar(2));
}

// ---------------------------------------------------------------------------
// Gradients of the smooth terms (used by the primal oracle and baselines).

template <class Scalar>
Scalar loss_grad(const LossTerm<Scalar>& t, Scalar z) {
  detail::check_term(t, 1);
  switch (t.kind) {
    case LossKind::square:
      return z - t.label;
    case LossKind::neglog:
      detail::require(z > Scalar(0), "loss_grad: neglog needs z > 0");
      return -t.weight / z;
    case LossKind::zero:
      return Scalar(0);
    case LossKind::pinball:
      throw ValidationError("loss_grad: pinball is not differentiable");
    case LossKind::hetero:
      throw ValidationError("loss_grad: hetero term takes a (u, z) pair");
  }
  throw ValidationError("loss_grad: unknown loss kind");
}

template <class Scalar>
std::array<Scalar, 2> loss_grad(const LossTerm<Scalar>& t, Scalar u, Scalar z) {
  detail::check_term(t, 2);
  detail::require(z > Scalar(0), "loss_grad: hetero needs z > 0");
  const Scalar y = t.label;
  return {-y + u / z,
          -Scalar(1) / (Scalar(2) * z) + y * y / Scalar(2) - u * u / (Scalar(2) * z * z)};
}

// ---------------------------------------------------------------------------
// Proximal operators

// prox_{step * ell}(x) = argmin_t ell(t) + (t - x)^2 / (2 step).
template <class Scalar>
Scalar prox_primal(const LossTerm<Scalar>& t, Scalar x, Scalar step) {
  detail::check_term(t, 1);
  detail::require(step > Scalar(0), "prox_primal: step must be positive");
  Scalar out;
  switch (t.kind) {
    case LossKind::square:
      out = (x + step * t.label) / (Scalar(1) + step);
      break;
    case LossKind::neglog:
      out = (x + std::sqrt(x * x + Scalar(4) * step * t.weight)) / Scalar(2);
      break;
    case LossKind::pinball: {
      const Scalar y = t.label;
      const Scalar tau = t.quantile;
      if (x < y - step * tau) {
        out = x + step * tau;
      } else if (x > y + step * (Scalar(1) - tau)) {
        out = x - step * (Scalar(1) - tau);
      } else {
        out = y;
      }
      break;
    }
    case LossKind::zero:
      out = x;
      break;
    case LossKind::hetero:
      throw ValidationError("prox_primal: hetero term takes a (u, z) pair");
    default:
      throw ValidationError("prox_primal: unknown loss kind");
  }
  // For 1-d convex functions the domain-restricted minimizer is the clamp of
  // the unrestricted one.
  if (t.nonneg_domain) out = std::max(Scalar(0), out);
  return out;
}

// Primal prox of the heteroscedastic pair.  Eliminating u through the
// stationarity condition u(z) = z (y step + u0) / (z + step) reduces the
// problem to the scalar root of the strictly increasing function
//   g(z) = -1/(2z) + y^2/2 - (y step + u0)^2 / (2 (z + step)^2) + (z - z0)/step
// on z > 0 (g -> -inf at 0+, g -> +inf at infinity).  Solved by bracketing
// bisection with Newton acceleration to relative tolerance 1e-12.
template <class Scalar>
std::array<Scalar, 2> prox_primal(const LossTerm<Scalar>& t, Scalar u0, Scalar z0, Scalar step) {
  detail::check_term(t, 2);
  detail::require(step > Scalar(0), "prox_primal: step must be positive");
  const Scalar y = t.label;
  const Scalar q = y * step + u0;

  const auto g = [&](Scalar z) {
    const Scalar zs = z + step;
    return -Scalar(1) / (Scalar(2) * z) + y * y / Scalar(2) - q * q / (Scalar(2) * zs * zs) +
           (z - z0) / step;
  };
  const auto gprime = [&](Scalar z) {
    const Scalar zs = z + step;
    return Scalar(1) / (Scalar(2) * z * z) + q * q / (zs * zs * zs) + Scalar(1) / step;
  };

  // Bracket the root.
  Scalar lo = std::max(Scalar(1e-8), z0 > Scalar(0) ? z0 : Scalar(1));
  int guard = 0;
  while (g(lo) > Scalar(0)) {
    lo /= Scalar(2);
    if (++guard > 4000) throw NumericError("prox_primal(hetero): bracketing failed (low)");
  }
  Scalar hi = std::max(lo * Scalar(2), Scalar(1));
  guard = 0;
  while (g(hi) < Scalar(0)) {
    hi *= Scalar(2);
    if (++guard > 4000) throw NumericError("prox_primal(hetero): bracketing failed (high)");
  }

  // Safeguarded Newton from the midpoint.
  Scalar z = (lo + hi) / Scalar(2);
  for (int it = 0; it < 200; ++it) {
    const Scalar gz = g(z);
    if (gz > Scalar(0)) {
      hi = z;
    } else {
      lo = z;
    }
    Scalar znew = z - gz / gprime(z);
    if (!(znew > lo && znew < hi)) znew = (lo + hi) / Scalar(2);
    if (std::abs(znew - z) <= Scalar(1e-12) * std::max(Scalar(1), std::abs(znew))) {
      z = znew;
      break;
    }
    z = znew;
  }
  const Scalar u = z * q / (z + step);
  return {u, z};
}

// prox_{step * ell*} via the Moreau identity.
template <class Scalar>
Scalar prox_conjugate(const LossTerm<Scalar>& t, Scalar a, Scalar step) {
  detail::check_term(t, 1);
  detail::require(step > Scalar(0), "prox_conjugate: step must be positive");
  return a - step * prox_primal(t, a / step, Scalar(1) / step);
}

template <class Scalar>
std::array<Scalar, 2> prox_conjugate(const LossTerm<Scalar>& t, Scalar a, Scalar b, Scalar step) {
  detail::check_term(t, 2);
  detail::require(step > Scalar(0), "prox_conjugate: step must be positive");
  const std::array<Scalar, 2> p = prox_primal(t, a / step, b / step, Scalar(1) / step);
  return {a - step * p[0], b - step * p[1]};
}

}  // namespace psdfit

#endif  // PSDFIT_LOSSES_HPP
