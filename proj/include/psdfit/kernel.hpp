// This file is part of psdfit, a library for fitting nonnegative and
// cone-valued functions with positive semidefinite kernel models.
//
// Copyright (c) 2026 The psdfit authors
// SPDX-License-Identifier: MIT

#ifndef PSDFIT_KERNEL_HPP
#define PSDFIT_KERNEL_HPP

#include <cmath>
#include <utility>

#include "psdfit/common.hpp"
#include "psdfit/spectral.hpp"

// Gaussian kernel, anchor sets, base measures, and the integral identities the
// density models rely on.
//
// Throughout, the kernel is
//     k(x, y) = exp(-||x - y||^2 / (2 sigma^2)),
// so `sigma` is the bandwidth in the same units as the data (k(x,x) = 1).
//
// A fitted model is a quadratic form in the kernel sections anchored at the
// data: f(x) = v(x)^T B v(x) with v(x) = (k(x, x_i))_i and B PSD, or
// equivalently Phi(x)^T A Phi(x) in the empirical feature coordinates
// Phi(x) = (V V^T)^{-1} V v(x) built from a Gram factor V (V^T V = K).  At the
// anchors themselves Phi(x_i) is exactly the i-th column of V.

namespace psdfit {

template <class Scalar>
struct KernelSpec {
  Scalar sigma = Scalar(1);  // bandwidth, > 0
};

// A set of n anchor points in R^d, one row per point.
template <class Scalar>
struct AnchorSet {
  MatrixX<Scalar> points;  // n x d

  Index size() const { return points.rows(); }
  Index dim() const { return points.cols(); }
};

// Integration base measure for the linear functionals below: either the
// Lebesgue measure on R^d or an isotropic Gaussian N(mean, scale^2 I).
// Note `scale` is a standard deviation: gaussian(m, s) has covariance s^2 I.
template <class Scalar>
struct BaseMeasure {
  enum class Kind { lebesgue, gaussian };

  Kind kind = Kind::lebesgue;
  VectorX<Scalar> mean;   // gaussian only
  Scalar scale = Scalar(1);  // gaussian only; standard deviation, > 0

  static BaseMeasure lebesgue() { return BaseMeasure{}; }
  static BaseMeasure gaussian(VectorX<Scalar> m, Scalar s) {
    detail::require(s > Scalar(0), "BaseMeasure::gaussian: scale must be positive");
    BaseMeasure b;
    b.kind = Kind::gaussian;
    b.mean = std::move(m);
    b.scale = s;
    return b;
  }

  bool is_lebesgue() const { return kind == Kind::lebesgue; }

  // Density of the measure at x (1 for Lebesgue).
  Scalar density(const VectorX<Scalar>& x) const {
    if (is_lebesgue()) return Scalar(1);
    const Scalar d = static_cast<Scalar>(x.size());
    const Scalar norm = std::pow(Scalar(2) * Scalar(M_PI) * scale * scale, -d / Scalar(2));
    return norm * std::exp(-(x - mean).squaredNorm() / (Scalar(2) * scale * scale));
  }
};

namespace detail {

template <class Scalar>
void check_kernel(const KernelSpec<Scalar>& ks) {
  require(ks.sigma > Scalar(0), "KernelSpec: sigma must be positive");
}

template <class Scalar>
void check_base(const BaseMeasure<Scalar>& base, Index dim) {
  if (!base.is_lebesgue()) {
    require(base.scale > Scalar(0), "BaseMeasure: gaussian scale must be positive");
    require(base.mean.size() == dim, "BaseMeasure: gaussian mean dimension mismatch");
  }
}

}  // namespace detail

template <class Scalar>
Scalar kernel_eval(const KernelSpec<Scalar>& ks, const VectorX<Scalar>& x,
                   const VectorX<Scalar>& y) {
  detail::check_kernel(ks);
  detail::require(x.size() == y.size(), "kernel_eval: dimension mismatch");
  return std::exp(-(x - y).squaredNorm() / (Scalar(2) * ks.sigma * ks.sigma));
}

// Gram matrix K with K_ij = k(x_i, x_j); symmetric, unit diagonal, PSD.
template <class Scalar>
MatrixX<Scalar> kernel_matrix(const KernelSpec<Scalar>& ks, const AnchorSet<Scalar>& anchors) {
  detail::check_kernel(ks);
  const Index n = anchors.size();
  const auto& p = anchors.points;
  const VectorX<Scalar> sq = p.rowwise().squaredNorm();
  MatrixX<Scalar> dist2 = sq.replicate(1, n) + sq.transpose().replicate(n, 1) -
                          Scalar(2) * (p * p.transpose());
  MatrixX<Scalar> k = (-dist2.cwiseMax(Scalar(0)) / (Scalar(2) * ks.sigma * ks.sigma))
                          .array()
                          .exp()
                          .matrix();
  // Exact symmetry and unit diagonal, independent of summation order above.
  k = ((k + k.transpose()) / Scalar(2)).eval();
  k.diagonal().setOnes();
  return k;
}

// Kernel section vector v(x) = (k(x, x_i))_i.
template <class Scalar>
VectorX<Scalar> kernel_vector(const KernelSpec<Scalar>& ks, const AnchorSet<Scalar>& anchors,
                              const VectorX<Scalar>& x) {
  detail::check_kernel(ks);
  detail::require(x.size() == anchors.dim(), "kernel_vector: dimension mismatch");
  const Index n = anchors.size();
  VectorX<Scalar> v(n);
  for (Index i = 0; i < n; ++i) {
    v[i] = std::exp(-(anchors.points.row(i).transpose() - x).squaredNorm() /
                    (Scalar(2) * ks.sigma * ks.sigma));
  }
  return v;
}

// Kernel sections for a batch of evaluation points: entry (i, j) holds
// k(x_i, points.row(j)) for anchor i.  Column j is kernel_vector at point j.
template <class Scalar>
MatrixX<Scalar> kernel_cross(const KernelSpec<Scalar>& ks, const AnchorSet<Scalar>& anchors,
                             const MatrixX<Scalar>& points) {
  detail::check_kernel(ks);
  detail::require(points.cols() == anchors.dim(), "kernel_cross: dimension mismatch");
  const auto& a = anchors.points;
  const VectorX<Scalar> sa = a.rowwise().squaredNorm();
  const VectorX<Scalar> sp = points.rowwise().squaredNorm();
  MatrixX<Scalar> dist2 = sa.replicate(1, points.rows()) +
                          sp.transpose().replicate(anchors.size(), 1) -
                          Scalar(2) * (a * points.transpose());
  return (-dist2.cwiseMax(Scalar(0)) / (Scalar(2) * ks.sigma * ks.sigma)).array().exp().matrix();
}

// Empirical feature coordinates Phi(x) = (V V^T)^{-1} V v(x) for a kernel
// section vector v(x).  At the anchors, Phi(x_i) = V e_i exactly, and
// ||Phi(x)||^2 <= k(x, x) for every x (the map is a metric projection onto the
// span of the anchored features).
template <class Scalar>
VectorX<Scalar> empirical_feature(const GramFactor<Scalar>& gram, const VectorX<Scalar>& kvec) {
  detail::require(kvec.size() == gram.n(), "empirical_feature: kernel vector length mismatch");
  return gram.vvt_solve(gram.V * kvec);
}

// Matrix of pairwise products integrated against a base measure:
//     (M_p)_ij = Integral k(x, x_i) k(x, x_j) dp(x).
//
// Closed forms for the Gaussian kernel (combine the two kernel exponents into
// a single Gaussian around the pair midpoint, then integrate):
//   Lebesgue:  (pi sigma^2)^{d/2} exp(-||x_i - x_j||^2 / (4 sigma^2))
//   N(m, s^2 I): (sigma^2 / (2 s^2 + sigma^2))^{d/2}
//                  * exp(-||x_i - x_j||^2 / (4 sigma^2))
//                  * exp(-||(x_i + x_j)/2 - m||^2 / (2 s^2 + sigma^2))
// The trace identity tr(B M_p) = Integral v(x)^T B v(x) dp(x) turns integral
// constraints on the fitted function into linear constraints on B.
template <class Scalar>
MatrixX<Scalar> product_integral_matrix(const KernelSpec<Scalar>& ks,
                                        const AnchorSet<Scalar>& anchors,
                                        const BaseMeasure<Scalar>& base) {
  detail::check_kernel(ks);
  detail::check_base(base, anchors.dim());
  const Index n = anchors.size();
  const Scalar d = static_cast<Scalar>(anchors.dim());
  const Scalar s2 = ks.sigma * ks.sigma;
  MatrixX<Scalar> m(n, n);
  if (base.is_lebesgue()) {
    const Scalar front = std::pow(Scalar(M_PI) * s2, d / Scalar(2));
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j <= i; ++j) {
        const Scalar dist2 =
            (anchors.points.row(i) - anchors.points.row(j)).squaredNorm();
        m(i, j) = m(j, i) = front * std::exp(-dist2 / (Scalar(4) * s2));
      }
    }
    return m;
  }
  const Scalar b2 = base.scale * base.scale;
  const Scalar denom = Scalar(2) * b2 + s2;
  const Scalar front = std::pow(s2 / denom, d / Scalar(2));
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j <= i; ++j) {
      const Scalar dist2 = (anchors.points.row(i) - anchors.points.row(j)).squaredNorm();
      const VectorX<Scalar> mid =
          ((anchors.points.row(i) + anchors.points.row(j)) / Scalar(2)).transpose();
      const Scalar shift2 = (mid - base.mean).squaredNorm();
      m(i, j) = m(j, i) =
          front * std::exp(-dist2 / (Scalar(4) * s2)) * std::exp(-shift2 / denom);
    }
  }
  return m;
}

// Single-kernel integrals u_i = Integral k(x, x_i) dp(x):
//   Lebesgue:   (2 pi sigma^2)^{d/2}
//   N(m, s^2 I): (sigma^2 / (sigma^2 + s^2))^{d/2}
//                  * exp(-||x_i - m||^2 / (2 (sigma^2 + s^2)))
// For a linear-in-kernel model g = sum_i beta_i k(., x_i) this gives the
// integral of g as u^T beta.
template <class Scalar>
VectorX<Scalar> kernel_integral_vector(const KernelSpec<Scalar>& ks,
                                       const AnchorSet<Scalar>& anchors,
                                       const BaseMeasure<Scalar>& base) {
  detail::check_kernel(ks);
  detail::check_base(base, anchors.dim());
  const Index n = anchors.size();
  const Scalar d = static_cast<Scalar>(anchors.dim());
  const Scalar s2 = ks.sigma * ks.sigma;
  VectorX<Scalar> u(n);
  if (base.is_lebesgue()) {
    u.setConstant(std::pow(Scalar(2) * Scalar(M_PI) * s2, d / Scalar(2)));
    return u;
  }
  const Scalar b2 = base.scale * base.scale;
  const Scalar denom = s2 + b2;
  const Scalar front = std::pow(s2 / denom, d / Scalar(2));
  for (Index i = 0; i < n; ++i) {
    const Scalar dist2 = (anchors.points.row(i).transpose() - base.mean).squaredNorm();
    u[i] = front * std::exp(-dist2 / (Scalar(2) * denom));
  }
  return u;
}

// Evaluates the quadratic-form model f(x) = v(x)^T B v(x) at a batch of
// points, given the cross-kernel matrix (anchors x points).
template <class Scalar>
VectorX<Scalar> quadratic_model_values(const MatrixX<Scalar>& b, const MatrixX<Scalar>& cross) {
  detail::require(b.rows() == b.cols() && b.rows() == cross.rows(),
                  "quadratic_model_values: shape mismatch");
  return ((b * cross).cwiseProduct(cross)).colwise().sum();
}

}  // namespace psdfit

#endif  // PSDFIT_KERNEL_HPP
