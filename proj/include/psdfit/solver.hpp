// This file is part of psdfit, a library for fitting nonnegative and
// cone-valued functions with positive semidefinite kernel models.
//
// Copyright (c) 2026 The psdfit authors
// SPDX-License-Identifier: MIT

#ifndef PSDFIT_SOLVER_HPP
#define PSDFIT_SOLVER_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "psdfit/common.hpp"
#include "psdfit/losses.hpp"
#include "psdfit/regularizer.hpp"
#include "psdfit/spectral.hpp"

// Multi-block dual solver for sums of pointwise losses of quadratic-form and
// kernel-linear model values, with trace / linear side constraints.
//
// Primal problem.  Over matrix blocks A_b >= 0 (r x r, feature coordinates)
// and vector blocks beta_b (length n):
//
//   minimize  sum_t ell_t(z_args(t))
//             + sum_{psd b} [ l1_b tr(A_b) + (l2_b/2) ||A_b||_F^2 ]
//             + sum_{lin b} (ridge_b/2) beta_b' K beta_b
//   subject to  tr(A_b C_k) (=, <=) rhs_k     for psd-block constraints
//               w_k' beta_b (=, <=) rhs_k     for linear-block constraints
//
// where each loss argument j carries an anchor index i(j) and one signed
// coefficient per block, and its value is
//   z_j = sum_{psd b} coeff(j,b) v_i' A_b v_i + sum_{lin b} coeff(j,b) (K beta_b)_i,
// with v_i the i-th column of the Gram factor V (so v_i' A v_i is the model
// value of block b at anchor i).
//
// Dual problem.  Attaching a multiplier alpha_j to each argument and mu_k >= 0
// (free for equalities) to each constraint and minimizing the Lagrangian in
// closed form over the blocks yields the dual, written here as the
// minimization of
//
//   F(alpha, mu) = sum_t ell_t*(alpha_args(t))
//                + sum_{psd b} ||[M_b]_-||_F^2 / (2 l2_b)
//                + sum_{lin b} c_b' c_b / (2 ridge_b)
//                + sum_k mu_k rhs_k,
//   M_b = V diag(s_b) V' + sum_{k -> b} mu_k C_k + l1_b I      (r x r)
//   c_b = V s_b + sum_{k -> b} mu_k g_k,   g_k = (V V')^{-1} V w_k   (r)
//   s_b[i] = sum_{j at anchor i} coeff(j,b) alpha_j                  (n)
//
// over alpha and feasible mu; the dual objective is D = -F.  F splits into a
// smooth part (everything except the conjugates) whose gradient is Lipschitz,
// plus the separable conjugate sum handled by proximal steps, so the solver
// is FISTA with backtracking line search and function-value adaptive restart.
//
// Recovery.  The inner minimizations that produced F are attained at
//   A_b = [M_b]_- / l2_b          (positive semidefinite by construction)
//   beta_b = -(s_b + sum_k mu_k h_k) / ridge_b,   h_k = K^+ w_k,
// which is how primal iterates are read off any dual point.  The reported
// certificate is gap = P(A, beta) - D(alpha, mu): whenever the recovered
// point satisfies the constraints, weak duality gives P >= P* >= D, so the
// gap bounds the true suboptimality.  Convergence therefore requires both a
// small gap and constraint violations below tol_feas.

namespace psdfit {

// ---------------------------------------------------------------------------
// Problem description

enum class BlockKind { psd, linear };

template <class Scalar>
struct BlockSpec {
  BlockKind kind = BlockKind::psd;
  RegSpec<Scalar> reg;       // psd blocks: trace + squared-Frobenius weights
  Scalar ridge = Scalar(1);  // linear blocks: (ridge/2) beta' K beta, > 0

  static BlockSpec psd(RegSpec<Scalar> r) {
    BlockSpec b;
    b.kind = BlockKind::psd;
    b.reg = r;
    return b;
  }
  static BlockSpec linear(Scalar ridge) {
    BlockSpec b;
    b.kind = BlockKind::linear;
    b.ridge = ridge;
    return b;
  }
};

// One loss argument: which anchor it is evaluated at, and the signed
// combination of block values forming it (entries are typically -1, 0, +1).
template <class Scalar>
struct ArgumentSpec {
  Index anchor = 0;
  VectorX<Scalar> coeff;  // one entry per block
};

// Affine side constraint on a single block.  For psd blocks the constrained
// value is tr(A * trace_matrix) with trace_matrix symmetric r x r in feature
// coordinates; for linear blocks it is dot(dot_vector, beta).
template <class Scalar>
struct ConstraintSpec {
  Index block = 0;
  bool is_equality = true;
  Scalar rhs = Scalar(0);
  MatrixX<Scalar> trace_matrix;
  VectorX<Scalar> dot_vector;
};

template <class Scalar>
struct ProblemSpec {
  GramFactor<Scalar> gram;
  std::vector<BlockSpec<Scalar>> blocks;
  std::vector<ArgumentSpec<Scalar>> arguments;
  std::vector<LossTerm<Scalar>> losses;  // consume consecutive arguments
  std::vector<ConstraintSpec<Scalar>> constraints;
};

struct SolverOptions {
  Index max_iterations = 50000;
  double tol_rel = 1e-10;       // relative change of the dual objective
  double tol_gap = 1e-7;        // certified gap, relative to 1 + |primal|
  double tol_feas = 1e-8;       // constraint violation, relative to 1 + |rhs|
  Index check_every = 25;       // iterations between certificate evaluations
  double initial_step = 0;      // 0 = auto (l2_min / ||K||_op^2 scale)
  bool record_trace = true;
};

enum class SolverStatus { converged, max_iterations };

template <class Scalar>
struct BlockSolution {
  BlockKind kind = BlockKind::psd;
  MatrixX<Scalar> feature_matrix;  // psd: A, r x r
  MatrixX<Scalar> anchor_matrix;   // psd: B = W' A W with W = (V V')^{-1} V
  VectorX<Scalar> beta;            // linear
  VectorX<Scalar> anchor_values;   // model value of this block at each anchor
};

template <class Scalar>
struct FitResult {
  std::vector<BlockSolution<Scalar>> blocks;
  VectorX<Scalar> alpha;
  VectorX<Scalar> mu;
  Scalar dual_objective = Scalar(0);
  Scalar primal_objective = Scalar(0);  // without constraint terms
  Scalar gap = Scalar(0);               // Lagrangian certificate, >= 0
  VectorX<Scalar> constraint_residuals;
  SolverStatus status = SolverStatus::max_iterations;
  Index iterations = 0;
  std::vector<Scalar> objective_trace;  // F = -D per accepted iterate
};

// ---------------------------------------------------------------------------
// Validation and precomputation

namespace detail {

template <class Scalar>
void validate_problem(const ProblemSpec<Scalar>& p) {
  const Index n = p.gram.n();
  const Index r = p.gram.rank;
  const Index nb = static_cast<Index>(p.blocks.size());
  require(nb > 0, "ProblemSpec: at least one block is required");
  require(!p.losses.empty(), "ProblemSpec: at least one loss term is required");
  for (const auto& b : p.blocks) {
    if (b.kind == BlockKind::psd) {
      require(b.reg.lambda1 >= Scalar(0) && b.reg.lambda2 > Scalar(0),
              "ProblemSpec: psd block needs lambda1 >= 0 and lambda2 > 0");
    } else {
      require(b.ridge > Scalar(0), "ProblemSpec: linear block needs ridge > 0");
    }
  }
  Index total_arity = 0;
  for (const auto& t : p.losses) total_arity += t.arity();
  require(total_arity == static_cast<Index>(p.arguments.size()),
          "ProblemSpec: loss arities must account for every argument exactly once");
  for (const auto& a : p.arguments) {
    require(a.anchor >= 0 && a.anchor < n, "ProblemSpec: argument anchor out of range");
    require(a.coeff.size() == nb, "ProblemSpec: argument needs one coefficient per block");
  }
  for (const auto& c : p.constraints) {
    require(c.block >= 0 && c.block < nb, "ProblemSpec: constraint block out of range");
    if (p.blocks[c.block].kind == BlockKind::psd) {
      require(c.trace_matrix.rows() == r && c.trace_matrix.cols() == r,
              "ProblemSpec: trace_matrix must be rank x rank (feature coordinates)");
    } else {
      require(c.dot_vector.size() == n, "ProblemSpec: dot_vector must have one entry per anchor");
    }
  }
}

// Per-problem cached quantities that do not change across iterations.
template <class Scalar>
struct SolverWorkspace {
  Index n = 0, r = 0, m = 0, nc = 0;
  std::vector<Index> arg_offset;                  // loss t -> first argument index
  std::vector<std::vector<Index>> block_constraints;  // block -> constraint ids
  std::vector<VectorX<Scalar>> g;                 // constraint -> g_k (linear blocks)
  std::vector<VectorX<Scalar>> h;                 // constraint -> h_k = K^+ w_k
  Scalar opnorm_k = Scalar(0);
  Scalar min_curvature = Scalar(0);               // min over blocks of l2 / ridge
};

template <class Scalar>
SolverWorkspace<Scalar> prepare_workspace(const ProblemSpec<Scalar>& p) {
  validate_problem(p);
  SolverWorkspace<Scalar> w;
  w.n = p.gram.n();
  w.r = p.gram.rank;
  w.m = static_cast<Index>(p.arguments.size());
  w.nc = static_cast<Index>(p.constraints.size());
  w.arg_offset.resize(p.losses.size());
  Index off = 0;
  for (std::size_t t = 0; t < p.losses.size(); ++t) {
    w.arg_offset[t] = off;
    off += p.losses[t].arity();
  }
  w.block_constraints.assign(p.blocks.size(), {});
  w.g.resize(w.nc);
  w.h.resize(w.nc);
  for (Index k = 0; k < w.nc; ++k) {
    const auto& c = p.constraints[static_cast<std::size_t>(k)];
    w.block_constraints[static_cast<std::size_t>(c.block)].push_back(k);
    if (p.blocks[static_cast<std::size_t>(c.block)].kind == BlockKind::linear) {
      // g_k = (V V')^{-1} V w_k lives in feature coordinates; h_k = K^+ w_k.
      const VectorX<Scalar> vw = p.gram.V * c.dot_vector;
      w.g[static_cast<std::size_t>(k)] = p.gram.vvt_solve(vw);
      w.h[static_cast<std::size_t>(k)] =
          p.gram.V.transpose() * p.gram.vvt_solve(w.g[static_cast<std::size_t>(k)]);
      // The constraint must act through the model: w_k has to lie in the
      // range of K, otherwise dot(w_k, beta) is not determined by K beta.
      const Scalar err = (p.gram.V.transpose() * w.g[static_cast<std::size_t>(k)] - c.dot_vector)
                             .template lpNorm<Eigen::Infinity>();
      require(err <= Scalar(1e-8) * (Scalar(1) + c.dot_vector.template lpNorm<Eigen::Infinity>()),
              "ProblemSpec: linear-block constraint vector is not in the range of K");
    }
  }
  w.opnorm_k = p.gram.eigenvalues.size() > 0 ? p.gram.eigenvalues.maxCoeff() : Scalar(1);
  Scalar mc = std::numeric_limits<Scalar>::infinity();
  for (const auto& b : p.blocks) {
    mc = std::min(mc, b.kind == BlockKind::psd ? b.reg.lambda2 : b.ridge);
  }
  w.min_curvature = mc;
  return w;
}

template <class Scalar>
VectorX<Scalar> block_signal(const ProblemSpec<Scalar>& p, const VectorX<Scalar>& alpha,
                             Index block) {
  VectorX<Scalar> s = VectorX<Scalar>::Zero(p.gram.n());
  for (Index j = 0; j < static_cast<Index>(p.arguments.size()); ++j) {
    const auto& a = p.arguments[static_cast<std::size_t>(j)];
    const Scalar c = a.coeff[block];
    if (c != Scalar(0)) s[a.anchor] += c * alpha[j];
  }
  return s;
}

// Value (and optionally gradient) of the smooth part of F at (alpha, mu).
template <class Scalar>
struct SmoothEval {
  Scalar value = Scalar(0);
  VectorX<Scalar> grad_alpha;
  VectorX<Scalar> grad_mu;
};

template <class Scalar>
SmoothEval<Scalar> smooth_eval(const ProblemSpec<Scalar>& p, const SolverWorkspace<Scalar>& w,
                               const VectorX<Scalar>& alpha, const VectorX<Scalar>& mu,
                               bool want_grad) {
  SmoothEval<Scalar> out;
  if (want_grad) {
    out.grad_alpha = VectorX<Scalar>::Zero(w.m);
    out.grad_mu = VectorX<Scalar>::Zero(w.nc);
  }
  const Index nb = static_cast<Index>(p.blocks.size());
  std::vector<VectorX<Scalar>> d(static_cast<std::size_t>(nb));  // per-block anchor gradients
  for (Index b = 0; b < nb; ++b) {
    const auto& blk = p.blocks[static_cast<std::size_t>(b)];
    const VectorX<Scalar> s = block_signal(p, alpha, b);
    const auto& kids = w.block_constraints[static_cast<std::size_t>(b)];
    if (blk.kind == BlockKind::psd) {
      MatrixX<Scalar> mb = p.gram.V * s.asDiagonal() * p.gram.V.transpose();
      mb.diagonal().array() += blk.reg.lambda1;
      for (Index k : kids) {
        mb += mu[k] * p.constraints[static_cast<std::size_t>(k)].trace_matrix;
      }
      mb = ((mb + mb.transpose()) / Scalar(2)).eval();
      const MatrixX<Scalar> neg = neg_part(mb);
      out.value += neg.squaredNorm() / (Scalar(2) * blk.reg.lambda2);
      if (want_grad) {
        const MatrixX<Scalar> nv = neg * p.gram.V;
        d[static_cast<std::size_t>(b)] =
            -(p.gram.V.cwiseProduct(nv)).colwise().sum().transpose() / blk.reg.lambda2;
        for (Index k : kids) {
          out.grad_mu[k] -=
              (p.constraints[static_cast<std::size_t>(k)].trace_matrix.cwiseProduct(neg)).sum() /
              blk.reg.lambda2;
        }
      }
    } else {
      VectorX<Scalar> c = p.gram.V * s;
      for (Index k : kids) c += mu[k] * w.g[static_cast<std::size_t>(k)];
      out.value += c.squaredNorm() / (Scalar(2) * blk.ridge);
      if (want_grad) {
        d[static_cast<std::size_t>(b)] = (p.gram.V.transpose() * c) / blk.ridge;
        for (Index k : kids) {
          out.grad_mu[k] += c.dot(w.g[static_cast<std::size_t>(k)]) / blk.ridge;
        }
      }
    }
  }
  for (Index k = 0; k < w.nc; ++k) {
    out.value += mu[k] * p.constraints[static_cast<std::size_t>(k)].rhs;
    if (want_grad) out.grad_mu[k] += p.constraints[static_cast<std::size_t>(k)].rhs;
  }
  if (want_grad) {
    for (Index j = 0; j < w.m; ++j) {
      const auto& a = p.arguments[static_cast<std::size_t>(j)];
      Scalar gj = Scalar(0);
      for (Index b = 0; b < nb; ++b) {
        const Scalar cb = a.coeff[b];
        if (cb != Scalar(0)) gj += cb * d[static_cast<std::size_t>(b)][a.anchor];
      }
      out.grad_alpha[j] = gj;
    }
  }
  return out;
}

// Sum of loss conjugates at alpha (the nonsmooth part of F, minus the
// multiplier cone indicator which is kept feasible by projection).
template <class Scalar>
ExtendedReal<Scalar> conjugate_sum(const ProblemSpec<Scalar>& p, const SolverWorkspace<Scalar>& w,
                                   const VectorX<Scalar>& alpha) {
  ExtendedReal<Scalar> total = ExtendedReal<Scalar>::finite(Scalar(0));
  for (std::size_t t = 0; t < p.losses.size(); ++t) {
    const Index j = w.arg_offset[t];
    const auto& term = p.losses[t];
    total = total + (term.arity() == 1 ? loss_conjugate(term, alpha[j])
                                       : loss_conjugate(term, alpha[j], alpha[j + 1]));
  }
  return total;
}

// Proximal step on the nonsmooth part: conjugate proxes on the loss argument
// slices, projection onto the feasible cone for inequality multipliers.  The
// pinball conjugate has a box domain whose boundary is reached exactly at
// optima, so its output is clamped to remove roundoff-level violations.
template <class Scalar>
void prox_step(const ProblemSpec<Scalar>& p, const SolverWorkspace<Scalar>& w,
               VectorX<Scalar>& alpha, VectorX<Scalar>& mu, Scalar step) {
  for (std::size_t t = 0; t < p.losses.size(); ++t) {
    const Index j = w.arg_offset[t];
    const auto& term = p.losses[t];
    if (term.arity() == 1) {
      alpha[j] = prox_conjugate(term, alpha[j], step);
      if (term.kind == LossKind::pinball && !term.nonneg_domain) {
        alpha[j] = std::clamp(alpha[j], -term.quantile, Scalar(1) - term.quantile);
      }
    } else {
      const std::array<Scalar, 2> pr = prox_conjugate(term, alpha[j], alpha[j + 1], step);
      alpha[j] = pr[0];
      alpha[j + 1] = pr[1];
    }
  }
  for (Index k = 0; k < w.nc; ++k) {
    if (!p.constraints[static_cast<std::size_t>(k)].is_equality) mu[k] = std::max(Scalar(0), mu[k]);
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Primal recovery and certificates

// Model values of one psd block at every anchor: (v_i' A v_i)_i.
template <class Scalar>
VectorX<Scalar> anchor_quadratic_values(const GramFactor<Scalar>& gram, const MatrixX<Scalar>& a) {
  return (gram.V.cwiseProduct(a * gram.V)).colwise().sum().transpose();
}

// Read the primal blocks off a dual point (alpha, mu).
template <class Scalar>
std::vector<BlockSolution<Scalar>> recover_blocks(const ProblemSpec<Scalar>& p,
                                                  const VectorX<Scalar>& alpha,
                                                  const VectorX<Scalar>& mu) {
  const auto w = detail::prepare_workspace(p);
  std::vector<BlockSolution<Scalar>> out(p.blocks.size());
  for (Index b = 0; b < static_cast<Index>(p.blocks.size()); ++b) {
    const auto& blk = p.blocks[static_cast<std::size_t>(b)];
    auto& sol = out[static_cast<std::size_t>(b)];
    sol.kind = blk.kind;
    const VectorX<Scalar> s = detail::block_signal(p, alpha, b);
    const auto& kids = w.block_constraints[static_cast<std::size_t>(b)];
    if (blk.kind == BlockKind::psd) {
      MatrixX<Scalar> mb = p.gram.V * s.asDiagonal() * p.gram.V.transpose();
      mb.diagonal().array() += blk.reg.lambda1;
      for (Index k : kids) {
        mb += mu[k] * p.constraints[static_cast<std::size_t>(k)].trace_matrix;
      }
      mb = ((mb + mb.transpose()) / Scalar(2)).eval();
      sol.feature_matrix = neg_part(mb) / blk.reg.lambda2;
      sol.anchor_matrix = p.gram.to_anchor_coordinates(sol.feature_matrix);
      sol.anchor_values = anchor_quadratic_values(p.gram, sol.feature_matrix);
    } else {
      VectorX<Scalar> dir = s;
      for (Index k : kids) dir += mu[k] * w.h[static_cast<std::size_t>(k)];
      sol.beta = -dir / blk.ridge;
      sol.anchor_values = p.gram.V.transpose() * (p.gram.V * sol.beta);
    }
  }
  return out;
}

template <class Scalar>
struct PrimalEval {
  ExtendedReal<Scalar> objective = ExtendedReal<Scalar>::finite(Scalar(0));  // loss + penalties
  VectorX<Scalar> constraint_residuals;  // value - rhs per constraint
  VectorX<Scalar> argument_values;       // z_j per argument
};

// Primal objective (losses + block penalties, no constraint terms) and
// constraint residuals of a candidate block collection.
template <class Scalar>
PrimalEval<Scalar> evaluate_primal(const ProblemSpec<Scalar>& p,
                                   const std::vector<BlockSolution<Scalar>>& sols) {
  detail::validate_problem(p);
  detail::require(sols.size() == p.blocks.size(), "evaluate_primal: one solution per block");
  PrimalEval<Scalar> out;
  const Index m = static_cast<Index>(p.arguments.size());
  out.argument_values = VectorX<Scalar>::Zero(m);
  for (Index j = 0; j < m; ++j) {
    const auto& a = p.arguments[static_cast<std::size_t>(j)];
    Scalar z = Scalar(0);
    for (Index b = 0; b < static_cast<Index>(p.blocks.size()); ++b) {
      if (a.coeff[b] != Scalar(0)) {
        z += a.coeff[b] * sols[static_cast<std::size_t>(b)].anchor_values[a.anchor];
      }
    }
    out.argument_values[j] = z;
  }
  ExtendedReal<Scalar> obj = ExtendedReal<Scalar>::finite(Scalar(0));
  Index j = 0;
  for (const auto& term : p.losses) {
    obj = obj + (term.arity() == 1
                     ? loss_value(term, out.argument_values[j])
                     : loss_value(term, out.argument_values[j], out.argument_values[j + 1]));
    j += term.arity();
  }
  for (Index b = 0; b < static_cast<Index>(p.blocks.size()); ++b) {
    const auto& blk = p.blocks[static_cast<std::size_t>(b)];
    const auto& sol = sols[static_cast<std::size_t>(b)];
    if (blk.kind == BlockKind::psd) {
      obj = obj + ExtendedReal<Scalar>::finite(blk.reg.lambda1 * sol.feature_matrix.trace() +
                                               blk.reg.lambda2 / Scalar(2) *
                                                   sol.feature_matrix.squaredNorm());
    } else {
      // beta' K beta = ||V beta||^2.
      obj = obj + ExtendedReal<Scalar>::finite(blk.ridge / Scalar(2) *
                                               (p.gram.V * sol.beta).squaredNorm());
    }
  }
  out.objective = obj;
  const Index nc = static_cast<Index>(p.constraints.size());
  out.constraint_residuals = VectorX<Scalar>::Zero(nc);
  for (Index k = 0; k < nc; ++k) {
    const auto& c = p.constraints[static_cast<std::size_t>(k)];
    const auto& sol = sols[static_cast<std::size_t>(c.block)];
    Scalar value;
    if (p.blocks[static_cast<std::size_t>(c.block)].kind == BlockKind::psd) {
      value = (c.trace_matrix.cwiseProduct(sol.feature_matrix)).sum();
    } else {
      value = c.dot_vector.dot(sol.beta);
    }
    out.constraint_residuals[k] = value - c.rhs;
  }
  return out;
}

// Dual objective D = -F at a dual point, -infinity outside dom F.
template <class Scalar>
ExtendedReal<Scalar> dual_value(const ProblemSpec<Scalar>& p, const VectorX<Scalar>& alpha,
                                const VectorX<Scalar>& mu) {
  const auto w = detail::prepare_workspace(p);
  detail::require(alpha.size() == w.m && mu.size() == w.nc, "dual_value: dimension mismatch");
  for (Index k = 0; k < w.nc; ++k) {
    if (!p.constraints[static_cast<std::size_t>(k)].is_equality && mu[k] < Scalar(0)) {
      return ExtendedReal<Scalar>::neg_infinity();
    }
  }
  const ExtendedReal<Scalar> conj = detail::conjugate_sum(p, w, alpha);
  if (conj.is_pos_infinity()) return ExtendedReal<Scalar>::neg_infinity();
  const Scalar f = detail::smooth_eval(p, w, alpha, mu, false).value + conj.value();
  return ExtendedReal<Scalar>::finite(-f);
}

// ---------------------------------------------------------------------------
// FISTA driver

template <class Scalar>
FitResult<Scalar> fista_solve(const ProblemSpec<Scalar>& p, const SolverOptions& opts = {}) {
  const auto w = detail::prepare_workspace(p);
  detail::require(opts.max_iterations > 0, "SolverOptions: max_iterations must be positive");
  detail::require(opts.tol_rel > 0 && opts.tol_gap > 0, "SolverOptions: tolerances must be positive");
  const Scalar inf = std::numeric_limits<Scalar>::infinity();

  Scalar step = static_cast<Scalar>(opts.initial_step);
  if (step <= Scalar(0)) step = w.min_curvature / (w.opnorm_k * w.opnorm_k);
  const Scalar step_cap = step * Scalar(1000);

  // Initialize by a pure proximal step from zero: this lands every alpha
  // strictly inside the domain of its conjugate (alpha = 0 need not be).
  VectorX<Scalar> x_alpha = VectorX<Scalar>::Zero(w.m);
  VectorX<Scalar> x_mu = VectorX<Scalar>::Zero(w.nc);
  detail::prox_step(p, w, x_alpha, x_mu, step);

  const auto total_value = [&](const VectorX<Scalar>& a, const VectorX<Scalar>& m_,
                               Scalar smooth) -> Scalar {
    const ExtendedReal<Scalar> conj = detail::conjugate_sum(p, w, a);
    (void)m_;
    return conj.is_pos_infinity() ? inf : smooth + conj.value();
  };

  Scalar f_x = total_value(x_alpha, x_mu, detail::smooth_eval(p, w, x_alpha, x_mu, false).value);
  VectorX<Scalar> xp_alpha = x_alpha, xp_mu = x_mu;  // previous accepted iterate
  Scalar t_momentum = Scalar(1);

  FitResult<Scalar> res;
  if (opts.record_trace) res.objective_trace.push_back(f_x);
  Scalar f_prev_iter = f_x;
  bool gap_ok = false;
  Index it = 0;
  for (; it < opts.max_iterations; ++it) {
    // Extrapolated point.
    const Scalar t_next = (Scalar(1) + std::sqrt(Scalar(1) + Scalar(4) * t_momentum * t_momentum)) /
                          Scalar(2);
    const Scalar beta_m = (t_momentum - Scalar(1)) / t_next;
    VectorX<Scalar> y_alpha = x_alpha + beta_m * (x_alpha - xp_alpha);
    VectorX<Scalar> y_mu = x_mu + beta_m * (x_mu - xp_mu);

    const auto ev_y = detail::smooth_eval(p, w, y_alpha, y_mu, true);

    // Backtracking proximal-gradient step from y.
    VectorX<Scalar> n_alpha, n_mu;
    Scalar smooth_n = Scalar(0);
    for (int halvings = 0;; ++halvings) {
      n_alpha = y_alpha - step * ev_y.grad_alpha;
      n_mu = y_mu - step * ev_y.grad_mu;
      detail::prox_step(p, w, n_alpha, n_mu, step);
      smooth_n = detail::smooth_eval(p, w, n_alpha, n_mu, false).value;
      const Scalar lin = ev_y.grad_alpha.dot(n_alpha - y_alpha) + ev_y.grad_mu.dot(n_mu - y_mu);
      const Scalar quad = ((n_alpha - y_alpha).squaredNorm() + (n_mu - y_mu).squaredNorm()) /
                          (Scalar(2) * step);
      const Scalar slack = Scalar(1e-12) * (Scalar(1) + std::abs(ev_y.value));
      if (smooth_n <= ev_y.value + lin + quad + slack) break;
      step /= Scalar(2);
      if (halvings > 100) throw NumericError("fista_solve: backtracking line search failed");
    }
    const Scalar f_new = total_value(n_alpha, n_mu, smooth_n);

    if (f_new > f_x + Scalar(1e-12) * (Scalar(1) + std::abs(f_x))) {
      // Momentum overshoot: restart from the last accepted iterate.  A plain
      // proximal-gradient step from x cannot increase F, so this makes
      // progress on the next pass.
      t_momentum = Scalar(1);
      xp_alpha = x_alpha;
      xp_mu = x_mu;
      continue;
    }

    xp_alpha = x_alpha;
    xp_mu = x_mu;
    x_alpha = n_alpha;
    x_mu = n_mu;
    t_momentum = t_next;
    f_prev_iter = f_x;
    f_x = f_new;
    if (opts.record_trace) res.objective_trace.push_back(f_x);
    step = std::min(step * Scalar(1.05), step_cap);

    const bool small_change =
        std::abs(f_x - f_prev_iter) <= static_cast<Scalar>(opts.tol_rel) * (Scalar(1) + std::abs(f_x));
    if (small_change && ((it + 1) % opts.check_every == 0 || it + 1 == opts.max_iterations)) {
      const auto sols = recover_blocks(p, x_alpha, x_mu);
      const auto pe = evaluate_primal(p, sols);
      if (pe.objective.is_finite()) {
        const Scalar primal = pe.objective.value();
        const Scalar gap = primal - (-f_x);
        bool feasible = true;
        for (Index k = 0; k < w.nc; ++k) {
          const auto& c = p.constraints[static_cast<std::size_t>(k)];
          const Scalar viol = c.is_equality ? std::abs(pe.constraint_residuals[k])
                                            : std::max(Scalar(0), pe.constraint_residuals[k]);
          if (viol > static_cast<Scalar>(opts.tol_feas) * (Scalar(1) + std::abs(c.rhs))) {
            feasible = false;
            break;
          }
        }
        if (feasible &&
            gap <= static_cast<Scalar>(opts.tol_gap) * (Scalar(1) + std::abs(primal))) {
          gap_ok = true;
          ++it;
          break;
        }
      }
    }
  }

  res.alpha = x_alpha;
  res.mu = x_mu;
  res.iterations = it;
  res.status = gap_ok ? SolverStatus::converged : SolverStatus::max_iterations;
  res.blocks = recover_blocks(p, x_alpha, x_mu);
  const auto pe = evaluate_primal(p, res.blocks);
  res.constraint_residuals = pe.constraint_residuals;
  res.dual_objective = -f_x;
  res.primal_objective = pe.objective.is_finite() ? pe.objective.value() : inf;
  res.gap = pe.objective.is_finite() ? pe.objective.value() - res.dual_objective : inf;
  return res;
}

// ---------------------------------------------------------------------------
// Direct primal solver (projected gradient + augmented Lagrangian).
//
// An independent check on the dual path for small problems: minimizes the
// primal objective directly over (A_b >= 0, beta_b) with projected gradient
// descent, folding constraints in through an augmented Lagrangian with
// multiplier updates.  Linear blocks are iterated in the coordinates
// phi = V beta (recovering the minimum-norm beta = V' (V V')^{-1} phi at the
// end), where the ridge term is simply (ridge/2) ||phi||^2 and the problem is
// well conditioned even when K is nearly singular.  Restricted to
// differentiable losses and at most 50 anchors; accuracy is limited by the
// first-order stopping rule, so treat results as reference values at ~1e-7,
// not machine precision.

struct OracleOptions {
  Index max_inner = 100000;
  Index max_outer = 60;      // multiplier updates
  double rho = 1e4;          // augmented-Lagrangian weight (grown if stalled)
  double tol_grad = 1e-10;   // gradient-mapping stopping threshold
  double tol_resid = 1e-10;  // constraint violation target
};

template <class Scalar>
struct OracleResult {
  std::vector<BlockSolution<Scalar>> blocks;
  Scalar objective = Scalar(0);  // losses + penalties, no constraint terms
  VectorX<Scalar> constraint_residuals;
};

template <class Scalar>
OracleResult<Scalar> primal_oracle_solve(const ProblemSpec<Scalar>& p,
                                         const OracleOptions& opts = {}) {
  const auto w = detail::prepare_workspace(p);
  detail::require(w.n <= 50, "primal_oracle_solve: limited to 50 anchors");
  for (const auto& t : p.losses) {
    detail::require(t.kind != LossKind::pinball,
                    "primal_oracle_solve: requires differentiable losses");
  }
  const Scalar inf = std::numeric_limits<Scalar>::infinity();
  const Index nb = static_cast<Index>(p.blocks.size());

  std::vector<BlockSolution<Scalar>> sols(static_cast<std::size_t>(nb));
  std::vector<VectorX<Scalar>> phi(static_cast<std::size_t>(nb));  // linear blocks: V beta
  const auto sync_linear = [&](Index b) {
    auto& s = sols[static_cast<std::size_t>(b)];
    const auto& f = phi[static_cast<std::size_t>(b)];
    s.beta = p.gram.V.transpose() * p.gram.vvt_solve(f);
    s.anchor_values = p.gram.V.transpose() * f;
  };
  for (Index b = 0; b < nb; ++b) {
    auto& s = sols[static_cast<std::size_t>(b)];
    s.kind = p.blocks[static_cast<std::size_t>(b)].kind;
    if (s.kind == BlockKind::psd) {
      s.feature_matrix = MatrixX<Scalar>::Identity(w.r, w.r);
      s.anchor_values = anchor_quadratic_values(p.gram, s.feature_matrix);
    } else {
      // phi = V K^+ 1 gives K beta = projection of the all-ones vector onto
      // range(K): a generic interior start for losses needing z > 0.
      phi[static_cast<std::size_t>(b)] =
          p.gram.vvt_solve(VectorX<Scalar>(p.gram.V * VectorX<Scalar>::Ones(w.n)));
      sync_linear(b);
    }
  }

  // Augmented-Lagrangian value at a candidate, +infinity outside loss
  // domains: for equalities mu r + rho r^2 / 2, for inequalities
  // (max(0, mu + rho r)^2 - mu^2) / (2 rho).
  VectorX<Scalar> mu_hat = VectorX<Scalar>::Zero(w.nc);
  Scalar rho = static_cast<Scalar>(opts.rho);
  const auto al_value = [&](const std::vector<BlockSolution<Scalar>>& cand,
                            PrimalEval<Scalar>* pe_out) -> Scalar {
    auto pe = evaluate_primal(p, cand);
    if (pe_out) *pe_out = pe;
    if (!pe.objective.is_finite()) return inf;
    Scalar val = pe.objective.value();
    for (Index k = 0; k < w.nc; ++k) {
      const Scalar r = pe.constraint_residuals[k];
      if (p.constraints[static_cast<std::size_t>(k)].is_equality) {
        val += mu_hat[k] * r + rho / Scalar(2) * r * r;
      } else {
        const Scalar t = std::max(Scalar(0), mu_hat[k] + rho * r);
        val += (t * t - mu_hat[k] * mu_hat[k]) / (Scalar(2) * rho);
      }
    }
    return val;
  };

  // Grow the start until it is interior to every loss domain.
  for (int tries = 0; al_value(sols, nullptr) == inf; ++tries) {
    detail::require(tries < 60, "primal_oracle_solve: could not find a feasible starting point");
    for (auto& s : sols) {
      if (s.kind == BlockKind::psd) {
        s.feature_matrix *= Scalar(2);
        s.anchor_values = anchor_quadratic_values(p.gram, s.feature_matrix);
      }
    }
  }

  // Gradients of the augmented Lagrangian at a candidate state: loss terms
  // give per-argument slopes, folded into per-block anchor weights;
  // constraint terms and regularizers add directly.  For linear blocks, in
  // phi coordinates,
  //   d/dphi [ sum_j ell_j((V' phi)_i) + ridge/2 ||phi||^2 + pen w_k' beta(phi) ]
  //     = V wts + ridge phi + pen g_k.
  const auto assemble_grads = [&](const std::vector<BlockSolution<Scalar>>& st,
                                  const std::vector<VectorX<Scalar>>& st_phi,
                                  const PrimalEval<Scalar>& pe,
                                  std::vector<MatrixX<Scalar>>& grad_a,
                                  std::vector<VectorX<Scalar>>& grad_phi) {
    VectorX<Scalar> slope = VectorX<Scalar>::Zero(w.m);
    Index j = 0;
    for (const auto& term : p.losses) {
      if (term.arity() == 1) {
        slope[j] = loss_grad(term, pe.argument_values[j]);
        j += 1;
      } else {
        const auto g2 = loss_grad(term, pe.argument_values[j], pe.argument_values[j + 1]);
        slope[j] = g2[0];
        slope[j + 1] = g2[1];
        j += 2;
      }
    }
    VectorX<Scalar> pen_slope = VectorX<Scalar>::Zero(w.nc);
    for (Index k = 0; k < w.nc; ++k) {
      const Scalar r = pe.constraint_residuals[k];
      const bool eq = p.constraints[static_cast<std::size_t>(k)].is_equality;
      pen_slope[k] = eq ? mu_hat[k] + rho * r : std::max(Scalar(0), mu_hat[k] + rho * r);
    }
    for (Index b = 0; b < nb; ++b) {
      const auto& blk = p.blocks[static_cast<std::size_t>(b)];
      VectorX<Scalar> wts = VectorX<Scalar>::Zero(w.n);
      for (Index jj = 0; jj < w.m; ++jj) {
        const auto& a = p.arguments[static_cast<std::size_t>(jj)];
        if (a.coeff[b] != Scalar(0)) wts[a.anchor] += a.coeff[b] * slope[jj];
      }
      if (blk.kind == BlockKind::psd) {
        MatrixX<Scalar> g = p.gram.V * wts.asDiagonal() * p.gram.V.transpose();
        g.diagonal().array() += blk.reg.lambda1;
        g += blk.reg.lambda2 * st[static_cast<std::size_t>(b)].feature_matrix;
        for (Index k : w.block_constraints[static_cast<std::size_t>(b)]) {
          g += pen_slope[k] * p.constraints[static_cast<std::size_t>(k)].trace_matrix;
        }
        grad_a[static_cast<std::size_t>(b)] = ((g + g.transpose()) / Scalar(2)).eval();
      } else {
        VectorX<Scalar> g = p.gram.V * wts + blk.ridge * st_phi[static_cast<std::size_t>(b)];
        for (Index k : w.block_constraints[static_cast<std::size_t>(b)]) {
          g += pen_slope[k] * w.g[static_cast<std::size_t>(k)];
        }
        grad_phi[static_cast<std::size_t>(b)] = g;
      }
    }
  };

  Scalar step = Scalar(1);  // adapted by line search, persists across outer rounds
  Scalar prev_viol = inf;
  for (Index outer = 0; outer < std::max<Index>(1, opts.max_outer); ++outer) {
    // Inner solve: monotone accelerated projected gradient on the augmented
    // Lagrangian (the smooth part is everything but the PSD-cone indicator).
    PrimalEval<Scalar> pe;
    Scalar cur = al_value(sols, &pe);
    std::vector<BlockSolution<Scalar>> prev_sols = sols;
    std::vector<VectorX<Scalar>> prev_phi = phi;
    Scalar t_mom = Scalar(1);
    for (Index inner = 0; inner < opts.max_inner; ++inner) {
      const Scalar t_next =
          (Scalar(1) + std::sqrt(Scalar(1) + Scalar(4) * t_mom * t_mom)) / Scalar(2);
      const Scalar bm = (t_mom - Scalar(1)) / t_next;

      // Extrapolated point (may leave the PSD cone; that is fine, the cone
      // only enters through the projection below).  If extrapolation leaves
      // a loss domain, drop the momentum for this round.
      std::vector<BlockSolution<Scalar>> ey = sols;
      std::vector<VectorX<Scalar>> ephi = phi;
      if (bm > Scalar(0)) {
        for (Index b = 0; b < nb; ++b) {
          auto& e = ey[static_cast<std::size_t>(b)];
          if (e.kind == BlockKind::psd) {
            e.feature_matrix += bm * (e.feature_matrix - prev_sols[static_cast<std::size_t>(b)]
                                                             .feature_matrix);
            e.anchor_values = anchor_quadratic_values(p.gram, e.feature_matrix);
          } else {
            ephi[static_cast<std::size_t>(b)] +=
                bm * (ephi[static_cast<std::size_t>(b)] - prev_phi[static_cast<std::size_t>(b)]);
            e.anchor_values = p.gram.V.transpose() * ephi[static_cast<std::size_t>(b)];
            e.beta = p.gram.V.transpose() * p.gram.vvt_solve(ephi[static_cast<std::size_t>(b)]);
          }
        }
      }
      PrimalEval<Scalar> pe_y;
      Scalar f_y = al_value(ey, &pe_y);
      if (f_y == inf) {
        ey = sols;
        ephi = phi;
        pe_y = pe;
        f_y = cur;
        t_mom = Scalar(1);
      }

      std::vector<MatrixX<Scalar>> grad_a(static_cast<std::size_t>(nb));
      std::vector<VectorX<Scalar>> grad_phi(static_cast<std::size_t>(nb));
      assemble_grads(ey, ephi, pe_y, grad_a, grad_phi);

      // Backtracking projected step from the extrapolated point.
      std::vector<BlockSolution<Scalar>> cand = sols;
      std::vector<VectorX<Scalar>> cand_phi = phi;
      Scalar cand_val = inf;
      PrimalEval<Scalar> cand_pe;
      Scalar moved = Scalar(0);
      bool accepted = false;
      for (int halvings = 0; halvings < 200; ++halvings) {
        Scalar lin = Scalar(0), sqdist = Scalar(0);
        moved = Scalar(0);
        for (Index b = 0; b < nb; ++b) {
          auto& cs = cand[static_cast<std::size_t>(b)];
          const auto& es = ey[static_cast<std::size_t>(b)];
          if (cs.kind == BlockKind::psd) {
            cs.feature_matrix = pos_part(
                MatrixX<Scalar>(es.feature_matrix - step * grad_a[static_cast<std::size_t>(b)]));
            cs.anchor_values = anchor_quadratic_values(p.gram, cs.feature_matrix);
            const MatrixX<Scalar> diff = cs.feature_matrix - es.feature_matrix;
            lin += (grad_a[static_cast<std::size_t>(b)].cwiseProduct(diff)).sum();
            sqdist += diff.squaredNorm();
            moved = std::max(moved, diff.template lpNorm<Eigen::Infinity>());
          } else {
            cand_phi[static_cast<std::size_t>(b)] =
                ephi[static_cast<std::size_t>(b)] - step * grad_phi[static_cast<std::size_t>(b)];
            cs.anchor_values = p.gram.V.transpose() * cand_phi[static_cast<std::size_t>(b)];
            cs.beta =
                p.gram.V.transpose() * p.gram.vvt_solve(cand_phi[static_cast<std::size_t>(b)]);
            const VectorX<Scalar> diff =
                cand_phi[static_cast<std::size_t>(b)] - ephi[static_cast<std::size_t>(b)];
            lin += grad_phi[static_cast<std::size_t>(b)].dot(diff);
            sqdist += diff.squaredNorm();
            moved = std::max(moved, diff.template lpNorm<Eigen::Infinity>());
          }
        }
        cand_val = al_value(cand, &cand_pe);
        if (cand_val <= f_y + lin + sqdist / (Scalar(2) * step) +
                            Scalar(1e-12) * (Scalar(1) + std::abs(f_y))) {
          accepted = true;
          break;
        }
        step /= Scalar(2);
      }
      if (!accepted) break;  // line search exhausted at this multiplier estimate

      if (cand_val > cur + Scalar(1e-12) * (Scalar(1) + std::abs(cur))) {
        // Momentum overshoot: restart from the current iterate.
        t_mom = Scalar(1);
        prev_sols = sols;
        prev_phi = phi;
        continue;
      }
      prev_sols = sols;
      prev_phi = phi;
      sols = cand;
      phi = cand_phi;
      pe = cand_pe;
      cur = cand_val;
      t_mom = t_next;
      step = std::min(step * Scalar(1.05), Scalar(1e6));
      // moved / step approximates the gradient-mapping norm, the proper
      // first-order residual for a projected scheme.
      if (moved <= static_cast<Scalar>(opts.tol_grad) * step) break;
    }
    if (w.nc == 0) break;

    Scalar viol = Scalar(0);
    for (Index k = 0; k < w.nc; ++k) {
      const Scalar r = pe.constraint_residuals[k];
      const bool eq = p.constraints[static_cast<std::size_t>(k)].is_equality;
      viol = std::max(viol, eq ? std::abs(r) : std::max(Scalar(0), r));
      mu_hat[k] = eq ? mu_hat[k] + rho * r : std::max(Scalar(0), mu_hat[k] + rho * r);
    }
    if (viol <= static_cast<Scalar>(opts.tol_resid)) break;
    if (viol > prev_viol / Scalar(2)) rho = std::min(rho * Scalar(10), Scalar(1e8));
    prev_viol = viol;
  }

  for (Index b = 0; b < nb; ++b) {
    auto& s = sols[static_cast<std::size_t>(b)];
    if (s.kind == BlockKind::psd) s.anchor_matrix = p.gram.to_anchor_coordinates(s.feature_matrix);
  }
  OracleResult<Scalar> out;
  const auto pe = evaluate_primal(p, sols);
  out.blocks = std::move(sols);
  out.objective = pe.objective.is_finite() ? pe.objective.value() : inf;
  out.constraint_residuals = pe.constraint_residuals;
  return out;
}

}  // namespace psdfit

#endif  // PSDFIT_SOLVER_HPP
