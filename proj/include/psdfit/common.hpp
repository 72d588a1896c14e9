// This file is part of psdfit, a library for fitting nonnegative and
// cone-valued functions with positive semidefinite kernel models.
//
// Copyright (c) 2026 The psdfit authors
// SPDX-License-Identifier: MIT

#ifndef PSDFIT_COMMON_HPP
#define PSDFIT_COMMON_HPP

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace psdfit {

template <class Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <class Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

// Thrown when inputs violate a documented precondition (bad shapes, invalid
// parameters, malformed configuration).  The CLI maps this to exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Thrown when a computation fails numerically (non-convergence where
// convergence is required, NaN/Inf contamination, loss of positivity beyond
// tolerance).  The CLI maps this to exit code 2.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {
inline void require(bool condition, const std::string& message) {
  if (!condition) throw ValidationError(message);
}
}  // namespace detail

// A real number extended with signed infinities.  Several quantities in this
// library (regularizer values, loss values, conjugates, dual objectives) are
// extended-real-valued by definition; they are represented with an explicit
// variant rather than with IEEE infinities so that arithmetic paths never
// operate on non-finite floats by accident.
template <class Scalar>
class ExtendedReal {
 public:
  ExtendedReal() : state_(State::finite), value_(0) {}

  static ExtendedReal finite(Scalar v) { return ExtendedReal(State::finite, v); }
  static ExtendedReal pos_infinity() { return ExtendedReal(State::pos_inf, 0); }
  static ExtendedReal neg_infinity() { return ExtendedReal(State::neg_inf, 0); }

  bool is_finite() const { return state_ == State::finite; }
  bool is_pos_infinity() const { return state_ == State::pos_inf; }
  bool is_neg_infinity() const { return state_ == State::neg_inf; }

  // The finite value.  Calling this on an infinite variant is a logic error.
  Scalar value() const {
    if (!is_finite()) throw NumericError("ExtendedReal: value() called on an infinite variant");
    return value_;
  }

  ExtendedReal operator+(const ExtendedReal& other) const {
    if (is_finite() && other.is_finite()) return finite(value_ + other.value_);
    if (is_pos_infinity() && other.is_neg_infinity()) throw NumericError("ExtendedReal: inf - inf");
    if (is_neg_infinity() && other.is_pos_infinity()) throw NumericError("ExtendedReal: inf - inf");
    if (is_pos_infinity() || other.is_pos_infinity()) return pos_infinity();
    return neg_infinity();
  }
  ExtendedReal& operator+=(const ExtendedReal& other) { return *this = *this + other; }
  ExtendedReal operator+(Scalar v) const { return *this + finite(v); }
  ExtendedReal operator-() const {
    if (is_pos_infinity()) return neg_infinity();
    if (is_neg_infinity()) return pos_infinity();
    return finite(-value_);
  }

  // Total order: -inf < finite values < +inf.
  friend bool operator<(const ExtendedReal& a, const ExtendedReal& b) {
    if (a.state_ == b.state_) return a.is_finite() && a.value_ < b.value_;
    if (a.is_neg_infinity() || b.is_pos_infinity()) return true;
    return false;
  }
  friend bool operator>(const ExtendedReal& a, const ExtendedReal& b) { return b < a; }

 private:
  enum class State { finite, pos_inf, neg_inf };
  ExtendedReal(State s, Scalar v) : state_(s), value_(v) {}
  State state_;
  Scalar value_;
};

}  // namespace psdfit

#endif  // PSDFIT_COMMON_HPP
