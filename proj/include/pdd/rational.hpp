#pragma once

#include <array>
#include <span>

#include "pdd/jet.hpp"

namespace pdd {

// Trainable type-(3,2) rational activation: cubic numerator over quadratic
// denominator, 7 trainable parameters in total.
struct RationalActivation {
  std::array<double, 4> num{0.0, 1.0, 0.0, 0.0};  // a0..a3, default identity
  std::array<double, 3> den{1.0, 0.0, 0.0};       // b0..b2
};

// Best type-(3,2) rational approximation to ReLU on [-1, 1], computed by a
// Lawson-reweighted least-squares iteration on a dense Chebyshev grid.
// grid_points >= 16, iterations >= 1. Throws FitError when the iteration
// collapses (non-positive denominator before any acceptable iterate) or the
// fitted denominator has a real root in [-10, 10].
RationalActivation fit_relu_rational(int grid_points = 4001,
                                     int iterations = 300);

// The fit above, computed once and cached; the default initialization of
// every hidden layer.
const RationalActivation& relu_rational_init();

// True iff den(x) = b0 + b1 x + b2 x^2 has a real root in [lo, hi].
bool denominator_has_root(const std::array<double, 3>& den, double lo,
                          double hi);

// Horner evaluation of num/den on a jet; exact at every carried order.
// num has 4 coefficients (a0..a3) and den has 3 (b0..b2); both may be plain
// doubles or tape scalars. Throws PoleError when |den(z.val)| is below the
// denominator floor.
template <class T>
Jet<T> activation_eval(std::span<const T> num, std::span<const T> den,
                       const Jet<T>& z) {
  Jet<T> p = jet_const(num[3], z.order);
  for (int i = 2; i >= 0; --i) p = jet_shift(jet_mul(p, z), num[i]);
  Jet<T> q = jet_const(den[2], z.order);
  for (int i = 1; i >= 0; --i) q = jet_shift(jet_mul(q, z), den[i]);
  return jet_div(p, q);
}

inline DJet activation_eval(const RationalActivation& act, const DJet& z) {
  return activation_eval<double>(act.num, act.den, z);
}

// Scalar fast path of the same function.
template <class T>
T activation_value(std::span<const T> num, std::span<const T> den, const T& z) {
  T p = num[3];
  for (int i = 2; i >= 0; --i) p = p * z + num[i];
  T q = den[2];
  for (int i = 1; i >= 0; --i) q = q * z + den[i];
  if (std::abs(rev::value_of(q)) < kDenominatorFloor) {
    throw PoleError("rational activation: |denominator| below floor");
  }
  return p / q;
}

inline double activation_value(const RationalActivation& act, double z) {
  return activation_value<double>(act.num, act.den, z);
}

}  // namespace pdd
