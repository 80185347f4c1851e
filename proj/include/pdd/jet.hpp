#pragma once

#include <array>
#include <cassert>
#include <cstdint>

#include "pdd/errors.hpp"
#include "pdd/tape.hpp"

namespace pdd {

// Highest supported spatial derivative order. Covers third-order hidden PDEs
// plus an order-4 probe when the true order is unknown.
inline constexpr int kMaxOrder = 4;

// Truncated Taylor jet at one point: the value, the pure x-derivatives of
// orders 1..order, and the first t-derivative. No mixed t/x terms are ever
// carried; the collocation residual needs only pure derivatives.
//
// dx[m-1] holds the m-th derivative itself (not the Taylor coefficient);
// entries at positions >= order are unused and stay zero. Jets are immutable
// values: every operation returns a fresh jet.
//
// T is double for plain evaluation or rev::Scalar for tape-recorded
// evaluation whose parameter gradients are later obtained in reverse mode.
template <class T>
struct Jet {
  T val{};
  std::array<T, kMaxOrder> dx{};
  T dt{};
  int order = 0;
};

using DJet = Jet<double>;
using RJet = Jet<rev::Scalar>;

enum class Var : std::uint8_t { X, T };

// C(n, k) for n, k <= kMaxOrder.
inline constexpr double kBinom[kMaxOrder + 1][kMaxOrder + 1] = {
    {1, 0, 0, 0, 0},
    {1, 1, 0, 0, 0},
    {1, 2, 1, 0, 0},
    {1, 3, 3, 1, 0},
    {1, 4, 6, 4, 1},
};

template <class T>
Jet<T> jet_const(const T& value, int order) {
  assert(order >= 0 && order <= kMaxOrder);
  Jet<T> j;
  j.val = value;
  j.order = order;
  return j;
}

// Seeds a coordinate: an x-seed has dx = (1, 0, ..., 0), a t-seed has dt = 1.
template <class T>
Jet<T> jet_seed(const T& coord, Var which, int order) {
  Jet<T> j = jet_const(coord, order);
  if (which == Var::X) {
    if (order >= 1) j.dx[0] = T(1.0);
  } else {
    j.dt = T(1.0);
  }
  return j;
}

inline DJet jet_seed(double coord, Var which, int order) {
  return jet_seed<double>(coord, which, order);
}

namespace detail {
// Derivative of order k, where k = 0 is the value.
template <class T>
const T& comp(const Jet<T>& j, int k) {
  return k == 0 ? j.val : j.dx[k - 1];
}
}  // namespace detail

template <class T>
Jet<T> jet_add(const Jet<T>& a, const Jet<T>& b) {
  assert(a.order == b.order);
  Jet<T> r;
  r.order = a.order;
  r.val = a.val + b.val;
  for (int m = 0; m < a.order; ++m) r.dx[m] = a.dx[m] + b.dx[m];
  r.dt = a.dt + b.dt;
  return r;
}

template <class T>
Jet<T> jet_sub(const Jet<T>& a, const Jet<T>& b) {
  assert(a.order == b.order);
  Jet<T> r;
  r.order = a.order;
  r.val = a.val - b.val;
  for (int m = 0; m < a.order; ++m) r.dx[m] = a.dx[m] - b.dx[m];
  r.dt = a.dt - b.dt;
  return r;
}

template <class T>
Jet<T> jet_neg(const Jet<T>& a) {
  Jet<T> r;
  r.order = a.order;
  r.val = -a.val;
  for (int m = 0; m < a.order; ++m) r.dx[m] = -a.dx[m];
  r.dt = -a.dt;
  return r;
}

// Leibniz rule on the x-derivatives, product rule on dt. The k and n-k
// terms are paired before accumulation, which makes jet_mul(a, b) and
// jet_mul(b, a) bit-identical (IEEE * and + are commutative).
template <class T>
Jet<T> jet_mul(const Jet<T>& a, const Jet<T>& b) {
  assert(a.order == b.order);
  Jet<T> r;
  r.order = a.order;
  r.val = a.val * b.val;
  for (int n = 1; n <= a.order; ++n) {
    T s(0.0);
    bool first = true;
    for (int k = 0; 2 * k <= n; ++k) {
      T term;
      if (2 * k == n) {
        term = detail::comp(a, k) * detail::comp(b, k);
      } else {
        term = detail::comp(a, k) * detail::comp(b, n - k) +
               detail::comp(a, n - k) * detail::comp(b, k);
      }
      if (kBinom[n][k] != 1.0) term = term * T(kBinom[n][k]);
      s = first ? term : s + term;
      first = false;
    }
    r.dx[n - 1] = s;
  }
  r.dt = a.dt * b.val + a.val * b.dt;
  return r;
}

// Scales every component by a plain scalar s (s = d/dx s = d/dt s treated
// as a constant factor only when it truly is constant: use jet_mul when the
// factor has derivatives of its own).
template <class T>
Jet<T> jet_scale(const T& s, const Jet<T>& a) {
  Jet<T> r;
  r.order = a.order;
  r.val = s * a.val;
  for (int m = 0; m < a.order; ++m) r.dx[m] = s * a.dx[m];
  r.dt = s * a.dt;
  return r;
}

template <class T>
Jet<T> jet_shift(const Jet<T>& a, const T& c) {
  Jet<T> r = a;
  r.val = a.val + c;
  return r;
}

// Truncated power-series division: solves q * b = a order by order, plus the
// quotient rule for dt. Signals a pole when |b.val| is below the floor.
template <class T>
Jet<T> jet_div(const Jet<T>& a, const Jet<T>& b) {
  assert(a.order == b.order);
  if (std::abs(rev::value_of(b.val)) < kDenominatorFloor) {
    throw PoleError("jet_div: |denominator| below floor");
  }
  Jet<T> q;
  q.order = a.order;
  q.val = a.val / b.val;
  for (int n = 1; n <= a.order; ++n) {
    T s = detail::comp(a, n);
    for (int k = 0; k < n; ++k) {
      T term = detail::comp(q, k) * detail::comp(b, n - k);
      if (kBinom[n][k] != 1.0) term = term * T(kBinom[n][k]);
      s = s - term;
    }
    q.dx[n - 1] = s / b.val;
  }
  q.dt = (a.dt - q.val * b.dt) / b.val;
  return q;
}

template <class T>
Jet<T> operator+(const Jet<T>& a, const Jet<T>& b) {
  return jet_add(a, b);
}
template <class T>
Jet<T> operator-(const Jet<T>& a, const Jet<T>& b) {
  return jet_sub(a, b);
}
template <class T>
Jet<T> operator*(const Jet<T>& a, const Jet<T>& b) {
  return jet_mul(a, b);
}
template <class T>
Jet<T> operator/(const Jet<T>& a, const Jet<T>& b) {
  return jet_div(a, b);
}

}  // namespace pdd
