#pragma once

#include <atomic>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "pdd/errors.hpp"

namespace pdd::rev {

class Tape;

// A differentiable scalar: a value plus a node index on some tape.
// idx < 0 marks a constant that is not recorded; constants fold away and
// cost nothing on the tape.
struct Scalar {
  double v = 0.0;
  std::int32_t idx = -1;
  Tape* tape = nullptr;

  Scalar() = default;
  Scalar(double value) : v(value) {}  // NOLINT: implicit by design (constants)
  Scalar(double value, std::int32_t i, Tape* t) : v(value), idx(i), tape(t) {}

  bool is_const() const { return idx < 0; }
};

// One argument of a fused linear-combination node: the local partial toward
// parent `idx`.
struct LinArg {
  double d;
  std::int32_t idx;
};

// Append-only record of primitive scalar operations with precomputed local
// partials. Replaying it backwards yields d(output)/d(theta) for every
// registered parameter; parameters the output never touched get exactly 0.
//
// Two node kinds share the entry layout: ordinary one- or two-parent
// operations, and fused linear combinations (the affine dot products that
// dominate training) whose arguments live in a side array. Linear nodes
// store only their argument count; the backward scan recovers each node's
// argument range by walking the side array tail backwards in step with the
// entries.
//
// Single-writer: one tape per thread. Parameters occupy the first nodes so
// the tape can be rewound to a watermark between evaluation points without
// re-registering them.
class Tape {
 public:
  struct Mark {
    std::size_t entries = 0;
    std::size_t args = 0;
  };

  Tape() : id_(next_id_.fetch_add(1, std::memory_order_relaxed)) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  std::uint64_t id() const { return id_; }
  std::size_t size() const { return entries_.size(); }
  int n_params() const { return n_params_; }

  // Registers the parameter vector as the first nodes on the tape.
  // Allowed only on an empty tape (use reset() first to rebind).
  std::vector<Scalar> alloc_params(std::span<const double> values) {
    assert(entries_.empty());
    n_params_ = static_cast<int>(values.size());
    entries_.reserve(values.size());
    std::vector<Scalar> out;
    out.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      entries_.push_back(Entry{0.0, 0.0, -1, -1});
      out.emplace_back(values[i], static_cast<std::int32_t>(i), this);
    }
    return out;
  }

  std::int32_t push(double d1, std::int32_t p1, double d2, std::int32_t p2) {
    entries_.push_back(Entry{d1, d2, p1, p2});
    return static_cast<std::int32_t>(entries_.size() - 1);
  }

  std::int32_t push1(double d1, std::int32_t p1) {
    entries_.push_back(Entry{d1, 0.0, p1, -1});
    return static_cast<std::int32_t>(entries_.size() - 1);
  }

  // Fused linear node, built in place: linear_begin, then linear_arg per
  // parent, then linear_end. Nesting is not allowed.
  std::size_t linear_begin() const { return args_.size(); }

  void linear_arg(double d, std::int32_t idx) {
    args_.push_back(LinArg{d, idx});
  }

  // Returns the node index, or -1 when no arguments were recorded (the
  // caller then produces a constant).
  std::int32_t linear_end(std::size_t start) {
    const std::size_t count = args_.size() - start;
    if (count == 0) return -1;
    entries_.push_back(
        Entry{0.0, 0.0, kLinearNode, static_cast<std::int32_t>(count)});
    return static_cast<std::int32_t>(entries_.size() - 1);
  }

  Mark mark() const { return Mark{entries_.size(), args_.size()}; }

  // Drops every node past the mark, keeping capacity and parameter slots.
  void rewind(const Mark& m) {
    assert(m.entries >= static_cast<std::size_t>(n_params_));
    entries_.resize(m.entries);
    args_.resize(m.args);
  }

  void reset() {
    entries_.clear();
    args_.clear();
    n_params_ = 0;
  }

  // Accumulates scale * d(output)/d(theta_i) into grad[i] for every
  // registered parameter. A constant output contributes nothing.
  void accumulate_gradient(const Scalar& output, double scale,
                           std::span<double> grad) const {
    assert(grad.size() == static_cast<std::size_t>(n_params_));
    if (output.is_const()) return;
    if (output.tape != this ||
        static_cast<std::size_t>(output.idx) >= entries_.size()) {
      throw DanglingNodeError("tape_backward: output node not on this tape");
    }
    const std::size_t total = entries_.size();
    if (adjoint_.size() < total) adjoint_.resize(total);
    std::fill(adjoint_.begin(), adjoint_.begin() + total, 0.0);
    adjoint_[output.idx] = 1.0;
    const Entry* e = entries_.data();
    const LinArg* args = args_.data();
    std::size_t tail = args_.size();
    for (std::size_t i = total; i-- > 0;) {
      const Entry& n = e[i];
      if (n.p1 == kLinearNode) {
        tail -= n.p2;  // argument range recovered even when the node is dead
        const double a = adjoint_[i];
        if (a == 0.0) continue;
        for (std::int32_t k = 0; k < n.p2; ++k) {
          const LinArg& arg = args[tail + k];
          adjoint_[arg.idx] += arg.d * a;
        }
        continue;
      }
      const double a = adjoint_[i];
      if (a == 0.0) continue;
      if (n.p1 >= 0) adjoint_[n.p1] += n.d1 * a;
      if (n.p2 >= 0) adjoint_[n.p2] += n.d2 * a;
    }
    const std::size_t np =
        std::min<std::size_t>(static_cast<std::size_t>(n_params_), total);
    for (std::size_t i = 0; i < np; ++i) grad[i] += scale * adjoint_[i];
  }

  // d(output)/d(theta) for every registered parameter.
  std::vector<double> gradient(const Scalar& output) const {
    std::vector<double> g(static_cast<std::size_t>(n_params_), 0.0);
    accumulate_gradient(output, 1.0, g);
    return g;
  }

 private:
  static constexpr std::int32_t kLinearNode = -3;

  struct Entry {
    double d1, d2;
    std::int32_t p1, p2;
  };

  std::vector<Entry> entries_;
  std::vector<LinArg> args_;
  mutable std::vector<double> adjoint_;
  int n_params_ = 0;
  std::uint64_t id_;
  inline static std::atomic<std::uint64_t> next_id_{1};
};

// -- arithmetic --------------------------------------------------------------

inline Tape* common_tape(const Scalar& a, const Scalar& b) {
  assert(!(a.tape && b.tape) || a.tape == b.tape);
  return a.tape ? a.tape : b.tape;
}

inline Scalar operator+(const Scalar& a, const Scalar& b) {
  Tape* t = common_tape(a, b);
  const double v = a.v + b.v;
  if (!t || (a.is_const() && b.is_const())) return Scalar(v);
  if (a.is_const()) return Scalar(v, t->push1(1.0, b.idx), t);
  if (b.is_const()) return Scalar(v, t->push1(1.0, a.idx), t);
  return Scalar(v, t->push(1.0, a.idx, 1.0, b.idx), t);
}

inline Scalar operator-(const Scalar& a, const Scalar& b) {
  Tape* t = common_tape(a, b);
  const double v = a.v - b.v;
  if (!t || (a.is_const() && b.is_const())) return Scalar(v);
  if (a.is_const()) return Scalar(v, t->push1(-1.0, b.idx), t);
  if (b.is_const()) return Scalar(v, t->push1(1.0, a.idx), t);
  return Scalar(v, t->push(1.0, a.idx, -1.0, b.idx), t);
}

inline Scalar operator-(const Scalar& a) {
  if (a.is_const()) return Scalar(-a.v);
  return Scalar(-a.v, a.tape->push1(-1.0, a.idx), a.tape);
}

inline Scalar operator*(const Scalar& a, const Scalar& b) {
  Tape* t = common_tape(a, b);
  const double v = a.v * b.v;
  if (!t || (a.is_const() && b.is_const())) return Scalar(v);
  if (a.is_const()) {
    if (a.v == 0.0) return Scalar(0.0);
    return Scalar(v, t->push1(a.v, b.idx), t);
  }
  if (b.is_const()) {
    if (b.v == 0.0) return Scalar(0.0);
    return Scalar(v, t->push1(b.v, a.idx), t);
  }
  return Scalar(v, t->push(b.v, a.idx, a.v, b.idx), t);
}

inline Scalar operator/(const Scalar& a, const Scalar& b) {
  Tape* t = common_tape(a, b);
  const double v = a.v / b.v;  // primal division kept exact; inv is for partials
  const double inv = 1.0 / b.v;
  if (!t || (a.is_const() && b.is_const())) return Scalar(v);
  if (a.is_const()) return Scalar(v, t->push1(-v * inv, b.idx), t);
  if (b.is_const()) return Scalar(v, t->push1(inv, a.idx), t);
  return Scalar(v, t->push(inv, a.idx, -v * inv, b.idx), t);
}

inline Scalar& operator+=(Scalar& a, const Scalar& b) { return a = a + b; }
inline Scalar& operator-=(Scalar& a, const Scalar& b) { return a = a - b; }
inline Scalar& operator*=(Scalar& a, const Scalar& b) { return a = a * b; }

inline Scalar tanh(const Scalar& a) {
  const double t = std::tanh(a.v);
  if (a.is_const()) return Scalar(t);
  return Scalar(t, a.tape->push1(1.0 - t * t, a.idx), a.tape);
}

inline Scalar exp(const Scalar& a) {
  const double e = std::exp(a.v);
  if (a.is_const()) return Scalar(e);
  return Scalar(e, a.tape->push1(e, a.idx), a.tape);
}

inline double value_of(double x) { return x; }
inline double value_of(const Scalar& s) { return s.v; }

}  // namespace pdd::rev
