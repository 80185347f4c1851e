#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pdd/jet.hpp"
#include "pdd/rational.hpp"

namespace pdd {

enum class ActivationKind { Rational, Tanh, Sigmoid };

std::string to_string(ActivationKind k);
ActivationKind activation_from_string(const std::string& s);

// Dense feed-forward network. Parameters are stored flat in layer order:
// for each layer, weights (fan_out x fan_in, row-major) then biases; hidden
// layers of rational networks append their 7 activation coefficients
// (a0..a3, b0..b2). Layers never share an activation: each hidden layer's
// rational evolves independently during training.
struct Network {
  std::vector<int> widths;
  ActivationKind activation = ActivationKind::Rational;
  std::vector<double> params;
  std::uint64_t seed = 0;

  int input_width() const { return widths.front(); }
  int output_width() const { return widths.back(); }
  int hidden_layers() const { return static_cast<int>(widths.size()) - 2; }
};

// Sum over layers of (fan_in * fan_out + fan_out), plus 7 per hidden layer
// for rational activations.
std::size_t parameter_count(std::span<const int> widths, bool rational);

Network make_network(std::vector<int> widths, ActivationKind kind);

// Glorot-uniform weights, zero biases, rational coefficients from
// relu_rational_init(); bit-identical for identical seeds.
void init_weights(Network& net, std::uint64_t seed);

// Checkpoint file: JSON {format_version, widths, activation, params, seed};
// doubles round-trip bit-exactly.
void save_network(const Network& net, const std::string& path);
Network load_network(const std::string& path);

namespace detail {

// Taylor coefficients c_k = f^(k)(a)/k!, k = 0..order, of tanh at a,
// from the coefficient recurrence of f' = 1 - f^2.
template <class T>
std::array<T, kMaxOrder + 1> tanh_series(const T& a, int order) {
  std::array<T, kMaxOrder + 1> c{};
  using rev::tanh;
  using std::tanh;
  c[0] = tanh(a);
  order = std::max(order, 1);  // c[1] always carries dt through the layer
  for (int k = 0; k + 1 <= order; ++k) {
    T conv = c[0] * c[k];
    for (int j = 1; j <= k; ++j) conv = conv + c[j] * c[k - j];
    T rhs = k == 0 ? T(1.0) - conv : T(0.0) - conv;
    c[k + 1] = rhs * T(1.0 / (k + 1));
  }
  return c;
}

// Same for the logistic sigmoid, from f' = f(1 - f).
template <class T>
std::array<T, kMaxOrder + 1> sigmoid_series(const T& a, int order) {
  std::array<T, kMaxOrder + 1> c{};
  using rev::exp;
  using std::exp;
  c[0] = T(1.0) / (T(1.0) + exp(T(0.0) - a));
  order = std::max(order, 1);
  for (int k = 0; k + 1 <= order; ++k) {
    T conv = c[0] * c[k];
    for (int j = 1; j <= k; ++j) conv = conv + c[j] * c[k - j];
    c[k + 1] = (c[k] - conv) * T(1.0 / (k + 1));
  }
  return c;
}

// Applies a smooth univariate function, given its Taylor coefficients at
// z.val, to a jet: Horner on the centered jet handles the x-derivatives, and
// the product rule inside jet_mul carries dt.
template <class T>
Jet<T> compose_series(const std::array<T, kMaxOrder + 1>& c, const Jet<T>& z) {
  Jet<T> h = z;
  h.val = T(0.0);
  const int deg = std::max(z.order, 1);  // degree 1 minimum so dt survives
  Jet<T> r = jet_const(c[deg], z.order);
  for (int k = deg - 1; k >= 0; --k) r = jet_shift(jet_mul(r, h), c[k]);
  return r;
}

template <class T>
Jet<T> fixed_activation_eval(ActivationKind kind, const Jet<T>& z) {
  if (kind == ActivationKind::Tanh) {
    return compose_series(tanh_series(z.val, z.order), z);
  }
  return compose_series(sigmoid_series(z.val, z.order), z);
}

// Component c of a jet: 0 is the value, 1..order the x-derivatives, order+1
// the t-derivative.
template <class T>
const T& jet_component(const Jet<T>& j, int c, int order) {
  if (c == 0) return j.val;
  if (c <= order) return j.dx[c - 1];
  return j.dt;
}

// Affine dot products w . x + init. The plain-double versions keep the exact
// accumulation order of the tape versions, so both paths agree bitwise; the
// tape versions emit one fused linear node instead of a mul/add chain.
inline double affine_dot(double init, std::span<const double> w,
                         const std::vector<DJet>& cur, int c, int order) {
  double v = init;
  for (std::size_t i = 0; i < w.size(); ++i) {
    v = v + w[i] * jet_component(cur[i], c, order);
  }
  return v;
}

inline rev::Scalar affine_dot(const rev::Scalar& init,
                              std::span<const rev::Scalar> w,
                              const std::vector<RJet>& cur, int c, int order) {
  rev::Tape* tape = init.tape;
  for (std::size_t i = 0; !tape && i < w.size(); ++i) {
    tape = w[i].tape ? w[i].tape : jet_component(cur[i], c, order).tape;
  }
  double v = init.v;
  if (!tape) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      v = v + w[i].v * rev::value_of(jet_component(cur[i], c, order));
    }
    return rev::Scalar(v);
  }
  const std::size_t start = tape->linear_begin();
  if (!init.is_const()) tape->linear_arg(1.0, init.idx);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const rev::Scalar& wi = w[i];
    const rev::Scalar& xi = jet_component(cur[i], c, order);
    v = v + wi.v * xi.v;
    if (!wi.is_const() && xi.v != 0.0) tape->linear_arg(xi.v, wi.idx);
    if (!xi.is_const() && wi.v != 0.0) tape->linear_arg(wi.v, xi.idx);
  }
  const std::int32_t node = tape->linear_end(start);
  if (node < 0) return rev::Scalar(v);
  return rev::Scalar(v, node, tape);
}

inline double affine_dot(double init, std::span<const double> w,
                         std::span<const double> x) {
  double v = init;
  for (std::size_t i = 0; i < w.size(); ++i) v = v + w[i] * x[i];
  return v;
}

inline rev::Scalar affine_dot(const rev::Scalar& init,
                              std::span<const rev::Scalar> w,
                              std::span<const rev::Scalar> x) {
  rev::Tape* tape = init.tape;
  for (std::size_t i = 0; !tape && i < w.size(); ++i) {
    tape = w[i].tape ? w[i].tape : x[i].tape;
  }
  double v = init.v;
  if (!tape) {
    for (std::size_t i = 0; i < w.size(); ++i) v = v + w[i].v * x[i].v;
    return rev::Scalar(v);
  }
  const std::size_t start = tape->linear_begin();
  if (!init.is_const()) tape->linear_arg(1.0, init.idx);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const rev::Scalar& wi = w[i];
    const rev::Scalar& xi = x[i];
    v = v + wi.v * xi.v;
    if (!wi.is_const() && xi.v != 0.0) tape->linear_arg(xi.v, wi.idx);
    if (!xi.is_const() && wi.v != 0.0) tape->linear_arg(wi.v, xi.idx);
  }
  const std::int32_t node = tape->linear_end(start);
  if (node < 0) return rev::Scalar(v);
  return rev::Scalar(v, node, tape);
}

template <class T>
T fixed_activation_value(ActivationKind kind, const T& z) {
  using rev::exp;
  using rev::tanh;
  using std::exp;
  using std::tanh;
  if (kind == ActivationKind::Tanh) return tanh(z);
  return T(1.0) / (T(1.0) + exp(T(0.0) - z));
}

}  // namespace detail

// Forward pass on jets: affine layer then activation per hidden layer, affine
// output layer. The returned jet carries the exact derivatives of the network
// output with respect to the seeded input coordinates. `params` supplies the
// parameter values (plain doubles, or tape scalars for training).
template <class T>
Jet<T> network_forward(const Network& net, std::span<const T> params,
                       std::span<const Jet<T>> inputs) {
  assert(static_cast<int>(inputs.size()) == net.input_width());
  const int order = inputs.empty() ? 0 : inputs[0].order;
  const int n_layers = static_cast<int>(net.widths.size()) - 1;
  // reused across calls: millions of per-point forwards run during training
  thread_local std::vector<Jet<T>> cur, next;
  cur.assign(inputs.begin(), inputs.end());
  std::size_t off = 0;
  for (int l = 0; l < n_layers; ++l) {
    const int fan_in = net.widths[l];
    const int fan_out = net.widths[l + 1];
    next.assign(fan_out, jet_const(T(0.0), order));
    for (int o = 0; o < fan_out; ++o) {
      Jet<T>& acc = next[o];
      const std::size_t row = off + static_cast<std::size_t>(o) * fan_in;
      const std::span<const T> w_row = params.subspan(row, fan_in);
      acc.val = detail::affine_dot(params[off + fan_in * fan_out + o], w_row,
                                   cur, 0, order);
      for (int m = 1; m <= order; ++m) {
        acc.dx[m - 1] = detail::affine_dot(T(0.0), w_row, cur, m, order);
      }
      acc.dt = detail::affine_dot(T(0.0), w_row, cur, order + 1, order);
    }
    off += static_cast<std::size_t>(fan_in) * fan_out + fan_out;
    if (l < n_layers - 1) {
      if (net.activation == ActivationKind::Rational) {
        std::span<const T> num = params.subspan(off, 4);
        std::span<const T> den = params.subspan(off + 4, 3);
        off += 7;
        for (int o = 0; o < fan_out; ++o) {
          next[o] = activation_eval<T>(num, den, next[o]);
        }
      } else {
        for (int o = 0; o < fan_out; ++o) {
          next[o] = detail::fixed_activation_eval(net.activation, next[o]);
        }
      }
    }
    cur.swap(next);
  }
  return cur[0];
}

// Scalar fast path: identical network, values only.
template <class T>
T network_eval(const Network& net, std::span<const T> params,
               std::span<const T> inputs) {
  assert(static_cast<int>(inputs.size()) == net.input_width());
  const int n_layers = static_cast<int>(net.widths.size()) - 1;
  thread_local std::vector<T> cur, next;
  cur.assign(inputs.begin(), inputs.end());
  std::size_t off = 0;
  for (int l = 0; l < n_layers; ++l) {
    const int fan_in = net.widths[l];
    const int fan_out = net.widths[l + 1];
    next.assign(fan_out, T(0.0));
    for (int o = 0; o < fan_out; ++o) {
      const std::size_t row = off + static_cast<std::size_t>(o) * fan_in;
      next[o] = detail::affine_dot(params[off + fan_in * fan_out + o],
                                   params.subspan(row, fan_in),
                                   std::span<const T>(cur.data(), cur.size()));
    }
    off += static_cast<std::size_t>(fan_in) * fan_out + fan_out;
    if (l < n_layers - 1) {
      if (net.activation == ActivationKind::Rational) {
        std::span<const T> num = params.subspan(off, 4);
        std::span<const T> den = params.subspan(off + 4, 3);
        off += 7;
        for (int o = 0; o < fan_out; ++o) {
          next[o] = activation_value<T>(num, den, next[o]);
        }
      } else {
        for (int o = 0; o < fan_out; ++o) {
          next[o] = detail::fixed_activation_value(net.activation, next[o]);
        }
      }
    }
    cur.swap(next);
  }
  return cur[0];
}

// Conveniences using the network's own parameters.
inline DJet network_forward(const Network& net, std::span<const DJet> inputs) {
  return network_forward<double>(net, net.params, inputs);
}
inline double network_eval(const Network& net, std::span<const double> inputs) {
  return network_eval<double>(net, net.params, inputs);
}

}  // namespace pdd
