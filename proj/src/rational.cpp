#include "pdd/rational.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <mutex>
#include <numbers>

#include "pdd/errors.hpp"

namespace pdd {

bool denominator_has_root(const std::array<double, 3>& den, double lo,
                          double hi) {
  const double b0 = den[0], b1 = den[1], b2 = den[2];
  if (std::abs(b2) < 1e-300) {
    if (std::abs(b1) < 1e-300) return std::abs(b0) < 1e-300;
    const double r = -b0 / b1;
    return r >= lo && r <= hi;
  }
  const double disc = b1 * b1 - 4.0 * b2 * b0;
  if (disc < 0.0) return false;
  const double s = std::sqrt(disc);
  const double r1 = (-b1 - s) / (2.0 * b2);
  const double r2 = (-b1 + s) / (2.0 * b2);
  return (r1 >= lo && r1 <= hi) || (r2 >= lo && r2 <= hi);
}

// Linearized weighted least squares (numerator minus target times
// denominator), with Lawson reweighting to push the residual toward
// equioscillation and the previous denominator folded into the weights.
// The denominator is pinned at b0 = 1.
RationalActivation fit_relu_rational(int grid_points, int iterations) {
  if (grid_points < 16 || iterations < 1) {
    throw FitError("fit_relu_rational: degenerate fit settings");
  }
  const int n = grid_points;
  Eigen::VectorXd x(n), f(n);
  for (int i = 0; i < n; ++i) {
    x[i] = -std::cos(std::numbers::pi * i / (n - 1));  // Chebyshev-distributed
    f[i] = std::max(x[i], 0.0);
  }

  Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
  Eigen::VectorXd den_prev = Eigen::VectorXd::Ones(n);
  double best_err = -1.0;
  Eigen::VectorXd best_sol;

  Eigen::MatrixXd A(n, 6);
  for (int it = 0; it < iterations; ++it) {
    for (int i = 0; i < n; ++i) {
      const double xi = x[i];
      A(i, 0) = 1.0;
      A(i, 1) = xi;
      A(i, 2) = xi * xi;
      A(i, 3) = xi * xi * xi;
      A(i, 4) = -f[i] * xi;
      A(i, 5) = -f[i] * xi * xi;
    }
    Eigen::VectorXd sw = (w.array().sqrt() / den_prev.array()).matrix();
    Eigen::MatrixXd Aw = sw.asDiagonal() * A;
    Eigen::VectorXd bw = sw.asDiagonal() * f;
    Eigen::VectorXd sol = Aw.colPivHouseholderQr().solve(bw);

    Eigen::VectorXd den =
        Eigen::VectorXd::Ones(n) + sol[4] * x + sol[5] * x.cwiseProduct(x);
    if (den.minCoeff() <= 0.0) break;  // iteration left the feasible region
    Eigen::VectorXd num = sol[0] * Eigen::VectorXd::Ones(n) + sol[1] * x +
                          sol[2] * x.cwiseProduct(x) +
                          sol[3] * x.cwiseProduct(x).cwiseProduct(x);
    Eigen::VectorXd err = (num.array() / den.array() - f.array()).abs();
    const double mx = err.maxCoeff();
    if (best_err < 0.0 || mx < best_err) {
      best_err = mx;
      best_sol = sol;
    }
    w = (w.array() * (err.array() + 1e-15)).matrix();
    w /= w.sum();
    den_prev = den;
  }

  if (best_err < 0.0) {
    throw FitError("fit_relu_rational: no feasible iterate");
  }
  RationalActivation act;
  act.num = {best_sol[0], best_sol[1], best_sol[2], best_sol[3]};
  act.den = {1.0, best_sol[4], best_sol[5]};
  if (denominator_has_root(act.den, -10.0, 10.0)) {
    throw FitError("fit_relu_rational: denominator has a real root");
  }
  return act;
}

const RationalActivation& relu_rational_init() {
  static std::once_flag flag;
  static RationalActivation cached;
  std::call_once(flag, [] { cached = fit_relu_rational(); });
  return cached;
}

}  // namespace pdd
