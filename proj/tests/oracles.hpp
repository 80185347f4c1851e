#pragma once

// Test-only oracles: central finite differences, exhaustive subset search,
// SVD pseudo-inverse. Independent of the implementation paths they check.

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

// Central finite differences of f at x for derivative orders 1..3.
inline double fd1(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}
inline double fd2(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}
inline double fd3(const std::function<double(double)>& f, double x, double h) {
  return (f(x + 2 * h) - 2.0 * f(x + h) + 2.0 * f(x - h) - f(x - 2 * h)) /
         (2.0 * h * h * h);
}
inline double fd(const std::function<double(double)>& f, double x, int order,
                 double h) {
  switch (order) {
    case 1: return fd1(f, x, h);
    case 2: return fd2(f, x, h);
    case 3: return fd3(f, x, h);
    default: return std::nan("");
  }
}

// Richardson-extrapolated central differences: cancels the leading h^2
// truncation term, leaving O(h^4).
inline double fd_rich(const std::function<double(double)>& f, double x,
                      int order, double h) {
  return (4.0 * fd(f, x, order, h / 2) - fd(f, x, order, h)) / 3.0;
}

// |a - b| relative to the larger magnitude, with an absolute floor so that
// near-zero pairs compare absolutely.
inline double rel_err(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// Minimum-norm least squares through the SVD pseudo-inverse.
inline Eigen::VectorXd pinv_solve(const Eigen::MatrixXd& A,
                                  const Eigen::VectorXd& b) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double tol = 1e-12 * sv(0) * std::max(A.rows(), A.cols());
  Eigen::VectorXd inv_sv = sv;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    inv_sv(i) = sv(i) > tol ? 1.0 / sv(i) : 0.0;
  }
  return svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().transpose() * b;
}

// All size-k subsets of {0..n-1}.
inline void subsets(int n, int k,
                    const std::function<void(const std::vector<int>&)>& visit) {
  std::vector<int> cur;
  std::function<void(int)> rec = [&](int start) {
    if (static_cast<int>(cur.size()) == k) {
      visit(cur);
      return;
    }
    for (int i = start; i < n; ++i) {
      cur.push_back(i);
      rec(i + 1);
      cur.pop_back();
    }
  };
  rec(0);
}

}  // namespace oracle
