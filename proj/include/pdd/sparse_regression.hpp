#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pdd/pde_library.hpp"

namespace pdd {

// One restricted least-squares solution along the elimination path.
// Coefficients are in the original (denormalized) scale and are nonzero
// exactly on the support; residual is ||L c - b||^2.
struct Candidate {
  std::vector<int> support;
  Eigen::VectorXd coeffs;
  double residual = 0.0;
};

struct LeastSquaresResult {
  Eigen::VectorXd coeffs;  // full length, zero off support
  double residual = 0.0;
};

// Minimum-norm least-squares solution restricted to the support columns,
// via a rank-revealing complete orthogonal decomposition.
LeastSquaresResult least_squares(const Eigen::MatrixXd& A,
                                 const Eigen::VectorXd& b,
                                 std::span<const int> support);

// Recursive feature elimination over the normalized system. The first
// candidate is the full least-squares solution; each step removes the
// support element whose normalized coefficient has the smallest magnitude
// (ties remove the higher term index) and re-solves. The returned sequence
// ends with the zero candidate (empty support, residual ||b||^2), so it has
// |terms| + 1 entries and non-decreasing residuals.
std::vector<Candidate> rfe_path(const LibrarySystem& sys);

// Exact fixed-removal residual increases R(c - c_k e_k) - R(c) for every
// support feature, by direct recomputation of both residuals. On unit-norm
// columns this equals the squared normalized coefficient; kept as the test
// oracle for the elimination rule.
std::vector<std::pair<int, double>> residual_increase_check(
    const LibrarySystem& sys, const Candidate& candidate);

// Ranked, human-readable discovery output.
struct PDEReport {
  struct Entry {
    std::vector<int> support;
    std::vector<std::string> term_names;
    std::vector<double> coefficients;
    double residual = 0.0;
    double ratio_percent = 0.0;
  };
  std::vector<Entry> ranked;  // top 5, ratios non-increasing

  // metadata
  int order_m = 0;
  int degree_k = 0;
  int n_extract = 0;
  std::uint64_t seed = 0;

  std::string text() const;
};

// Scores every non-empty candidate by the ratio of its successor's residual
// to its own (the sparsest candidate's successor is the zero vector, so its
// numerator is ||b||^2), guarded below by 1e-12 ||b||^2, and reports the top
// five by descending ratio. No tunable parameters.
PDEReport rank_candidates(std::span<const Candidate> path,
                          const std::vector<TermSpec>& terms);

// The whole extraction step: elimination path plus ranking.
inline PDEReport discover_pde(const LibrarySystem& sys) {
  return rank_candidates(rfe_path(sys), sys.terms);
}

}  // namespace pdd
