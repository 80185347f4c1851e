#include "pdd/sparse_regression.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "pdd/errors.hpp"

namespace pdd {

LeastSquaresResult least_squares(const Eigen::MatrixXd& A,
                                 const Eigen::VectorXd& b,
                                 std::span<const int> support) {
  if (support.empty()) {
    throw ConfigError("least_squares: empty support (caller handles the zero candidate)");
  }
  const int k = static_cast<int>(support.size());
  Eigen::MatrixXd Asub(A.rows(), k);
  for (int j = 0; j < k; ++j) Asub.col(j) = A.col(support[j]);
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(Asub);
  const Eigen::VectorXd xsub = cod.solve(b);
  LeastSquaresResult res;
  res.coeffs = Eigen::VectorXd::Zero(A.cols());
  for (int j = 0; j < k; ++j) res.coeffs[support[j]] = xsub[j];
  res.residual = (Asub * xsub - b).squaredNorm();
  return res;
}

std::vector<Candidate> rfe_path(const LibrarySystem& sys) {
  const int n_terms = static_cast<int>(sys.terms.size());
  std::vector<int> support(n_terms);
  for (int j = 0; j < n_terms; ++j) support[j] = j;

  std::vector<Candidate> path;
  path.reserve(n_terms + 1);
  while (!support.empty()) {
    const LeastSquaresResult sol =
        least_squares(sys.L_normalized, sys.b, support);
    Candidate c;
    c.support = support;
    c.residual = sol.residual;
    c.coeffs = Eigen::VectorXd::Zero(n_terms);
    for (int j : support) c.coeffs[j] = sol.coeffs[j] / sys.column_norms[j];

    // Least important feature: smallest |c'_k|; ties drop the higher index
    // (the later, higher-degree term).
    int drop = support[0];
    double drop_mag = std::abs(sol.coeffs[drop]);
    for (int j : support) {
      const double mag = std::abs(sol.coeffs[j]);
      if (mag < drop_mag || (mag == drop_mag && j > drop)) {
        drop = j;
        drop_mag = mag;
      }
    }
    path.push_back(std::move(c));
    support.erase(std::find(support.begin(), support.end(), drop));
  }

  Candidate zero;
  zero.coeffs = Eigen::VectorXd::Zero(n_terms);
  zero.residual = sys.b.squaredNorm();
  path.push_back(std::move(zero));
  return path;
}

std::vector<std::pair<int, double>> residual_increase_check(
    const LibrarySystem& sys, const Candidate& candidate) {
  const double base = (sys.L * candidate.coeffs - sys.b).squaredNorm();
  std::vector<std::pair<int, double>> out;
  out.reserve(candidate.support.size());
  for (int k : candidate.support) {
    Eigen::VectorXd removed = candidate.coeffs;
    removed[k] = 0.0;
    const double r = (sys.L * removed - sys.b).squaredNorm();
    out.emplace_back(k, r - base);
  }
  return out;
}

PDEReport rank_candidates(std::span<const Candidate> path,
                          const std::vector<TermSpec>& terms) {
  if (path.empty()) throw ConfigError("rank_candidates: empty path");
  const double b_norm2 = path.back().residual;  // R(0) = ||b||^2
  const double floor = 1e-12 * b_norm2;

  struct Scored {
    double ratio;
    const Candidate* c;
  };
  std::vector<Scored> scored;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (path[i].support.empty()) continue;
    const double next_res =
        i + 1 < path.size() ? path[i + 1].residual : b_norm2;
    scored.push_back(
        Scored{next_res / std::max(path[i].residual, floor), &path[i]});
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const Scored& a, const Scored& b) { return a.ratio > b.ratio; });

  PDEReport report;
  const std::size_t top = std::min<std::size_t>(5, scored.size());
  for (std::size_t i = 0; i < top; ++i) {
    PDEReport::Entry e;
    e.support = scored[i].c->support;
    for (int j : e.support) {
      e.term_names.push_back(term_name(terms[j]));
      e.coefficients.push_back(scored[i].c->coeffs[j]);
    }
    e.residual = scored[i].c->residual;
    e.ratio_percent = 100.0 * scored[i].ratio;
    report.ranked.push_back(std::move(e));
  }
  return report;
}

std::string PDEReport::text() const {
  std::string out;
  char buf[128];
  out += "Top " + std::to_string(ranked.size()) +
         " candidate PDEs (ranked by residual ratio):\n";
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const Entry& e = ranked[i];
    std::string eq = "D_t U = ";
    for (std::size_t j = 0; j < e.coefficients.size(); ++j) {
      const double c = e.coefficients[j];
      if (j == 0) {
        eq += c < 0 ? "-" : "";
      } else {
        eq += c < 0 ? " - " : " + ";
      }
      std::snprintf(buf, sizeof(buf), "(%.6g)", std::abs(c));
      eq += buf;
      if (e.term_names[j] != "1") eq += e.term_names[j];
    }
    out += "  " + std::to_string(i + 1) + ". " + eq + "\n";
    std::snprintf(buf, sizeof(buf), "     residual = %.6e, ratio = %.2f%%\n",
                  e.residual, e.ratio_percent);
    out += buf;
  }
  return out;
}

}  // namespace pdd
