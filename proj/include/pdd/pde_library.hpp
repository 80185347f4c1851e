#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pdd/datasets.hpp"
#include "pdd/jet.hpp"
#include "pdd/network.hpp"
#include "pdd/rng.hpp"

namespace pdd {

struct Coord {
  double t, x;
};

// One polynomial library term as an exponent multi-index over
// (U, D_x U, ..., D_x^M U).
struct TermSpec {
  std::vector<std::uint8_t> exponents;  // length M+1

  int degree() const {
    int d = 0;
    for (auto e : exponents) d += e;
    return d;
  }
  bool is_constant() const { return degree() == 0; }
};

// All monomials of total degree <= K, ordered by total degree and then
// lexicographically (descending) within each degree block, so the constant
// term comes first and U precedes D_x U. Count is C(M+1+K, K).
std::vector<TermSpec> enumerate_terms(int order_m, int degree_k);

// Product of jet components raised to the term's exponents.
double term_eval(const TermSpec& term, const DJet& jet);

// Human-readable name, e.g. "1", "(U)", "(U)^2 (D_x U)".
std::string term_name(const TermSpec& term);

// i.i.d. uniform points in the open rectangle; the stream is the caller's,
// which keeps collocation, data, and extraction draws independent.
std::vector<Coord> sample_uniform(const Rect& domain, int n, Rng& rng);
inline std::vector<Coord> sample_extraction(const Rect& domain, int n, Rng& rng) {
  return sample_uniform(domain, n, rng);
}

// The assembled linear system of the extraction step: L[i][j] holds term j
// evaluated from U's jet at point i, b[i] holds N at point i. L_normalized
// has unit-Euclidean-norm columns: L_normalized[j] = L[j] / column_norms[j].
struct LibrarySystem {
  std::vector<TermSpec> terms;
  Eigen::MatrixXd L;
  Eigen::MatrixXd L_normalized;
  Eigen::VectorXd b;
  Eigen::VectorXd column_norms;
};

// Builds the system from the trained networks. Throws ZeroColumnError when a
// column norm falls below 1e-14 (a degenerate U, e.g. a constant network,
// zeroes out derivative columns).
LibrarySystem build_system(const Network& u_net, const Network& n_net,
                           std::span<const Coord> points,
                           const std::vector<TermSpec>& terms);

// Optional dump: header of term names plus "b", one row per extraction point.
void dump_system_csv(const LibrarySystem& sys, const std::string& path);

}  // namespace pdd
