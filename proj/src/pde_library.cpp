#include "pdd/pde_library.hpp"

#include <fstream>

#include "pdd/errors.hpp"

namespace pdd {

namespace {
void emit_terms(int pos, int remaining, std::vector<std::uint8_t>& cur,
                std::vector<TermSpec>& out) {
  const int n_vars = static_cast<int>(cur.size());
  if (pos == n_vars - 1) {
    cur[pos] = static_cast<std::uint8_t>(remaining);
    out.push_back(TermSpec{cur});
    return;
  }
  for (int e = remaining; e >= 0; --e) {
    cur[pos] = static_cast<std::uint8_t>(e);
    emit_terms(pos + 1, remaining - e, cur, out);
  }
}
}  // namespace

std::vector<TermSpec> enumerate_terms(int order_m, int degree_k) {
  if (order_m < 0 || degree_k < 1) {
    throw ConfigError("enumerate_terms: need M >= 0 and K >= 1");
  }
  std::vector<TermSpec> out;
  std::vector<std::uint8_t> cur(order_m + 1, 0);
  for (int d = 0; d <= degree_k; ++d) emit_terms(0, d, cur, out);
  return out;
}

double term_eval(const TermSpec& term, const DJet& jet) {
  assert(jet.order >= static_cast<int>(term.exponents.size()) - 1);
  double prod = 1.0;
  for (std::size_t m = 0; m < term.exponents.size(); ++m) {
    const double comp = m == 0 ? jet.val : jet.dx[m - 1];
    for (int e = 0; e < term.exponents[m]; ++e) prod *= comp;
  }
  return prod;
}

std::string term_name(const TermSpec& term) {
  if (term.is_constant()) return "1";
  std::string name;
  for (std::size_t m = 0; m < term.exponents.size(); ++m) {
    const int e = term.exponents[m];
    if (e == 0) continue;
    if (!name.empty()) name += " ";
    if (m == 0) {
      name += "(U)";
    } else if (m == 1) {
      name += "(D_x U)";
    } else {
      name += "(D_x^" + std::to_string(m) + " U)";
    }
    if (e > 1) name += "^" + std::to_string(e);
  }
  return name;
}

std::vector<Coord> sample_uniform(const Rect& domain, int n, Rng& rng) {
  if (n < 1) throw ConfigError("sample_uniform: n must be >= 1");
  if (!(domain.t_hi > domain.t_lo) || !(domain.x_hi > domain.x_lo)) {
    throw ConfigError("sample_uniform: empty rectangle");
  }
  std::vector<Coord> pts(n);
  for (int i = 0; i < n; ++i) {
    pts[i].t = rng.uniform(domain.t_lo, domain.t_hi);
    pts[i].x = rng.uniform(domain.x_lo, domain.x_hi);
  }
  return pts;
}

LibrarySystem build_system(const Network& u_net, const Network& n_net,
                           std::span<const Coord> points,
                           const std::vector<TermSpec>& terms) {
  if (points.empty()) throw ConfigError("build_system: no extraction points");
  if (terms.empty()) throw ConfigError("build_system: empty term library");
  const int order = static_cast<int>(terms[0].exponents.size()) - 1;
  if (n_net.input_width() != order + 1) {
    throw ConfigError("build_system: N input width must be M+1");
  }

  LibrarySystem sys;
  sys.terms = terms;
  const int rows = static_cast<int>(points.size());
  const int cols = static_cast<int>(terms.size());
  sys.L.resize(rows, cols);
  sys.b.resize(rows);

  std::vector<double> n_in(order + 1);
  for (int i = 0; i < rows; ++i) {
    const std::array<DJet, 2> in = {jet_seed(points[i].t, Var::T, order),
                                    jet_seed(points[i].x, Var::X, order)};
    const DJet out = network_forward(u_net, std::span<const DJet>(in));
    for (int j = 0; j < cols; ++j) sys.L(i, j) = term_eval(terms[j], out);
    n_in[0] = out.val;
    for (int m = 1; m <= order; ++m) n_in[m] = out.dx[m - 1];
    sys.b[i] = network_eval(n_net, std::span<const double>(n_in));
  }

  sys.column_norms.resize(cols);
  for (int j = 0; j < cols; ++j) {
    const double norm = sys.L.col(j).norm();
    if (norm < 1e-14) {
      throw ZeroColumnError("build_system: column '" + term_name(terms[j]) +
                            "' has (numerically) zero norm; U is degenerate");
    }
    sys.column_norms[j] = norm;
  }
  sys.L_normalized = sys.L * sys.column_norms.cwiseInverse().asDiagonal();
  return sys;
}

void dump_system_csv(const LibrarySystem& sys, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("dump_system_csv: cannot open " + path);
  for (std::size_t j = 0; j < sys.terms.size(); ++j) {
    out << '"' << term_name(sys.terms[j]) << "\",";
  }
  out << "b\n";
  out.precision(17);
  for (Eigen::Index i = 0; i < sys.L.rows(); ++i) {
    for (Eigen::Index j = 0; j < sys.L.cols(); ++j) out << sys.L(i, j) << ',';
    out << sys.b[i] << '\n';
  }
}

}  // namespace pdd
