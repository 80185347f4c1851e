#include "pdd/datasets.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

#include "pdd/errors.hpp"
#include "pdd/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "dataset files are little-endian; big-endian hosts unsupported");

namespace pdd {

namespace {

constexpr double kPi = std::numbers::pi;

// Thin RAII wrapper over an n-point complex FFTW transform pair.
class Fft {
 public:
  explicit Fft(int n) : n_(n) {
    buf_ = fftw_alloc_complex(n);
    fwd_ = fftw_plan_dft_1d(n, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_1d(n, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~Fft() {
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(buf_);
  }
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;

  // In-place on the caller's vector; forward is unnormalized, backward
  // divides by n so the pair is an identity.
  void forward(std::vector<std::complex<double>>& v) {
    std::memcpy(buf_, v.data(), sizeof(fftw_complex) * n_);
    fftw_execute(fwd_);
    std::memcpy(v.data(), buf_, sizeof(fftw_complex) * n_);
  }
  void backward(std::vector<std::complex<double>>& v) {
    std::memcpy(buf_, v.data(), sizeof(fftw_complex) * n_);
    fftw_execute(bwd_);
    std::memcpy(v.data(), buf_, sizeof(fftw_complex) * n_);
    for (auto& c : v) c /= static_cast<double>(n_);
  }

 private:
  int n_;
  fftw_complex* buf_;
  fftw_plan fwd_, bwd_;
};

// Signed wavenumbers 2*pi*m/L for an n-point periodic grid.
std::vector<double> wavenumbers(int n, double length) {
  std::vector<double> k(n);
  for (int m = 0; m < n; ++m) {
    const int signed_m = m <= n / 2 ? m : m - n;
    k[m] = 2.0 * kPi * signed_m / length;
  }
  return k;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
  return v;
}

std::vector<double> ic_values(const InitialCondition& ic,
                              const std::string& equation,
                              const std::vector<double>& x_unique) {
  const int n = static_cast<int>(x_unique.size());
  std::vector<double> u(n);
  if (ic.kind == "samples") {
    if (static_cast<int>(ic.samples.size()) != n) {
      throw ConfigError("initial condition samples: expected " +
                        std::to_string(n) + " values, got " +
                        std::to_string(ic.samples.size()));
    }
    return ic.samples;
  }
  for (int i = 0; i < n; ++i) {
    const double x = x_unique[i];
    if (equation == "heat" && ic.kind == "sine") {
      u[i] = std::sin(5.0 * x * (2.0 * kPi / 10.0));
    } else if (equation == "heat" && ic.kind == "gaussian-sine") {
      u[i] = std::exp(-0.5 * (x - 5.0) * (x - 5.0)) *
             std::sin(5.0 * x * (2.0 * kPi / 5.0));
    } else if (equation == "burgers" && ic.kind == "sine") {
      u[i] = -std::sin(kPi * x / 8.0);
    } else if (equation == "burgers" && ic.kind == "gaussian") {
      u[i] = -std::exp(-(x + 2.0) * (x + 2.0));
    } else if (equation == "kdv" && ic.kind == "sine") {
      u[i] = -std::sin(kPi * x / 20.0);
    } else {
      throw ConfigError("unknown initial condition '" + ic.kind + "' for " +
                        equation);
    }
  }
  return u;
}

// Integrating-factor RK4 for D_t u = (linear symbol) u - 0.5 D_x (u^2),
// with 2/3-rule dealiasing of the quadratic term. `lam` is the Fourier
// symbol of the linear part. Rows of the output are written at every
// requested time; substeps per output interval follow the stability and
// accuracy limits below.
struct StepLimits {
  double cfl = 0.3;         // dt <= cfl / (k_cut * max|u|)
  double phase_acc = -1.0;  // if > 0: dt <= phase_acc / max|Im(lam)|
};

void pseudospectral_solve(const std::vector<std::complex<double>>& lam,
                          const std::vector<double>& k, double t_hi, int n_t,
                          const std::vector<double>& u0, const StepLimits& lim,
                          std::vector<double>& out /* n_t * n rows */) {
  const int n = static_cast<int>(u0.size());
  Fft fft(n);

  // Dealiasing mask and the nonlinear-term factor -0.5 i k. Mode 0 of g is
  // zero, so the mean is conserved exactly.
  std::vector<char> keep(n);
  std::vector<std::complex<double>> g(n);
  const double k_cut = (2.0 / 3.0) * std::abs(k[n / 2]);
  for (int m = 0; m < n; ++m) {
    keep[m] = std::abs(k[m]) <= k_cut + 1e-12;
    g[m] = keep[m] ? std::complex<double>(0.0, -0.5 * k[m]) : 0.0;
  }

  std::vector<std::complex<double>> v(n);
  for (int i = 0; i < n; ++i) v[i] = u0[i];
  fft.forward(v);
  for (int m = 0; m < n; ++m) {
    if (!keep[m]) v[m] = 0.0;
  }

  std::vector<std::complex<double>> ua(n), a(n), b(n), c(n), d(n), E(n), E2(n);
  double dt_cached = -1.0;

  auto nonlin = [&](const std::vector<std::complex<double>>& vin,
                    std::vector<std::complex<double>>& res) {
    res = vin;
    fft.backward(res);
    for (int i = 0; i < n; ++i) {
      const double ur = res[i].real();
      res[i] = ur * ur;
    }
    fft.forward(res);
    for (int m = 0; m < n; ++m) res[m] *= g[m];
  };

  double max_im_lam = 0.0;
  for (int m = 0; m < n; ++m) {
    max_im_lam = std::max(max_im_lam, std::abs(lam[m].imag()));
  }

  const double dt_out = t_hi / (n_t - 1);
  for (int i = 0; i < n; ++i) out[i] = u0[i];

  for (int row = 1; row < n_t; ++row) {
    // Current max|u| for the CFL limit.
    ua = v;
    fft.backward(ua);
    double umax = 0.0;
    for (int i = 0; i < n; ++i) umax = std::max(umax, std::abs(ua[i].real()));
    double dt_lim = lim.cfl / (k_cut * std::max(umax, 0.1));
    if (lim.phase_acc > 0.0 && max_im_lam > 0.0) {
      dt_lim = std::min(dt_lim, lim.phase_acc / max_im_lam);
    }
    const int n_sub = std::max(1, static_cast<int>(std::ceil(dt_out / dt_lim)));
    const double dt = dt_out / n_sub;
    if (dt != dt_cached) {
      for (int m = 0; m < n; ++m) {
        E[m] = std::exp(lam[m] * (dt / 2.0));
        E2[m] = E[m] * E[m];
      }
      dt_cached = dt;
    }
    for (int s = 0; s < n_sub; ++s) {
      nonlin(v, a);
      for (int m = 0; m < n; ++m) a[m] *= dt;
      for (int m = 0; m < n; ++m) ua[m] = E[m] * (v[m] + 0.5 * a[m]);
      nonlin(ua, b);
      for (int m = 0; m < n; ++m) b[m] *= dt;
      for (int m = 0; m < n; ++m) ua[m] = E[m] * v[m] + 0.5 * b[m];
      nonlin(ua, c);
      for (int m = 0; m < n; ++m) c[m] *= dt;
      for (int m = 0; m < n; ++m) ua[m] = E2[m] * v[m] + E[m] * c[m];
      nonlin(ua, d);
      for (int m = 0; m < n; ++m) d[m] *= dt;
      for (int m = 0; m < n; ++m) {
        v[m] = E2[m] * v[m] +
               (E2[m] * a[m] + 2.0 * E[m] * (b[m] + c[m]) + d[m]) / 6.0;
      }
    }
    ua = v;
    fft.backward(ua);
    double* row_out = out.data() + static_cast<std::size_t>(row) * n;
    double row_max = 0.0;
    for (int i = 0; i < n; ++i) {
      row_out[i] = ua[i].real();
      row_max = std::max(row_max, std::abs(row_out[i]));
    }
    if (!(row_max < 1e6)) {
      throw InstabilityError("pseudospectral solve: |u| exceeded 1e6 at t = " +
                             std::to_string(row * dt_out));
    }
  }
}

// Downsamples solver rows computed at `refine`-times the spatial resolution
// onto the base grid (the fine grid contains every base node).
GridDataset sample_rows(const std::vector<double>& fine, int n_t, int n_fine,
                        int refine, const std::vector<double>& t_grid,
                        const std::vector<double>& x_grid) {
  GridDataset ds;
  ds.t_grid = t_grid;
  ds.x_grid = x_grid;
  const int n_x = static_cast<int>(x_grid.size());
  ds.values.resize(static_cast<std::size_t>(n_t) * n_x);
  for (int it = 0; it < n_t; ++it) {
    for (int ix = 0; ix < n_x; ++ix) {
      ds.values[static_cast<std::size_t>(it) * n_x + ix] =
          fine[static_cast<std::size_t>(it) * n_fine +
               static_cast<std::size_t>(ix) * refine];
    }
  }
  return ds;
}

}  // namespace

GridDataset gen_heat(const HeatSpec& spec) {
  if (spec.alpha <= 0.0) throw ConfigError("gen_heat: alpha must be positive");
  if (spec.n_t < 2 || spec.n_x < 3) throw ConfigError("gen_heat: grid too small");
  const double L = 10.0, T = 10.0;
  const int n_unique = spec.n_x - 1;  // x = 10 duplicates x = 0
  std::vector<double> x_unique(n_unique);
  for (int i = 0; i < n_unique; ++i) x_unique[i] = L * i / n_unique;

  std::vector<double> u0 = ic_values(spec.ic, "heat", x_unique);
  std::vector<std::complex<double>> modes(u0.begin(), u0.end());
  Fft fft(n_unique);
  fft.forward(modes);
  const std::vector<double> k = wavenumbers(n_unique, L);

  GridDataset ds;
  ds.t_grid = linspace(0.0, T, spec.n_t);
  ds.x_grid = linspace(0.0, L, spec.n_x);
  ds.values.resize(static_cast<std::size_t>(spec.n_t) * spec.n_x);
  std::vector<std::complex<double>> row(n_unique);
  for (int it = 0; it < spec.n_t; ++it) {
    const double t = ds.t_grid[it];
    for (int m = 0; m < n_unique; ++m) {
      row[m] = modes[m] * std::exp(-spec.alpha * k[m] * k[m] * t);
    }
    fft.backward(row);
    for (int ix = 0; ix < n_unique; ++ix) ds.at(it, ix) = row[ix].real();
    ds.at(it, spec.n_x - 1) = ds.at(it, 0);
  }
  ds.meta.equation = "heat";
  ds.meta.coefficients["alpha"] = spec.alpha;
  ds.meta.ic = spec.ic.kind;
  return ds;
}

GridDataset gen_burgers_refined(const BurgersSpec& spec, int refine) {
  if (spec.nu <= 0.0) throw ConfigError("gen_burgers: nu must be positive");
  if (spec.n_t < 2 || spec.n_x < 8) throw ConfigError("gen_burgers: grid too small");
  const double x_lo = -8.0, x_hi = 8.0, T = 10.0;
  const double L = x_hi - x_lo;
  const int n = spec.n_x * refine;
  std::vector<double> x_fine(n);
  for (int i = 0; i < n; ++i) x_fine[i] = x_lo + L * i / n;

  std::vector<double> u0;
  if (spec.ic.kind == "samples" && refine > 1) {
    throw ConfigError("gen_burgers: refinement needs an analytic IC");
  }
  u0 = ic_values(spec.ic, "burgers", x_fine);

  const std::vector<double> k = wavenumbers(n, L);
  std::vector<std::complex<double>> lam(n);
  for (int m = 0; m < n; ++m) lam[m] = -spec.nu * k[m] * k[m];

  std::vector<double> rows(static_cast<std::size_t>(spec.n_t) * n);
  pseudospectral_solve(lam, k, T, spec.n_t, u0, StepLimits{0.3, -1.0}, rows);

  std::vector<double> x_grid(spec.n_x);
  for (int i = 0; i < spec.n_x; ++i) x_grid[i] = x_lo + L * i / spec.n_x;
  GridDataset ds = sample_rows(rows, spec.n_t, n, refine,
                               linspace(0.0, T, spec.n_t), x_grid);
  ds.meta.equation = "burgers";
  ds.meta.coefficients["nu"] = spec.nu;
  ds.meta.ic = spec.ic.kind;
  return ds;
}

GridDataset gen_burgers(const BurgersSpec& spec) {
  return gen_burgers_refined(spec, 1);
}

GridDataset gen_kdv_refined(const KdvSpec& spec, int refine) {
  if (spec.n_t < 2 || spec.n_x < 8) throw ConfigError("gen_kdv: grid too small");
  const double x_lo = -20.0, x_hi = 20.0, T = 40.0;
  const double L = x_hi - x_lo;
  const int n = spec.n_x * refine;
  std::vector<double> x_fine(n);
  for (int i = 0; i < n; ++i) x_fine[i] = x_lo + L * i / n;

  if (spec.ic.kind == "samples" && refine > 1) {
    throw ConfigError("gen_kdv: refinement needs an analytic IC");
  }
  std::vector<double> u0 = ic_values(spec.ic, "kdv", x_fine);

  const std::vector<double> k = wavenumbers(n, L);
  std::vector<std::complex<double>> lam(n);
  // -D_x^3 has Fourier symbol +i k^3; purely dispersive, handled exactly by
  // the integrating factor but limiting the step through the phase-accuracy
  // bound below.
  for (int m = 0; m < n; ++m) lam[m] = std::complex<double>(0.0, k[m] * k[m] * k[m]);

  std::vector<double> rows(static_cast<std::size_t>(spec.n_t) * n);
  pseudospectral_solve(lam, k, T, spec.n_t, u0, StepLimits{0.3, 8.0}, rows);

  std::vector<double> x_grid(spec.n_x);
  for (int i = 0; i < spec.n_x; ++i) x_grid[i] = x_lo + L * i / spec.n_x;
  GridDataset ds = sample_rows(rows, spec.n_t, n, refine,
                               linspace(0.0, T, spec.n_t), x_grid);
  ds.meta.equation = "kdv";
  ds.meta.ic = spec.ic.kind;
  return ds;
}

GridDataset gen_kdv(const KdvSpec& spec) { return gen_kdv_refined(spec, 1); }

GridDataset inject_noise(const GridDataset& ds, double p, std::uint64_t seed) {
  if (p < 0.0) throw ConfigError("inject_noise: noise level must be >= 0");
  GridDataset out = ds;
  out.meta.noise_level = p;
  out.meta.noise_seed = seed;
  if (p == 0.0) return out;
  const std::size_t n = ds.values.size();
  double mean = 0.0;
  for (double v : ds.values) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : ds.values) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(n));
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) out.values[i] += rng.normal(0.0, p * sd);
  return out;
}

SampleSet subsample(const GridDataset& ds, int n_data, std::uint64_t seed) {
  const std::size_t total = ds.values.size();
  if (n_data < 1 || static_cast<std::size_t>(n_data) > total) {
    throw ConfigError("subsample: n_data must be in [1, grid size]");
  }
  std::vector<std::uint32_t> idx(total);
  std::iota(idx.begin(), idx.end(), 0u);
  Rng rng(seed);
  SampleSet set;
  set.pts.reserve(n_data);
  const int n_x = ds.n_x();
  for (int i = 0; i < n_data; ++i) {
    const std::size_t j = i + rng.below(total - i);
    std::swap(idx[i], idx[j]);
    const std::uint32_t node = idx[i];
    const int it = static_cast<int>(node / n_x);
    const int ix = static_cast<int>(node % n_x);
    set.pts.push_back(Sample{ds.t_grid[it], ds.x_grid[ix], ds.values[node]});
  }
  return set;
}

// -- file formats -------------------------------------------------------------

namespace {
constexpr char kMagic[5] = {'P', 'D', 'R', 'D', '1'};

nlohmann::json meta_to_json(const GridDataset& ds) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["equation"] = ds.meta.equation;
  j["coefficients"] = ds.meta.coefficients;
  j["ic"] = ds.meta.ic;
  j["boundary"] = ds.meta.boundary;
  j["noise_level"] = ds.meta.noise_level;
  j["noise_seed"] = ds.meta.noise_seed;
  j["n_t"] = ds.n_t();
  j["n_x"] = ds.n_x();
  return j;
}

GridDataset read_csv_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("read_dataset: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("read_dataset: empty CSV");
  auto strip = [](std::string s) {
    s.erase(std::remove_if(s.begin(), s.end(),
                           [](char c) { return c == ' ' || c == '\r'; }),
            s.end());
    return s;
  };
  if (strip(line) != "t,x,u") {
    throw FormatError("read_dataset: CSV header must be 't,x,u'");
  }
  std::vector<Sample> rows;
  std::set<double> ts, xs;
  while (std::getline(in, line)) {
    if (strip(line).empty()) continue;
    std::istringstream ss(line);
    Sample s{};
    char c1 = 0, c2 = 0;
    if (!(ss >> s.t >> c1 >> s.x >> c2 >> s.u) || c1 != ',' || c2 != ',') {
      throw FormatError("read_dataset: malformed CSV row: " + line);
    }
    rows.push_back(s);
    ts.insert(s.t);
    xs.insert(s.x);
  }
  GridDataset ds;
  ds.t_grid.assign(ts.begin(), ts.end());
  ds.x_grid.assign(xs.begin(), xs.end());
  const std::size_t nt = ds.t_grid.size(), nx = ds.x_grid.size();
  if (rows.size() != nt * nx) {
    throw FormatError("read_dataset: CSV is not a complete grid");
  }
  ds.values.assign(nt * nx, std::numeric_limits<double>::quiet_NaN());
  auto index_of = [](const std::vector<double>& g, double v) {
    return static_cast<std::size_t>(
        std::lower_bound(g.begin(), g.end(), v) - g.begin());
  };
  for (const Sample& s : rows) {
    ds.values[index_of(ds.t_grid, s.t) * nx + index_of(ds.x_grid, s.x)] = s.u;
  }
  for (double v : ds.values) {
    if (std::isnan(v)) throw FormatError("read_dataset: CSV grid has holes");
  }
  ds.meta.equation = "csv";
  ds.meta.ic = "samples";
  return ds;
}
}  // namespace

void write_dataset(const GridDataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("write_dataset: cannot open " + path);
  out.write(kMagic, sizeof(kMagic));
  const std::uint32_t nt = ds.n_t(), nx = ds.n_x();
  out.write(reinterpret_cast<const char*>(&nt), 4);
  out.write(reinterpret_cast<const char*>(&nx), 4);
  out.write(reinterpret_cast<const char*>(ds.t_grid.data()), 8 * nt);
  out.write(reinterpret_cast<const char*>(ds.x_grid.data()), 8 * nx);
  out.write(reinterpret_cast<const char*>(ds.values.data()),
            8 * ds.values.size());
  if (!out) throw FormatError("write_dataset: write failed for " + path);
  std::ofstream meta(path + ".json");
  if (!meta) throw FormatError("write_dataset: cannot open " + path + ".json");
  meta << meta_to_json(ds).dump(2) << "\n";
}

GridDataset read_dataset(const std::string& path) {
  if (path.size() > 4 && path.substr(path.size() - 4) == ".csv") {
    return read_csv_grid(path);
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("read_dataset: cannot open " + path);
  char magic[5];
  if (!in.read(magic, 5) || std::memcmp(magic, kMagic, 5) != 0) {
    throw FormatError("read_dataset: bad magic (not a PDRD1 file)");
  }
  std::uint32_t nt = 0, nx = 0;
  if (!in.read(reinterpret_cast<char*>(&nt), 4) ||
      !in.read(reinterpret_cast<char*>(&nx), 4) || nt == 0 || nx == 0) {
    throw FormatError("read_dataset: bad header");
  }
  GridDataset ds;
  ds.t_grid.resize(nt);
  ds.x_grid.resize(nx);
  ds.values.resize(static_cast<std::size_t>(nt) * nx);
  if (!in.read(reinterpret_cast<char*>(ds.t_grid.data()), 8 * nt) ||
      !in.read(reinterpret_cast<char*>(ds.x_grid.data()), 8 * nx) ||
      !in.read(reinterpret_cast<char*>(ds.values.data()), 8 * ds.values.size())) {
    throw FormatError("read_dataset: size mismatch (truncated file)");
  }
  char extra;
  if (in.read(&extra, 1)) {
    throw FormatError("read_dataset: size mismatch (trailing bytes)");
  }

  std::ifstream meta(path + ".json");
  if (!meta) throw FormatError("read_dataset: missing sidecar " + path + ".json");
  nlohmann::json j;
  try {
    meta >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("read_dataset: bad sidecar JSON: ") + e.what());
  }
  ds.meta.equation = j.value("equation", "unknown");
  if (j.contains("coefficients")) {
    ds.meta.coefficients =
        j["coefficients"].get<std::map<std::string, double>>();
  }
  ds.meta.ic = j.value("ic", "");
  ds.meta.boundary = j.value("boundary", "periodic");
  ds.meta.noise_level = j.value("noise_level", 0.0);
  ds.meta.noise_seed = j.value("noise_seed", std::uint64_t{0});
  return ds;
}

}  // namespace pdd
