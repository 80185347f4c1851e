#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace pdd {

struct Rect {
  double t_lo = 0.0, t_hi = 1.0;
  double x_lo = 0.0, x_hi = 1.0;
};

struct DatasetMeta {
  std::string equation;
  std::map<std::string, double> coefficients;
  std::string ic;
  std::string boundary = "periodic";
  double noise_level = 0.0;
  std::uint64_t noise_seed = 0;
};

// Full spatiotemporal grid of system-response values. values is row-major
// n_t x n_x; both grids are strictly increasing.
struct GridDataset {
  std::vector<double> t_grid;
  std::vector<double> x_grid;
  std::vector<double> values;
  DatasetMeta meta;

  int n_t() const { return static_cast<int>(t_grid.size()); }
  int n_x() const { return static_cast<int>(x_grid.size()); }
  double at(int it, int ix) const { return values[static_cast<std::size_t>(it) * x_grid.size() + ix]; }
  double& at(int it, int ix) { return values[static_cast<std::size_t>(it) * x_grid.size() + ix]; }
  Rect domain() const {
    return Rect{t_grid.front(), t_grid.back(), x_grid.front(), x_grid.back()};
  }
};

struct Sample {
  double t, x, u;
};

// Scattered subsample with coordinates; what the solution network trains on.
struct SampleSet {
  std::vector<Sample> pts;
};

// Initial condition: a named preset, or explicit per-grid-node samples.
// Preset names: heat "sine" | "gaussian-sine", burgers "sine" | "gaussian",
// kdv "sine". "samples" requires `samples` to hold one value per unique
// spatial node (the duplicated periodic endpoint of the heat grid excluded).
struct InitialCondition {
  std::string kind = "sine";
  std::vector<double> samples;
};

struct HeatSpec {
  double alpha = 0.05;
  InitialCondition ic;
  int n_t = 201;
  int n_x = 201;  // includes the duplicated periodic endpoint x = 10
};

struct BurgersSpec {
  double nu = 0.1;
  InitialCondition ic;
  int n_t = 201;  // the gaussian data set defaults to 101 at the CLI level
  int n_x = 256;
};

struct KdvSpec {
  InitialCondition ic;
  int n_t = 201;
  int n_x = 512;
};

// Exact per-mode spectral solution of D_t u = alpha D_x^2 u on the periodic
// domain [0,10] x [0,10]: each Fourier mode of the initial condition decays
// as exp(-alpha k^2 t).
GridDataset gen_heat(const HeatSpec& spec);

// Fourier pseudospectral solves with the stiff linear part handled by an
// integrating factor, classical fourth-order stepping of the nonlinear part,
// internal substepping, and 2/3-rule dealiasing.
// Burgers: D_t u = nu D_x^2 u - u D_x u on t in [0,10], x in (-8,8).
// KdV:     D_t u = -u D_x u - D_x^3 u on t in [0,40], x in (-20,20).
GridDataset gen_burgers(const BurgersSpec& spec);
GridDataset gen_kdv(const KdvSpec& spec);

// Internal solver refinement hook for convergence checks: runs the same
// solve with the spatial resolution (and hence substep limit) scaled by
// `refine`, then samples onto the requested grid.
GridDataset gen_burgers_refined(const BurgersSpec& spec, int refine);
GridDataset gen_kdv_refined(const KdvSpec& spec, int refine);

// Adds i.i.d. zero-mean Gaussian noise with standard deviation
// p * std(all clean values) to every grid value.
GridDataset inject_noise(const GridDataset& ds, double p, std::uint64_t seed);

// Uniform selection without replacement of n_data grid nodes.
SampleSet subsample(const GridDataset& ds, int n_data, std::uint64_t seed);

// Binary values file ("PDRD1" magic, little-endian float64, row-major) plus
// a sidecar JSON metadata file at path + ".json". Lossless round-trip.
// read_dataset also ingests plain CSV grids (header "t,x,u") when the path
// ends in ".csv".
void write_dataset(const GridDataset& ds, const std::string& path);
GridDataset read_dataset(const std::string& path);

}  // namespace pdd
