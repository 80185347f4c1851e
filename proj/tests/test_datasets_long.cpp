// Pseudospectral solver physics checks: symmetry, conservation, and
// self-convergence under refinement. Slower than the unit suite.

#include <doctest.h>

#include <cmath>

#include "pdd/datasets.hpp"

using namespace pdd;

TEST_CASE("burgers sine data set preserves odd symmetry") {
  const GridDataset ds = gen_burgers(BurgersSpec{});
  REQUIRE(ds.n_x() == 256);
  REQUIRE(ds.n_t() == 201);
  double worst = 0.0;
  for (int it = 0; it < ds.n_t(); ++it) {
    for (int ix = 1; ix < ds.n_x(); ++ix) {
      // grid midpoint x = 0 at index n/2; pair ix <-> n-ix reflects x -> -x
      worst = std::max(worst,
                       std::abs(ds.at(it, ix) + ds.at(it, ds.n_x() - ix)));
    }
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("burgers gaussian data set self-converges under refinement") {
  BurgersSpec spec;
  spec.ic.kind = "gaussian";
  spec.n_t = 101;
  const GridDataset base = gen_burgers(spec);
  const GridDataset fine = gen_burgers_refined(spec, 2);
  double worst = 0.0;
  for (std::size_t i = 0; i < base.values.size(); ++i) {
    worst = std::max(worst, std::abs(base.values[i] - fine.values[i]));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("burgers sine data set self-converges under refinement") {
  const BurgersSpec spec;
  const GridDataset base = gen_burgers(spec);
  const GridDataset fine = gen_burgers_refined(spec, 2);
  double worst = 0.0;
  for (std::size_t i = 0; i < base.values.size(); ++i) {
    worst = std::max(worst, std::abs(base.values[i] - fine.values[i]));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("kdv conserves mass over the full run") {
  const GridDataset ds = gen_kdv(KdvSpec{});
  REQUIRE(ds.n_x() == 512);
  REQUIRE(ds.n_t() == 201);
  const double dx = ds.x_grid[1] - ds.x_grid[0];
  double mass0 = 0.0, l1 = 0.0;
  for (int ix = 0; ix < ds.n_x(); ++ix) {
    mass0 += ds.at(0, ix) * dx;
    l1 += std::abs(ds.at(0, ix)) * dx;
  }
  for (int it = 1; it < ds.n_t(); ++it) {
    double mass = 0.0;
    for (int ix = 0; ix < ds.n_x(); ++ix) mass += ds.at(it, ix) * dx;
    CHECK(std::abs(mass - mass0) < 1e-6 * l1);
  }
}

TEST_CASE("kdv self-converges under refinement") {
  const KdvSpec spec;
  const GridDataset base = gen_kdv(spec);
  const GridDataset fine = gen_kdv_refined(spec, 2);
  double worst = 0.0;
  for (std::size_t i = 0; i < base.values.size(); ++i) {
    worst = std::max(worst, std::abs(base.values[i] - fine.values[i]));
  }
  CHECK(worst < 1e-4);
}
