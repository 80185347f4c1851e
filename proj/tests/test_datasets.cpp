#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>

#include "pdd/datasets.hpp"
#include "pdd/errors.hpp"

using namespace pdd;

TEST_CASE("heat sine dataset matches the closed form everywhere") {
  const GridDataset ds = gen_heat(HeatSpec{});
  REQUIRE(ds.n_t() == 201);
  REQUIRE(ds.n_x() == 201);
  constexpr double pi = std::numbers::pi;
  double max_err = 0.0;
  for (int it = 0; it < ds.n_t(); ++it) {
    for (int ix = 0; ix < ds.n_x(); ++ix) {
      const double expect = std::exp(-0.05 * pi * pi * ds.t_grid[it]) *
                            std::sin(pi * ds.x_grid[ix]);
      max_err = std::max(max_err, std::abs(ds.at(it, ix) - expect));
    }
  }
  CHECK(max_err < 1e-10);

  // spot value frozen from the closed form e^(-0.05 pi^2 10) sin(pi/2)
  int it10 = ds.n_t() - 1;
  int ix = 10;  // x = 0.5
  CHECK(ds.x_grid[ix] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(ds.at(it10, ix) ==
        doctest::Approx(7.191883355826368e-3).epsilon(1e-9));
}

TEST_CASE("heat initial row equals the initial condition") {
  const GridDataset ds = gen_heat(HeatSpec{0.05, {"gaussian-sine", {}}, 101, 201});
  constexpr double pi = std::numbers::pi;
  for (int ix = 0; ix < ds.n_x(); ++ix) {
    const double x = ds.x_grid[ix];
    const double ic = std::exp(-0.5 * (x - 5.0) * (x - 5.0)) *
                      std::sin(5.0 * x * (2.0 * pi / 5.0));
    CHECK(std::abs(ds.at(0, ix) - ic) < 1e-12);
  }
}

TEST_CASE("noise injection: p = 0 identity, calibration, determinism") {
  const GridDataset ds = gen_heat(HeatSpec{});

  const GridDataset clean = inject_noise(ds, 0.0, 9);
  CHECK(clean.values == ds.values);

  const GridDataset noisy = inject_noise(ds, 1.0, 9);
  double mean_diff = 0.0;
  const std::size_t n = ds.values.size();
  for (std::size_t i = 0; i < n; ++i) {
    mean_diff += noisy.values[i] - ds.values[i];
  }
  mean_diff /= static_cast<double>(n);
  double var_noise = 0.0, mean_clean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = noisy.values[i] - ds.values[i] - mean_diff;
    var_noise += d * d;
    mean_clean += ds.values[i];
  }
  mean_clean /= static_cast<double>(n);
  double var_clean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    var_clean += (ds.values[i] - mean_clean) * (ds.values[i] - mean_clean);
  }
  const double ratio = std::sqrt(var_noise / var_clean);
  CHECK(std::abs(ratio - 1.0) < 0.02);
  CHECK(noisy.meta.noise_level == 1.0);
  CHECK(noisy.meta.noise_seed == 9);

  const GridDataset noisy2 = inject_noise(ds, 1.0, 9);
  CHECK(noisy2.values == noisy.values);
}

TEST_CASE("subsample: exhaustive draw, distinctness, determinism") {
  GridDataset ds;
  ds.t_grid = {0.0, 1.0};
  ds.x_grid = {0.0, 0.5, 1.0};
  ds.values = {1, 2, 3, 4, 5, 6};

  const SampleSet all = subsample(ds, 6, 3);
  REQUIRE(all.pts.size() == 6);
  std::set<std::pair<double, double>> coords;
  double sum = 0.0;
  for (const Sample& s : all.pts) {
    coords.insert({s.t, s.x});
    sum += s.u;
  }
  CHECK(coords.size() == 6);  // every node exactly once
  CHECK(sum == 21.0);

  const GridDataset big = gen_heat(HeatSpec{});
  const SampleSet sub = subsample(big, 10000, 5);
  std::set<std::pair<double, double>> uniq;
  for (const Sample& s : sub.pts) uniq.insert({s.t, s.x});
  CHECK(uniq.size() == 10000);

  const SampleSet sub2 = subsample(big, 10000, 5);
  bool same = true;
  for (std::size_t i = 0; i < sub.pts.size(); ++i) {
    same = same && sub.pts[i].t == sub2.pts[i].t &&
           sub.pts[i].x == sub2.pts[i].x && sub.pts[i].u == sub2.pts[i].u;
  }
  CHECK(same);

  CHECK_THROWS_AS(subsample(ds, 7, 0), ConfigError);
}

TEST_CASE("subsample frequencies are uniform") {
  GridDataset ds;
  ds.t_grid = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  ds.x_grid = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  ds.values.assign(100, 0.0);
  const int draws = 4000, take = 20;
  std::vector<int> count(100, 0);
  for (int r = 0; r < draws; ++r) {
    const SampleSet s = subsample(ds, take, 1000 + r);
    for (const Sample& p : s.pts) {
      const int it = static_cast<int>(p.t), ix = static_cast<int>(p.x);
      count[it * 10 + ix]++;
    }
  }
  const double pexp = static_cast<double>(take) / 100.0;
  const double sigma = std::sqrt(draws * pexp * (1 - pexp));
  int outside = 0;
  for (int c : count) {
    if (std::abs(c - draws * pexp) > 3 * sigma) ++outside;
  }
  CHECK(outside <= 2);  // ~0.27% expected beyond 3 sigma
}

TEST_CASE("dataset files round-trip bit-exactly") {
  const GridDataset ds =
      inject_noise(gen_heat(HeatSpec{0.05, {"sine", {}}, 41, 41}), 0.3, 77);
  const std::string path = "test_dataset.pdrd";
  write_dataset(ds, path);
  const GridDataset back = read_dataset(path);
  CHECK(back.t_grid == ds.t_grid);
  CHECK(back.x_grid == ds.x_grid);
  CHECK(back.values == ds.values);
  CHECK(back.meta.equation == "heat");
  CHECK(back.meta.coefficients.at("alpha") == 0.05);
  CHECK(back.meta.noise_level == 0.3);
  CHECK(back.meta.noise_seed == 77);
  std::filesystem::remove(path);
  std::filesystem::remove(path + ".json");
}

TEST_CASE("truncated and foreign dataset files are rejected") {
  const GridDataset ds = gen_heat(HeatSpec{0.05, {"sine", {}}, 11, 21});
  const std::string path = "test_dataset_bad.pdrd";
  write_dataset(ds, path);

  SUBCASE("truncation") {
    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 16);
    CHECK_THROWS_AS(read_dataset(path), FormatError);
  }
  SUBCASE("foreign magic") {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.write("NOPE!", 5);
    f.close();
    CHECK_THROWS_AS(read_dataset(path), FormatError);
  }
  SUBCASE("trailing bytes") {
    std::ofstream f(path, std::ios::app | std::ios::binary);
    f.write("x", 1);
    f.close();
    CHECK_THROWS_AS(read_dataset(path), FormatError);
  }
  std::filesystem::remove(path);
  std::filesystem::remove(path + ".json");
}

TEST_CASE("CSV grid ingestion") {
  const std::string path = "test_grid.csv";
  {
    std::ofstream f(path);
    f << "t,x,u\n";
    for (int it = 0; it < 3; ++it) {
      for (int ix = 0; ix < 2; ++ix) {
        f << it * 0.5 << "," << ix * 1.0 - 1.0 << "," << it * 10 + ix << "\n";
      }
    }
  }
  const GridDataset ds = read_dataset(path);
  CHECK(ds.n_t() == 3);
  CHECK(ds.n_x() == 2);
  CHECK(ds.at(2, 1) == 21.0);
  CHECK(ds.meta.equation == "csv");

  {
    std::ofstream f(path);
    f << "t,x,u\n0,0,1\n0,1,2\n1,0,3\n";  // missing (1,1)
  }
  CHECK_THROWS_AS(read_dataset(path), FormatError);
  std::filesystem::remove(path);
}

TEST_CASE("generator determinism") {
  const GridDataset a = gen_heat(HeatSpec{});
  const GridDataset b = gen_heat(HeatSpec{});
  CHECK(a.values == b.values);
}
