#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "pdd/network.hpp"
#include "pdd/rng.hpp"
#include "oracles.hpp"

using namespace pdd;

namespace {

Network random_rational_net(Rng& rng, int max_hidden, int max_width) {
  const int depth = 1 + static_cast<int>(rng.below(max_hidden));
  std::vector<int> widths = {2};
  for (int i = 0; i < depth; ++i) {
    widths.push_back(2 + static_cast<int>(rng.below(max_width - 1)));
  }
  widths.push_back(1);
  Network net = make_network(widths, ActivationKind::Rational);
  init_weights(net, rng.next_u64());
  return net;
}

double eval_at(const Network& net, double t, double x) {
  const std::array<double, 2> in = {t, x};
  return network_eval(net, in);
}

}  // namespace

TEST_CASE("relu fit: max error, value at 1, denominator roots") {
  const RationalActivation act = fit_relu_rational();
  double max_err = 0.0;
  for (int i = 0; i <= 200000; ++i) {
    const double x = -1.0 + 2.0 * i / 200000;
    const double err = std::abs(activation_value(act, x) - std::max(x, 0.0));
    max_err = std::max(max_err, err);
  }
  CHECK(max_err < 0.05);
  CHECK(activation_value(act, 1.0) > 0.9);
  CHECK(activation_value(act, 1.0) < 1.1);
  CHECK(!denominator_has_root(act.den, -10.0, 10.0));
  // cached init returns the same coefficients
  const RationalActivation& cached = relu_rational_init();
  CHECK(cached.num == act.num);
  CHECK(cached.den == act.den);
}

TEST_CASE("activation_eval: identity and plain arithmetic") {
  RationalActivation ident;  // defaults encode f(z) = z
  DJet z = jet_seed(1.7, Var::X, 3);
  z.dt = 0.3;
  const DJet out = activation_eval(ident, z);
  CHECK(out.val == doctest::Approx(1.7).epsilon(1e-15));
  CHECK(out.dx[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(out.dx[1]) < 1e-15);
  CHECK(out.dt == doctest::Approx(0.3).epsilon(1e-15));

  RationalActivation ones;
  ones.num = {1, 1, 1, 1};
  ones.den = {1, 0, 1};
  CHECK(activation_value(ones, 2.0) == doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("activation_eval jet derivatives match finite differences") {
  Rng rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    RationalActivation act = relu_rational_init();
    for (auto& a : act.num) a += rng.uniform(-0.2, 0.2);
    act.den[1] += rng.uniform(-0.1, 0.1);
    act.den[2] += rng.uniform(-0.1, 0.1);
    const double x = rng.uniform(-1.5, 1.5);
    const DJet out = activation_eval(act, jet_seed(x, Var::X, 3));
    auto f = [&](double v) { return activation_value(act, v); };
    for (int order = 1; order <= 3; ++order) {
      CHECK(oracle::rel_err(out.dx[order - 1], oracle::fd_rich(f, x, order, 1e-2),
                            1e-3) < 1e-6);
    }
  }
}

TEST_CASE("pole error raised when the denominator vanishes") {
  RationalActivation act;
  act.den = {0.0, 1.0, 0.0};  // den(z) = z
  CHECK_THROWS_AS(activation_value(act, 0.0), PoleError);
  CHECK_THROWS_AS(activation_eval(act, jet_seed(0.0, Var::X, 2)), PoleError);
}

TEST_CASE("parameter counts") {
  const std::vector<int> paper = {2, 50, 50, 50, 50, 50, 1};
  CHECK(parameter_count(paper, false) == 10401);
  CHECK(parameter_count(paper, true) == 10436);
  const std::vector<int> tiny = {1, 1};
  CHECK(parameter_count(tiny, false) == 2);
}

TEST_CASE("single affine layer forward") {
  Network net = make_network({2, 1}, ActivationKind::Rational);
  net.params = {2.0, 0.0, 1.0};  // W = [2, 0], b = 1
  const std::array<DJet, 2> in = {jet_seed(3.0, Var::X, 2),
                                  jet_seed(0.0, Var::T, 2)};
  const DJet out = network_forward(net, in);
  CHECK(out.val == 7.0);
  CHECK(out.dx[0] == 2.0);
  CHECK(out.dx[1] == 0.0);
  CHECK(out.dt == 0.0);
}

TEST_CASE("network_eval equals network_forward value") {
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const Network net = random_rational_net(rng, 3, 12);
    const double t = rng.uniform(-1, 1), x = rng.uniform(-1, 1);
    const std::array<DJet, 2> in = {jet_seed(t, Var::T, 2),
                                    jet_seed(x, Var::X, 2)};
    const double scalar = eval_at(net, t, x);
    const DJet jet = network_forward(net, in);
    CHECK(std::abs(scalar - jet.val) <= 1e-12 * std::max(1.0, std::abs(scalar)));
  }
}

TEST_CASE("5x50 rational network: jet derivatives vs finite differences") {
  Rng rng(5050);
  Network net = make_network({2, 50, 50, 50, 50, 50, 1},
                             ActivationKind::Rational);
  init_weights(net, 99);
  for (int trial = 0; trial < 50; ++trial) {
    const double t = rng.uniform(0.1, 0.9), x = rng.uniform(0.1, 0.9);
    const std::array<DJet, 2> in = {jet_seed(t, Var::T, 3),
                                    jet_seed(x, Var::X, 3)};
    const DJet out = network_forward(net, in);
    auto fx = [&](double v) { return eval_at(net, t, v); };
    for (int order = 1; order <= 3; ++order) {
      CHECK(oracle::rel_err(out.dx[order - 1],
                            oracle::fd(fx, x, order, 1e-3), 1e-4) < 1e-4);
    }
    auto ft = [&](double v) { return eval_at(net, v, x); };
    CHECK(oracle::rel_err(out.dt, oracle::fd1(ft, t, 1e-5), 1e-4) < 1e-4);
  }
}

TEST_CASE("fixed activations propagate jets exactly") {
  for (ActivationKind kind : {ActivationKind::Tanh, ActivationKind::Sigmoid}) {
    Rng rng(kind == ActivationKind::Tanh ? 31 : 32);
    Network net = make_network({2, 10, 10, 1}, kind);
    init_weights(net, rng.next_u64());
    for (int trial = 0; trial < 20; ++trial) {
      const double t = rng.uniform(-1, 1), x = rng.uniform(-1, 1);
      const std::array<DJet, 2> in = {jet_seed(t, Var::T, 3),
                                      jet_seed(x, Var::X, 3)};
      const DJet out = network_forward(net, in);
      auto fx = [&](double v) { return eval_at(net, t, v); };
      for (int order = 1; order <= 3; ++order) {
        CHECK(oracle::rel_err(out.dx[order - 1],
                              oracle::fd_rich(fx, x, order, 1e-2), 1e-5) < 1e-5);
      }
      auto ft = [&](double v) { return eval_at(net, v, x); };
      CHECK(oracle::rel_err(out.dt, oracle::fd1(ft, t, 1e-5), 1e-5) < 1e-4);
    }
  }
}

TEST_CASE("identity activations make the network affine") {
  Network net = make_network({2, 8, 8, 1}, ActivationKind::Rational);
  init_weights(net, 4);
  // overwrite every activation with the identity coefficients
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < net.widths.size(); ++l) {
    off += static_cast<std::size_t>(net.widths[l]) * net.widths[l + 1] +
           net.widths[l + 1];
    if (l + 2 < net.widths.size()) {
      const double ident[7] = {0, 1, 0, 0, 1, 0, 0};
      for (int i = 0; i < 7; ++i) net.params[off + i] = ident[i];
      off += 7;
    }
  }
  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const std::array<DJet, 2> in = {
        jet_seed(rng.uniform(-1, 1), Var::T, 4),
        jet_seed(rng.uniform(-1, 1), Var::X, 4)};
    const DJet out = network_forward(net, in);
    CHECK(out.dx[1] == 0.0);
    CHECK(out.dx[2] == 0.0);
    CHECK(out.dx[3] == 0.0);
  }
}

TEST_CASE("init_weights: determinism, zero biases, centered weights") {
  Network a = make_network({2, 50, 50, 50, 50, 50, 1}, ActivationKind::Rational);
  Network b = make_network({2, 50, 50, 50, 50, 50, 1}, ActivationKind::Rational);
  init_weights(a, 123);
  init_weights(b, 123);
  CHECK(a.params == b.params);

  init_weights(b, 124);
  CHECK(a.params != b.params);

  // biases of the first layer are zero
  std::size_t off = static_cast<std::size_t>(2) * 50;
  for (int i = 0; i < 50; ++i) CHECK(a.params[off + i] == 0.0);

  double mean = 0.0;
  std::size_t n_weights = 0;
  std::size_t o = 0;
  for (std::size_t l = 0; l + 1 < a.widths.size(); ++l) {
    const std::size_t nw = static_cast<std::size_t>(a.widths[l]) * a.widths[l + 1];
    for (std::size_t i = 0; i < nw; ++i) mean += a.params[o + i];
    n_weights += nw;
    o += nw + a.widths[l + 1];
    if (l + 2 < a.widths.size()) o += 7;
  }
  mean /= static_cast<double>(n_weights);
  CHECK(mean > -0.01);
  CHECK(mean < 0.01);
}

TEST_CASE("checkpoint round-trip is bit-exact") {
  Rng rng(55);
  Network net = random_rational_net(rng, 3, 20);
  const std::string path = "test_net_checkpoint.json";
  save_network(net, path);
  const Network back = load_network(path);
  CHECK(back.widths == net.widths);
  CHECK(back.activation == net.activation);
  CHECK(back.seed == net.seed);
  REQUIRE(back.params.size() == net.params.size());
  for (std::size_t i = 0; i < net.params.size(); ++i) {
    CHECK(std::memcmp(&back.params[i], &net.params[i], sizeof(double)) == 0);
  }
  std::filesystem::remove(path);
}

TEST_CASE("loading a non-checkpoint file fails") {
  const std::string path = "test_not_a_checkpoint.json";
  {
    std::FILE* f = std::fopen(path.c_str(), "w");
    std::fputs("{\"whatever\": 1}", f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(load_network(path), FormatError);
  CHECK_THROWS_AS(load_network("no_such_file.json"), FormatError);
  std::filesystem::remove(path);
}
