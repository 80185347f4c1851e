#include "pdd/network.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>

#include "pdd/errors.hpp"
#include "pdd/rng.hpp"

namespace pdd {

std::string to_string(ActivationKind k) {
  switch (k) {
    case ActivationKind::Rational: return "rational";
    case ActivationKind::Tanh: return "tanh";
    case ActivationKind::Sigmoid: return "sigmoid";
  }
  return "rational";
}

ActivationKind activation_from_string(const std::string& s) {
  if (s == "rational") return ActivationKind::Rational;
  if (s == "tanh") return ActivationKind::Tanh;
  if (s == "sigmoid") return ActivationKind::Sigmoid;
  throw ConfigError("unknown activation kind: " + s);
}

std::size_t parameter_count(std::span<const int> widths, bool rational) {
  if (widths.size() < 2) {
    throw ConfigError("parameter_count: need at least two widths");
  }
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    total += static_cast<std::size_t>(widths[l]) * widths[l + 1] + widths[l + 1];
  }
  if (rational) total += 7 * (widths.size() - 2);
  return total;
}

Network make_network(std::vector<int> widths, ActivationKind kind) {
  for (int w : widths) {
    if (w < 1) throw ConfigError("make_network: widths must be positive");
  }
  Network net;
  net.widths = std::move(widths);
  net.activation = kind;
  net.params.assign(
      parameter_count(net.widths, kind == ActivationKind::Rational), 0.0);
  if (kind == ActivationKind::Rational) {
    // Rational coefficient slots get the ReLU-fit defaults immediately so a
    // freshly made network is evaluable even before init_weights.
    const RationalActivation& act = relu_rational_init();
    const int n_layers = static_cast<int>(net.widths.size()) - 1;
    std::size_t off = 0;
    for (int l = 0; l < n_layers; ++l) {
      off += static_cast<std::size_t>(net.widths[l]) * net.widths[l + 1] +
             net.widths[l + 1];
      if (l < n_layers - 1) {
        for (int i = 0; i < 4; ++i) net.params[off + i] = act.num[i];
        for (int i = 0; i < 3; ++i) net.params[off + 4 + i] = act.den[i];
        off += 7;
      }
    }
  }
  return net;
}

void init_weights(Network& net, std::uint64_t seed) {
  Rng rng(seed);
  const int n_layers = static_cast<int>(net.widths.size()) - 1;
  std::size_t off = 0;
  for (int l = 0; l < n_layers; ++l) {
    const int fan_in = net.widths[l];
    const int fan_out = net.widths[l + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (int i = 0; i < fan_in * fan_out; ++i) {
      net.params[off + i] = rng.uniform(-bound, bound);
    }
    off += static_cast<std::size_t>(fan_in) * fan_out;
    for (int i = 0; i < fan_out; ++i) net.params[off + i] = 0.0;
    off += fan_out;
    if (l < n_layers - 1 && net.activation == ActivationKind::Rational) {
      const RationalActivation& act = relu_rational_init();
      for (int i = 0; i < 4; ++i) net.params[off + i] = act.num[i];
      for (int i = 0; i < 3; ++i) net.params[off + 4 + i] = act.den[i];
      off += 7;
    }
  }
  net.seed = seed;
}

void save_network(const Network& net, const std::string& path) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["widths"] = net.widths;
  j["activation"] = to_string(net.activation);
  j["params"] = net.params;
  j["seed"] = net.seed;
  std::ofstream out(path);
  if (!out) throw FormatError("save_network: cannot open " + path);
  out << j.dump(2) << "\n";
}

Network load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("load_network: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("load_network: bad JSON: ") + e.what());
  }
  if (!j.contains("format_version") || j["format_version"].get<int>() != 1) {
    throw FormatError("load_network: unsupported format_version");
  }
  Network net;
  net.widths = j.at("widths").get<std::vector<int>>();
  net.activation = activation_from_string(j.at("activation").get<std::string>());
  net.params = j.at("params").get<std::vector<double>>();
  net.seed = j.at("seed").get<std::uint64_t>();
  const std::size_t expect = parameter_count(
      net.widths, net.activation == ActivationKind::Rational);
  if (net.params.size() != expect) {
    throw FormatError("load_network: parameter count mismatch");
  }
  return net;
}

}  // namespace pdd
