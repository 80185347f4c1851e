#include "pdd/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <thread>

#include "pdd/errors.hpp"

namespace pdd {

namespace {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("PDD_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return static_cast<int>(std::clamp(hw, 1u, 8u));
}

// Squared data mismatch of one sample, on the worker tape.
rev::Scalar data_point_term(const Network& u_net,
                            std::span<const rev::Scalar> u_params,
                            const Sample& s) {
  const std::array<rev::Scalar, 2> in = {rev::Scalar(s.t), rev::Scalar(s.x)};
  const rev::Scalar out =
      network_eval<rev::Scalar>(u_net, u_params, std::span<const rev::Scalar>(in));
  const rev::Scalar diff = out - rev::Scalar(s.u);
  return diff * diff;
}

// Squared PDE residual of one collocation point, on the worker tape.
rev::Scalar coll_point_term(const Network& u_net,
                            std::span<const rev::Scalar> u_params,
                            const Network& n_net,
                            std::span<const rev::Scalar> n_params,
                            const Coord& p, int order) {
  const std::array<Jet<rev::Scalar>, 2> in = {
      jet_seed(rev::Scalar(p.t), Var::T, order),
      jet_seed(rev::Scalar(p.x), Var::X, order)};
  const Jet<rev::Scalar> out = network_forward<rev::Scalar>(
      u_net, u_params, std::span<const Jet<rev::Scalar>>(in));
  std::array<rev::Scalar, kMaxOrder + 1> n_in;
  n_in[0] = out.val;
  for (int m = 1; m <= order; ++m) n_in[m] = out.dx[m - 1];
  const rev::Scalar n_out = network_eval<rev::Scalar>(
      n_net, n_params, std::span<const rev::Scalar>(n_in.data(), order + 1));
  const rev::Scalar r = out.dt - n_out;
  return r * r;
}

// Scalar (tape-free) counterparts for value-only evaluations.
double data_point_value(const Network& u_net, std::span<const double> u_params,
                        const Sample& s) {
  const std::array<double, 2> in = {s.t, s.x};
  const double out = network_eval<double>(u_net, u_params, in);
  const double diff = out - s.u;
  return diff * diff;
}

double coll_point_value(const Network& u_net, std::span<const double> u_params,
                        const Network& n_net, std::span<const double> n_params,
                        const Coord& p, int order) {
  const std::array<DJet, 2> in = {jet_seed(p.t, Var::T, order),
                                  jet_seed(p.x, Var::X, order)};
  const DJet out = network_forward<double>(u_net, u_params, in);
  std::array<double, kMaxOrder + 1> n_in;
  n_in[0] = out.val;
  for (int m = 1; m <= order; ++m) n_in[m] = out.dx[m - 1];
  const double n_out = network_eval<double>(
      n_net, n_params, std::span<const double>(n_in.data(), order + 1));
  const double r = out.dt - n_out;
  return r * r;
}

// Full-batch loss and gradient over fixed shards of the data and collocation
// points. Shard partition and reduction order are independent of the thread
// count, so results are bit-identical for any number of workers.
class LossEvaluator {
 public:
  static constexpr int kShard = 256;

  LossEvaluator(const Network& u_net, const Network& n_net,
                const SampleSet& samples, int order, int threads)
      : u_net_(u_net),
        n_net_(n_net),
        samples_(samples),
        order_(order),
        threads_(threads) {}

  void set_collocation(std::vector<Coord> pts) { coll_ = std::move(pts); }
  const std::vector<Coord>& collocation() const { return coll_; }

  // Returns (data_loss, coll_loss); adds the total-loss gradient into `grad`
  // unless it is empty.
  std::pair<double, double> evaluate(std::span<const double> theta,
                                     std::span<double> grad) {
    const int n_data_shards =
        static_cast<int>((samples_.pts.size() + kShard - 1) / kShard);
    const int n_coll_shards =
        static_cast<int>((coll_.size() + kShard - 1) / kShard);
    const int n_shards = n_data_shards + n_coll_shards;
    const bool need_grad = !grad.empty();

    shard_data_.assign(n_shards, 0.0);
    shard_coll_.assign(n_shards, 0.0);
    shard_err_.assign(n_shards, nullptr);
    if (need_grad) {
      shard_grad_.resize(n_shards);
      for (auto& g : shard_grad_) g.assign(theta.size(), 0.0);
    }

    const double inv_data = 1.0 / static_cast<double>(samples_.pts.size());
    const double inv_coll =
        coll_.empty() ? 0.0 : 1.0 / static_cast<double>(coll_.size());

    const int workers = std::clamp(threads_, 1, std::max(n_shards, 1));
    auto run_worker = [&](int w) {
      rev::Tape tape;
      for (int shard = w; shard < n_shards; shard += workers) {
        try {
          run_shard(shard, n_data_shards, theta, need_grad, inv_data, inv_coll,
                    tape);
        } catch (...) {
          shard_err_[shard] = std::current_exception();
        }
      }
    };
    if (workers == 1) {
      run_worker(0);
    } else {
      std::vector<std::thread> pool;
      pool.reserve(workers);
      for (int w = 0; w < workers; ++w) pool.emplace_back(run_worker, w);
      for (auto& t : pool) t.join();
    }

    for (int s = 0; s < n_shards; ++s) {
      if (shard_err_[s]) std::rethrow_exception(shard_err_[s]);
    }

    double data_sum = 0.0, coll_sum = 0.0;
    for (int s = 0; s < n_shards; ++s) {
      data_sum += shard_data_[s];
      coll_sum += shard_coll_[s];
    }
    if (need_grad) {
      for (int s = 0; s < n_shards; ++s) {
        const std::vector<double>& g = shard_grad_[s];
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += g[i];
      }
    }
    return {data_sum * inv_data, coll_sum * inv_coll};
  }

 private:
  void run_shard(int shard, int n_data_shards, std::span<const double> theta,
                 bool need_grad, double inv_data, double inv_coll,
                 rev::Tape& tape) {
    const std::size_t pu = u_net_.params.size();
    const bool is_data = shard < n_data_shards;
    const std::size_t begin =
        static_cast<std::size_t>(is_data ? shard : shard - n_data_shards) *
        kShard;
    const std::size_t end =
        std::min(begin + kShard, is_data ? samples_.pts.size() : coll_.size());

    if (!need_grad) {
      std::span<const double> up = theta.subspan(0, pu);
      std::span<const double> np = theta.subspan(pu);
      double sum = 0.0;
      for (std::size_t i = begin; i < end; ++i) {
        sum += is_data ? data_point_value(u_net_, up, samples_.pts[i])
                       : coll_point_value(u_net_, up, n_net_, np, coll_[i],
                                          order_);
      }
      (is_data ? shard_data_[shard] : shard_coll_[shard]) = sum;
      return;
    }

    tape.reset();
    const std::vector<rev::Scalar> params = tape.alloc_params(theta);
    std::span<const rev::Scalar> up(params.data(), pu);
    std::span<const rev::Scalar> np(params.data() + pu, params.size() - pu);
    const rev::Tape::Mark base = tape.mark();
    std::vector<double>& grad = shard_grad_[shard];
    double sum = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      try {
        const rev::Scalar term =
            is_data ? data_point_term(u_net_, up, samples_.pts[i])
                    : coll_point_term(u_net_, up, n_net_, np, coll_[i], order_);
        sum += term.v;
        tape.accumulate_gradient(term, is_data ? inv_data : inv_coll, grad);
        tape.rewind(base);
      } catch (const PoleError& e) {
        char buf[160];
        const double t = is_data ? samples_.pts[i].t : coll_[i].t;
        const double x = is_data ? samples_.pts[i].x : coll_[i].x;
        std::snprintf(buf, sizeof(buf), "%s point %zu (t=%g, x=%g): %s",
                      is_data ? "data" : "collocation", i, t, x, e.what());
        throw TrainError(buf);
      }
    }
    (is_data ? shard_data_[shard] : shard_coll_[shard]) = sum;
  }

  const Network& u_net_;
  const Network& n_net_;
  const SampleSet& samples_;
  int order_;
  int threads_;
  std::vector<Coord> coll_;
  std::vector<double> shard_data_, shard_coll_;
  std::vector<std::vector<double>> shard_grad_;
  std::vector<std::exception_ptr> shard_err_;
};

}  // namespace

rev::Scalar data_loss(rev::Tape& tape, const Network& u_net,
                      std::span<const rev::Scalar> u_params,
                      const SampleSet& samples) {
  if (samples.pts.empty()) throw ConfigError("data_loss: no samples");
  assert(!u_params.empty() && u_params[0].tape == &tape);
  rev::Scalar sum(0.0);
  for (const Sample& s : samples.pts) {
    sum += data_point_term(u_net, u_params, s);
  }
  return sum * rev::Scalar(1.0 / static_cast<double>(samples.pts.size()));
}

rev::Scalar collocation_loss(rev::Tape& tape, const Network& u_net,
                             std::span<const rev::Scalar> u_params,
                             const Network& n_net,
                             std::span<const rev::Scalar> n_params,
                             std::span<const Coord> points, int order) {
  if (points.empty()) throw ConfigError("collocation_loss: no points");
  if (n_net.input_width() != order + 1) {
    throw ConfigError("collocation_loss: N input width must be M+1");
  }
  assert(!u_params.empty() && u_params[0].tape == &tape);
  rev::Scalar sum(0.0);
  for (const Coord& p : points) {
    sum += coll_point_term(u_net, u_params, n_net, n_params, p, order);
  }
  return sum * rev::Scalar(1.0 / static_cast<double>(points.size()));
}

std::pair<double, double> evaluate_loss(const Network& u_net,
                                        const Network& n_net,
                                        const SampleSet& samples,
                                        std::span<const Coord> collocation,
                                        int order,
                                        std::span<const double> theta,
                                        std::span<double> grad, int threads) {
  LossEvaluator eval(u_net, n_net, samples, order, resolve_threads(threads));
  eval.set_collocation({collocation.begin(), collocation.end()});
  return eval.evaluate(theta, grad);
}

void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, double lr) {
  assert(params.size() == grads.size());
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
    state.t = 0;
  }
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  state.t += 1;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grads[i];
    state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grads[i] * grads[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

LbfgsOutcome lbfgs_step(std::vector<double>& params, const LossGradFn& fn,
                        LbfgsState& state, double lr) {
  const std::size_t n = params.size();
  std::vector<double> g(n, 0.0);
  const double f0 = fn(params, g);

  // Two-loop recursion for the quasi-Newton direction.
  std::vector<double> q = g;
  const int m = static_cast<int>(state.s.size());
  std::vector<double> alpha(m, 0.0);
  for (int i = m - 1; i >= 0; --i) {
    double si_q = 0.0;
    for (std::size_t j = 0; j < n; ++j) si_q += state.s[i][j] * q[j];
    alpha[i] = state.rho[i] * si_q;
    for (std::size_t j = 0; j < n; ++j) q[j] -= alpha[i] * state.y[i][j];
  }
  double gamma = 1.0;
  if (m > 0) {
    double sy = 0.0, yy = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      sy += state.s[m - 1][j] * state.y[m - 1][j];
      yy += state.y[m - 1][j] * state.y[m - 1][j];
    }
    if (yy > 0.0) gamma = sy / yy;
  }
  for (std::size_t j = 0; j < n; ++j) q[j] *= gamma;
  for (int i = 0; i < m; ++i) {
    double yi_r = 0.0;
    for (std::size_t j = 0; j < n; ++j) yi_r += state.y[i][j] * q[j];
    const double beta = state.rho[i] * yi_r;
    for (std::size_t j = 0; j < n; ++j) q[j] += (alpha[i] - beta) * state.s[i][j];
  }
  // Direction is -q; backtracking halving enforcing plain decrease.
  std::vector<double> trial(n);
  double step = lr;
  LbfgsOutcome out;
  out.loss_before = f0;
  bool accepted = false;
  double f_trial = f0;
  for (int h = 0; h <= 20; ++h) {
    for (std::size_t j = 0; j < n; ++j) trial[j] = params[j] - step * q[j];
    f_trial = fn(trial, {});
    if (f_trial < f0) {
      accepted = true;
      out.halvings = h;
      break;
    }
    step *= 0.5;
  }
  if (!accepted) {
    out.loss_after = f0;
    out.line_search_failed = true;
    return out;
  }

  std::vector<double> g_new(n, 0.0);
  const double f_new = fn(trial, g_new);
  std::vector<double> s_vec(n), y_vec(n);
  double sy = 0.0, ss = 0.0, yy2 = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    s_vec[j] = trial[j] - params[j];
    y_vec[j] = g_new[j] - g[j];
    sy += s_vec[j] * y_vec[j];
    ss += s_vec[j] * s_vec[j];
    yy2 += y_vec[j] * y_vec[j];
  }
  params = trial;
  if (sy > 1e-10 * std::sqrt(ss * yy2)) {  // curvature guard
    state.s.push_back(std::move(s_vec));
    state.y.push_back(std::move(y_vec));
    state.rho.push_back(1.0 / sy);
    if (static_cast<int>(state.s.size()) > state.history) {
      state.s.erase(state.s.begin());
      state.y.erase(state.y.begin());
      state.rho.erase(state.rho.begin());
    }
  }
  out.loss_after = f_new;
  return out;
}

TrainHistory train(Network& u_net, Network& n_net, const SampleSet& samples,
                   const Rect& domain, const TrainConfig& cfg) {
  if (cfg.order < 1 || cfg.order > kMaxOrder) {
    throw ConfigError("train: derivative order must be in [1, 4]");
  }
  if (cfg.n_coll < 1 || cfg.n_select < 1) {
    throw ConfigError("train: n_coll and n_select must be >= 1");
  }
  if (samples.pts.empty()) throw ConfigError("train: no data samples");
  if (u_net.input_width() != 2 || u_net.output_width() != 1) {
    throw ConfigError("train: U must map (t, x) to one output");
  }
  if (n_net.input_width() != cfg.order + 1 || n_net.output_width() != 1) {
    throw ConfigError("train: N input width must be M+1");
  }

  std::vector<double> theta(u_net.params.size() + n_net.params.size());
  std::copy(u_net.params.begin(), u_net.params.end(), theta.begin());
  std::copy(n_net.params.begin(), n_net.params.end(),
            theta.begin() + u_net.params.size());

  Rng coll_rng(cfg.rng_seed);
  LossEvaluator eval(u_net, n_net, samples, cfg.order,
                     resolve_threads(cfg.threads));

  TrainHistory history;
  std::vector<double> grad(theta.size(), 0.0);
  AdamState adam;
  int epoch = 0;

  auto reselect_if_due = [&]() {
    const bool due = epoch % cfg.n_select == 0;
    if (due) {
      eval.set_collocation(sample_collocation(domain, cfg.n_coll, coll_rng));
    }
    return due;
  };
  auto wrap_eval = [&](std::span<const double> th, std::span<double> g)
      -> std::pair<double, double> {
    try {
      return eval.evaluate(th, g);
    } catch (const TrainError& e) {
      throw TrainError("epoch " + std::to_string(epoch) + ", " + e.what());
    }
  };

  for (int i = 0; i < cfg.adam_epochs; ++i) {
    const auto start = std::chrono::steady_clock::now();
    const bool resel = reselect_if_due();
    std::fill(grad.begin(), grad.end(), 0.0);
    const auto [dl, cl] = wrap_eval(theta, grad);
    adam_step(theta, grad, adam, cfg.adam_lr);
    const std::chrono::duration<double> dt =
        std::chrono::steady_clock::now() - start;
    history.epochs.push_back(
        EpochRecord{epoch, dl, cl, "adam", resel, false, dt.count()});
    ++epoch;
  }

  LbfgsState lbfgs;
  int small_decreases = 0;
  int consecutive_failures = 0;
  for (int i = 0; i < cfg.lbfgs_epochs; ++i) {
    const auto start = std::chrono::steady_clock::now();
    const bool resel = reselect_if_due();
    std::optional<std::pair<double, double>> first_split;
    LossGradFn fn = [&](std::span<const double> th, std::span<double> g) {
      const auto parts = wrap_eval(th, g);
      if (!first_split) first_split = parts;
      return parts.first + parts.second;
    };
    const LbfgsOutcome out = lbfgs_step(theta, fn, lbfgs, cfg.lbfgs_lr);
    const std::chrono::duration<double> dt =
        std::chrono::steady_clock::now() - start;
    history.epochs.push_back(EpochRecord{epoch, first_split->first,
                                         first_split->second, "lbfgs", resel,
                                         out.line_search_failed, dt.count()});
    ++epoch;

    if (out.line_search_failed) {
      ++history.line_search_failures;
      if (++consecutive_failures >= 2) break;
      continue;
    }
    consecutive_failures = 0;
    const double rel_dec = (out.loss_before - out.loss_after) /
                           std::max(std::abs(out.loss_before), 1e-300);
    small_decreases = rel_dec < 1e-8 ? small_decreases + 1 : 0;
    if (small_decreases >= 5) break;
  }

  std::copy(theta.begin(), theta.begin() + u_net.params.size(),
            u_net.params.begin());
  std::copy(theta.begin() + u_net.params.size(), theta.end(),
            n_net.params.begin());
  return history;
}

void write_train_log(const TrainHistory& history, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("write_train_log: cannot open " + path);
  for (const EpochRecord& r : history.epochs) {
    nlohmann::json j;
    j["epoch"] = r.epoch;
    j["data_loss"] = r.data_loss;
    j["coll_loss"] = r.coll_loss;
    j["phase"] = r.phase;
    j["reselected"] = r.reselected;
    out << j.dump() << "\n";
  }
}

}  // namespace pdd
