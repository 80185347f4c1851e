#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pdd/datasets.hpp"
#include "pdd/network.hpp"
#include "pdd/pde_library.hpp"
#include "pdd/tape.hpp"

namespace pdd {

struct TrainConfig {
  int n_coll = 10000;
  int n_select = 1;  // epochs between collocation re-selection
  int adam_epochs = 2000;
  double adam_lr = 1e-3;
  int lbfgs_epochs = 0;
  double lbfgs_lr = 0.1;
  int order = 2;  // M, the number of spatial derivatives fed to N
  std::uint64_t rng_seed = 0;
  int threads = 0;  // 0: PDD_THREADS env var, else hardware default
};

struct EpochRecord {
  int epoch = 0;
  double data_loss = 0.0;
  double coll_loss = 0.0;
  std::string phase;  // "adam" | "lbfgs"
  bool reselected = false;
  bool line_search_failed = false;
  double wall_seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int line_search_failures = 0;
};

inline std::vector<Coord> sample_collocation(const Rect& domain, int n,
                                             Rng& rng) {
  return sample_uniform(domain, n, rng);
}

// Mean squared mismatch between U and the samples, as a node on `tape`.
// `u_params` must have been allocated on that tape.
rev::Scalar data_loss(rev::Tape& tape, const Network& u_net,
                      std::span<const rev::Scalar> u_params,
                      const SampleSet& samples);

// Mean squared PDE residual |D_t U - N(U, D_x U, ..., D_x^M U)|^2 over the
// collocation points, with U's derivatives carried by jets on the same tape.
rev::Scalar collocation_loss(rev::Tape& tape, const Network& u_net,
                             std::span<const rev::Scalar> u_params,
                             const Network& n_net,
                             std::span<const rev::Scalar> n_params,
                             std::span<const Coord> points, int order);

struct AdamState {
  std::vector<double> m, v;
  std::int64_t t = 0;
};

// Standard Adam with bias correction; beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, double lr);

// Loss-and-gradient evaluator contract for L-BFGS: returns the loss at
// theta; fills grad when non-empty.
using LossGradFn =
    std::function<double(std::span<const double>, std::span<double>)>;

struct LbfgsState {
  int history = 10;
  std::vector<std::vector<double>> s, y;  // newest last
  std::vector<double> rho;
};

struct LbfgsOutcome {
  double loss_before = 0.0;
  double loss_after = 0.0;
  bool line_search_failed = false;
  int halvings = 0;
};

// Two-loop-recursion direction; step = lr * direction with backtracking
// halving (at most 20) enforcing decrease. On failure the parameters are
// left unchanged and the event is reported.
LbfgsOutcome lbfgs_step(std::vector<double>& params, const LossGradFn& fn,
                        LbfgsState& state, double lr);

// The training loop's evaluation path: full-batch (data, collocation) losses
// at `theta` = [U params | N params], summed over fixed shards whose
// reduction order does not depend on the thread count. Adds the total-loss
// gradient into `grad` unless it is empty.
std::pair<double, double> evaluate_loss(const Network& u_net,
                                        const Network& n_net,
                                        const SampleSet& samples,
                                        std::span<const Coord> collocation,
                                        int order,
                                        std::span<const double> theta,
                                        std::span<double> grad,
                                        int threads = 1);

// Full-batch two-network training: Adam phase then L-BFGS phase, collocation
// points re-drawn every n_select epochs. Both networks' parameters (weights,
// biases, and rational coefficients) are optimized jointly. The L-BFGS phase
// stops early when the relative loss decrease stays below 1e-8 for 5
// consecutive iterations or the line search fails twice in a row.
TrainHistory train(Network& u_net, Network& n_net, const SampleSet& samples,
                   const Rect& domain, const TrainConfig& cfg);

// Writes the newline-delimited JSON training log
// {epoch, data_loss, coll_loss, phase, reselected}.
void write_train_log(const TrainHistory& history, const std::string& path);

}  // namespace pdd
