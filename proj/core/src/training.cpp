#include "ddpd/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

namespace ddpd {

namespace {

void check_uniform(const Trajectory& traj) {
  if (traj.frames.size() < 2)
    throw InsufficientSnapshots("need at least 2 snapshots, have " +
                                std::to_string(traj.frames.size()));
  const int64_t d0 = traj.frames[1].step - traj.frames[0].step;
  for (std::size_t f = 1; f + 1 < traj.frames.size(); ++f)
    if (traj.frames[f + 1].step - traj.frames[f].step != d0)
      throw Error("trajectory snapshots are not uniformly spaced");
  if (!(traj.dt > 0.0)) throw Error("trajectory snapshot spacing dt is unset");
}

}  // namespace

double evaluate_nll(const Trajectory& traj, const ModelParams& model,
                    std::span<const int> transitions, double jitter) {
  const int dim = traj.dim;
  const int w = dim + 1;
  const auto bound = bind(model);
  double acc = 0.0;
  for (int t : transitions) {
    const ParticleSystem sys = to_system(traj.frames[t], dim);
    const PairSet pairs = build_pairs(sys, model.h);
    const std::vector<double> s_t = teacher_entropy(sys, pairs, bound);
    const auto dist = predict_distribution(
        sys, std::span<const double>(s_t), bound, traj.dt);

    const ParticleSystem nxt = to_system(traj.frames[t + 1], dim);
    const PairSet nxt_pairs = build_pairs(nxt, model.h);
    const std::vector<double> s_t1 = teacher_entropy(nxt, nxt_pairs, bound);
    std::vector<double> obs(static_cast<std::size_t>(traj.n) * w);
    for (int i = 0; i < traj.n; ++i) {
      for (int d = 0; d < dim; ++d)
        obs[static_cast<std::size_t>(i) * w + d] = nxt.vel(i)[d];
      obs[static_cast<std::size_t>(i) * w + dim] = s_t1[i];
    }
    acc += nll(dist, std::span<const double>(obs), jitter);
  }
  return acc / static_cast<double>(transitions.size());
}

TrainResult train(const Trajectory& traj, const ModelParams& init,
                  const TrainConfig& cfg, std::ostream* log) {
  check_uniform(traj);
  const int dim = traj.dim;
  const int w = dim + 1;
  const int n_trans = static_cast<int>(traj.frames.size()) - 1;

  std::vector<int> order(n_trans);
  for (int t = 0; t < n_trans; ++t) order[t] = t;
  std::mt19937_64 rng(cfg.seed);
  std::shuffle(order.begin(), order.end(), rng);
  const int n_train =
      std::max(1, static_cast<int>(cfg.split * n_trans + 0.5));
  std::vector<int> train_idx(order.begin(), order.begin() + n_train);
  std::vector<int> val_idx(order.begin() + n_train, order.end());
  if (val_idx.empty()) val_idx = train_idx;

  TrainResult res;
  res.model = init;
  std::vector<double> theta = flatten(res.model);
  Adam opt;
  opt.lr = cfg.lr;
  const std::size_t np = theta.size();

  res.best_val = evaluate_nll(traj, res.model, val_idx, cfg.jitter);
  ModelParams best = res.model;
  if (!std::isfinite(res.best_val))
    throw NonFiniteLoss("initial validation NLL is not finite");

  if (log)
    (*log) << "epoch,train_nll,val_nll,wall_seconds\n";
  const auto t_start = std::chrono::steady_clock::now();

  Tape tape;
  for (int epoch = 1; epoch <= cfg.epochs && !res.aborted_non_finite;
       ++epoch) {
    std::mt19937_64 erng(cfg.seed ^ (0x9E3779B97F4A7C15ULL * epoch));
    std::shuffle(train_idx.begin(), train_idx.end(), erng);
    double epoch_loss = 0.0;
    int used = 0;
    for (int t : train_idx) {
      tape.clear();
      const auto bound = bind(res.model, tape);

      const ParticleSystem sys = to_system(traj.frames[t], dim);
      const PairSet pairs = build_pairs(sys, res.model.h);
      const std::vector<Var> s_t = teacher_entropy(sys, pairs, bound);
      const auto dist = predict_distribution(sys, std::span<const Var>(s_t),
                                             bound, traj.dt);

      const ParticleSystem nxt = to_system(traj.frames[t + 1], dim);
      const PairSet nxt_pairs = build_pairs(nxt, res.model.h);
      const std::vector<Var> s_t1 = teacher_entropy(nxt, nxt_pairs, bound);
      std::vector<Var> obs;
      obs.reserve(static_cast<std::size_t>(traj.n) * w);
      for (int i = 0; i < traj.n; ++i) {
        for (int d = 0; d < dim; ++d)
          obs.push_back(make_leaf(tape, nxt.vel(i)[d]));
        obs.push_back(s_t1[i]);
      }
      const Var loss = nll(dist, std::span<const Var>(obs), cfg.jitter);
      if (!std::isfinite(loss.val())) {
        res.aborted_non_finite = true;
        break;
      }
      std::vector<double> grad = grad_params(tape, bound, loss);
      bool finite = true;
      for (double g : grad) finite &= std::isfinite(g);
      if (!finite) {
        res.aborted_non_finite = true;
        break;
      }
      if (!cfg.train_kb_m) {
        grad[np - 2] = 0.0;
        grad[np - 1] = 0.0;
      }
      opt.update(theta, grad);
      unflatten(res.model, theta);
      epoch_loss += loss.val();
      ++used;
    }
    if (used == 0) break;
    epoch_loss /= used;
    const double val = evaluate_nll(traj, res.model, val_idx, cfg.jitter);
    res.train_loss.push_back(epoch_loss);
    res.val_loss.push_back(val);
    if (std::isfinite(val) && val < res.best_val) {
      res.best_val = val;
      best = res.model;
    }
    if (log) {
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                        t_start)
              .count();
      (*log) << epoch << "," << epoch_loss << "," << val << "," << secs
             << "\n";
      log->flush();
    }
  }
  res.model = best;
  return res;
}

Trajectory rollout(const ParticleSystem& init, const ModelParams& model,
                   int n_snapshots, int steps_per_snapshot, double dt,
                   uint64_t seed, double blowup_bound) {
  ParticleSystem sys = init;
  const auto bound = bind(model);
  {
    const PairSet pairs = build_pairs(sys, model.h);
    sys.entropy = teacher_entropy(sys, pairs, bound);
  }
  Trajectory traj;
  traj.dim = sys.dim;
  traj.n = sys.n;
  traj.dt = dt * steps_per_snapshot;
  traj.frames.push_back(to_snapshot(sys, 0));
  uint64_t step_index = 0;
  for (int s = 1; s <= n_snapshots; ++s) {
    for (int k = 0; k < steps_per_snapshot; ++k)
      sys = step(sys, model, dt, seed, step_index++, blowup_bound).state;
    traj.frames.push_back(
        to_snapshot(sys, static_cast<int64_t>(step_index)));
  }
  return traj;
}

}  // namespace ddpd
