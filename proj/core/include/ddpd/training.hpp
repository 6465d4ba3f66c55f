#pragma once

#include <ostream>

#include "ddpd/dynamics.hpp"
#include "ddpd/linalg.hpp"
#include "ddpd/marginals.hpp"
#include "ddpd/trajectory.hpp"

namespace ddpd {

// Self-supervised entropy labels: mean edge contribution over the
// neighborhood. A particle with no neighbors falls back to the network
// evaluated at the sentinel edge (r/h=1, v=0).
template <class S>
std::vector<S> teacher_entropy(const ParticleSystem& sys, const PairSet& pairs,
                               const BoundModel<S>& model) {
  const int dim = sys.dim;
  const double h = model.src->h;
  const S zero = scalar_const(model, 0.0);
  std::vector<S> acc(sys.n, zero);
  std::vector<int> count(sys.n, 0);
  std::vector<S> x;
  x.reserve(1 + dim);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [i, j] = pairs.pairs[p];
    for (int orient = 0; orient < 2; ++orient) {
      const int self = orient == 0 ? i : j;
      const int other = orient == 0 ? j : i;
      x.clear();
      x.push_back(const_like(zero, pairs.dist[p] / h));
      for (int d = 0; d < dim; ++d)
        x.push_back(const_like(zero, sys.vel(self)[d] - sys.vel(other)[d]));
      acc[self] += mlp_apply_scalar(*model.teacher.spec, model.teacher.w.data(),
                                    std::span<const S>(x));
      ++count[self];
    }
  }
  for (int i = 0; i < sys.n; ++i) {
    if (count[i] == 0) {
      x.clear();
      x.push_back(const_like(zero, 1.0));
      for (int d = 0; d < dim; ++d) x.push_back(zero);
      acc[i] = mlp_apply_scalar(*model.teacher.spec, model.teacher.w.data(),
                                std::span<const S>(x));
    } else {
      acc[i] = acc[i] / static_cast<double>(count[i]);
    }
  }
  return acc;
}

// Per-particle Gaussian transition parameters for the (v, S) increment:
// mean from the deterministic drift, covariance from the closed-form
// fluctuation marginals.
template <class S>
struct StepDistribution {
  int dim = 3;
  std::vector<S> mu;     // n * (dim+1)
  std::vector<S> sigma;  // n * (dim+1)^2, before jitter
};

template <class S>
StepDistribution<S> predict_distribution(const ParticleSystem& sys,
                                         std::span<const S> entropy,
                                         const BoundModel<S>& model,
                                         double dt) {
  const int dim = sys.dim;
  const int w = dim + 1;
  const PairSet pairs = build_pairs(sys, model.src->h);
  const Thermo<S> thermo = compute_thermo(sys, pairs, entropy, model);
  const PairCoeffs<S> coeffs = compute_coefficients(
      pairs, std::span<const S>(thermo.energy.temperature), model);
  const std::vector<S> force = conservative_force(pairs, thermo, model);
  const DriftResult<S> drift =
      compute_drift(pairs, coeffs, thermo, sys, model);
  const S inv_m = 1.0 / exp(model.log_m);

  StepDistribution<S> out;
  out.dim = dim;
  out.mu.reserve(static_cast<std::size_t>(sys.n) * w);
  for (int i = 0; i < sys.n; ++i) {
    for (int d = 0; d < dim; ++d) {
      const std::size_t k = static_cast<std::size_t>(i) * dim + d;
      out.mu.push_back(sys.vel(i)[d] +
                       (force[k] * inv_m + drift.dv_diss[k] + drift.dv_div[k]) *
                           dt);
    }
    out.mu.push_back(entropy[i] + (drift.ds_diss[i] + drift.ds_div[i]) * dt);
  }
  out.sigma = marginal_covariance(pairs, coeffs, thermo, sys, model, dt);
  return out;
}

// Negative log likelihood (no 2 pi constant): mean over particles of
// (1/2) ln|Sigma| + (1/2) r^T Sigma^-1 r with jitter added before Cholesky.
template <class S, class X>
S nll(const StepDistribution<S>& dist, std::span<const X> observed,
      double jitter = 1e-8) {
  const int w = dist.dim + 1;
  const int n = static_cast<int>(dist.mu.size()) / w;
  S acc = const_like(dist.mu[0], 0.0);
  std::vector<S> chol(static_cast<std::size_t>(w) * w, acc);
  std::vector<S> resid(w, acc);
  for (int i = 0; i < n; ++i) {
    const S* mu = dist.mu.data() + static_cast<std::size_t>(i) * w;
    const S* sig = dist.sigma.data() + static_cast<std::size_t>(i) * w * w;
    for (int a = 0; a < w; ++a) {
      resid[a] = observed[static_cast<std::size_t>(i) * w + a] - mu[a];
      for (int b = 0; b < w; ++b)
        chol[a * w + b] = sig[a * w + b] + (a == b ? jitter : 0.0);
    }
    cholesky(chol, w);
    const S logdet = cholesky_logdet(chol, w);
    const std::vector<S> y = cholesky_solve(chol, w, resid);
    S quad = resid[0] * y[0];
    for (int a = 1; a < w; ++a) quad += resid[a] * y[a];
    acc += 0.5 * logdet + 0.5 * quad;
  }
  return acc / static_cast<double>(n);
}

struct Adam {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::vector<double> m1, m2;
  int64_t t = 0;

  void update(std::vector<double>& theta, std::span<const double> grad) {
    if (m1.empty()) {
      m1.assign(theta.size(), 0.0);
      m2.assign(theta.size(), 0.0);
    }
    ++t;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t k = 0; k < theta.size(); ++k) {
      m1[k] = beta1 * m1[k] + (1.0 - beta1) * grad[k];
      m2[k] = beta2 * m2[k] + (1.0 - beta2) * grad[k] * grad[k];
      theta[k] -= lr * (m1[k] / c1) / (std::sqrt(m2[k] / c2) + eps);
    }
  }
};

struct TrainConfig {
  double lr = 1e-3;
  int epochs = 50;
  double split = 0.75;  // train fraction; the rest validates
  uint64_t seed = 0;
  double jitter = 1e-8;
  bool train_kb_m = true;
};

struct TrainResult {
  ModelParams model;  // best-validation parameters
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  double best_val = 0.0;
  bool aborted_non_finite = false;
};

// Maximum-likelihood fit over transition pairs: per epoch, shuffled
// minibatches of one transition each; the teacher provides entropy labels at
// both ends of every transition and trains through both paths.
TrainResult train(const Trajectory& traj, const ModelParams& init,
                  const TrainConfig& cfg, std::ostream* log = nullptr);

// Validation-style NLL of a parameter set on a list of transitions.
double evaluate_nll(const Trajectory& traj, const ModelParams& model,
                    std::span<const int> transitions, double jitter = 1e-8);

// Entropy is initialized once by the teacher, then evolved by the dynamics;
// the teacher is never consulted again.
Trajectory rollout(const ParticleSystem& init, const ModelParams& model,
                   int n_snapshots, int steps_per_snapshot, double dt,
                   uint64_t seed, double blowup_bound = 1e6);

}  // namespace ddpd
