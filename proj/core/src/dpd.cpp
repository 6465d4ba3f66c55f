#include "ddpd/dpd.hpp"

#include <algorithm>
#include <cmath>

#include "ddpd/linalg.hpp"
#include "ddpd/noise.hpp"
#include "ddpd/tape.hpp"
#include "ddpd/training.hpp"

namespace ddpd {

ParticleSystem dpd_step(const ParticleSystem& sys, const DpdParams& params,
                        double dt, uint64_t seed, uint64_t step_index,
                        double blowup_bound) {
  const int dim = sys.dim;
  const PairSet pairs = build_pairs(sys, params.h);
  const double gamma = params.gamma();
  const double sqdt = std::sqrt(dt);

  std::vector<double> dv(static_cast<std::size_t>(sys.n) * dim, 0.0);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [i, j] = pairs.pairs[p];
    const double* e = pairs.e_of(p);
    const double w = 1.0 - pairs.dist[p] / params.h;
    double ev = 0.0;
    for (int d = 0; d < dim; ++d)
      ev += e[d] * (sys.vel(i)[d] - sys.vel(j)[d]);
    CounterRng rng(seed, step_index, static_cast<uint64_t>(i),
                   static_cast<uint64_t>(j));
    const double xi = rng.normal();
    const double impulse =
        (params.alpha * w - gamma * w * w * ev) * dt +
        params.sigma * w * xi * sqdt;
    for (int d = 0; d < dim; ++d) {
      dv[static_cast<std::size_t>(i) * dim + d] += impulse * e[d];
      dv[static_cast<std::size_t>(j) * dim + d] -= impulse * e[d];
    }
  }

  ParticleSystem out = sys;
  for (int i = 0; i < sys.n; ++i)
    for (int d = 0; d < dim; ++d) {
      const std::size_t k = static_cast<std::size_t>(i) * dim + d;
      out.v[k] = sys.v[k] + dv[k] / params.mass;
      if (!(std::fabs(out.v[k]) < blowup_bound))
        throw TrajectoryBlowup("dpd_step: |v| exceeded " +
                               std::to_string(blowup_bound));
      out.r[k] = sys.r[k] + out.v[k] * dt;
    }
  wrap_and_advect_boundary(out, dt);
  out.time = sys.time + dt;
  return out;
}

namespace {

// NLL of one transition as a tape expression over the four log parameters.
// Mean and covariance of the per-particle velocity increment:
//   mu_i    = v_i + [alpha sum w e - gamma sum w^2 (e.v) e] dt / m
//   Sigma_i = (sigma^2 dt / m^2) sum w^2 e e^T
template <class S>
S dpd_transition_nll(const Snapshot& a, const Snapshot& b, int dim, double dt,
                     double h, const S& log_alpha, const S& log_sigma,
                     const S& log_m, const S& log_kbt, double jitter) {
  const ParticleSystem sys = to_system(a, dim);
  const PairSet pairs = build_pairs(sys, h);
  const int n = sys.n;

  const S alpha = exp(log_alpha);
  const S sigma2 = exp(2.0 * log_sigma);
  const S inv_m = exp(-log_m);
  const S gamma = 0.5 * sigma2 * exp(-log_kbt);
  const S zero = 0.0 * log_alpha;

  std::vector<S> mu(static_cast<std::size_t>(n) * dim, zero);
  std::vector<S> cov(static_cast<std::size_t>(n) * dim * dim, zero);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [i, j] = pairs.pairs[p];
    const double* e = pairs.e_of(p);
    const double w = 1.0 - pairs.dist[p] / h;
    double ev = 0.0;
    for (int d = 0; d < dim; ++d)
      ev += e[d] * (sys.vel(i)[d] - sys.vel(j)[d]);
    const S f = (alpha * w - gamma * (w * w * ev)) * dt;
    const S c = sigma2 * (w * w * dt);
    for (int d = 0; d < dim; ++d) {
      mu[static_cast<std::size_t>(i) * dim + d] += f * e[d];
      mu[static_cast<std::size_t>(j) * dim + d] -= f * e[d];
    }
    for (int p1 = 0; p1 < dim; ++p1)
      for (int p2 = 0; p2 < dim; ++p2) {
        const double ee = e[p1] * e[p2];
        cov[(static_cast<std::size_t>(i) * dim + p1) * dim + p2] += c * ee;
        cov[(static_cast<std::size_t>(j) * dim + p1) * dim + p2] += c * ee;
      }
  }

  S acc = zero;
  std::vector<S> chol(static_cast<std::size_t>(dim) * dim, zero);
  std::vector<S> resid(dim, zero);
  for (int i = 0; i < n; ++i) {
    for (int p1 = 0; p1 < dim; ++p1) {
      const std::size_t k = static_cast<std::size_t>(i) * dim + p1;
      resid[p1] = b.v[k] - (sys.v[k] + mu[k] * inv_m);
      for (int p2 = 0; p2 < dim; ++p2)
        chol[p1 * dim + p2] = cov[k * dim + p2] * (inv_m * inv_m) +
                              (p1 == p2 ? jitter : 0.0);
    }
    cholesky(chol, dim);
    const S logdet = cholesky_logdet(chol, dim);
    const std::vector<S> y = cholesky_solve(chol, dim, resid);
    S quad = resid[0] * y[0];
    for (int d = 1; d < dim; ++d) quad += resid[d] * y[d];
    acc += 0.5 * logdet + 0.5 * quad;
  }
  return acc / static_cast<double>(n);
}

}  // namespace

double dpd_nll(const Trajectory& traj, const DpdParams& params,
               std::span<const int> transitions, double jitter) {
  const double la = std::log(params.alpha), ls = std::log(params.sigma);
  const double lm = std::log(params.mass), lk = std::log(params.kbt);
  double acc = 0.0;
  for (int t : transitions)
    acc += dpd_transition_nll(traj.frames[t], traj.frames[t + 1], traj.dim,
                              traj.dt, params.h, la, ls, lm, lk, jitter);
  return acc / static_cast<double>(transitions.size());
}

DpdCalibResult dpd_calibrate(const Trajectory& traj, const DpdParams& init,
                             const DpdCalibConfig& cfg, std::ostream* log) {
  if (traj.frames.size() < 2)
    throw InsufficientSnapshots("dpd_calibrate needs at least 2 snapshots");
  if (!(traj.dt > 0.0)) throw Error("trajectory snapshot spacing dt is unset");
  const int n_trans = static_cast<int>(traj.frames.size()) - 1;

  DpdCalibResult res;
  res.params = init;
  std::vector<double> theta{std::log(init.alpha), std::log(init.sigma),
                            std::log(init.mass), std::log(init.kbt)};
  const double gauge0 = theta[0] + theta[1] + theta[2] + theta[3];
  const bool pin = cfg.pin_scale_gauge && cfg.train_mass;
  Adam opt;
  opt.lr = cfg.lr;

  // Full-batch steps: the scale direction (alpha, sigma, m, kBT) -> lambda *
  // (...) leaves the likelihood invariant, so its gradient vanishes batch-wide
  // and the optimizer never wanders along it.
  Tape tape;
  if (log) (*log) << "epoch,train_nll\n";
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    opt.lr = cfg.lr * std::pow(cfg.lr_decay, epoch - 1);
    double epoch_loss = 0.0;
    std::vector<double> grad(4, 0.0);
    bool finite = true;
    for (int t = 0; t < n_trans; ++t) {
      tape.clear();
      Var la = make_leaf(tape, theta[0]);
      Var ls = make_leaf(tape, theta[1]);
      Var lm = make_leaf(tape, theta[2]);
      Var lk = make_leaf(tape, theta[3]);
      const Var loss =
          dpd_transition_nll(traj.frames[t], traj.frames[t + 1], traj.dim,
                             traj.dt, init.h, la, ls, lm, lk, cfg.jitter);
      finite &= std::isfinite(loss.val());
      if (!finite) break;
      tape.backward(loss.idx);
      grad[0] += tape.adjoint(la.idx);
      grad[1] += tape.adjoint(ls.idx);
      grad[2] += tape.adjoint(lm.idx);
      grad[3] += tape.adjoint(lk.idx);
      epoch_loss += loss.val();
    }
    for (double g : grad) finite &= std::isfinite(g);
    if (!finite) {
      res.aborted_non_finite = true;
      break;
    }
    for (double& g : grad) g /= n_trans;
    if (pin) {
      const double proj = 0.25 * (grad[0] + grad[1] + grad[2] + grad[3]);
      for (double& g : grad) g -= proj;
    }
    if (!cfg.train_mass) grad[2] = 0.0;
    opt.update(theta, grad);
    if (pin) {
      // The per-coordinate normalization can still push along the flat scale
      // direction; re-center it exactly.
      const double shift =
          0.25 * (theta[0] + theta[1] + theta[2] + theta[3] - gauge0);
      for (double& th : theta) th -= shift;
    }
    epoch_loss /= n_trans;
    res.loss.push_back(epoch_loss);
    if (log) {
      (*log) << epoch << "," << epoch_loss << "\n";
      log->flush();
    }
  }
  res.params.alpha = std::exp(theta[0]);
  res.params.sigma = std::exp(theta[1]);
  res.params.mass = std::exp(theta[2]);
  res.params.kbt = std::exp(theta[3]);
  return res;
}

}  // namespace ddpd
