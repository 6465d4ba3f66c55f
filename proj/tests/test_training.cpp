#include <doctest.h>

#include <cmath>
#include <numeric>

#include "ddpd/training.hpp"
#include "test_util.hpp"

using namespace ddpd;

namespace {

ModelParams random_model(int dim, uint64_t seed, int hidden = 6,
                         double h = 0.3) {
  ModelParams m = make_model(dim, false, h, hidden);
  randomize_model(m, seed);
  return m;
}

// O(N^2) reference implementation of the teacher labels.
std::vector<double> teacher_brute(const ParticleSystem& sys,
                                  const ModelParams& model) {
  std::vector<double> out(sys.n, 0.0);
  for (int i = 0; i < sys.n; ++i) {
    double acc = 0.0;
    int count = 0;
    for (int j = 0; j < sys.n; ++j) {
      if (j == i) continue;
      std::array<double, 3> d{0, 0, 0};
      for (int k = 0; k < sys.dim; ++k) d[k] = sys.pos(i)[k] - sys.pos(j)[k];
      minimum_image(std::span<double>(d.data(), sys.dim), sys.box);
      double r2 = 0;
      for (int k = 0; k < sys.dim; ++k) r2 += d[k] * d[k];
      if (r2 >= model.h * model.h) continue;
      std::vector<double> x{std::sqrt(r2) / model.h};
      for (int k = 0; k < sys.dim; ++k)
        x.push_back(sys.vel(i)[k] - sys.vel(j)[k]);
      acc += mlp_eval_scalar(model.teacher, x);
      ++count;
    }
    if (count == 0) {
      std::vector<double> x{1.0};
      for (int k = 0; k < sys.dim; ++k) x.push_back(0.0);
      out[i] = mlp_eval_scalar(model.teacher, x);
    } else {
      out[i] = acc / count;
    }
  }
  return out;
}

Trajectory generate_toy(const ModelParams& model, int n, int frames,
                        uint64_t seed, double dt = 5e-4, double vmax = 0.4) {
  ParticleSystem init = testutil::random_gas(n, model.dim, 1.0, seed, vmax);
  return rollout(init, model, frames - 1, 1, dt, seed ^ 0xabc);
}

}  // namespace

TEST_CASE("teacher matches the O(N^2) oracle and is translation invariant") {
  ModelParams model = random_model(3, 3);
  ParticleSystem sys = testutil::random_gas(40, 3, 1.0, 5);
  const auto bound = bind(model);
  const PairSet pairs = build_pairs(sys, model.h);
  const auto s = teacher_entropy(sys, pairs, bound);
  const auto ref = teacher_brute(sys, model);
  REQUIRE(s.size() == ref.size());
  for (int i = 0; i < sys.n; ++i)
    CHECK(testutil::rel_err(s[i], ref[i]) < 1e-12);

  ParticleSystem moved = sys;
  for (int i = 0; i < sys.n; ++i)
    for (int d = 0; d < 3; ++d) moved.pos(i)[d] += 0.234;
  wrap_and_advect_boundary(moved, 0.0);
  const auto s2 =
      teacher_entropy(moved, build_pairs(moved, model.h), bound);
  for (int i = 0; i < sys.n; ++i)
    CHECK(testutil::rel_err(s[i], s2[i]) < 1e-12);
}

TEST_CASE("teacher is permutation equivariant; equal velocities use distance only") {
  ModelParams model = random_model(3, 7);
  ParticleSystem sys = testutil::random_gas(20, 3, 1.0, 9);
  const auto bound = bind(model);
  const auto s = teacher_entropy(sys, build_pairs(sys, model.h), bound);

  // Relabel particles by a rotation of indices.
  ParticleSystem perm = sys;
  const int n = sys.n;
  for (int i = 0; i < n; ++i) {
    const int src = (i + 7) % n;
    for (int d = 0; d < 3; ++d) {
      perm.pos(i)[d] = sys.pos(src)[d];
      perm.vel(i)[d] = sys.vel(src)[d];
    }
  }
  const auto sp = teacher_entropy(perm, build_pairs(perm, model.h), bound);
  for (int i = 0; i < n; ++i)
    CHECK(testutil::rel_err(sp[i], s[(i + 7) % n]) < 1e-12);

  // All velocities equal: labels depend on local distances only.
  ParticleSystem still = sys;
  for (int i = 0; i < n; ++i)
    for (int d = 0; d < 3; ++d) still.vel(i)[d] = 0.37;
  const auto ss = teacher_entropy(still, build_pairs(still, model.h), bound);
  ParticleSystem still2 = still;
  for (int i = 0; i < n; ++i)
    for (int d = 0; d < 3; ++d) still2.vel(i)[d] = -1.2;
  const auto ss2 =
      teacher_entropy(still2, build_pairs(still2, model.h), bound);
  for (int i = 0; i < n; ++i) CHECK(ss[i] == ss2[i]);
}

TEST_CASE("isolated particle gets the sentinel teacher value") {
  ModelParams model = random_model(3, 11);
  Box box;
  box.dim = 3;
  box.lengths = {10, 10, 10};
  ParticleSystem sys = make_system(1, 3, box);
  sys.pos(0)[0] = 5;
  const auto s =
      teacher_entropy(sys, build_pairs(sys, model.h), bind(model));
  std::vector<double> x{1.0, 0.0, 0.0, 0.0};
  CHECK(s[0] == doctest::Approx(mlp_eval_scalar(model.teacher, x)));
}

TEST_CASE("nll hand values and dense-inverse oracle") {
  const int dim = 3, w = 4;
  StepDistribution<double> dist;
  dist.dim = dim;
  dist.mu = {0.1, -0.2, 0.3, 0.05};
  dist.sigma.assign(w * w, 0.0);
  for (int a = 0; a < w; ++a) dist.sigma[a * w + a] = 1.0;
  std::vector<double> obs = dist.mu;
  CHECK(std::fabs(nll(dist, std::span<const double>(obs), 0.0)) < 1e-14);

  for (int a = 0; a < w; ++a)
    dist.sigma[a * w + a] = std::exp(2.0);
  CHECK(nll(dist, std::span<const double>(obs), 0.0) ==
        doctest::Approx(static_cast<double>(dim + 1)).epsilon(1e-12));

  // Random SPD sigma and offset observation vs explicit inverse.
  auto rng = testutil::make_rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(w * w);
    for (auto& x : a) x = testutil::urand(rng, -1, 1);
    std::vector<double> sig(w * w, 0.0);
    for (int p = 0; p < w; ++p)
      for (int q = 0; q < w; ++q) {
        for (int k = 0; k < w; ++k) sig[p * w + q] += a[p * w + k] * a[q * w + k];
        if (p == q) sig[p * w + q] += 0.3;
      }
    dist.sigma = sig;
    for (auto& x : obs) x = testutil::urand(rng, -1, 1);

    std::vector<double> r(w);
    for (int p = 0; p < w; ++p) r[p] = obs[p] - dist.mu[p];
    std::vector<double> rhs = r;
    REQUIRE(solve_dense(sig, rhs, w));
    double quad = 0.0;
    for (int p = 0; p < w; ++p) quad += r[p] * rhs[p];
    // log det via cholesky of a copy in plain doubles
    std::vector<double> c = sig;
    cholesky(c, w);
    const double expect = 0.5 * cholesky_logdet(c, w) + 0.5 * quad;
    CHECK(testutil::rel_err(nll(dist, std::span<const double>(obs), 0.0),
                            expect) < 1e-11);
  }
}

TEST_CASE("predict_distribution: vanishing amplitudes give a deterministic step") {
  ModelParams model = random_model(3, 17);
  model.coeff_a.params.assign(model.coeff_a.params.size(), 0.0);
  model.coeff_b.params.assign(model.coeff_b.params.size(), 0.0);
  model.coeff_c.params.assign(model.coeff_c.params.size(), 0.0);
  ParticleSystem sys = testutil::random_gas(16, 3, 1.0, 19);
  const auto bound = bind(model);
  const PairSet pairs = build_pairs(sys, model.h);
  const auto s = teacher_entropy(sys, pairs, bound);
  const double dt = 1e-3;
  const auto dist =
      predict_distribution(sys, std::span<const double>(s), bound, dt);
  for (double x : dist.sigma) CHECK(x == 0.0);

  // mu must be the bare Hamiltonian step.
  const auto thermo =
      compute_thermo(sys, pairs, std::span<const double>(s), bound);
  const auto force = conservative_force(pairs, thermo, bound);
  const int w = 4;
  for (int i = 0; i < sys.n; ++i) {
    for (int d = 0; d < 3; ++d)
      CHECK(dist.mu[i * w + d] ==
            doctest::Approx(sys.vel(i)[d] +
                            force[i * 3 + d] / model.mass() * dt)
                .epsilon(1e-14));
    CHECK(dist.mu[i * w + 3] == doctest::Approx(s[i]).epsilon(1e-14));
  }
}

TEST_CASE("predicted covariance is PSD before jitter") {
  for (uint64_t seed : {23ULL, 29ULL, 31ULL}) {
    ModelParams model = random_model(3, seed);
    ParticleSystem sys = testutil::random_gas(20, 3, 1.0, seed * 3);
    const auto bound = bind(model);
    const PairSet pairs = build_pairs(sys, model.h);
    const auto s = teacher_entropy(sys, pairs, bound);
    const auto dist =
        predict_distribution(sys, std::span<const double>(s), bound, 1e-3);
    const int w = 4;
    for (int i = 0; i < sys.n; ++i) {
      std::vector<double> blk(dist.sigma.begin() + i * w * w,
                              dist.sigma.begin() + (i + 1) * w * w);
      const auto eig = symmetric_eigenvalues(blk, w);
      CHECK(eig.front() >= -1e-10);
    }
  }
}

TEST_CASE("nll gradient matches finite differences on a tiny system") {
  ModelParams model = make_model(3, false, 0.45, 4);
  randomize_model(model, 37);
  init_params(model.volume, 47, false);
  Trajectory traj = generate_toy(model, 6, 2, 41);

  // Tape gradient of the one-transition loss.
  Tape tape;
  const auto bound = bind(model, tape);
  const ParticleSystem sys = to_system(traj.frames[0], 3);
  const PairSet pairs = build_pairs(sys, model.h);
  const std::vector<Var> s_t = teacher_entropy(sys, pairs, bound);
  const auto dist =
      predict_distribution(sys, std::span<const Var>(s_t), bound, traj.dt);
  const ParticleSystem nxt = to_system(traj.frames[1], 3);
  const std::vector<Var> s_t1 =
      teacher_entropy(nxt, build_pairs(nxt, model.h), bound);
  std::vector<Var> obs;
  const int w = 4;
  for (int i = 0; i < traj.n; ++i) {
    for (int d = 0; d < 3; ++d) obs.push_back(make_leaf(tape, nxt.vel(i)[d]));
    obs.push_back(s_t1[i]);
  }
  const Var loss = nll(dist, std::span<const Var>(obs), 1e-8);
  const auto grad = grad_params(tape, bound, loss);

  const std::vector<double> theta0 = flatten(model);
  const std::vector<int> trans{0};
  double grad_scale = 0.0;
  for (double g : grad) grad_scale = std::max(grad_scale, std::fabs(g));
  for (std::size_t k = 0; k < theta0.size(); ++k) {
    const double fd = testutil::fd_partial(
        [&](const std::vector<double>& th) {
          ModelParams m = model;
          unflatten(m, th);
          return evaluate_nll(traj, m, trans, 1e-8);
        },
        theta0, k, 1e-5);
    CHECK(testutil::rel_err(grad[k], fd, 1e-5 * grad_scale) < 1e-5);
  }
}

TEST_CASE("training: loss decreases on synthetic data, split is deterministic") {
  ModelParams truth = random_model(3, 53, 4);
  Trajectory traj = generate_toy(truth, 12, 30, 59);

  ModelParams fresh = make_model(3, false, truth.h, 4);
  randomize_model(fresh, 61);
  TrainConfig cfg;
  cfg.lr = 3e-3;
  cfg.epochs = 8;
  cfg.seed = 5;
  const TrainResult a = train(traj, fresh, cfg);
  CHECK_FALSE(a.aborted_non_finite);
  REQUIRE(a.train_loss.size() == 8);
  for (double x : a.train_loss) CHECK(std::isfinite(x));
  // Exponential moving average decreases from start to finish.
  double ema = a.train_loss.front();
  double ema_first = 0.0;
  for (std::size_t e = 0; e < a.train_loss.size(); ++e) {
    ema = 0.5 * ema + 0.5 * a.train_loss[e];
    if (e == 2) ema_first = ema;
  }
  CHECK(ema < ema_first + 1e-12);

  const TrainResult b = train(traj, fresh, cfg);
  CHECK(a.train_loss == b.train_loss);
  CHECK(a.val_loss == b.val_loss);
}

TEST_CASE("training survives frozen zero-variance data") {
  ModelParams model = random_model(3, 67, 4);
  // All particles at rest, identical frames: variances collapse to jitter.
  ParticleSystem init = testutil::random_gas(10, 3, 1.0, 71, 0.0);
  Trajectory traj;
  traj.dim = 3;
  traj.n = 10;
  traj.dt = 1e-3;
  for (int f = 0; f < 6; ++f) {
    Snapshot s = to_snapshot(init, f);
    traj.frames.push_back(s);
  }
  ModelParams fresh = make_model(3, false, model.h, 4);
  randomize_model(fresh, 73);
  TrainConfig cfg;
  cfg.lr = 1e-3;
  cfg.epochs = 3;
  const TrainResult res = train(traj, fresh, cfg);
  CHECK_FALSE(res.aborted_non_finite);
  for (double x : res.train_loss) CHECK(std::isfinite(x));
}

TEST_CASE("rollout: zero steps attaches teacher entropy; momentum is conserved") {
  ModelParams model = random_model(3, 83);
  ParticleSystem init = testutil::random_gas(30, 3, 1.0, 89, 0.4);
  const Trajectory t0 = rollout(init, model, 0, 1, 1e-3, 7);
  REQUIRE(t0.frames.size() == 1);
  CHECK(t0.frames[0].r == init.r);
  const auto s = teacher_entropy(init, build_pairs(init, model.h), bind(model));
  CHECK(t0.frames[0].entropy == s);

  const Trajectory traj = rollout(init, model, 100, 2, 5e-4, 7);
  REQUIRE(traj.frames.size() == 101);
  double p0[3] = {0, 0, 0}, p1[3] = {0, 0, 0};
  for (int i = 0; i < init.n; ++i)
    for (int d = 0; d < 3; ++d) {
      p0[d] += model.mass() * traj.frames.front().v[i * 3 + d];
      p1[d] += model.mass() * traj.frames.back().v[i * 3 + d];
    }
  for (int d = 0; d < 3; ++d) CHECK(std::fabs(p1[d] - p0[d]) < 1e-8);
}

TEST_CASE("rollout with inert closures is ballistic free flight") {
  ModelParams model = make_model(3, false, 0.3, 6);
  randomize_model(model, 97);
  model.coeff_a.params.assign(model.coeff_a.params.size(), 0.0);
  model.coeff_b.params.assign(model.coeff_b.params.size(), 0.0);
  model.coeff_c.params.assign(model.coeff_c.params.size(), 0.0);
  model.volume.params.assign(model.volume.params.size(), 0.0);
  const int hidden = model.energy_vol.spec.widths[1];
  for (int o = 0; o < hidden; ++o) model.energy_vol.params[o * 2 + 1] = 0.0;

  ParticleSystem init = testutil::random_gas(12, 3, 1.0, 101, 0.3);
  const double dt = 1e-3;
  const Trajectory traj = rollout(init, model, 50, 1, dt, 11);
  // Unwrapped positions advance linearly with the constant velocities.
  for (int f = 1; f <= 50; ++f) {
    for (int i = 0; i < init.n; ++i)
      for (int d = 0; d < 3; ++d) {
        const double expect = init.pos(i)[d] + init.vel(i)[d] * dt * f;
        const double got =
            traj.frames[f].r[i * 3 + d] +
            traj.frames[f].image[i * 3 + d] * init.box.lengths[d];
        CHECK(got == doctest::Approx(expect).epsilon(1e-12));
        CHECK(traj.frames[f].v[i * 3 + d] == init.vel(i)[d]);
      }
  }
}
