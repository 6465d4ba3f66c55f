#include "ddpd/datagen.hpp"

#include <cmath>

#include "ddpd/rng.hpp"
#include "ddpd/training.hpp"

namespace ddpd {

ParticleSystem initial_gas(const GenConfig& cfg, double kbt, double mass) {
  Box box;
  box.dim = cfg.dim;
  box.lengths = {cfg.box_length, cfg.box_length, cfg.box_length};
  box.mode = cfg.forcing == Forcing::shear ? BoundaryMode::lees_edwards
                                           : BoundaryMode::periodic;
  box.shear_rate = cfg.forcing == Forcing::shear ? cfg.shear_rate : 0.0;
  ParticleSystem sys = make_system(cfg.n, cfg.dim, box);

  // Jittered lattice keeps initial distances away from zero.
  const int per_side = static_cast<int>(
      std::ceil(std::pow(static_cast<double>(cfg.n), 1.0 / cfg.dim)));
  const double cell = cfg.box_length / per_side;
  CounterRng rng(cfg.seed, 0x696e6974 /* "init" */, 0, 0);
  const double vth = std::sqrt(kbt / mass);
  for (int i = 0; i < cfg.n; ++i) {
    int rem = i;
    for (int d = 0; d < cfg.dim; ++d) {
      const int cell_idx = rem % per_side;
      rem /= per_side;
      sys.pos(i)[d] =
          (cell_idx + 0.5) * cell + 0.2 * cell * (2.0 * rng.u01() - 1.0);
    }
    for (int d = 0; d < cfg.dim; ++d) sys.vel(i)[d] = vth * rng.normal();
  }
  // Remove net momentum.
  for (int d = 0; d < cfg.dim; ++d) {
    double mean = 0.0;
    for (int i = 0; i < cfg.n; ++i) mean += sys.vel(i)[d];
    mean /= cfg.n;
    for (int i = 0; i < cfg.n; ++i) sys.vel(i)[d] -= mean;
  }
  if (cfg.forcing == Forcing::taylor_green) {
    const double k = 2.0 * M_PI / cfg.box_length;
    for (int i = 0; i < cfg.n; ++i) {
      const double* r = sys.pos(i);
      if (cfg.dim == 2) {
        sys.vel(i)[0] += cfg.tg_amplitude * std::sin(k * r[0]) * std::cos(k * r[1]);
        sys.vel(i)[1] -= cfg.tg_amplitude * std::cos(k * r[0]) * std::sin(k * r[1]);
      } else {
        sys.vel(i)[0] += cfg.tg_amplitude * std::sin(k * r[0]) *
                         std::cos(k * r[1]) * std::cos(k * r[2]);
        sys.vel(i)[1] -= cfg.tg_amplitude * std::cos(k * r[0]) *
                         std::sin(k * r[1]) * std::cos(k * r[2]);
      }
    }
  }
  wrap_and_advect_boundary(sys, 0.0);
  return sys;
}

Trajectory gen_dpd_gas(const GenConfig& cfg, const DpdParams& params) {
  ParticleSystem sys = initial_gas(cfg, params.kbt, params.mass);
  uint64_t step_index = 0;
  for (int s = 0; s < cfg.equilibration_steps; ++s)
    sys = dpd_step(sys, params, cfg.dt, cfg.seed, step_index++,
                   cfg.blowup_bound);

  Trajectory traj;
  traj.dim = cfg.dim;
  traj.n = cfg.n;
  traj.dt = cfg.dt * cfg.steps_per_snapshot;
  traj.frames.push_back(to_snapshot(sys, 0));
  traj.frames.back().entropy.clear();
  for (int f = 1; f < cfg.n_snapshots; ++f) {
    for (int k = 0; k < cfg.steps_per_snapshot; ++k)
      sys = dpd_step(sys, params, cfg.dt, cfg.seed, step_index++,
                     cfg.blowup_bound);
    traj.frames.push_back(to_snapshot(
        sys, static_cast<int64_t>(f) * cfg.steps_per_snapshot));
    traj.frames.back().entropy.clear();
  }
  return traj;
}

Trajectory gen_from_model(const GenConfig& cfg, const ModelParams& model,
                          const ParticleSystem& init) {
  Trajectory traj = rollout(init, model, cfg.n_snapshots - 1,
                            cfg.steps_per_snapshot, cfg.dt, cfg.seed,
                            cfg.blowup_bound);
  // Positions and velocities are the only observables.
  for (Snapshot& s : traj.frames) s.entropy.clear();
  return traj;
}

}  // namespace ddpd
