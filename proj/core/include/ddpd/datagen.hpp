#pragma once

#include "ddpd/dpd.hpp"
#include "ddpd/model.hpp"

namespace ddpd {

enum class Forcing : uint8_t { none, taylor_green, shear };

struct GenConfig {
  int n = 500;
  int dim = 3;
  double box_length = 1.0;
  double dt = 1e-3;
  int n_snapshots = 100;
  int steps_per_snapshot = 1;
  int equilibration_steps = 0;
  Forcing forcing = Forcing::none;
  double tg_amplitude = 1.0;  // Taylor-Green initial vortex amplitude
  double shear_rate = 0.0;
  uint64_t seed = 0;
  double blowup_bound = 1e6;
};

// Jittered-lattice initial condition with Maxwell velocities at kbt/m, net
// momentum removed; Taylor-Green adds the classical vortex field on top.
ParticleSystem initial_gas(const GenConfig& cfg, double kbt, double mass);

// Classical DPD ground-truth generator.
Trajectory gen_dpd_gas(const GenConfig& cfg, const DpdParams& params);

// Rollout of the learned model recording positions and velocities only.
Trajectory gen_from_model(const GenConfig& cfg, const ModelParams& model,
                          const ParticleSystem& init);

}  // namespace ddpd
