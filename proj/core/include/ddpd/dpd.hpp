#pragma once

#include <cstdint>
#include <ostream>

#include "ddpd/trajectory.hpp"

namespace ddpd {

// Classical dissipative particle dynamics: conservative, dissipative and
// random pairwise forces with the linear weight w = 1 - r/h. The friction
// gamma is derived from sigma and kBT, never free, so the fluctuation-
// dissipation balance is structural.
struct DpdParams {
  double alpha = 25.0;  // conservative amplitude
  double sigma = 3.0;   // noise amplitude
  double mass = 1.0;
  double kbt = 1.0;
  double h = 1.0;  // interaction radius (fixed, not calibrated)

  double gamma() const { return sigma * sigma / (2.0 * kbt); }
};

ParticleSystem dpd_step(const ParticleSystem& sys, const DpdParams& params,
                        double dt, uint64_t seed, uint64_t step_index,
                        double blowup_bound = 1e6);

struct DpdCalibConfig {
  double lr = 0.05;
  double lr_decay = 0.95;  // per-epoch multiplier
  int epochs = 60;
  uint64_t seed = 0;
  double jitter = 1e-10;
  bool train_mass = true;  // freeze m when the physical mass is known
  // The likelihood is invariant under (alpha, sigma, m, kBT) -> lambda*(...):
  // project that direction out of the gradient so the overall scale stays at
  // its initial value instead of wandering.
  bool pin_scale_gauge = true;
};

struct DpdCalibResult {
  DpdParams params;
  std::vector<double> loss;  // per epoch mean NLL
  bool aborted_non_finite = false;
};

// Per-particle Gaussian NLL of observed velocity increments; the four
// parameters are optimized in log space to stay positive.
double dpd_nll(const Trajectory& traj, const DpdParams& params,
               std::span<const int> transitions, double jitter = 1e-10);
DpdCalibResult dpd_calibrate(const Trajectory& traj, const DpdParams& init,
                             const DpdCalibConfig& cfg,
                             std::ostream* log = nullptr);

}  // namespace ddpd
