#pragma once

#include <string>

#include "ddpd/trajectory.hpp"

namespace ddpd {

struct CorrelationCurve {
  std::string metric;
  std::string abscissa_name;
  std::vector<double> abscissa;
  std::vector<double> values;
  std::vector<int64_t> counts;
  int64_t n_origins = 0;
};

// <v(tau).v(tau+t)> over particles and origins (every origin_stride frames).
CorrelationCurve vacf(const Trajectory& traj, int max_lag,
                      int origin_stride = 1);

// Shell-count histogram normalized by the ideal-gas expectation.
CorrelationCurve rdf(const Trajectory& traj, double r_max, int n_bins = 200);

// <|r(tau+t)-r(tau)|^2> on unwrapped positions; requires image flags.
CorrelationCurve msd(const Trajectory& traj, int max_lag,
                     int origin_stride = 1);

// Non-affine squared displacement between two snapshots: residual of the
// best least-squares local deformation gradient over the h-neighborhood.
// Particles with a rank-deficient neighborhood get NaN.
std::vector<double> d2min(const Snapshot& a, const Snapshot& b, int dim,
                          double h);

// Euclidean |gt - pred| / |gt| over the curve values; the grids must match.
double l2_rel_error(const CorrelationCurve& gt, const CorrelationCurve& pred);

// Time- and transverse-averaged v_x binned along the velocity-gradient axis.
CorrelationCurve shear_profile(const Trajectory& traj, int n_bins,
                               int axis = 1);

void write_csv(const CorrelationCurve& curve, const std::string& path);

}  // namespace ddpd
