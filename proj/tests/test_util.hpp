#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "ddpd/geometry.hpp"

namespace testutil {

// Uniform random particle gas with random velocities and entropies.
inline ddpd::ParticleSystem random_gas(int n, int dim, double L, uint64_t seed,
                                       double vmax = 1.0,
                                       ddpd::BoundaryMode mode =
                                           ddpd::BoundaryMode::periodic) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> upos(0.0, L);
  std::uniform_real_distribution<double> uvel(-vmax, vmax);
  std::uniform_real_distribution<double> uent(-0.5, 0.5);
  ddpd::Box box;
  box.dim = dim;
  box.lengths = {L, L, L};
  box.mode = mode;
  ddpd::ParticleSystem sys = ddpd::make_system(n, dim, box);
  for (int i = 0; i < n; ++i) {
    for (int d = 0; d < dim; ++d) {
      sys.pos(i)[d] = upos(rng);
      sys.vel(i)[d] = uvel(rng);
    }
    sys.entropy[i] = uent(rng);
  }
  return sys;
}

inline std::mt19937_64 make_rng(uint64_t seed) { return std::mt19937_64(seed); }

inline double urand(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::vector<double> urand_vec(std::mt19937_64& rng, std::size_t n,
                                     double lo, double hi) {
  std::vector<double> v(n);
  for (auto& x : v) x = urand(rng, lo, hi);
  return v;
}

// Central finite difference of a scalar function along one coordinate.
inline double fd_partial(const std::function<double(const std::vector<double>&)>& f,
                         std::vector<double> x, std::size_t k,
                         double step = 1e-5) {
  const double h = step * std::max(1.0, std::fabs(x[k]));
  x[k] += h;
  const double fp = f(x);
  x[k] -= 2.0 * h;
  const double fm = f(x);
  return (fp - fm) / (2.0 * h);
}

// |a - b| relative to scale of the pair, with an absolute floor.
inline double rel_err(double a, double b, double floor_ = 1e-12) {
  return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), floor_});
}

}  // namespace testutil
