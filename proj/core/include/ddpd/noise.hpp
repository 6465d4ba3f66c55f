#pragma once

#include <cstdint>
#include <vector>

#include "ddpd/geometry.hpp"
#include "ddpd/rng.hpp"

namespace ddpd {

// One step's worth of pair Wiener increments, stored per half-pair (i < j).
// Mirrored access follows dW_ji = dW_ij and dV_ji = -dV_ij; dWbar is the
// traceless symmetric part sym(dW) - (I/D) tr(dW).
struct PairNoise {
  int dim = 3;
  double dt = 0.0;
  std::vector<double> dw;     // npairs * dim * dim, iid N(0, dt)
  std::vector<double> dwbar;  // npairs * dim * dim
  std::vector<double> trdw;   // npairs
  std::vector<double> dv;     // npairs, N(0, dt)

  const double* dw_of(std::size_t p) const { return dw.data() + p * dim * dim; }
  const double* dwbar_of(std::size_t p) const {
    return dwbar.data() + p * dim * dim;
  }
};

// Draws are keyed by (seed, step_index, i, j) only, so the result does not
// depend on pair enumeration order or thread count.
inline PairNoise sample_noise(const PairSet& pairs, double dt, uint64_t seed,
                              uint64_t step_index) {
  const int dim = pairs.dim;
  const std::size_t np = pairs.size();
  PairNoise out;
  out.dim = dim;
  out.dt = dt;
  out.dw.resize(np * dim * dim);
  out.dwbar.resize(np * dim * dim);
  out.trdw.resize(np);
  out.dv.resize(np);
  const double s = std::sqrt(dt);
  for (std::size_t p = 0; p < np; ++p) {
    CounterRng rng(seed, step_index, static_cast<uint64_t>(pairs.pairs[p].i),
                   static_cast<uint64_t>(pairs.pairs[p].j));
    double* w = out.dw.data() + p * dim * dim;
    for (int k = 0; k < dim * dim; ++k) w[k] = s * rng.normal();
    out.dv[p] = s * rng.normal();

    double tr = 0.0;
    for (int a = 0; a < dim; ++a) tr += w[a * dim + a];
    out.trdw[p] = tr;
    double* wb = out.dwbar.data() + p * dim * dim;
    for (int a = 0; a < dim; ++a)
      for (int b = 0; b < dim; ++b)
        wb[a * dim + b] = 0.5 * (w[a * dim + b] + w[b * dim + a]) -
                          (a == b ? tr / dim : 0.0);
  }
  return out;
}

}  // namespace ddpd
