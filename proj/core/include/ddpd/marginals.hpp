#pragma once

#include "ddpd/thermo.hpp"

namespace ddpd {

// Closed-form per-particle marginal covariance of the fluctuation increment
// (dv~, dS~) over one step of size dt, in the same units fluctuation()
// returns (velocity part divided by m, entropy part by T_i). Row-major
// (dim+1) x (dim+1) blocks per particle.
template <class S>
std::vector<S> marginal_covariance(const PairSet& pairs,
                                   const PairCoeffs<S>& coeffs,
                                   const Thermo<S>& thermo,
                                   const ParticleSystem& sys,
                                   const BoundModel<S>& model, double dt) {
  const int dim = pairs.dim;
  const int n = sys.n;
  const int w = dim + 1;
  const double dimd = static_cast<double>(dim);
  const S zero = scalar_const(model, 0.0);
  const S kb = exp(model.log_kb);
  const S m = exp(model.log_m);

  std::vector<S> sigma(static_cast<std::size_t>(n) * w * w, zero);

  // Pair sweep accumulates each endpoint's contribution. The quadratic
  // blocks are endpoint-symmetric (e and v_ij flip together), while the
  // velocity-entropy cross vector flips sign with the orientation.
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [i, j] = pairs.pairs[p];
    const double* e = pairs.e_of(p);
    double vij[3] = {0, 0, 0};
    double ev = 0.0, v2 = 0.0;
    for (int d = 0; d < dim; ++d) {
      vij[d] = sys.vel(i)[d] - sys.vel(j)[d];
      ev += e[d] * vij[d];
      v2 += vij[d] * vij[d];
    }
    const S A2 = coeffs.a[p] * coeffs.a[p];
    const S gp = 0.5 * A2;
    const S ge = gp + (coeffs.b[p] * coeffs.b[p] - A2) / dimd;
    const S c2 = coeffs.c[p] * coeffs.c[p];
    const S sss = 0.25 * (gp * v2 + ge * (ev * ev)) + c2;

    for (int which = 0; which < 2; ++which) {
      const int k = which == 0 ? i : j;
      const double sgn = which == 0 ? 1.0 : -1.0;
      S* sig = sigma.data() + static_cast<std::size_t>(k) * w * w;
      for (int a = 0; a < dim; ++a) {
        for (int b = 0; b < dim; ++b)
          sig[a * w + b] += gp * (a == b ? 1.0 : 0.0) + ge * (e[a] * e[b]);
        const S cross = (-0.5 * sgn) * (gp * vij[a] + ge * (ev * e[a]));
        sig[a * w + dim] += cross;
        sig[dim * w + a] += cross;
      }
      sig[dim * w + dim] += sss;
    }
  }

  const S pref_v = 2.0 * kb * dt / (m * m);
  const S pref_vs = 2.0 * kb * dt / m;
  const S pref_s = 2.0 * kb * dt;
  for (int k = 0; k < n; ++k) {
    S* sig = sigma.data() + static_cast<std::size_t>(k) * w * w;
    const S inv_t = 1.0 / thermo.energy.temperature[k];
    for (int a = 0; a < dim; ++a) {
      for (int b = 0; b < dim; ++b) sig[a * w + b] *= pref_v;
      sig[a * w + dim] *= pref_vs * inv_t;
      sig[dim * w + a] *= pref_vs * inv_t;
    }
    sig[dim * w + dim] *= pref_s * inv_t * inv_t;
  }
  return sigma;
}

}  // namespace ddpd
