#pragma once

#include <span>
#include <vector>

#include "ddpd/geometry.hpp"
#include "ddpd/model.hpp"

namespace ddpd {

// Per-particle volume estimate d_i = W(0) + sum_j W_ij with
// W_ij = exp(MLP_V(|r_ij|/h)) * (1 - |r_ij|^2/h^2)_+ . The self term keeps
// every d_i strictly positive.
template <class S>
struct VolumeResult {
  std::vector<S> inv_vol;      // d_i
  std::vector<S> vol;          // V_i = 1/d_i
  std::vector<S> kernel_w;     // W_ij per half-pair
  std::vector<S> kernel_dwdr;  // dW_ij/d|r_ij| per half-pair (radial)
};

template <class S>
struct StrainResult {
  // Traceless symmetric strain per particle, row-major dim x dim.
  std::vector<S> eps_bar;
  // d Wbar_ij^{ab} / d u_ij^g, indexed [pair][g][a][b], for both
  // orientations of each stored half-pair.
  std::vector<S> grad_ij;
  std::vector<S> grad_ji;
};

template <class S>
struct EnergyResult {
  std::vector<S> energy;       // U_i
  std::vector<S> pressure;     // P_i = -dU/dV
  std::vector<S> temperature;  // T_i = dU/dS
  std::vector<S> d2U_dS2;
  std::vector<S> heat_cap;     // C_i = T_i / (d2U/dS2)
  std::vector<S> tau;          // deviatoric stress, n * dim * dim (solids)
};

template <class S>
struct PairCoeffs {
  std::vector<S> a, b, c;
  std::vector<S> da_dti, da_dtj, db_dti, db_dtj, dc_dti, dc_dtj;
};

template <class S>
struct Thermo {
  VolumeResult<S> volume;
  StrainResult<S> strain;
  EnergyResult<S> energy;
};

template <class S>
inline S scalar_const(const BoundModel<S>& model, double v) {
  return const_like(model.log_kb, v);
}

template <class S>
VolumeResult<S> compute_volume(const PairSet& pairs, int n,
                               const BoundModel<S>& model) {
  const double h = model.src->h;
  VolumeResult<S> out;
  const S zero = scalar_const(model, 0.0);

  // Self term W(0) = exp(MLP_V(0)); shared by every particle.
  const Dual<S> q0 = dual_const(zero);
  const S w_self = exp(
      mlp_apply_scalar(*model.volume.spec, model.volume.w.data(),
                       std::span<const Dual<S>>(&q0, 1))
          .v);
  out.inv_vol.assign(n, w_self);

  const std::size_t np = pairs.size();
  out.kernel_w.reserve(np);
  out.kernel_dwdr.reserve(np);
  for (std::size_t p = 0; p < np; ++p) {
    const double r = pairs.dist[p];
    const Dual<S> q{const_like(zero, r / h), const_like(zero, 1.0 / h)};
    const Dual<S> f = mlp_apply_scalar(*model.volume.spec,
                                       model.volume.w.data(),
                                       std::span<const Dual<S>>(&q, 1));
    const S ef = exp(f.v);
    const double bump = 1.0 - (r * r) / (h * h);
    const S w = ef * bump;
    const S dwdr = ef * (f.d * bump) - ef * (2.0 * r / (h * h));
    out.kernel_w.push_back(w);
    out.kernel_dwdr.push_back(dwdr);
    out.inv_vol[pairs.pairs[p].i] += w;
    out.inv_vol[pairs.pairs[p].j] += w;
  }
  out.vol.reserve(n);
  for (int i = 0; i < n; ++i) {
    if (!(val(out.inv_vol[i]) > 0.0))
      throw NonpositiveVolume("compute_volume: d_" + std::to_string(i) +
                              " = " + std::to_string(val(out.inv_vol[i])));
    out.vol.push_back(1.0 / out.inv_vol[i]);
  }
  return out;
}

namespace detail {

// Assembles Wbar^{ab} = sym(l) - (I/D) tr(l) from the lower-triangular
// entries of l (row-major: (0,0); (1,0),(1,1); ...).
template <class S>
void tri_to_wbar(std::span<const S> tri, int dim, S* wbar) {
  const S zero = const_like(tri[0], 0.0);
  std::size_t k = 0;
  for (int a = 0; a < dim; ++a)
    for (int b = 0; b <= a; ++b) {
      const S& l = tri[k++];
      if (a == b) {
        wbar[a * dim + b] = l;
      } else {
        wbar[a * dim + b] = 0.5 * l;
        wbar[b * dim + a] = 0.5 * l;
      }
    }
  S tr = wbar[0];
  for (int a = 1; a < dim; ++a) tr += wbar[a * dim + a];
  const S corr = tr / static_cast<double>(dim);
  for (int a = 0; a < dim; ++a) wbar[a * dim + a] -= corr;
  (void)zero;
}

}  // namespace detail

// Strain from displacements relative to the reference configuration; the
// zero-displacement evaluation is subtracted so u = 0 gives exactly zero
// strain.
template <class S>
StrainResult<S> compute_strain(const ParticleSystem& sys, const PairSet& pairs,
                               const BoundModel<S>& model) {
  if (sys.r0.empty())
    throw MissingReference("compute_strain: system has no reference positions");
  const int dim = sys.dim;
  const int tri = dim * (dim + 1) / 2;
  const double h = model.src->h;
  const S zero = scalar_const(model, 0.0);
  const std::size_t np = pairs.size();

  StrainResult<S> out;
  out.eps_bar.assign(static_cast<std::size_t>(sys.n) * dim * dim, zero);
  out.grad_ij.assign(np * dim * dim * dim, zero);
  out.grad_ji.assign(np * dim * dim * dim, zero);

  std::vector<Dual<S>> x(2 * dim);
  std::vector<Dual<S>> lt;
  std::vector<S> l_val(tri);
  std::vector<S> wb(dim * dim);
  std::array<double, 3> disp0{0, 0, 0};

  for (std::size_t p = 0; p < np; ++p) {
    const auto [i, j] = pairs.pairs[p];
    for (int d = 0; d < dim; ++d)
      disp0[d] = sys.r0[static_cast<std::size_t>(i) * dim + d] -
                 sys.r0[static_cast<std::size_t>(j) * dim + d];
    minimum_image(std::span<double>(disp0.data(), dim), sys.box);

    for (int orient = 0; orient < 2; ++orient) {
      const double sgn = orient == 0 ? 1.0 : -1.0;
      // Zero-displacement baseline, no u-derivative.
      for (int d = 0; d < dim; ++d) {
        x[d] = dual_const(zero);
        x[dim + d] = dual_const(const_like(zero, sgn * disp0[d] / h));
      }
      mlp_apply(*model.strain.spec, model.strain.w.data(),
                std::span<const Dual<S>>(x), lt);
      for (int k = 0; k < tri; ++k) l_val[k] = -lt[k].v;

      // One dual sweep per u component; the value sweep rides along on g=0.
      S* grad = (orient == 0 ? out.grad_ij : out.grad_ji).data() +
                p * dim * dim * dim;
      for (int g = 0; g < dim; ++g) {
        for (int d = 0; d < dim; ++d) {
          const double u =
              sgn * (pairs.disp_of(p)[d] - disp0[d]);
          x[d] = Dual<S>{const_like(zero, u / h),
                         const_like(zero, d == g ? 1.0 / h : 0.0)};
          x[dim + d] = dual_const(const_like(zero, sgn * disp0[d] / h));
        }
        mlp_apply(*model.strain.spec, model.strain.w.data(),
                  std::span<const Dual<S>>(x), lt);
        if (g == 0)
          for (int k = 0; k < tri; ++k) l_val[k] += lt[k].v;
        std::vector<S> dtri(tri);
        for (int k = 0; k < tri; ++k) dtri[k] = lt[k].d;
        detail::tri_to_wbar(std::span<const S>(dtri), dim,
                            grad + static_cast<std::size_t>(g) * dim * dim);
      }

      detail::tri_to_wbar(std::span<const S>(l_val), dim, wb.data());
      S* eps = out.eps_bar.data() +
               static_cast<std::size_t>(orient == 0 ? i : j) * dim * dim;
      for (int k = 0; k < dim * dim; ++k) eps[k] += wb[k];
    }
  }
  return out;
}

// Internal energy and its partials. Fluid: U = CMNN(S, V). Solid adds
// U_dev = CMNN(S, J2[, J3]) on the invariants of the traceless strain, and
// the deviatoric stress tau = dU/d(eps_bar), projected back to traceless.
template <class S>
EnergyResult<S> compute_energy(std::span<const S> entropy,
                               const VolumeResult<S>& volume,
                               const StrainResult<S>* strain,
                               const BoundModel<S>& model) {
  const int n = static_cast<int>(entropy.size());
  const int dim = model.src->dim;
  const bool solid = model.src->solid;
  EnergyResult<S> out;
  out.energy.reserve(n);
  out.pressure.reserve(n);
  out.temperature.reserve(n);
  out.d2U_dS2.reserve(n);
  out.heat_cap.reserve(n);
  const S zero = scalar_const(model, 0.0);
  if (solid) out.tau.assign(static_cast<std::size_t>(n) * dim * dim, zero);

  // Sign constraints baked once, not per particle.
  const MlpSpec vol_spec = unconstrained(*model.energy_vol.spec);
  const std::vector<S> vol_w =
      baked_params(*model.energy_vol.spec, model.energy_vol.w.data());
  MlpSpec dev_spec;
  std::vector<S> dev_w;
  if (solid) {
    dev_spec = unconstrained(*model.energy_dev.spec);
    dev_w = baked_params(*model.energy_dev.spec, model.energy_dev.w.data());
  }

  std::vector<Dual<Dual<S>>> xss(2);
  std::vector<Dual<S>> xv(2);
  for (int i = 0; i < n; ++i) {
    // Nested dual on S: value, T = dU/dS and d2U/dS2 in one sweep.
    xss[0] = dual_seed2(entropy[i]);
    xss[1] = dual_const(dual_const(volume.vol[i]));
    const auto uss = mlp_apply_scalar(vol_spec, vol_w.data(),
                                      std::span<const Dual<Dual<S>>>(xss));
    S u = uss.v.v;
    S t = uss.v.d;
    S u_ss = uss.d.d;

    xv[0] = dual_const(entropy[i]);
    xv[1] = dual_seed(volume.vol[i]);
    const auto uv = mlp_apply_scalar(vol_spec, vol_w.data(),
                                     std::span<const Dual<S>>(xv));
    S p = -uv.d;

    if (solid) {
      const S* eps = strain->eps_bar.data() +
                     static_cast<std::size_t>(i) * dim * dim;
      // Invariants J2 = eps:eps/2 (and J3 = det eps in 3D).
      S j2 = zero;
      for (int k = 0; k < dim * dim; ++k) j2 += eps[k] * eps[k];
      j2 = 0.5 * j2;
      std::vector<Dual<Dual<S>>> ys(dim);
      ys[0] = dual_seed2(entropy[i]);
      ys[1] = dual_const(dual_const(j2));
      S j3 = zero;
      if (dim == 3) {
        j3 = eps[0] * (eps[4] * eps[8] - eps[5] * eps[7]) -
             eps[1] * (eps[3] * eps[8] - eps[5] * eps[6]) +
             eps[2] * (eps[3] * eps[7] - eps[4] * eps[6]);
        ys[2] = dual_const(dual_const(j3));
      }
      const auto ds = mlp_apply_scalar(dev_spec, dev_w.data(),
                                       std::span<const Dual<Dual<S>>>(ys));
      u += ds.v.v;
      t += ds.v.d;
      u_ss += ds.d.d;

      std::vector<Dual<S>> yj(dim);
      yj[0] = dual_const(entropy[i]);
      yj[1] = dual_seed(j2);
      if (dim == 3) yj[2] = dual_const(j3);
      const S du_dj2 = mlp_apply_scalar(dev_spec, dev_w.data(),
                                        std::span<const Dual<S>>(yj))
                           .d;
      std::vector<S> tau(static_cast<std::size_t>(dim) * dim, zero);
      for (int k = 0; k < dim * dim; ++k) tau[k] = du_dj2 * eps[k];
      if (dim == 3) {
        yj[1] = dual_const(j2);
        yj[2] = dual_seed(j3);
        const S du_dj3 = mlp_apply_scalar(dev_spec, dev_w.data(),
                                          std::span<const Dual<S>>(yj))
                             .d;
        // dJ3/d(eps) is the cofactor matrix.
        const auto cof = [&](int a, int b) {
          const int a1 = (a + 1) % 3, a2 = (a + 2) % 3;
          const int b1 = (b + 1) % 3, b2 = (b + 2) % 3;
          return eps[a1 * 3 + b1] * eps[a2 * 3 + b2] -
                 eps[a1 * 3 + b2] * eps[a2 * 3 + b1];
        };
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b) tau[a * 3 + b] += du_dj3 * cof(a, b);
      }
      // Project to traceless.
      S tr = tau[0];
      for (int a = 1; a < dim; ++a) tr += tau[a * dim + a];
      const S corr = tr / static_cast<double>(dim);
      for (int a = 0; a < dim; ++a) tau[a * dim + a] -= corr;
      S* dst = out.tau.data() + static_cast<std::size_t>(i) * dim * dim;
      for (int k = 0; k < dim * dim; ++k) dst[k] = tau[k];
    }

    if (val(u_ss) <= 1e-12)
      throw DegenerateHeatCapacity(
          "compute_energy: d2U/dS2 = " + std::to_string(val(u_ss)) +
          " for particle " + std::to_string(i));
    out.energy.push_back(u);
    out.temperature.push_back(t);
    out.pressure.push_back(p);
    out.d2U_dS2.push_back(u_ss);
    out.heat_cap.push_back(t / u_ss);
  }
  return out;
}

// Pairwise fluctuation amplitudes as products of one network evaluated at
// both endpoint temperatures, plus all six temperature partials.
template <class S>
PairCoeffs<S> compute_coefficients(const PairSet& pairs,
                                   std::span<const S> temperature,
                                   const BoundModel<S>& model) {
  const double h = model.src->h;
  const std::size_t np = pairs.size();
  PairCoeffs<S> out;
  for (auto* v : {&out.a, &out.b, &out.c, &out.da_dti, &out.da_dtj,
                  &out.db_dti, &out.db_dtj, &out.dc_dti, &out.dc_dtj})
    v->reserve(np);

  std::vector<Dual<S>> x(2);
  for (std::size_t p = 0; p < np; ++p) {
    const auto [i, j] = pairs.pairs[p];
    const double q = pairs.dist[p] / h;
    const auto both = [&](const BoundNet<S>& net, std::vector<S>& value,
                          std::vector<S>& dti, std::vector<S>& dtj) {
      x[0] = dual_const(const_like(temperature[i], q));
      x[1] = dual_seed(temperature[i]);
      const Dual<S> fi = mlp_apply_scalar(*net.spec, net.w.data(),
                                          std::span<const Dual<S>>(x));
      x[1] = dual_seed(temperature[j]);
      const Dual<S> fj = mlp_apply_scalar(*net.spec, net.w.data(),
                                          std::span<const Dual<S>>(x));
      value.push_back(fi.v * fj.v);
      dti.push_back(fi.d * fj.v);
      dtj.push_back(fi.v * fj.d);
    };
    both(model.coeff_a, out.a, out.da_dti, out.da_dtj);
    both(model.coeff_b, out.b, out.db_dti, out.db_dtj);
    both(model.coeff_c, out.c, out.dc_dti, out.dc_dtj);
  }
  return out;
}

template <class S>
Thermo<S> compute_thermo(const ParticleSystem& sys, const PairSet& pairs,
                         std::span<const S> entropy,
                         const BoundModel<S>& model) {
  Thermo<S> t;
  t.volume = compute_volume(pairs, sys.n, model);
  if (model.src->solid) {
    t.strain = compute_strain(sys, pairs, model);
    t.energy = compute_energy(entropy, t.volume, &t.strain, model);
  } else {
    t.energy = compute_energy(entropy, t.volume,
                              static_cast<const StrainResult<S>*>(nullptr),
                              model);
  }
  return t;
}

}  // namespace ddpd
