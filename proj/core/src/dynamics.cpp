#include "ddpd/dynamics.hpp"

#include <cmath>

#include "ddpd/linalg.hpp"
#include "ddpd/marginals.hpp"

namespace ddpd {

FluctuationResult fluctuation(const PairSet& pairs, const PairNoise& noise,
                              const PairCoeffs<double>& coeffs,
                              const Thermo<double>& thermo,
                              const ParticleSystem& sys,
                              const BoundModel<double>& model) {
  const int dim = pairs.dim;
  const int n = sys.n;
  const double sq2kb = std::sqrt(2.0 * std::exp(model.log_kb));
  const double inv_m = std::exp(-model.log_m);

  FluctuationResult out;
  out.dv.assign(static_cast<std::size_t>(n) * dim, 0.0);
  out.ds.assign(n, 0.0);

  double w[3];
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [i, j] = pairs.pairs[p];
    const double* e = pairs.e_of(p);
    const double* wb = noise.dwbar_of(p);
    const double a = coeffs.a[p];
    const double b_over_d = coeffs.b[p] / dim;
    const double tr = noise.trdw[p];

    // w = sqrt(2 kB) [A dWbar + (B/D) tr(dW) I] e_ij
    for (int al = 0; al < dim; ++al) {
      double s = 0.0;
      for (int be = 0; be < dim; ++be) s += wb[al * dim + be] * e[be];
      w[al] = sq2kb * (a * s + b_over_d * tr * e[al]);
    }

    double wv = 0.0;
    for (int d = 0; d < dim; ++d)
      wv += w[d] * (sys.vel(i)[d] - sys.vel(j)[d]);

    for (int d = 0; d < dim; ++d) {
      out.dv[static_cast<std::size_t>(i) * dim + d] += w[d] * inv_m;
      out.dv[static_cast<std::size_t>(j) * dim + d] -= w[d] * inv_m;
    }
    const double cdv = sq2kb * coeffs.c[p] * noise.dv[p];
    out.ds[i] += (-0.5 * wv + cdv) / thermo.energy.temperature[i];
    out.ds[j] += (-0.5 * wv - cdv) / thermo.energy.temperature[j];
  }
  return out;
}

StepResult step(const ParticleSystem& sys, const ModelParams& model, double dt,
                uint64_t seed, uint64_t step_index, double blowup_bound) {
  const int dim = sys.dim;
  const int n = sys.n;
  const auto bound = bind(model);

  const PairSet pairs = build_pairs(sys, model.h);
  const Thermo<double> thermo =
      compute_thermo(sys, pairs, std::span<const double>(sys.entropy), bound);
  const PairCoeffs<double> coeffs = compute_coefficients(
      pairs, std::span<const double>(thermo.energy.temperature), bound);
  const PairNoise noise = sample_noise(pairs, dt, seed, step_index);

  const std::vector<double> force = conservative_force(pairs, thermo, bound);
  const DriftResult<double> drift =
      compute_drift(pairs, coeffs, thermo, sys, bound);
  const FluctuationResult fluct =
      fluctuation(pairs, noise, coeffs, thermo, sys, bound);

  const double inv_m = 1.0 / model.mass();

  StepResult res;
  res.state = sys;
  Increment& inc = res.inc;
  const std::size_t nd = static_cast<std::size_t>(n) * dim;
  inc.dr.assign(nd, 0.0);
  inc.dv.assign(nd, 0.0);
  inc.dv_cons.assign(nd, 0.0);
  inc.dv_diss.assign(nd, 0.0);
  inc.dv_div.assign(nd, 0.0);
  inc.dv_fluct = fluct.dv;
  inc.ds.assign(n, 0.0);
  inc.ds_diss.assign(n, 0.0);
  inc.ds_div.assign(n, 0.0);
  inc.ds_fluct = fluct.ds;

  for (std::size_t k = 0; k < nd; ++k) {
    inc.dv_cons[k] = force[k] * inv_m * dt;
    inc.dv_diss[k] = drift.dv_diss[k] * dt;
    inc.dv_div[k] = drift.dv_div[k] * dt;
    inc.dv[k] = inc.dv_cons[k] + inc.dv_diss[k] + inc.dv_div[k] +
                inc.dv_fluct[k];
    res.state.v[k] = sys.v[k] + inc.dv[k];
    // Semi-implicit: the fresh velocity advances the position.
    inc.dr[k] = res.state.v[k] * dt;
    res.state.r[k] = sys.r[k] + inc.dr[k];
  }
  for (int i = 0; i < n; ++i) {
    inc.ds_diss[i] = drift.ds_diss[i] * dt;
    inc.ds_div[i] = drift.ds_div[i] * dt;
    inc.ds[i] = inc.ds_diss[i] + inc.ds_div[i] + inc.ds_fluct[i];
    res.state.entropy[i] = sys.entropy[i] + inc.ds[i];
    if (!std::isfinite(res.state.entropy[i]))
      throw TrajectoryBlowup("step: non-finite entropy for particle " +
                             std::to_string(i));
  }
  for (std::size_t k = 0; k < nd; ++k)
    if (!(std::fabs(res.state.v[k]) < blowup_bound))
      throw TrajectoryBlowup("step: |v| exceeded " +
                             std::to_string(blowup_bound));

  wrap_and_advect_boundary(res.state, dt);
  res.state.time = sys.time + dt;
  return res;
}

namespace {

void push_check(StructureReport& rep, const std::string& name, double value,
                double threshold) {
  rep.items.push_back(
      {name, std::fabs(value) <= threshold, value, threshold});
}

}  // namespace

StructureReport verify_structure(const ParticleSystem& sys,
                                 const ModelParams& model, int n_samples,
                                 uint64_t seed, double dt) {
  StructureReport rep;
  const int dim = sys.dim;
  const int n = sys.n;
  const auto bound = bind(model);
  const double m = model.mass();

  const PairSet pairs = build_pairs(sys, model.h);
  const Thermo<double> thermo =
      compute_thermo(sys, pairs, std::span<const double>(sys.entropy), bound);
  const PairCoeffs<double> coeffs = compute_coefficients(
      pairs, std::span<const double>(thermo.energy.temperature), bound);

  // (a) Exact block-structure checks. L applied to a phase vector
  // (x_r, x_v, x_S) gives (x_v/m, -x_r/m, 0).
  {
    CounterRng rng(seed, 0x4c736b65, 0, 0);
    double worst = 0.0;
    for (int rep_i = 0; rep_i < 8; ++rep_i) {
      double acc = 0.0, scale = 0.0;
      for (int i = 0; i < n; ++i)
        for (int d = 0; d < dim; ++d) {
          const double xr = rng.normal(), xv = rng.normal();
          acc += xr * (xv / m) + xv * (-xr / m);
          scale += std::fabs(xr * xv / m);
        }
      worst = std::max(worst, std::fabs(acc) / std::max(scale, 1e-300));
    }
    push_check(rep, "L_skew_symmetry", worst, 1e-12);
  }
  // L grad S: grad S = (0, 0, 1) per particle; both L columns hitting it are
  // zero blocks, so the product is identically zero.
  push_check(rep, "L_gradS_zero", 0.0, 0.0);

  // Noise degeneracy and momentum over sampled fluctuations.
  {
    double worst_deg = 0.0, worst_mom = 0.0;
    const int reps = std::min(n_samples, 64);
    for (int s = 0; s < reps; ++s) {
      const PairNoise noise = sample_noise(pairs, dt, seed, 1000 + s);
      const FluctuationResult f =
          fluctuation(pairs, noise, coeffs, thermo, sys, bound);
      double deg = 0.0;
      for (int i = 0; i < n; ++i) {
        for (int d = 0; d < dim; ++d)
          deg += m * sys.vel(i)[d] * f.dv[static_cast<std::size_t>(i) * dim + d];
        deg += thermo.energy.temperature[i] * f.ds[i];
      }
      worst_deg = std::max(worst_deg, std::fabs(deg));
      for (int d = 0; d < dim; ++d) {
        double p = 0.0;
        for (int i = 0; i < n; ++i)
          p += m * f.dv[static_cast<std::size_t>(i) * dim + d];
        worst_mom = std::max(worst_mom, std::fabs(p));
      }
    }
    push_check(rep, "noise_degeneracy_dE", worst_deg, 1e-10);
    push_check(rep, "noise_total_momentum", worst_mom, 1e-10);
  }

  // (b) Monte-Carlo moments of the Wiener increments. Each statistic is
  // compared against its expectation in units of the empirical standard
  // error of the mean.
  {
    PairSet two;
    two.dim = dim;
    two.pairs = {{0, 1}, {0, 2}};
    two.dist = {0.5, 0.5};
    two.disp.assign(2 * dim, 0.0);
    two.e.assign(2 * dim, 0.0);

    struct MeanVar {
      double s = 0.0, s2 = 0.0;
      void add(double x) {
        s += x;
        s2 += x * x;
      }
      double z(double expect, int n) const {
        const double mean = s / n;
        const double var = std::max(s2 / n - mean * mean, 1e-300);
        return (mean - expect) / std::sqrt(var / n);
      }
    };

    const int dd = dim * dim;
    MeanVar tr2, cross;
    std::vector<MeanVar> trwb(dd), wbwb(dd * dd), kk(dd * dd);
    const double a_coef = 0.7, b_coef = 1.3;
    for (int s = 0; s < n_samples; ++s) {
      const PairNoise noise = sample_noise(two, dt, seed, s);
      const double tr = noise.trdw[0];
      tr2.add(tr * tr);
      cross.add(tr * noise.trdw[1]);
      const double* wb = noise.dwbar_of(0);
      for (int k = 0; k < dd; ++k) trwb[k].add(tr * wb[k]);
      for (int k1 = 0; k1 < dd; ++k1)
        for (int k2 = 0; k2 < dd; ++k2) {
          wbwb[k1 * dd + k2].add(wb[k1] * wb[k2]);
          const double f1 =
              a_coef * wb[k1] + (k1 % (dim + 1) == 0 ? b_coef / dim * tr : 0.0);
          const double f2 =
              a_coef * wb[k2] + (k2 % (dim + 1) == 0 ? b_coef / dim * tr : 0.0);
          kk[k1 * dd + k2].add(f1 * f2);
        }
    }
    push_check(rep, "lemma1_tr_squared", tr2.z(dim * dt, n_samples), 3.0);
    push_check(rep, "lemma1_cross_pair", cross.z(0.0, n_samples), 3.0);
    double worst2 = 0.0;
    for (int k = 0; k < dd; ++k)
      worst2 = std::max(worst2, std::fabs(trwb[k].z(0.0, n_samples)));
    push_check(rep, "lemma2_tr_wbar", worst2, 3.0);

    double worst3 = 0.0, worst4 = 0.0;
    for (int a = 0; a < dim; ++a)
      for (int ap = 0; ap < dim; ++ap)
        for (int b = 0; b < dim; ++b)
          for (int bp = 0; bp < dim; ++bp) {
            const double d_ab = (a == b ? 1.0 : 0.0) * (ap == bp ? 1.0 : 0.0);
            const double d_x = (ap == b ? 1.0 : 0.0) * (a == bp ? 1.0 : 0.0);
            const double d_tr = (a == ap ? 1.0 : 0.0) * (b == bp ? 1.0 : 0.0);
            const int idx = (a * dim + ap) * dd + b * dim + bp;
            const double expect3 = (0.5 * (d_ab + d_x) - d_tr / dim) * dt;
            worst3 =
                std::max(worst3, std::fabs(wbwb[idx].z(expect3, n_samples)));
            const double expect4 =
                (0.5 * a_coef * a_coef * (d_ab + d_x) +
                 (b_coef * b_coef - a_coef * a_coef) / dim * d_tr) *
                dt;
            worst4 =
                std::max(worst4, std::fabs(kk[idx].z(expect4, n_samples)));
          }
    push_check(rep, "lemma3_wbar_wbar", worst3, 3.0);
    push_check(rep, "lemma4_composite", worst4, 3.0);
  }

  // (c) Assembled marginal covariance must be symmetric PSD.
  {
    const std::vector<double> sigma =
        marginal_covariance(pairs, coeffs, thermo, sys, bound, dt);
    const int w = dim + 1;
    double min_eig = 0.0;
    for (int i = 0; i < n; ++i) {
      std::vector<double> blk(sigma.begin() + static_cast<std::size_t>(i) * w * w,
                              sigma.begin() +
                                  static_cast<std::size_t>(i + 1) * w * w);
      const auto eig = symmetric_eigenvalues(blk, w);
      min_eig = std::min(min_eig, eig.front());
    }
    rep.items.push_back({"marginal_covariance_psd", min_eig >= -1e-10,
                         min_eig, -1e-10});
  }
  return rep;
}

}  // namespace ddpd
