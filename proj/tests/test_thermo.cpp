#include <doctest.h>

#include <cmath>

#include "ddpd/thermo.hpp"
#include "test_util.hpp"

using namespace ddpd;

namespace {

ParticleSystem random_fluid(int n, double L, uint64_t seed) {
  auto rng = testutil::make_rng(seed);
  Box box;
  box.dim = 3;
  box.lengths = {L, L, L};
  ParticleSystem sys = make_system(n, 3, box);
  for (int i = 0; i < n; ++i)
    for (int d = 0; d < 3; ++d) {
      sys.pos(i)[d] = testutil::urand(rng, 0.0, L);
      sys.vel(i)[d] = testutil::urand(rng, -1.0, 1.0);
    }
  for (int i = 0; i < n; ++i) sys.entropy[i] = testutil::urand(rng, -0.5, 0.5);
  return sys;
}

EnergyResult<double> energy_at(const ModelParams& model,
                               const std::vector<double>& S,
                               const std::vector<double>& V) {
  const auto bound = bind(model);
  VolumeResult<double> vol;
  vol.vol = V;
  for (double v : V) vol.inv_vol.push_back(1.0 / v);
  return compute_energy(std::span<const double>(S), vol,
                        static_cast<const StrainResult<double>*>(nullptr),
                        bound);
}

}  // namespace

TEST_CASE("compute_volume: isolated particle with zero kernel net") {
  ModelParams model = make_model(3, false, 0.2, 8);  // all params zero
  Box box;
  box.dim = 3;
  box.lengths = {1, 1, 1};
  ParticleSystem sys = make_system(1, 3, box);
  sys.pos(0)[0] = sys.pos(0)[1] = sys.pos(0)[2] = 0.5;
  const PairSet pairs = build_pairs(sys, model.h);
  const auto vol = compute_volume(pairs, 1, bind(model));
  CHECK(vol.inv_vol[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(vol.vol[0] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("kernel value is continuous to zero at the support edge") {
  ModelParams model = make_model(3, false, 1.0, 8);
  randomize_model(model, 3);
  Box box;
  box.dim = 3;
  box.lengths = {10, 10, 10};
  ParticleSystem sys = make_system(2, 3, box);
  for (int d = 0; d < 3; ++d) sys.pos(0)[d] = 5.0;
  sys.pos(1)[0] = 5.0 + (1.0 - 1e-9);
  sys.pos(1)[1] = 5.0;
  sys.pos(1)[2] = 5.0;
  const PairSet pairs = build_pairs(sys, model.h);
  REQUIRE(pairs.size() == 1);
  const auto vol = compute_volume(pairs, 2, bind(model));
  CHECK(std::fabs(vol.kernel_w[0]) < 1e-7);
}

TEST_CASE("kernel radial derivative matches finite differences of d_i") {
  ModelParams model = make_model(3, false, 0.3, 8);
  randomize_model(model, 17);
  // A random kernel net, not the zero-initialized default.
  init_params(model.volume, 99, /*zero_output=*/false);

  ParticleSystem sys = random_fluid(24, 1.0, 5);
  const auto bound = bind(model);

  auto dvec = [&](const ParticleSystem& s) {
    const PairSet pairs = build_pairs(s, model.h);
    return compute_volume(pairs, s.n, bound).inv_vol;
  };

  const PairSet pairs = build_pairs(sys, model.h);
  const auto vol = compute_volume(pairs, sys.n, bound);

  // Analytic jacobian d d_i / d r_j^a assembled from the pair sweep, checked
  // against central differences for a handful of entries.
  auto analytic = [&](int i, int j, int a) {
    double acc = 0.0;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const auto [pi, pj] = pairs.pairs[p];
      const double g = vol.kernel_dwdr[p] * pairs.e_of(p)[a];
      if (pi == i && pj == i) continue;
      if (pi == i) acc += (j == i) ? g : (j == pj ? -g : 0.0);
      else if (pj == i) acc += (j == i) ? -g : (j == pi ? g : 0.0);
    }
    return acc;
  };

  auto rng = testutil::make_rng(31);
  for (int trial = 0; trial < 15; ++trial) {
    const int i = static_cast<int>(testutil::urand(rng, 0, sys.n - 0.001));
    const int j = static_cast<int>(testutil::urand(rng, 0, sys.n - 0.001));
    const int a = static_cast<int>(testutil::urand(rng, 0, 2.999));
    const double h = 1e-6;
    ParticleSystem up = sys, dn = sys;
    up.pos(j)[a] += h;
    dn.pos(j)[a] -= h;
    const double fd = (dvec(up)[i] - dvec(dn)[i]) / (2.0 * h);
    CHECK(testutil::rel_err(analytic(i, j, a), fd, 1e-7) < 1e-6);
  }
}

TEST_CASE("thermo quantities are translation invariant") {
  ModelParams model = make_model(3, false, 0.3, 8);
  randomize_model(model, 23);
  init_params(model.volume, 55, false);
  ParticleSystem sys = random_fluid(30, 1.0, 9);
  const auto bound = bind(model);

  auto thermo_of = [&](const ParticleSystem& s) {
    const PairSet pairs = build_pairs(s, model.h);
    return compute_thermo(s, pairs, std::span<const double>(s.entropy), bound);
  };
  const auto base = thermo_of(sys);
  ParticleSystem shifted = sys;
  for (int i = 0; i < sys.n; ++i) {
    shifted.pos(i)[0] += 0.317;
    shifted.pos(i)[1] -= 0.211;
    shifted.pos(i)[2] += 0.123;
  }
  wrap_and_advect_boundary(shifted, 0.0);
  const auto moved = thermo_of(shifted);
  for (int i = 0; i < sys.n; ++i) {
    CHECK(testutil::rel_err(base.volume.inv_vol[i], moved.volume.inv_vol[i]) <
          1e-12);
    CHECK(testutil::rel_err(base.energy.energy[i], moved.energy.energy[i]) <
          1e-12);
    CHECK(testutil::rel_err(base.energy.temperature[i],
                            moved.energy.temperature[i]) < 1e-12);
    CHECK(testutil::rel_err(base.energy.pressure[i],
                            moved.energy.pressure[i]) < 1e-12);
  }
}

TEST_CASE("energy partials: sign structure and FD agreement") {
  auto rng = testutil::make_rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    ModelParams model = make_model(3, false, 0.2, 8);
    randomize_model(model, 300 + trial);
    const std::vector<double> S{testutil::urand(rng, -2.0, 2.0)};
    const std::vector<double> V{testutil::urand(rng, 0.3, 3.0)};
    const auto e = energy_at(model, S, V);
    CHECK(e.temperature[0] >= 0.0);
    CHECK(e.pressure[0] >= 0.0);
    CHECK(e.heat_cap[0] > 0.0);

    const double hs = 1e-5;
    auto u_of = [&](double s, double v) {
      return energy_at(model, {s}, {v}).energy[0];
    };
    const double t_fd = (u_of(S[0] + hs, V[0]) - u_of(S[0] - hs, V[0])) /
                        (2.0 * hs);
    const double p_fd = -(u_of(S[0], V[0] + hs) - u_of(S[0], V[0] - hs)) /
                        (2.0 * hs);
    CHECK(testutil::rel_err(e.temperature[0], t_fd, 1e-9) < 1e-6);
    CHECK(testutil::rel_err(e.pressure[0], p_fd, 1e-9) < 1e-6);
    const double uss_fd = (u_of(S[0] + hs, V[0]) + u_of(S[0] - hs, V[0]) -
                           2.0 * u_of(S[0], V[0])) /
                          (hs * hs);
    CHECK(testutil::rel_err(e.d2U_dS2[0], uss_fd, 1e-6) < 1e-3);
  }
}

TEST_CASE("flat energy surface trips the heat capacity guard") {
  ModelParams model = make_model(3, false, 0.2, 8);  // zero CMNN: U == const
  CHECK_THROWS_AS(energy_at(model, {0.0}, {1.0}), DegenerateHeatCapacity);
}

TEST_CASE("coefficients: product symmetry, FD partials, constant net") {
  ModelParams model = make_model(3, false, 0.3, 8);
  randomize_model(model, 41);
  const auto bound = bind(model);

  PairSet ps;
  ps.dim = 3;
  ps.pairs = {{0, 1}};
  ps.dist = {0.21};
  ps.disp = {0.21, 0, 0};
  ps.e = {1, 0, 0};

  std::vector<double> T{0.8, 1.7};
  const auto c = compute_coefficients(ps, std::span<const double>(T), bound);
  std::vector<double> Tswap{1.7, 0.8};
  const auto cs =
      compute_coefficients(ps, std::span<const double>(Tswap), bound);
  CHECK(c.a[0] == doctest::Approx(cs.a[0]).epsilon(1e-14));
  CHECK(c.b[0] == doctest::Approx(cs.b[0]).epsilon(1e-14));
  CHECK(c.c[0] == doctest::Approx(cs.c[0]).epsilon(1e-14));

  const double h = 1e-6;
  std::vector<double> Tp{0.8 + h, 1.7}, Tm{0.8 - h, 1.7};
  const auto cp = compute_coefficients(ps, std::span<const double>(Tp), bound);
  const auto cm = compute_coefficients(ps, std::span<const double>(Tm), bound);
  CHECK(testutil::rel_err(c.da_dti[0], (cp.a[0] - cm.a[0]) / (2 * h), 1e-9) <
        1e-6);
  CHECK(testutil::rel_err(c.db_dti[0], (cp.b[0] - cm.b[0]) / (2 * h), 1e-9) <
        1e-6);
  CHECK(testutil::rel_err(c.dc_dti[0], (cp.c[0] - cm.c[0]) / (2 * h), 1e-9) <
        1e-6);
  std::vector<double> Tjp{0.8, 1.7 + h}, Tjm{0.8, 1.7 - h};
  const auto cjp =
      compute_coefficients(ps, std::span<const double>(Tjp), bound);
  const auto cjm =
      compute_coefficients(ps, std::span<const double>(Tjm), bound);
  CHECK(testutil::rel_err(c.da_dtj[0], (cjp.a[0] - cjm.a[0]) / (2 * h), 1e-9) <
        1e-6);

  // Constant network output c0 -> A = c0^2, temperature partials vanish.
  ModelParams flat = make_model(3, false, 0.3, 4);
  const double c0 = -0.37;
  flat.coeff_a.params[param_count(flat.coeff_a.spec) - 1] = c0;  // last bias
  const auto cf = compute_coefficients(ps, std::span<const double>(T),
                                       bind(flat));
  CHECK(cf.a[0] == doctest::Approx(c0 * c0).epsilon(1e-14));
  CHECK(cf.da_dti[0] == 0.0);
}

TEST_CASE("cmnn regression against the monoatomic ideal-gas EoS") {
  // U(S, V) = (3/(4 pi)) V^(-2/3) exp(S/15 - 5/3) in units where the
  // particle count factor, Planck factor and mass drop out.
  auto u_exact = [](double s, double v) {
    return 3.0 / (4.0 * M_PI) * std::pow(v, -2.0 / 3.0) *
           std::exp(s / 15.0 - 5.0 / 3.0);
  };
  auto t_exact = [&](double s, double v) { return u_exact(s, v) / 15.0; };
  auto p_exact = [&](double s, double v) {
    return 2.0 / 3.0 * u_exact(s, v) / v;
  };

  // The network sees the well-conditioned coordinate s~ = S/15; the checked
  // partial T = dU/dS picks up the chain factor.
  Mlp cmnn = make_cmnn({2, 16, 16, 1}, {1, -1});
  init_params(cmnn, 2024);
  const MlpSpec plain = unconstrained(cmnn.spec);

  // Targets scaled by 5 so the regression error is O(1); the checked
  // partials divide the scale back out.
  const double uscale = 5.0;
  const int gs = 20;
  std::vector<std::array<double, 3>> grid;
  for (int a = 0; a < gs; ++a)
    for (int b = 0; b < gs; ++b) {
      const double s = 30.0 * a / (gs - 1);
      const double v = 0.5 + 1.5 * b / (gs - 1);
      grid.push_back({s / 15.0, v, uscale * u_exact(s, v)});
    }

  // Adam on minibatched squared regression error.
  std::vector<double> m1(cmnn.params.size(), 0.0), m2(cmnn.params.size(), 0.0);
  auto rng = testutil::make_rng(404);
  double lr = 1e-2;
  const int batch = 128;
  Tape tape;
  for (int it = 1; it <= 15000; ++it) {
    if (it == 8000) lr = 2e-3;
    if (it == 12000) lr = 4e-4;
    tape.clear();
    std::vector<Var> w;
    w.reserve(cmnn.params.size());
    for (double p : cmnn.params) w.push_back(make_leaf(tape, p));
    const std::vector<Var> baked = baked_params(cmnn.spec, w.data());
    Var loss = make_leaf(tape, 0.0);
    for (int k = 0; k < batch; ++k) {
      const auto& g = grid[static_cast<std::size_t>(
          testutil::urand(rng, 0.0, grid.size() - 0.001))];
      std::vector<Var> x{make_leaf(tape, g[0]), make_leaf(tape, g[1])};
      Var r = mlp_apply_scalar(plain, baked.data(), std::span<const Var>(x)) -
              g[2];
      loss += r * r;
    }
    tape.backward(loss.idx);
    for (std::size_t k = 0; k < cmnn.params.size(); ++k) {
      const double g = tape.adjoint(w[k].idx);
      m1[k] = 0.9 * m1[k] + 0.1 * g;
      m2[k] = 0.999 * m2[k] + 0.001 * g * g;
      const double mh = m1[k] / (1.0 - std::pow(0.9, it));
      const double vh = m2[k] / (1.0 - std::pow(0.999, it));
      cmnn.params[k] -= lr * mh / (std::sqrt(vh) + 1e-8);
    }
  }

  // Partials on the grid interior within 5%.
  for (int a = 3; a < gs - 3; ++a)
    for (int b = 3; b < gs - 3; ++b) {
      const double s = 30.0 * a / (gs - 1);
      const double v = 0.5 + 1.5 * b / (gs - 1);
      const auto grad = grad_input(cmnn, std::vector<double>{s / 15.0, v});
      CHECK(testutil::rel_err(grad[0] / 15.0 / uscale, t_exact(s, v)) < 0.05);
      CHECK(testutil::rel_err(-grad[1] / uscale, p_exact(s, v)) < 0.05);
    }
}

TEST_CASE("strain: zero displacement, zero trace, FD of the kernel gradient") {
  for (int dim : {2, 3}) {
    ModelParams model = make_model(dim, true, 0.5, 6);
    randomize_model(model, 61 + dim);
    Box box;
    box.dim = dim;
    box.lengths = {2.0, 2.0, 2.0};
    box.mode = BoundaryMode::open;
    ParticleSystem sys = make_system(3, dim, box);
    auto rng = testutil::make_rng(71);
    for (int i = 0; i < 3; ++i)
      for (int d = 0; d < dim; ++d)
        sys.pos(i)[d] = 0.3 * i + 0.1 * d;
    sys.r0 = sys.r;  // reference = current: zero displacement
    const auto bound = bind(model);
    const PairSet pairs0 = build_pairs(sys, model.h);
    const auto s0 = compute_strain(sys, pairs0, bound);
    for (double x : s0.eps_bar) CHECK(std::fabs(x) < 1e-14);

    // Perturb positions: trace stays zero, gradient matches FD.
    for (int i = 0; i < 3; ++i)
      for (int d = 0; d < dim; ++d)
        sys.pos(i)[d] += testutil::urand(rng, -0.05, 0.05);
    const PairSet pairs = build_pairs(sys, model.h);
    const auto st = compute_strain(sys, pairs, bound);
    for (int i = 0; i < 3; ++i) {
      double tr = 0;
      for (int d = 0; d < dim; ++d) tr += st.eps_bar[i * dim * dim + d * dim + d];
      CHECK(std::fabs(tr) < 1e-12);
    }

    REQUIRE(pairs.size() >= 1);
    // FD of eps_bar_i w.r.t. r_i (which moves u_ij for its pairs).
    const auto [pi, pj] = pairs.pairs[0];
    for (int g = 0; g < dim; ++g) {
      const double h = 1e-6;
      ParticleSystem up = sys, dn = sys;
      up.pos(pi)[g] += h;
      dn.pos(pi)[g] -= h;
      const auto su = compute_strain(up, build_pairs(up, model.h), bound);
      const auto sd = compute_strain(dn, build_pairs(dn, model.h), bound);
      for (int k = 0; k < dim * dim; ++k) {
        double fd_total =
            (su.eps_bar[pi * dim * dim + k] - sd.eps_bar[pi * dim * dim + k]) /
            (2.0 * h);
        // Analytic: sum of grad_ij over pairs where pi participates.
        double an = 0.0;
        for (std::size_t p = 0; p < pairs.size(); ++p) {
          if (pairs.pairs[p].i == pi)
            an += st.grad_ij[(p * dim + g) * dim * dim + k];
          else if (pairs.pairs[p].j == pi)
            an -= st.grad_ji[(p * dim + g) * dim * dim + k];
        }
        CHECK(testutil::rel_err(an, fd_total, 1e-8) < 1e-5);
      }
    }
  }
}
