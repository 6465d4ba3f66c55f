#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ddpd/network.hpp"

namespace ddpd {

// All learnable closures of the particle model plus the trainable scalars
// k_B and m (log-parameterized so both stay positive).
struct ModelParams {
  int dim = 3;
  bool solid = false;
  double h = 0.2;  // interaction radius the features are scaled by

  Mlp volume;      // r/h -> log kernel scaling
  Mlp energy_vol;  // (S, V) -> U, monotone +S, -V, convex
  Mlp energy_dev;  // (S, strain invariants) -> U, solids only
  Mlp coeff_a;     // (r/h, T) -> fluctuation amplitude factor
  Mlp coeff_b;
  Mlp coeff_c;
  Mlp teacher;     // (r/h, v_ij) -> entropy contribution
  Mlp strain;      // (u/h, r0/h) -> lower-triangular strain factors

  double log_kb = 0.0;
  double log_m = 0.0;

  double kb() const { return std::exp(log_kb); }
  double mass() const { return std::exp(log_m); }
};

// Standard layout: every network gets `hidden` neurons on two hidden layers.
ModelParams make_model(int dim, bool solid, double h, int hidden = 16);

// Independent random parameters for every network; volume keeps its
// zero-initialized output layer so the kernel starts as the bare bump.
void randomize_model(ModelParams& model, uint64_t seed);

// Flat view over every trainable scalar, in a stable order ending with
// (log_kb, log_m). flatten/unflatten round-trip exactly.
std::size_t param_count(const ModelParams& model);
std::vector<double> flatten(const ModelParams& model);
void unflatten(ModelParams& model, std::span<const double> theta);

// Checkpoint file: JSON document with shapes, decimal parameters, indicator
// vectors and a format-version string.
void save_model(const ModelParams& model, const std::string& path);
ModelParams load_model(const std::string& path);
std::string model_to_json(const ModelParams& model);
ModelParams model_from_json(const std::string& text);

// Model parameters materialized in scalar type S. For S=Var every scalar is
// a tape leaf, registered in flatten() order starting at `leaf_start`.
template <class S>
struct BoundNet {
  const MlpSpec* spec = nullptr;
  std::vector<S> w;
};

template <class S>
struct BoundModel {
  const ModelParams* src = nullptr;
  BoundNet<S> volume, energy_vol, energy_dev, coeff_a, coeff_b, coeff_c,
      teacher, strain;
  S log_kb;
  S log_m;
  int32_t leaf_start = -1;
};

inline BoundModel<double> bind(const ModelParams& m) {
  BoundModel<double> b;
  b.src = &m;
  auto put = [](BoundNet<double>& dst, const Mlp& net) {
    dst.spec = &net.spec;
    dst.w = net.params;
  };
  put(b.volume, m.volume);
  put(b.energy_vol, m.energy_vol);
  if (m.solid) put(b.energy_dev, m.energy_dev);
  put(b.coeff_a, m.coeff_a);
  put(b.coeff_b, m.coeff_b);
  put(b.coeff_c, m.coeff_c);
  put(b.teacher, m.teacher);
  if (m.solid) put(b.strain, m.strain);
  b.log_kb = m.log_kb;
  b.log_m = m.log_m;
  return b;
}

inline BoundModel<Var> bind(const ModelParams& m, Tape& tape) {
  BoundModel<Var> b;
  b.src = &m;
  b.leaf_start = static_cast<int32_t>(tape.size());
  auto put = [&](BoundNet<Var>& dst, const Mlp& net) {
    dst.spec = &net.spec;
    dst.w.reserve(net.params.size());
    for (double p : net.params) dst.w.push_back(make_leaf(tape, p));
  };
  put(b.volume, m.volume);
  put(b.energy_vol, m.energy_vol);
  if (m.solid) put(b.energy_dev, m.energy_dev);
  put(b.coeff_a, m.coeff_a);
  put(b.coeff_b, m.coeff_b);
  put(b.coeff_c, m.coeff_c);
  put(b.teacher, m.teacher);
  if (m.solid) put(b.strain, m.strain);
  b.log_kb = make_leaf(tape, m.log_kb);
  b.log_m = make_leaf(tape, m.log_m);
  return b;
}

// Parameter gradient of a scalar tape node, in flatten() order.
std::vector<double> grad_params(Tape& tape, const BoundModel<Var>& bound,
                                Var loss);

}  // namespace ddpd
