#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "ddpd/errors.hpp"

namespace ddpd {

enum class BoundaryMode : uint8_t { periodic, lees_edwards, open };

struct Box {
  int dim = 3;
  std::array<double, 3> lengths{1.0, 1.0, 1.0};
  BoundaryMode mode = BoundaryMode::periodic;
  // Lees-Edwards sliding-image state: x displacement applied per +y image
  // crossing, and its time derivative expressed as the velocity gradient
  // du_x/dy.
  double shear_offset = 0.0;
  double shear_rate = 0.0;

  bool periodic_like() const { return mode != BoundaryMode::open; }
};

struct ParticleSystem {
  int n = 0;
  int dim = 3;
  std::vector<double> r;        // n*dim positions
  std::vector<double> v;        // n*dim velocities
  std::vector<double> entropy;  // n
  std::vector<double> r0;       // n*dim reference positions (solids), or empty
  std::vector<int64_t> image;   // n*dim wrap counters for unwrapping
  Box box;
  double time = 0.0;

  double* pos(int i) { return r.data() + static_cast<std::size_t>(i) * dim; }
  const double* pos(int i) const {
    return r.data() + static_cast<std::size_t>(i) * dim;
  }
  double* vel(int i) { return v.data() + static_cast<std::size_t>(i) * dim; }
  const double* vel(int i) const {
    return v.data() + static_cast<std::size_t>(i) * dim;
  }
};

ParticleSystem make_system(int n, int dim, Box box);

// Half neighbor list (i < j) with cached minimum-image displacements
// r_ij = r_i - r_j, distances and unit vectors.
struct PairSet {
  struct Pair {
    int32_t i;
    int32_t j;
  };
  int dim = 3;
  std::vector<Pair> pairs;
  std::vector<double> disp;  // npairs*dim
  std::vector<double> dist;  // npairs
  std::vector<double> e;     // npairs*dim

  std::size_t size() const { return pairs.size(); }
  const double* disp_of(std::size_t p) const { return disp.data() + p * dim; }
  const double* e_of(std::size_t p) const { return e.data() + p * dim; }
};

// Wraps a displacement into the primary image, component-wise into
// [-L/2, L/2). Under lees_edwards the y-image shift adds the corresponding
// x offset before x is wrapped.
void minimum_image(std::span<double> disp, const Box& box);

// Wraps a position into [0, L) per dimension; `image` (optional, length dim)
// accumulates the subtracted box counts.
void wrap_position(std::span<double> r, const Box& box,
                   int64_t* image = nullptr);

// All pairs with minimum-image distance in (r_min, h), r_min = 1e-9*h.
// O(N) via cell binning with cell edge >= h; result sorted by (i, j).
PairSet build_pairs(const ParticleSystem& sys, double h);

// Advances the Lees-Edwards offset by shear_rate*L_y*dt (modulo L_x) and
// wraps every particle back into the primary image. A particle crossing the
// +/-y face under lees_edwards has x shifted by -/+shear_offset and v_x
// shifted by -/+shear_rate*L_y.
void wrap_and_advect_boundary(ParticleSystem& sys, double dt);

}  // namespace ddpd
