#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ddpd/geometry.hpp"

namespace ddpd {

// One recorded frame: positions and velocities (the observable state), plus
// optional image flags for unwrapping and an optional entropy cache.
struct Snapshot {
  int64_t step = 0;
  Box box;
  std::vector<double> r;
  std::vector<double> v;
  std::vector<int64_t> image;    // empty or n*dim
  std::vector<double> entropy;   // empty or n (not persisted to dumps)
};

struct Trajectory {
  int dim = 3;
  int n = 0;
  double dt = 0.0;  // physical spacing between consecutive frames (0: unset)
  std::vector<Snapshot> frames;

  bool has_images() const {
    return !frames.empty() && !frames.front().image.empty();
  }
};

Snapshot to_snapshot(const ParticleSystem& sys, int64_t step);
ParticleSystem to_system(const Snapshot& snap, int dim);

// LAMMPS-style text dump. Positions, velocities and image flags round-trip
// losslessly (17 significant digits). Box bounds flags encode the boundary
// mode; a Lees-Edwards box stores its current offset as the xy tilt.
void write_dump(const Trajectory& traj, const std::string& path);
Trajectory read_dump(const std::string& path);

}  // namespace ddpd
