#include "ddpd/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ddpd {

namespace {

inline double wrap_centered(double x, double L) {
  return x - L * std::floor(x / L + 0.5);
}

inline double wrap_primary(double x, double L, int64_t* count) {
  const double k = std::floor(x / L);
  double w = x - k * L;
  int64_t ki = static_cast<int64_t>(k);
  if (w >= L) {  // x just below a box multiple can round up
    w -= L;
    ++ki;
  }
  if (count) *count += ki;
  return w;
}

}  // namespace

ParticleSystem make_system(int n, int dim, Box box) {
  ParticleSystem s;
  s.n = n;
  s.dim = dim;
  box.dim = dim;
  s.box = box;
  s.r.assign(static_cast<std::size_t>(n) * dim, 0.0);
  s.v.assign(static_cast<std::size_t>(n) * dim, 0.0);
  s.entropy.assign(n, 0.0);
  s.image.assign(static_cast<std::size_t>(n) * dim, 0);
  return s;
}

void minimum_image(std::span<double> disp, const Box& box) {
  if (!box.periodic_like()) return;
  const int dim = box.dim;
  if (box.mode == BoundaryMode::lees_edwards && dim >= 2) {
    const double Ly = box.lengths[1];
    const double ny = std::floor(disp[1] / Ly + 0.5);
    disp[1] -= ny * Ly;
    disp[0] -= ny * box.shear_offset;
  } else if (dim >= 2) {
    disp[1] = wrap_centered(disp[1], box.lengths[1]);
  }
  disp[0] = wrap_centered(disp[0], box.lengths[0]);
  for (int d = 2; d < dim; ++d) disp[d] = wrap_centered(disp[d], box.lengths[d]);
}

void wrap_position(std::span<double> r, const Box& box, int64_t* image) {
  if (!box.periodic_like()) return;
  for (int d = 0; d < box.dim; ++d)
    r[d] = wrap_primary(r[d], box.lengths[d], image ? image + d : nullptr);
}

void wrap_and_advect_boundary(ParticleSystem& sys, double dt) {
  Box& box = sys.box;
  if (box.mode == BoundaryMode::open) return;
  const int dim = sys.dim;
  if (box.mode == BoundaryMode::lees_edwards) {
    const double Ly = box.lengths[1];
    const double Lx = box.lengths[0];
    box.shear_offset += box.shear_rate * Ly * dt;
    box.shear_offset -= Lx * std::floor(box.shear_offset / Lx);
    for (int i = 0; i < sys.n; ++i) {
      double* r = sys.pos(i);
      double* v = sys.vel(i);
      int64_t* img = sys.image.data() + static_cast<std::size_t>(i) * dim;
      const double k = std::floor(r[1] / Ly);
      if (k != 0.0) {
        r[1] -= k * Ly;
        r[0] -= k * box.shear_offset;
        v[0] -= k * box.shear_rate * Ly;
        img[1] += static_cast<int64_t>(k);
      }
      r[0] = wrap_primary(r[0], Lx, img);
      for (int d = 2; d < dim; ++d)
        r[d] = wrap_primary(r[d], box.lengths[d], img + d);
    }
  } else {
    for (int i = 0; i < sys.n; ++i) {
      double* r = sys.pos(i);
      int64_t* img = sys.image.data() + static_cast<std::size_t>(i) * dim;
      for (int d = 0; d < dim; ++d)
        r[d] = wrap_primary(r[d], box.lengths[d], img + d);
    }
  }
}

namespace {

struct CellGrid {
  int dim;
  std::array<int, 3> ncell{1, 1, 1};
  std::array<double, 3> edge{0, 0, 0};
  std::array<double, 3> origin{0, 0, 0};
  std::vector<int32_t> head;   // first particle per cell, -1 if empty
  std::vector<int32_t> next;   // linked list over particles

  int cell_coord(double x, int d) const {
    int c = static_cast<int>(std::floor((x - origin[d]) / edge[d]));
    return std::clamp(c, 0, ncell[d] - 1);
  }
  int flat(const std::array<int, 3>& c) const {
    return (c[2] * ncell[1] + c[1]) * ncell[0] + c[0];
  }
};

CellGrid build_grid(const ParticleSystem& sys, double h) {
  const int dim = sys.dim;
  CellGrid g;
  g.dim = dim;
  if (sys.box.periodic_like()) {
    for (int d = 0; d < dim; ++d) {
      const double L = sys.box.lengths[d];
      g.ncell[d] = std::max(1, static_cast<int>(std::floor(L / h)));
      g.edge[d] = L / g.ncell[d];
      g.origin[d] = 0.0;
    }
  } else {
    for (int d = 0; d < dim; ++d) {
      double lo = sys.r[d], hi = sys.r[d];
      for (int i = 1; i < sys.n; ++i) {
        lo = std::min(lo, sys.pos(i)[d]);
        hi = std::max(hi, sys.pos(i)[d]);
      }
      const double extent = std::max(hi - lo, h) * (1.0 + 1e-12) + 1e-300;
      g.ncell[d] = std::max(1, static_cast<int>(std::floor(extent / h)));
      g.edge[d] = extent / g.ncell[d];
      g.origin[d] = lo;
    }
  }
  int total = 1;
  for (int d = 0; d < dim; ++d) total *= g.ncell[d];
  g.head.assign(total, -1);
  g.next.assign(sys.n, -1);
  for (int i = 0; i < sys.n; ++i) {
    std::array<int, 3> c{0, 0, 0};
    for (int d = 0; d < dim; ++d) c[d] = g.cell_coord(sys.pos(i)[d], d);
    const int f = g.flat(c);
    g.next[i] = g.head[f];
    g.head[f] = i;
  }
  return g;
}

}  // namespace

PairSet build_pairs(const ParticleSystem& sys, double h) {
  const int dim = sys.dim;
  const Box& box = sys.box;
  if (box.periodic_like()) {
    for (int d = 0; d < dim; ++d)
      if (h > 0.5 * box.lengths[d])
        throw CutoffTooLarge("build_pairs: cutoff " + std::to_string(h) +
                             " exceeds half box length in dim " +
                             std::to_string(d));
  }
  const double r_min = 1e-9 * h;
  const bool le = box.mode == BoundaryMode::lees_edwards;

  CellGrid grid = build_grid(sys, h);

  PairSet out;
  out.dim = dim;

  std::array<int, 3> cells_i{0, 0, 0};
  // Candidate cells for one particle: in the worst Lees-Edwards case each of
  // 3 y-rows spans 5 x-cells and 3 z-cells.
  std::array<int, 64> cand{};
  for (int i = 0; i < sys.n; ++i) {
    const double* ri = sys.pos(i);
    for (int d = 0; d < dim; ++d) cells_i[d] = grid.cell_coord(ri[d], d);

    int ncand = 0;
    auto add_cell = [&](std::array<int, 3> c) {
      for (int d = 0; d < dim; ++d) {
        if (box.periodic_like()) {
          c[d] = ((c[d] % grid.ncell[d]) + grid.ncell[d]) % grid.ncell[d];
        } else if (c[d] < 0 || c[d] >= grid.ncell[d]) {
          return;
        }
      }
      const int f = grid.flat(c);
      for (int k = 0; k < ncand; ++k)
        if (cand[k] == f) return;
      cand[ncand++] = f;
    };

    const int zlo = dim > 2 ? -1 : 0, zhi = dim > 2 ? 1 : 0;
    const int ylo = dim > 1 ? -1 : 0, yhi = dim > 1 ? 1 : 0;
    for (int oy = ylo; oy <= yhi; ++oy) {
      int ywrap = 0;
      int cy = cells_i[1] + oy;
      if (dim > 1 && box.periodic_like()) {
        if (cy < 0) ywrap = -1;
        if (cy >= grid.ncell[1]) ywrap = 1;
      }
      for (int oz = zlo; oz <= zhi; ++oz) {
        if (le && ywrap != 0) {
          // Looking across the sheared face: the x window shifts by the
          // current offset. ywrap matches the y-image index of the partner.
          const double xc = ri[0] - ywrap * box.shear_offset;
          const int bx = static_cast<int>(
              std::floor((xc - grid.origin[0]) / grid.edge[0]));
          for (int ox = -2; ox <= 2; ++ox)
            add_cell({bx + ox, cy, cells_i[2] + oz});
        } else {
          for (int ox = -1; ox <= 1; ++ox)
            add_cell({cells_i[0] + ox, cy, cells_i[2] + oz});
        }
      }
    }

    std::array<double, 3> d{0, 0, 0};
    for (int k = 0; k < ncand; ++k) {
      for (int32_t j = grid.head[cand[k]]; j >= 0; j = grid.next[j]) {
        if (j <= i) continue;
        const double* rj = sys.pos(j);
        for (int dd = 0; dd < dim; ++dd) d[dd] = ri[dd] - rj[dd];
        minimum_image(std::span<double>(d.data(), dim), box);
        double r2 = 0;
        for (int dd = 0; dd < dim; ++dd) r2 += d[dd] * d[dd];
        if (r2 >= h * h) continue;
        const double r = std::sqrt(r2);
        if (r <= r_min)
          throw CoincidentParticles(
              "build_pairs: particles " + std::to_string(i) + " and " +
              std::to_string(j) + " at distance " + std::to_string(r));
        out.pairs.push_back({i, j});
        for (int dd = 0; dd < dim; ++dd) out.disp.push_back(d[dd]);
        out.dist.push_back(r);
        for (int dd = 0; dd < dim; ++dd) out.e.push_back(d[dd] / r);
      }
    }
  }

  // Deterministic (i, j) ordering regardless of cell iteration order.
  std::vector<std::size_t> order(out.pairs.size());
  for (std::size_t p = 0; p < order.size(); ++p) order[p] = p;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (out.pairs[a].i != out.pairs[b].i) return out.pairs[a].i < out.pairs[b].i;
    return out.pairs[a].j < out.pairs[b].j;
  });
  PairSet sorted;
  sorted.dim = dim;
  sorted.pairs.reserve(out.pairs.size());
  sorted.disp.reserve(out.disp.size());
  sorted.dist.reserve(out.dist.size());
  sorted.e.reserve(out.e.size());
  for (std::size_t p : order) {
    sorted.pairs.push_back(out.pairs[p]);
    for (int dd = 0; dd < dim; ++dd) sorted.disp.push_back(out.disp[p * dim + dd]);
    sorted.dist.push_back(out.dist[p]);
    for (int dd = 0; dd < dim; ++dd) sorted.e.push_back(out.e[p * dim + dd]);
  }
  return sorted;
}

}  // namespace ddpd
