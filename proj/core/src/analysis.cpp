#include "ddpd/analysis.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "ddpd/errors.hpp"
#include "ddpd/linalg.hpp"

namespace ddpd {

CorrelationCurve vacf(const Trajectory& traj, int max_lag, int origin_stride) {
  const int frames = static_cast<int>(traj.frames.size());
  if (frames < max_lag + 1)
    throw InsufficientSnapshots("vacf: need " + std::to_string(max_lag + 1) +
                                " snapshots, have " + std::to_string(frames));
  const int dim = traj.dim;
  CorrelationCurve out;
  out.metric = "vacf";
  out.abscissa_name = "time_lag";
  out.abscissa.resize(max_lag + 1);
  out.values.assign(max_lag + 1, 0.0);
  out.counts.assign(max_lag + 1, 0);
  for (int lag = 0; lag <= max_lag; ++lag) {
    out.abscissa[lag] = lag * traj.dt;
    double acc = 0.0;
    int64_t count = 0;
    for (int tau = 0; tau + lag < frames; tau += origin_stride) {
      const auto& a = traj.frames[tau].v;
      const auto& b = traj.frames[tau + lag].v;
      for (int i = 0; i < traj.n; ++i) {
        double dot = 0.0;
        for (int d = 0; d < dim; ++d)
          dot += a[static_cast<std::size_t>(i) * dim + d] *
                 b[static_cast<std::size_t>(i) * dim + d];
        acc += dot;
        ++count;
      }
    }
    out.values[lag] = acc / count;
    out.counts[lag] = count;
    if (lag == 0) out.n_origins = count / traj.n;
  }
  return out;
}

CorrelationCurve rdf(const Trajectory& traj, double r_max, int n_bins) {
  const int dim = traj.dim;
  CorrelationCurve out;
  out.metric = "rdf";
  out.abscissa_name = "radius";
  out.values.assign(n_bins, 0.0);
  out.counts.assign(n_bins, 0);
  const double dr = r_max / n_bins;
  for (int b = 0; b < n_bins; ++b) out.abscissa.push_back((b + 0.5) * dr);

  double volume = 0.0;
  for (const Snapshot& snap : traj.frames) {
    const ParticleSystem sys = to_system(snap, dim);
    double v = 1.0;
    for (int d = 0; d < dim; ++d) v *= sys.box.lengths[d];
    volume += v;
    const PairSet pairs = build_pairs(sys, r_max);
    for (double r : pairs.dist) {
      const int b = std::min(static_cast<int>(r / dr), n_bins - 1);
      ++out.counts[b];
    }
  }
  volume /= traj.frames.size();
  const double rho = traj.n / volume;
  const int64_t n_frames = static_cast<int64_t>(traj.frames.size());
  for (int b = 0; b < n_bins; ++b) {
    const double lo = b * dr, hi = (b + 1) * dr;
    const double shell = dim == 3
                             ? 4.0 * M_PI / 3.0 * (hi * hi * hi - lo * lo * lo)
                             : M_PI * (hi * hi - lo * lo);
    // Each stored half-pair contributes to two particles' shells.
    out.values[b] = 2.0 * out.counts[b] /
                    (static_cast<double>(n_frames) * traj.n * rho * shell);
  }
  out.n_origins = n_frames;
  return out;
}

CorrelationCurve msd(const Trajectory& traj, int max_lag, int origin_stride) {
  const int frames = static_cast<int>(traj.frames.size());
  if (frames < max_lag + 1)
    throw InsufficientSnapshots("msd: need " + std::to_string(max_lag + 1) +
                                " snapshots, have " + std::to_string(frames));
  const bool periodic =
      traj.frames.front().box.mode != BoundaryMode::open;
  if (periodic && !traj.has_images())
    throw MissingUnwrapData("msd: trajectory carries no image flags");
  const int dim = traj.dim;

  // Unwrap once.
  std::vector<std::vector<double>> unwrapped(frames);
  for (int f = 0; f < frames; ++f) {
    const Snapshot& s = traj.frames[f];
    unwrapped[f] = s.r;
    if (periodic)
      for (int i = 0; i < traj.n; ++i)
        for (int d = 0; d < dim; ++d)
          unwrapped[f][static_cast<std::size_t>(i) * dim + d] +=
              s.image[static_cast<std::size_t>(i) * dim + d] *
              s.box.lengths[d];
  }

  CorrelationCurve out;
  out.metric = "msd";
  out.abscissa_name = "time_lag";
  out.abscissa.resize(max_lag + 1);
  out.values.assign(max_lag + 1, 0.0);
  out.counts.assign(max_lag + 1, 0);
  for (int lag = 0; lag <= max_lag; ++lag) {
    out.abscissa[lag] = lag * traj.dt;
    double acc = 0.0;
    int64_t count = 0;
    for (int tau = 0; tau + lag < frames; tau += origin_stride) {
      for (int i = 0; i < traj.n; ++i) {
        double d2 = 0.0;
        for (int d = 0; d < dim; ++d) {
          const double dx =
              unwrapped[tau + lag][static_cast<std::size_t>(i) * dim + d] -
              unwrapped[tau][static_cast<std::size_t>(i) * dim + d];
          d2 += dx * dx;
        }
        acc += d2;
        ++count;
      }
    }
    out.values[lag] = acc / count;
    out.counts[lag] = count;
    if (lag == 0) out.n_origins = count / traj.n;
  }
  return out;
}

std::vector<double> d2min(const Snapshot& a, const Snapshot& b, int dim,
                          double h) {
  if (a.r.size() != b.r.size())
    throw InconsistentFrame("d2min: snapshots differ in particle count");
  const ParticleSystem sys_a = to_system(a, dim);
  const ParticleSystem sys_b = to_system(b, dim);
  const PairSet pairs = build_pairs(sys_a, h);

  // Gather neighbor lists from the half-pair set.
  const int n = sys_a.n;
  std::vector<std::vector<int>> nbrs(n);
  for (const auto& pr : pairs.pairs) {
    nbrs[pr.i].push_back(pr.j);
    nbrs[pr.j].push_back(pr.i);
  }

  std::vector<double> out(n, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> m(dim * dim), p(dim * dim);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(nbrs[i].size()) < dim) continue;
    std::fill(m.begin(), m.end(), 0.0);
    std::fill(p.begin(), p.end(), 0.0);
    std::vector<std::array<double, 3>> da(nbrs[i].size()), db(nbrs[i].size());
    for (std::size_t k = 0; k < nbrs[i].size(); ++k) {
      const int j = nbrs[i][k];
      for (int d = 0; d < dim; ++d) {
        da[k][d] = sys_a.pos(j)[d] - sys_a.pos(i)[d];
        db[k][d] = sys_b.pos(j)[d] - sys_b.pos(i)[d];
      }
      minimum_image(std::span<double>(da[k].data(), dim), sys_a.box);
      minimum_image(std::span<double>(db[k].data(), dim), sys_b.box);
      for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c) {
          m[r * dim + c] += da[k][r] * da[k][c];
          p[r * dim + c] += db[k][r] * da[k][c];
        }
    }
    // Solve J M = P row by row (M symmetric).
    std::vector<double> jmat(dim * dim);
    bool ok = true;
    for (int r = 0; r < dim && ok; ++r) {
      std::vector<double> rhs(dim);
      for (int c = 0; c < dim; ++c) rhs[c] = p[r * dim + c];
      ok = solve_dense(m, rhs, dim);
      for (int c = 0; c < dim; ++c) jmat[r * dim + c] = rhs[c];
    }
    if (!ok) continue;  // rank-deficient neighborhood: flagged NaN
    double resid = 0.0;
    for (std::size_t k = 0; k < nbrs[i].size(); ++k) {
      for (int r = 0; r < dim; ++r) {
        double pred = 0.0;
        for (int c = 0; c < dim; ++c) pred += jmat[r * dim + c] * da[k][c];
        const double diff = db[k][r] - pred;
        resid += diff * diff;
      }
    }
    out[i] = resid / nbrs[i].size();
  }
  return out;
}

double l2_rel_error(const CorrelationCurve& gt, const CorrelationCurve& pred) {
  if (gt.values.size() != pred.values.size())
    throw ShapeMismatch("l2_rel_error: curves have different lengths");
  for (std::size_t k = 0; k < gt.abscissa.size(); ++k)
    if (std::fabs(gt.abscissa[k] - pred.abscissa[k]) > 1e-12)
      throw ShapeMismatch("l2_rel_error: abscissa grids differ");
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < gt.values.size(); ++k) {
    const double d = gt.values[k] - pred.values[k];
    num += d * d;
    den += gt.values[k] * gt.values[k];
  }
  if (den == 0.0) throw ZeroReference("l2_rel_error: reference curve is zero");
  return std::sqrt(num) / std::sqrt(den);
}

CorrelationCurve shear_profile(const Trajectory& traj, int n_bins, int axis) {
  const int dim = traj.dim;
  CorrelationCurve out;
  out.metric = "shear_profile";
  out.abscissa_name = "gradient_coordinate";
  out.values.assign(n_bins, 0.0);
  out.counts.assign(n_bins, 0);
  const double L = traj.frames.front().box.lengths[axis];
  const double dz = L / n_bins;
  for (int b = 0; b < n_bins; ++b) out.abscissa.push_back((b + 0.5) * dz);
  for (const Snapshot& snap : traj.frames) {
    for (int i = 0; i < traj.n; ++i) {
      const double z = snap.r[static_cast<std::size_t>(i) * dim + axis];
      const int b = std::min(std::max(static_cast<int>(z / dz), 0), n_bins - 1);
      out.values[b] += snap.v[static_cast<std::size_t>(i) * dim];
      ++out.counts[b];
    }
  }
  for (int b = 0; b < n_bins; ++b)
    out.values[b] = out.counts[b] > 0
                        ? out.values[b] / out.counts[b]
                        : std::numeric_limits<double>::quiet_NaN();
  out.n_origins = static_cast<int64_t>(traj.frames.size());
  return out;
}

void write_csv(const CorrelationCurve& curve, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error("cannot open '" + path + "' for writing");
  std::fprintf(f, "# %s, %s, %lld\n", curve.metric.c_str(),
               curve.abscissa_name.c_str(),
               static_cast<long long>(curve.n_origins));
  std::fprintf(f, "%s,value,count\n", curve.abscissa_name.c_str());
  for (std::size_t k = 0; k < curve.values.size(); ++k)
    std::fprintf(f, "%.17g,%.17g,%lld\n", curve.abscissa[k], curve.values[k],
                 static_cast<long long>(
                     k < curve.counts.size() ? curve.counts[k] : 0));
  std::fclose(f);
}

}  // namespace ddpd
