#include "ddpd/trajectory.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ddpd/errors.hpp"

namespace ddpd {

Snapshot to_snapshot(const ParticleSystem& sys, int64_t step) {
  Snapshot s;
  s.step = step;
  s.box = sys.box;
  s.r = sys.r;
  s.v = sys.v;
  s.image = sys.image;
  s.entropy = sys.entropy;
  return s;
}

ParticleSystem to_system(const Snapshot& snap, int dim) {
  ParticleSystem sys = make_system(static_cast<int>(snap.r.size()) / dim, dim,
                                   snap.box);
  sys.r = snap.r;
  sys.v = snap.v;
  if (!snap.image.empty()) sys.image = snap.image;
  if (!snap.entropy.empty()) sys.entropy = snap.entropy;
  return sys;
}

void write_dump(const Trajectory& traj, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error("cannot open '" + path + "' for writing");
  const int dim = traj.dim;
  for (const Snapshot& snap : traj.frames) {
    const int n = static_cast<int>(snap.r.size()) / dim;
    std::fprintf(f, "ITEM: TIMESTEP\n%" PRId64 "\n", snap.step);
    std::fprintf(f, "ITEM: NUMBER OF ATOMS\n%d\n", n);
    const bool le = snap.box.mode == BoundaryMode::lees_edwards;
    const char* flag = snap.box.mode == BoundaryMode::open ? "ff" : "pp";
    if (le)
      std::fprintf(f, "ITEM: BOX BOUNDS xy xz yz");
    else
      std::fprintf(f, "ITEM: BOX BOUNDS");
    for (int d = 0; d < dim; ++d) std::fprintf(f, " %s", flag);
    std::fprintf(f, "\n");
    for (int d = 0; d < dim; ++d) {
      if (le)
        std::fprintf(f, "%.17g %.17g %.17g\n", 0.0, snap.box.lengths[d],
                     d == 0 ? snap.box.shear_offset : 0.0);
      else
        std::fprintf(f, "%.17g %.17g\n", 0.0, snap.box.lengths[d]);
    }
    const bool with_images = !snap.image.empty();
    std::fprintf(f, "ITEM: ATOMS id");
    const char* axes[3] = {"x", "y", "z"};
    for (int d = 0; d < dim; ++d) std::fprintf(f, " %s", axes[d]);
    for (int d = 0; d < dim; ++d) std::fprintf(f, " v%s", axes[d]);
    if (with_images)
      for (int d = 0; d < dim; ++d) std::fprintf(f, " i%s", axes[d]);
    std::fprintf(f, "\n");
    for (int i = 0; i < n; ++i) {
      std::fprintf(f, "%d", i + 1);
      for (int d = 0; d < dim; ++d)
        std::fprintf(f, " %.17g", snap.r[static_cast<std::size_t>(i) * dim + d]);
      for (int d = 0; d < dim; ++d)
        std::fprintf(f, " %.17g", snap.v[static_cast<std::size_t>(i) * dim + d]);
      if (with_images)
        for (int d = 0; d < dim; ++d)
          std::fprintf(f, " %" PRId64,
                       snap.image[static_cast<std::size_t>(i) * dim + d]);
      std::fprintf(f, "\n");
    }
  }
  std::fclose(f);
}

namespace {

struct LineReader {
  std::ifstream in;
  int lineno = 0;
  std::string line;

  explicit LineReader(const std::string& path) : in(path) {}

  bool next() {
    if (!std::getline(in, line)) return false;
    ++lineno;
    return true;
  }
  void require(const std::string& what) {
    if (!next())
      throw ParseError("dump: unexpected end of file at line " +
                       std::to_string(lineno + 1) + " (expected " + what + ")");
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("dump line " + std::to_string(lineno) + ": " + msg);
  }
};

}  // namespace

Trajectory read_dump(const std::string& path) {
  LineReader rd(path);
  if (!rd.in) throw Error("cannot open '" + path + "'");
  Trajectory traj;
  traj.dim = 0;
  bool with_images = false;

  while (rd.next()) {
    if (rd.line.empty()) continue;
    if (rd.line.rfind("ITEM: TIMESTEP", 0) != 0)
      rd.fail("expected 'ITEM: TIMESTEP', got '" + rd.line + "'");
    Snapshot snap;
    rd.require("timestep value");
    try {
      snap.step = std::stoll(rd.line);
    } catch (...) {
      rd.fail("bad timestep '" + rd.line + "'");
    }
    rd.require("ITEM: NUMBER OF ATOMS");
    if (rd.line.rfind("ITEM: NUMBER OF ATOMS", 0) != 0)
      rd.fail("expected 'ITEM: NUMBER OF ATOMS'");
    rd.require("atom count");
    int n = 0;
    try {
      n = std::stoi(rd.line);
    } catch (...) {
      rd.fail("bad atom count '" + rd.line + "'");
    }
    if (n < 1) rd.fail("frame must contain at least one atom");

    rd.require("ITEM: BOX BOUNDS");
    if (rd.line.rfind("ITEM: BOX BOUNDS", 0) != 0)
      rd.fail("expected 'ITEM: BOX BOUNDS'");
    const bool le = rd.line.find("xy xz yz") != std::string::npos;
    const bool open_box = rd.line.find("ff") != std::string::npos;
    std::istringstream hdr(rd.line.substr(std::strlen("ITEM: BOX BOUNDS")));
    int nflags = 0;
    for (std::string tok; hdr >> tok;)
      if (tok == "pp" || tok == "ff" || tok == "ss") ++nflags;
    const int dim = nflags;
    if (dim != 2 && dim != 3) rd.fail("unsupported dimension");
    if (traj.dim == 0) traj.dim = dim;
    if (traj.dim != dim) rd.fail("frame dimension changed mid-file");

    snap.box.dim = dim;
    snap.box.mode = le ? BoundaryMode::lees_edwards
                       : (open_box ? BoundaryMode::open
                                   : BoundaryMode::periodic);
    for (int d = 0; d < dim; ++d) {
      rd.require("box bounds row");
      std::istringstream row(rd.line);
      double lo = 0, hi = 0, tilt = 0;
      if (!(row >> lo >> hi)) rd.fail("bad box bounds row");
      if (le && d == 0 && !(row >> tilt)) rd.fail("missing xy tilt");
      snap.box.lengths[d] = hi - lo;
      if (d == 0) snap.box.shear_offset = tilt;
      if (snap.box.lengths[d] <= 0) rd.fail("nonpositive box length");
    }

    rd.require("ITEM: ATOMS header");
    if (rd.line.rfind("ITEM: ATOMS", 0) != 0)
      rd.fail("expected 'ITEM: ATOMS'");
    std::istringstream cols_in(rd.line.substr(std::strlen("ITEM: ATOMS")));
    std::vector<std::string> cols;
    for (std::string tok; cols_in >> tok;) cols.push_back(tok);
    const bool frame_images =
        std::find(cols.begin(), cols.end(), "ix") != cols.end();
    const std::size_t expected_cols =
        1 + 2 * static_cast<std::size_t>(dim) + (frame_images ? dim : 0);
    if (cols.size() != expected_cols || cols[0] != "id")
      rd.fail("unsupported ATOMS columns");
    if (traj.frames.empty())
      with_images = frame_images;
    else if (with_images != frame_images)
      throw InconsistentFrame("dump line " + std::to_string(rd.lineno) +
                              ": image flags present in some frames only");

    snap.r.assign(static_cast<std::size_t>(n) * dim, 0.0);
    snap.v.assign(static_cast<std::size_t>(n) * dim, 0.0);
    if (frame_images) snap.image.assign(static_cast<std::size_t>(n) * dim, 0);
    std::vector<bool> seen(n, false);
    for (int row = 0; row < n; ++row) {
      rd.require("atom row");
      std::istringstream rs(rd.line);
      int64_t id = 0;
      if (!(rs >> id)) rd.fail("bad atom id");
      if (id < 1 || id > n)
        throw InconsistentFrame("dump line " + std::to_string(rd.lineno) +
                                ": atom id " + std::to_string(id) +
                                " outside 1.." + std::to_string(n));
      if (seen[id - 1])
        throw InconsistentFrame("dump line " + std::to_string(rd.lineno) +
                                ": duplicate atom id " + std::to_string(id));
      seen[id - 1] = true;
      const std::size_t base = static_cast<std::size_t>(id - 1) * dim;
      for (int d = 0; d < dim; ++d)
        if (!(rs >> snap.r[base + d])) rd.fail("bad position value");
      for (int d = 0; d < dim; ++d)
        if (!(rs >> snap.v[base + d])) rd.fail("bad velocity value");
      if (frame_images)
        for (int d = 0; d < dim; ++d)
          if (!(rs >> snap.image[base + d])) rd.fail("bad image flag");
    }

    if (traj.n == 0)
      traj.n = n;
    else if (traj.n != n)
      throw InconsistentFrame("dump line " + std::to_string(rd.lineno) +
                              ": atom count changed between frames");
    if (!traj.frames.empty() && snap.step <= traj.frames.back().step)
      throw InconsistentFrame(
          "dump: timesteps not strictly increasing at line " +
          std::to_string(rd.lineno));
    traj.frames.push_back(std::move(snap));
  }
  if (traj.frames.empty())
    throw ParseError("dump: no frames in '" + path + "'");
  return traj;
}

}  // namespace ddpd
