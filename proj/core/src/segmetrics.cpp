#include <cmath>
#include <limits>

#include "cine/error.hpp"
#include "cine/segqc.hpp"

namespace cine::segqc {

namespace {

void check_shapes(const LabelFrame& a, const LabelFrame& b) {
  if (a.nx != b.nx || a.ny != b.ny) fail(ErrorCode::Shape, "label frames differ in shape");
}

struct Point {
  double x, y;
};

std::vector<Point> boundary(const LabelFrame& m, std::uint8_t label, reg::Spacing sp) {
  std::vector<Point> pts;
  auto inside = [&](int x, int y) { return x >= 0 && y >= 0 && x < m.nx && y < m.ny && m(x, y) == label; };
  for (int y = 0; y < m.ny; ++y)
    for (int x = 0; x < m.nx; ++x)
      if (m(x, y) == label &&
          (!inside(x - 1, y) || !inside(x + 1, y) || !inside(x, y - 1) || !inside(x, y + 1)))
        pts.push_back({x * sp.dx_mm, y * sp.dy_mm});
  return pts;
}

void directed(const std::vector<Point>& from, const std::vector<Point>& to, double& sum, double& sq, double& mx) {
  for (const Point& p : from) {
    double best = std::numeric_limits<double>::infinity();
    for (const Point& q : to) best = std::min(best, (p.x - q.x) * (p.x - q.x) + (p.y - q.y) * (p.y - q.y));
    const double d = std::sqrt(best);
    sum += d;
    sq += best;
    mx = std::max(mx, d);
  }
}

}  // namespace

const char* phase_name(Phase p) { return p == Phase::ED ? "ED" : "ES"; }

double dice(const LabelFrame& a, const LabelFrame& b, std::uint8_t label) {
  check_shapes(a, b);
  std::size_t na = 0, nb = 0, both = 0;
  for (std::size_t i = 0; i < a.px.size(); ++i) {
    const bool ia = a.px[i] == label, ib = b.px[i] == label;
    na += ia;
    nb += ib;
    both += ia && ib;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

SurfaceDistances surface_distances(const LabelFrame& a, const LabelFrame& b, std::uint8_t label,
                                   reg::Spacing spacing) {
  check_shapes(a, b);
  const std::vector<Point> ba = boundary(a, label, spacing), bb = boundary(b, label, spacing);
  if (ba.empty() || bb.empty()) fail(ErrorCode::EmptyMask, "surface distance of an empty mask");
  double sum = 0, sq = 0, mx = 0;
  directed(ba, bb, sum, sq, mx);
  directed(bb, ba, sum, sq, mx);
  const double n = static_cast<double>(ba.size() + bb.size());
  SurfaceDistances d;
  d.msd_mm = sum / n;
  d.rmsd_mm = std::max(d.msd_mm, std::sqrt(sq / n));
  d.hd_mm = std::max(d.rmsd_mm, mx);
  return d;
}

FrameMetrics compare(const LabelFrame& a, const LabelFrame& b, reg::Spacing spacing) {
  FrameMetrics out;
  for (int s = 0; s < kNumStructures; ++s) {
    StructureMetrics& m = out[s];
    m.dsc = dice(a, b, kStructures[s]);
    try {
      const SurfaceDistances d = surface_distances(a, b, kStructures[s], spacing);
      m.msd_mm = d.msd_mm;
      m.rmsd_mm = d.rmsd_mm;
      m.hd_mm = d.hd_mm;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EmptyMask) throw;
      m.defined = false;
    }
  }
  return out;
}

}  // namespace cine::segqc
