#include "cine/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>
#include <random>

#include "cine/error.hpp"

namespace cine::phantom {
namespace {

using std::numbers::pi;

struct SliceShape {
  double endo = 0;
  double epi = 0;
  double rv = 0;
  double rv_offset = 0;
};

// Linear taper from base (slice 0) to apex.
double slice_scale(const PhantomSpec& spec, int slice) {
  if (spec.n_slices <= 1) return 1.0;
  return 1.0 - 0.35 * static_cast<double>(slice) / static_cast<double>(spec.n_slices - 1);
}

// `phase` is sin^2(pi t / T) in [0, 1].
SliceShape shape_at(const PhantomSpec& spec, int slice, double phase) {
  const double f = slice_scale(spec, slice);
  const double endo_ed = spec.lv_endo_radius_mm * f;
  const double epi_ed = spec.lv_epi_radius_mm * f;
  SliceShape s;
  s.endo = endo_ed - (endo_ed - spec.contraction * endo_ed) * phase;
  s.epi = std::sqrt(s.endo * s.endo + epi_ed * epi_ed - endo_ed * endo_ed);
  s.rv = spec.rv_radius_mm * f * (1.0 - (1.0 - spec.contraction) * phase);
  s.rv_offset = spec.rv_offset_mm * f;
  return s;
}

double frame_phase(int t, int n_frames) {
  const double s = std::sin(pi * static_cast<double>(t) / static_cast<double>(n_frames));
  return s * s;
}

double lv_area(const SliceShape& s) { return pi * s.endo * s.endo; }
double rv_area(const SliceShape& s) { return pi * s.rv * s.rv - lens_area(s.rv, s.epi, s.rv_offset); }

}  // namespace

Geometry PhantomSpec::geometry() const {
  Geometry g;
  g.dx_mm = dx_mm;
  g.dy_mm = dy_mm;
  g.slice_thickness_mm = slice_thickness_mm;
  g.slice_gap_mm = slice_gap_mm;
  g.tr_ms = tr_ms;
  g.n_frames = n_frames;
  return g;
}

void PhantomSpec::validate() const {
  if (nx < 8 || ny < 8) fail(ErrorCode::Spec, "phantom grid must be at least 8x8");
  if (n_frames < 2 || n_slices < 1) fail(ErrorCode::Spec, "phantom needs >= 2 frames and >= 1 slice");
  geometry().validate();
  if (!(lv_endo_radius_mm > 0 && lv_epi_radius_mm > lv_endo_radius_mm))
    fail(ErrorCode::Spec, "need epicardial radius > endocardial radius > 0");
  if (!(contraction > 0.3 && contraction < 0.95)) fail(ErrorCode::Spec, "contraction fraction outside (0.3, 0.95)");
  if (!(rv_radius_mm > 0 && rv_offset_mm > 0)) fail(ErrorCode::Spec, "RV radius and offset must be positive");
  // The RV disc must overlap the LV epicardium without swallowing it, at ED and ES.
  for (double phase : {0.0, 1.0}) {
    const SliceShape s = shape_at(*this, 0, phase);
    if (s.rv_offset >= s.rv + s.epi) fail(ErrorCode::Spec, "RV disc does not abut the LV");
    if (s.rv_offset + s.epi <= s.rv) fail(ErrorCode::Spec, "RV disc encloses the LV");
    if (s.rv_offset + s.rv <= s.epi) fail(ErrorCode::Spec, "RV disc lies inside the LV");
  }
  const double half_x = 0.5 * nx * dx_mm;
  const double half_y = 0.5 * ny * dy_mm;
  const double lv_shift = 0.25 * rv_offset_mm;
  if (lv_shift + lv_epi_radius_mm > half_x || rv_offset_mm - lv_shift + rv_radius_mm > half_x ||
      lv_epi_radius_mm > half_y || rv_radius_mm > half_y)
    fail(ErrorCode::Spec, "phantom anatomy does not fit the field of view");
}

double lens_area(double r1, double r2, double d) {
  if (d >= r1 + r2) return 0.0;
  if (d <= std::abs(r1 - r2)) {
    const double r = std::min(r1, r2);
    return pi * r * r;
  }
  const double a1 = std::acos(std::clamp((d * d + r1 * r1 - r2 * r2) / (2 * d * r1), -1.0, 1.0));
  const double a2 = std::acos(std::clamp((d * d + r2 * r2 - r1 * r1) / (2 * d * r2), -1.0, 1.0));
  const double k = (-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2);
  return r1 * r1 * a1 + r2 * r2 * a2 - 0.5 * std::sqrt(std::max(k, 0.0));
}

cardio::VolumeCurve analytic_curve(const PhantomSpec& spec) {
  cardio::VolumeCurve curve;
  const double spacing = spec.slice_thickness_mm + spec.slice_gap_mm;
  for (int t = 0; t < spec.n_frames; ++t) {
    const double phase = frame_phase(t, spec.n_frames);
    double lv = 0, rv = 0, myo = 0;
    for (int s = 0; s < spec.n_slices; ++s) {
      const SliceShape sh = shape_at(spec, s, phase);
      lv += lv_area(sh);
      rv += rv_area(sh);
      myo += pi * (sh.epi * sh.epi - sh.endo * sh.endo);
    }
    curve.lv_ml.push_back(lv * spacing / 1000.0);
    curve.rv_ml.push_back(rv * spacing / 1000.0);
    curve.myo_ml.push_back(myo * spacing / 1000.0);
  }
  return curve;
}

cardio::FunctionalParams analytic_params(const PhantomSpec& spec) {
  // Extremes of the continuous cycle: sin^2 sweeps [0, 1]. The LV volume is
  // monotone in the phase; the RV volume is scanned densely.
  const double spacing = spec.slice_thickness_mm + spec.slice_gap_mm;
  auto volumes = [&](double phase) {
    double lv = 0, rv = 0;
    for (int s = 0; s < spec.n_slices; ++s) {
      const SliceShape sh = shape_at(spec, s, phase);
      lv += lv_area(sh);
      rv += rv_area(sh);
    }
    return std::pair{lv * spacing / 1000.0, rv * spacing / 1000.0};
  };
  cardio::FunctionalParams p;
  p.lv_edv_ml = volumes(0.0).first;
  p.lv_esv_ml = volumes(1.0).first;
  double rv_max = 0, rv_min = std::numeric_limits<double>::infinity();
  constexpr int kSteps = 2000;
  for (int i = 0; i <= kSteps; ++i) {
    const double rv = volumes(static_cast<double>(i) / kSteps).second;
    rv_max = std::max(rv_max, rv);
    rv_min = std::min(rv_min, rv);
  }
  p.rv_edv_ml = rv_max;
  p.rv_esv_ml = rv_min;
  p.lv_ef = (p.lv_edv_ml - p.lv_esv_ml) / p.lv_edv_ml;
  p.rv_ef = rv_max > 0 ? (rv_max - rv_min) / rv_max : 0.0;
  return p;
}

PhantomCase generate(const PhantomSpec& spec) {
  spec.validate();
  const Geometry g = spec.geometry();
  const Shape4 shape{spec.nx, spec.ny, spec.n_slices, spec.n_frames};

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> jitter(-0.5, 0.5);
  // LV sits right of centre so the RV crescent on the left stays in view.
  const double lv_cx = 0.25 * spec.rv_offset_mm + jitter(rng) * spec.dx_mm;
  const double lv_cy = jitter(rng) * spec.dy_mm;

  PhantomCase out{CineVolume(shape, g, false), LabelMap(shape, g), analytic_params(spec), analytic_curve(spec)};
  for (int t = 0; t < spec.n_frames; ++t) {
    const double phase = frame_phase(t, spec.n_frames);
    for (int s = 0; s < spec.n_slices; ++s) {
      const SliceShape sh = shape_at(spec, s, phase);
      const double rv_cx = lv_cx - sh.rv_offset;
      for (int y = 0; y < spec.ny; ++y) {
        const double py = (y - 0.5 * (spec.ny - 1)) * spec.dy_mm;
        for (int x = 0; x < spec.nx; ++x) {
          const double px = (x - 0.5 * (spec.nx - 1)) * spec.dx_mm;
          const double r_lv = std::hypot(px - lv_cx, py - lv_cy);
          const double r_rv = std::hypot(px - rv_cx, py - lv_cy);
          std::uint8_t label = kBackground;
          double value = spec.background;
          if (r_lv < sh.endo) {
            label = kLvBloodPool;
            value = spec.blood;
          } else if (r_lv < sh.epi) {
            label = kLvMyocardium;
            value = spec.myocardium;
          } else if (r_rv < sh.rv) {
            label = kRvBloodPool;
            value = spec.blood;
          }
          out.labels.at(x, y, s, t) = label;
          out.image.at(x, y, s, t) = value;
        }
      }
    }
  }
  return out;
}

std::vector<PhantomSpec> make_cohort(const PhantomSpec& base, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<PhantomSpec> cohort;
  cohort.reserve(n);
  for (int i = 0; i < n; ++i) {
    PhantomSpec s = base;
    const double size = 0.88 + 0.24 * unit(rng);
    const double wall = 0.8 + 0.4 * unit(rng);
    s.lv_endo_radius_mm = base.lv_endo_radius_mm * size;
    s.lv_epi_radius_mm = s.lv_endo_radius_mm + (base.lv_epi_radius_mm - base.lv_endo_radius_mm) * wall;
    s.rv_radius_mm = base.rv_radius_mm * (0.92 + 0.16 * unit(rng));
    s.rv_offset_mm = base.rv_offset_mm * (0.95 + 0.1 * unit(rng));
    s.contraction = 0.55 + 0.3 * unit(rng);
    s.seed = seed * 1000003ULL + static_cast<std::uint64_t>(i) + 1;
    cohort.push_back(s);
  }
  return cohort;
}

}  // namespace cine::phantom
