#pragma once

#include <cstdint>
#include <vector>

#include "cine/cardio.hpp"
#include "cine/volume.hpp"

namespace cine::phantom {

// Analytic short-axis cine phantom: the LV is a pair of concentric discs
// (blood pool inside the endocardium, myocardial annulus up to the
// epicardium) and the RV is the part of a second disc lying outside the LV
// epicardium, which gives a crescent abutting the septum.
//
// The endocardial radius follows r(t) = r_ED - (r_ED - r_ES) sin^2(pi t / T)
// with r_ES = contraction * r_ED. Myocardial area is conserved, and the RV
// disc radius shrinks by the same contraction law. Slices taper towards the
// apex.
struct PhantomSpec {
  int nx = 64;
  int ny = 64;
  int n_frames = 20;
  int n_slices = 1;
  double dx_mm = 2.5;
  double dy_mm = 2.5;
  double slice_thickness_mm = 8.0;
  double slice_gap_mm = 2.0;
  double tr_ms = 2.6;

  double lv_endo_radius_mm = 20.0;
  double lv_epi_radius_mm = 28.0;
  double rv_radius_mm = 26.0;
  // Distance between the LV and RV disc centres at ED.
  double rv_offset_mm = 30.0;
  double contraction = 0.7;

  double background = 0.05;
  double myocardium = 0.35;
  double blood = 1.0;

  // Drives a small sub-voxel jitter of the heart centre.
  std::uint64_t seed = 0;

  Geometry geometry() const;
  void validate() const;
};

struct PhantomCase {
  CineVolume image;
  LabelMap labels;
  cardio::FunctionalParams reference;
  // Continuous (disc-area) volumes sampled at each frame.
  cardio::VolumeCurve analytic_curve;
};

PhantomCase generate(const PhantomSpec& spec);

// Closed-form ejection fraction and volumes without rasterizing.
cardio::FunctionalParams analytic_params(const PhantomSpec& spec);
cardio::VolumeCurve analytic_curve(const PhantomSpec& spec);

// Deterministic cohort of anatomically varied phantoms around `base`.
std::vector<PhantomSpec> make_cohort(const PhantomSpec& base, int n, std::uint64_t seed);

// Area of the intersection of two discs with radii r1, r2 at centre distance d.
double lens_area(double r1, double r2, double d);

}  // namespace cine::phantom
