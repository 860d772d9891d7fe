#pragma once

#include <span>
#include <vector>

#include "cine/volume.hpp"

namespace cine::cardio {

// Per-frame chamber volumes in mL.
struct VolumeCurve {
  std::vector<double> lv_ml;
  std::vector<double> rv_ml;
  std::vector<double> myo_ml;

  std::size_t size() const { return lv_ml.size(); }
};

struct FunctionalParams {
  double lv_edv_ml = 0;
  double lv_esv_ml = 0;
  double lv_ef = 0;
  double rv_edv_ml = 0;
  double rv_esv_ml = 0;
  double rv_ef = 0;
  // Set when an EDV was zero and the corresponding EF was forced to 0.
  bool degenerate = false;
};

VolumeCurve volume_curve(const LabelMap& labels);
VolumeCurve volume_curve(const LabelMap& labels, const Geometry& geometry);

FunctionalParams functional_params(const VolumeCurve& curve);

// Frame indices of the maximal and minimal LV volume (first occurrence).
int ed_frame(const VolumeCurve& curve);
int es_frame(const VolumeCurve& curve);

struct BlandAltman {
  double bias = 0;
  double loa_low = 0;
  double loa_high = 0;
};

// bias = mean(a - b); limits = bias -/+ 1.96 * sample sd of the differences.
BlandAltman bland_altman(std::span<const double> a, std::span<const double> b);

double pearson(std::span<const double> a, std::span<const double> b);

}  // namespace cine::cardio
