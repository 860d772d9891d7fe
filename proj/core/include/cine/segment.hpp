#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "cine/volume.hpp"

namespace cine::segment {

// Known tissue intensities of the phantom, in reconstruction units.
struct IntensityModel {
  double background = 0.05;
  double myocardium = 0.35;
  double blood = 1.0;
};

// Nearest-intensity classification followed by connected-component
// cleaning per frame: the largest myocardium component is kept, the blood
// component closest to its centroid becomes the LV pool and the largest
// remaining blood component the RV pool.
// IntensityModelMismatch when the image does not look like the model.
LabelMap phantom_threshold(const CineVolume& image, const IntensityModel& model = {});

// Masks of a subject: <dir>/<subject>/seg_t<time>.nii when present for the
// scan time, otherwise <dir>/<subject>/seg.nii. MissingMask if neither exists
// or the shape differs from `shape`.
LabelMap external_mask(const std::filesystem::path& dir, const std::string& subject, std::optional<double> scan_time_s,
                       const Shape4& shape);

std::string scan_time_tag(double scan_time_s);

}  // namespace cine::segment
