#include "cine/volume.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cine/error.hpp"

namespace cine {

void Geometry::validate() const {
  if (!(dx_mm > 0 && dy_mm > 0 && slice_thickness_mm > 0 && slice_gap_mm >= 0 && tr_ms > 0))
    fail(ErrorCode::Spec, "geometry spacings must be positive");
  if (n_frames < 2) fail(ErrorCode::Spec, "geometry needs at least 2 frames");
}

const char* structure_name(Label label) {
  switch (label) {
    case kLvBloodPool: return "LVBP";
    case kLvMyocardium: return "LVM";
    case kRvBloodPool: return "RVBP";
    default: return "BG";
  }
}

CineVolume::CineVolume(Shape4 shape, Geometry geometry, bool complex_valued)
    : shape_(shape), geometry_(geometry), complex_(complex_valued), data_(shape.size()) {}

CineVolume::CineVolume(Shape4 shape, Geometry geometry, std::vector<cplx> data, bool complex_valued)
    : shape_(shape), geometry_(geometry), complex_(complex_valued), data_(std::move(data)) {
  if (data_.size() != shape_.size()) fail(ErrorCode::Shape, "payload size does not match shape");
}

Frame CineVolume::frame(int slice, int t) const {
  Frame f(shape_.nx, shape_.ny);
  auto first = data_.begin() + static_cast<std::ptrdiff_t>(shape_.index(0, 0, slice, t));
  std::copy(first, first + static_cast<std::ptrdiff_t>(shape_.frame_size()), f.px.begin());
  return f;
}

void CineVolume::set_frame(int slice, int t, const Frame& f) {
  if (f.nx != shape_.nx || f.ny != shape_.ny) fail(ErrorCode::Shape, "frame does not match volume");
  std::copy(f.px.begin(), f.px.end(),
            data_.begin() + static_cast<std::ptrdiff_t>(shape_.index(0, 0, slice, t)));
}

FrameStack CineVolume::slice_stack(int slice) const {
  FrameStack stack;
  stack.reserve(shape_.nframes);
  for (int t = 0; t < shape_.nframes; ++t) stack.push_back(frame(slice, t));
  return stack;
}

void CineVolume::set_slice_stack(int slice, const FrameStack& stack) {
  if (static_cast<int>(stack.size()) != shape_.nframes) fail(ErrorCode::Shape, "frame count mismatch");
  for (int t = 0; t < shape_.nframes; ++t) set_frame(slice, t, stack[t]);
}

Image CineVolume::magnitude_frame(int slice, int t) const {
  Image img(shape_.nx, shape_.ny);
  const std::size_t base = shape_.index(0, 0, slice, t);
  for (std::size_t i = 0; i < img.px.size(); ++i) img.px[i] = std::abs(data_[base + i]);
  return img;
}

std::pair<double, double> CineVolume::intensity_range() const {
  if (data_.empty()) return {0.0, 0.0};
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (const cplx& v : data_) {
    const double m = std::abs(v);
    lo = std::min(lo, m);
    hi = std::max(hi, m);
  }
  return {lo, hi};
}

CineVolume CineVolume::magnitude() const {
  std::vector<cplx> mag(data_.size());
  std::transform(data_.begin(), data_.end(), mag.begin(), [](cplx v) { return cplx(std::abs(v), 0.0); });
  return CineVolume(shape_, geometry_, std::move(mag), false);
}

void CineVolume::validate() const {
  if (shape_.nx < 8 || shape_.ny < 8) fail(ErrorCode::Shape, "in-plane size must be at least 8x8");
  if (shape_.nslices < 1 || shape_.nframes < 1) fail(ErrorCode::Shape, "empty slice/frame axis");
  if (data_.size() != shape_.size()) fail(ErrorCode::Shape, "payload size does not match shape");
  for (const cplx& v : data_) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      fail(ErrorCode::NonFiniteImage, "volume contains non-finite values");
    if (!complex_ && v.imag() != 0.0) fail(ErrorCode::Shape, "real volume has imaginary part");
  }
}

LabelMap::LabelMap(Shape4 shape, Geometry geometry)
    : shape_(shape), geometry_(geometry), labels_(shape.size(), 0) {}

LabelFrame LabelMap::frame(int slice, int t) const {
  LabelFrame f(shape_.nx, shape_.ny);
  auto first = labels_.begin() + static_cast<std::ptrdiff_t>(shape_.index(0, 0, slice, t));
  std::copy(first, first + static_cast<std::ptrdiff_t>(shape_.frame_size()), f.px.begin());
  return f;
}

void LabelMap::set_frame(int slice, int t, const LabelFrame& f) {
  if (f.nx != shape_.nx || f.ny != shape_.ny) fail(ErrorCode::Shape, "label frame does not match map");
  std::copy(f.px.begin(), f.px.end(),
            labels_.begin() + static_cast<std::ptrdiff_t>(shape_.index(0, 0, slice, t)));
}

void LabelMap::validate() const {
  if (labels_.size() != shape_.size()) fail(ErrorCode::Shape, "label payload size does not match shape");
  for (std::uint8_t v : labels_)
    if (v > kRvBloodPool) fail(ErrorCode::Spec, "label code outside {0,1,2,3}");
}

}  // namespace cine
