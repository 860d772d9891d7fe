#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace cine {

using cplx = std::complex<double>;

// Acquisition geometry. Defaults follow the UK Biobank short-axis cine protocol.
struct Geometry {
  double dx_mm = 1.8;
  double dy_mm = 1.8;
  double slice_thickness_mm = 8.0;
  double slice_gap_mm = 2.0;
  double tr_ms = 2.6;
  int n_frames = 50;

  double slice_spacing_mm() const { return slice_thickness_mm + slice_gap_mm; }
  double voxel_volume_mm3() const { return dx_mm * dy_mm * slice_spacing_mm(); }
  void validate() const;

  bool operator==(const Geometry&) const = default;
};

struct Shape4 {
  int nx = 0;
  int ny = 0;
  int nslices = 1;
  int nframes = 1;

  std::size_t size() const {
    return static_cast<std::size_t>(nx) * ny * nslices * nframes;
  }
  std::size_t frame_size() const { return static_cast<std::size_t>(nx) * ny; }
  // x fastest, frame slowest.
  std::size_t index(int x, int y, int s, int t) const {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(nx) *
               (static_cast<std::size_t>(y) +
                static_cast<std::size_t>(ny) *
                    (static_cast<std::size_t>(s) + static_cast<std::size_t>(nslices) * t));
  }

  bool operator==(const Shape4&) const = default;
};

// One 2-D complex image, x fastest.
struct Frame {
  int nx = 0;
  int ny = 0;
  std::vector<cplx> px;

  Frame() = default;
  Frame(int nx_, int ny_) : nx(nx_), ny(ny_), px(static_cast<std::size_t>(nx_) * ny_) {}

  cplx& operator()(int x, int y) { return px[static_cast<std::size_t>(y) * nx + x]; }
  const cplx& operator()(int x, int y) const { return px[static_cast<std::size_t>(y) * nx + x]; }
  std::size_t size() const { return px.size(); }
};

// The frames of one slice through the cardiac cycle.
using FrameStack = std::vector<Frame>;

// Real-valued 2-D image used by the analysis modules (metrics, registration).
struct Image {
  int nx = 0;
  int ny = 0;
  std::vector<double> px;

  Image() = default;
  Image(int nx_, int ny_, double fill = 0.0)
      : nx(nx_), ny(ny_), px(static_cast<std::size_t>(nx_) * ny_, fill) {}

  double& operator()(int x, int y) { return px[static_cast<std::size_t>(y) * nx + x]; }
  double operator()(int x, int y) const { return px[static_cast<std::size_t>(y) * nx + x]; }
};

class CineVolume {
public:
  CineVolume() = default;
  CineVolume(Shape4 shape, Geometry geometry, bool complex_valued);
  CineVolume(Shape4 shape, Geometry geometry, std::vector<cplx> data, bool complex_valued);

  const Shape4& shape() const { return shape_; }
  const Geometry& geometry() const { return geometry_; }
  bool is_complex() const { return complex_; }

  std::span<const cplx> data() const { return data_; }
  std::span<cplx> data() { return data_; }

  cplx at(int x, int y, int s, int t) const { return data_[shape_.index(x, y, s, t)]; }
  cplx& at(int x, int y, int s, int t) { return data_[shape_.index(x, y, s, t)]; }

  Frame frame(int slice, int t) const;
  void set_frame(int slice, int t, const Frame& f);
  FrameStack slice_stack(int slice) const;
  void set_slice_stack(int slice, const FrameStack& stack);
  Image magnitude_frame(int slice, int t) const;

  // (min, max) of |value| over the whole volume.
  std::pair<double, double> intensity_range() const;
  CineVolume magnitude() const;

  // Throws Shape/NonFiniteImage when the container invariants do not hold.
  void validate() const;

private:
  Shape4 shape_;
  Geometry geometry_;
  bool complex_ = false;
  std::vector<cplx> data_;
};

enum Label : std::uint8_t {
  kBackground = 0,
  kLvBloodPool = 1,
  kLvMyocardium = 2,
  kRvBloodPool = 3,
};

inline constexpr int kNumStructures = 3;
inline constexpr Label kStructures[kNumStructures] = {kLvBloodPool, kLvMyocardium, kRvBloodPool};
const char* structure_name(Label label);

// Label image of one frame.
struct LabelFrame {
  int nx = 0;
  int ny = 0;
  std::vector<std::uint8_t> px;

  LabelFrame() = default;
  LabelFrame(int nx_, int ny_) : nx(nx_), ny(ny_), px(static_cast<std::size_t>(nx_) * ny_, 0) {}

  std::uint8_t& operator()(int x, int y) { return px[static_cast<std::size_t>(y) * nx + x]; }
  std::uint8_t operator()(int x, int y) const { return px[static_cast<std::size_t>(y) * nx + x]; }
};

class LabelMap {
public:
  LabelMap() = default;
  LabelMap(Shape4 shape, Geometry geometry);

  const Shape4& shape() const { return shape_; }
  const Geometry& geometry() const { return geometry_; }
  std::span<const std::uint8_t> data() const { return labels_; }
  std::span<std::uint8_t> data() { return labels_; }

  std::uint8_t at(int x, int y, int s, int t) const { return labels_[shape_.index(x, y, s, t)]; }
  std::uint8_t& at(int x, int y, int s, int t) { return labels_[shape_.index(x, y, s, t)]; }

  LabelFrame frame(int slice, int t) const;
  void set_frame(int slice, int t, const LabelFrame& f);

  void validate() const;

private:
  Shape4 shape_;
  Geometry geometry_;
  std::vector<std::uint8_t> labels_;
};

}  // namespace cine
