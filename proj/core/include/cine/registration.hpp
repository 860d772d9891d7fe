#pragma once

#include <array>

#include "cine/volume.hpp"

namespace cine::reg {

// Physical coordinates in mm with the origin at the image centre:
//   x_mm = (i - (nx - 1) / 2) * dx,  y_mm = (j - (ny - 1) / 2) * dy.
struct Spacing {
  double dx_mm = 1.0;
  double dy_mm = 1.0;
};

// Maps fixed-image points to moving-image points:
//   x' = m[0] x + m[1] y + m[2],  y' = m[3] x + m[4] y + m[5].
struct AffineTransform2D {
  std::array<double, 6> m{1, 0, 0, 0, 1, 0};

  static AffineTransform2D identity() { return {}; }
  static AffineTransform2D translation(double tx_mm, double ty_mm);
  // Counter-clockwise rotation about the image centre.
  static AffineTransform2D rotation(double angle_rad);

  double det() const { return m[0] * m[4] - m[1] * m[3]; }
  void apply(double x, double y, double& xo, double& yo) const {
    xo = m[0] * x + m[1] * y + m[2];
    yo = m[3] * x + m[4] * y + m[5];
  }
  // SingularTransform when |det| <= 1e-6.
  AffineTransform2D inverse() const;
  void validate() const;
  // this(other(p))
  AffineTransform2D compose(const AffineTransform2D& other) const;
};

struct RegistrationOptions {
  int levels = 3;
  int iterations = 100;
  // Step schedule per level, in units of that level's pixel size: decays
  // geometrically from `initial_step` to `final_step`.
  double initial_step = 1.0;
  double final_step = 0.01;
};

// Sum of squared differences between `fixed` and `moving` resampled through
// the transform, averaged over fixed pixels. Out-of-bounds samples read 0.
double ssd(const Image& moving, const Image& fixed, const AffineTransform2D& t, Spacing spacing);

// Multi-resolution normalized-gradient descent on the six affine parameters
// with a fixed decaying step schedule. Starts at the identity and only accepts
// steps that lower the SSD, so the result is never worse than the identity.
AffineTransform2D register_affine(const Image& moving, const Image& fixed, Spacing spacing,
                                  const RegistrationOptions& options = {});

// Resamples `moving` onto the fixed grid: out(p) = moving(T(p)).
Image warp(const Image& moving, const AffineTransform2D& t, Spacing spacing);
LabelFrame warp(const LabelFrame& moving, const AffineTransform2D& t, Spacing spacing);
// Output grid of a different size than the input.
Image warp(const Image& moving, const AffineTransform2D& t, Spacing spacing, int out_nx, int out_ny);
LabelFrame warp(const LabelFrame& moving, const AffineTransform2D& t, Spacing spacing, int out_nx, int out_ny);

}  // namespace cine::reg
