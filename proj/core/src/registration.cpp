#include "cine/registration.hpp"

#include <algorithm>
#include <cmath>

#include "cine/error.hpp"

namespace cine::reg {

namespace {

double centre(int n) { return 0.5 * (n - 1); }

struct Sample {
  double value = 0;
  double dx = 0;  // d value / d x_mm
  double dy = 0;
};

// Bilinear sample at physical (x, y); pixels outside the image read 0.
Sample bilinear(const Image& img, double x_mm, double y_mm, Spacing sp, bool want_gradient) {
  const double fx = x_mm / sp.dx_mm + centre(img.nx);
  const double fy = y_mm / sp.dy_mm + centre(img.ny);
  const double x0f = std::floor(fx), y0f = std::floor(fy);
  if (x0f < -1 || y0f < -1 || x0f > img.nx - 1 || y0f > img.ny - 1) return {};
  const int x0 = static_cast<int>(x0f), y0 = static_cast<int>(y0f);
  const double ax = fx - x0f, ay = fy - y0f;
  auto px = [&](int x, int y) { return (x < 0 || y < 0 || x >= img.nx || y >= img.ny) ? 0.0 : img(x, y); };
  const double v00 = px(x0, y0), v10 = px(x0 + 1, y0), v01 = px(x0, y0 + 1), v11 = px(x0 + 1, y0 + 1);
  Sample s;
  s.value = (1 - ay) * ((1 - ax) * v00 + ax * v10) + ay * ((1 - ax) * v01 + ax * v11);
  if (want_gradient) {
    s.dx = ((1 - ay) * (v10 - v00) + ay * (v11 - v01)) / sp.dx_mm;
    s.dy = ((1 - ax) * (v01 - v00) + ax * (v11 - v10)) / sp.dy_mm;
  }
  return s;
}

Image downsample(const Image& in) {
  Image out(in.nx / 2, in.ny / 2);
  for (int y = 0; y < out.ny; ++y)
    for (int x = 0; x < out.nx; ++x)
      out(x, y) = 0.25 * (in(2 * x, 2 * y) + in(2 * x + 1, 2 * y) + in(2 * x, 2 * y + 1) + in(2 * x + 1, 2 * y + 1));
  return out;
}

void check_finite(const Image& img) {
  for (double v : img.px)
    if (!std::isfinite(v)) fail(ErrorCode::NonFiniteImage, "registration input is not finite");
}

// Parameters in mm: the linear part is scaled by a characteristic radius so
// that all six components move points by comparable distances.
struct Params {
  std::array<double, 6> p{};

  AffineTransform2D transform(double radius) const {
    AffineTransform2D t;
    t.m = {1 + p[0] / radius, p[1] / radius, p[2], p[3] / radius, 1 + p[4] / radius, p[5]};
    return t;
  }
  static Params from(const AffineTransform2D& t, double radius) {
    Params q;
    q.p = {(t.m[0] - 1) * radius, t.m[1] * radius, t.m[2], t.m[3] * radius, (t.m[4] - 1) * radius, t.m[5]};
    return q;
  }
};

double cost(const Image& moving, const Image& fixed, const AffineTransform2D& t, Spacing sp,
            std::array<double, 6>* grad, double radius) {
  double total = 0;
  std::array<double, 6> g{};
  const double cx = centre(fixed.nx), cy = centre(fixed.ny);
  for (int j = 0; j < fixed.ny; ++j) {
    const double y = (j - cy) * sp.dy_mm;
    for (int i = 0; i < fixed.nx; ++i) {
      const double x = (i - cx) * sp.dx_mm;
      double qx, qy;
      t.apply(x, y, qx, qy);
      const Sample s = bilinear(moving, qx, qy, sp, grad != nullptr);
      const double r = s.value - fixed(i, j);
      total += r * r;
      if (grad) {
        const double gx = 2 * r * s.dx, gy = 2 * r * s.dy;
        g[0] += gx * x / radius;
        g[1] += gx * y / radius;
        g[2] += gx;
        g[3] += gy * x / radius;
        g[4] += gy * y / radius;
        g[5] += gy;
      }
    }
  }
  const double n = static_cast<double>(fixed.px.size());
  if (grad)
    for (int k = 0; k < 6; ++k) (*grad)[k] = g[k] / n;
  return total / n;
}

}  // namespace

AffineTransform2D AffineTransform2D::translation(double tx_mm, double ty_mm) {
  AffineTransform2D t;
  t.m[2] = tx_mm;
  t.m[5] = ty_mm;
  return t;
}

AffineTransform2D AffineTransform2D::rotation(double angle_rad) {
  AffineTransform2D t;
  const double c = std::cos(angle_rad), s = std::sin(angle_rad);
  t.m = {c, -s, 0, s, c, 0};
  return t;
}

void AffineTransform2D::validate() const {
  for (double v : m)
    if (!std::isfinite(v)) fail(ErrorCode::SingularTransform, "transform has non-finite entries");
  if (!(std::abs(det()) > 1e-6)) fail(ErrorCode::SingularTransform, "transform is singular");
}

AffineTransform2D AffineTransform2D::inverse() const {
  validate();
  const double d = det();
  AffineTransform2D r;
  r.m[0] = m[4] / d;
  r.m[1] = -m[1] / d;
  r.m[3] = -m[3] / d;
  r.m[4] = m[0] / d;
  r.m[2] = -(r.m[0] * m[2] + r.m[1] * m[5]);
  r.m[5] = -(r.m[3] * m[2] + r.m[4] * m[5]);
  return r;
}

AffineTransform2D AffineTransform2D::compose(const AffineTransform2D& o) const {
  AffineTransform2D r;
  r.m[0] = m[0] * o.m[0] + m[1] * o.m[3];
  r.m[1] = m[0] * o.m[1] + m[1] * o.m[4];
  r.m[2] = m[0] * o.m[2] + m[1] * o.m[5] + m[2];
  r.m[3] = m[3] * o.m[0] + m[4] * o.m[3];
  r.m[4] = m[3] * o.m[1] + m[4] * o.m[4];
  r.m[5] = m[3] * o.m[2] + m[4] * o.m[5] + m[5];
  return r;
}

double ssd(const Image& moving, const Image& fixed, const AffineTransform2D& t, Spacing spacing) {
  return cost(moving, fixed, t, spacing, nullptr, 1.0);
}

AffineTransform2D register_affine(const Image& moving, const Image& fixed, Spacing spacing,
                                  const RegistrationOptions& options) {
  if (moving.nx < 32 || moving.ny < 32 || fixed.nx < 32 || fixed.ny < 32)
    fail(ErrorCode::TooSmall, "registration needs images of at least 32x32");
  if (options.levels < 1 || options.iterations < 1) fail(ErrorCode::Parameter, "invalid registration schedule");
  if (!(options.initial_step > 0 && options.final_step > 0)) fail(ErrorCode::Parameter, "steps must be positive");
  check_finite(moving);
  check_finite(fixed);

  std::vector<Image> mov{moving}, fix{fixed};
  std::vector<Spacing> sp{spacing};
  for (int l = 1; l < options.levels; ++l) {
    if (std::min({mov.back().nx, mov.back().ny, fix.back().nx, fix.back().ny}) < 32) break;
    mov.push_back(downsample(mov.back()));
    fix.push_back(downsample(fix.back()));
    sp.push_back({sp.back().dx_mm * 2, sp.back().dy_mm * 2});
  }
  const double radius =
      0.5 * std::max(fixed.nx * spacing.dx_mm, fixed.ny * spacing.dy_mm);

  Params best;
  for (int l = static_cast<int>(mov.size()) - 1; l >= 0; --l) {
    const double pixel = std::max(sp[l].dx_mm, sp[l].dy_mm);
    std::array<double, 6> g{};
    double current = cost(mov[l], fix[l], best.transform(radius), sp[l], &g, radius);
    for (int k = 0; k < options.iterations; ++k) {
      double norm = 0;
      for (double v : g) norm += v * v;
      norm = std::sqrt(norm);
      if (!(norm > 0)) break;
      const double frac = options.iterations > 1 ? static_cast<double>(k) / (options.iterations - 1) : 0.0;
      const double step =
          pixel * options.initial_step * std::pow(options.final_step / options.initial_step, frac);
      Params cand = best;
      for (int i = 0; i < 6; ++i) cand.p[i] -= step * g[i] / norm;
      const AffineTransform2D ct = cand.transform(radius);
      if (!(std::abs(ct.det()) > 1e-6)) continue;
      std::array<double, 6> cg{};
      const double c = cost(mov[l], fix[l], ct, sp[l], &cg, radius);
      if (c < current) {
        current = c;
        best = cand;
        g = cg;
      }
    }
  }
  // Guard against coarse-level gains that do not carry to full resolution.
  const AffineTransform2D result = best.transform(radius);
  if (!(ssd(moving, fixed, result, spacing) < ssd(moving, fixed, AffineTransform2D::identity(), spacing)))
    return AffineTransform2D::identity();
  return result;
}

Image warp(const Image& moving, const AffineTransform2D& t, Spacing spacing, int out_nx, int out_ny) {
  t.validate();
  Image out(out_nx, out_ny);
  const double cx = centre(out_nx), cy = centre(out_ny);
  for (int j = 0; j < out_ny; ++j)
    for (int i = 0; i < out_nx; ++i) {
      double qx, qy;
      t.apply((i - cx) * spacing.dx_mm, (j - cy) * spacing.dy_mm, qx, qy);
      out(i, j) = bilinear(moving, qx, qy, spacing, false).value;
    }
  return out;
}

LabelFrame warp(const LabelFrame& moving, const AffineTransform2D& t, Spacing spacing, int out_nx, int out_ny) {
  t.validate();
  LabelFrame out(out_nx, out_ny);
  const double cx = centre(out_nx), cy = centre(out_ny);
  const double mcx = centre(moving.nx), mcy = centre(moving.ny);
  for (int j = 0; j < out_ny; ++j)
    for (int i = 0; i < out_nx; ++i) {
      double qx, qy;
      t.apply((i - cx) * spacing.dx_mm, (j - cy) * spacing.dy_mm, qx, qy);
      const double fx = std::round(qx / spacing.dx_mm + mcx), fy = std::round(qy / spacing.dy_mm + mcy);
      if (fx < 0 || fy < 0 || fx > moving.nx - 1 || fy > moving.ny - 1) continue;
      out(i, j) = moving(static_cast<int>(fx), static_cast<int>(fy));
    }
  return out;
}

Image warp(const Image& moving, const AffineTransform2D& t, Spacing spacing) {
  return warp(moving, t, spacing, moving.nx, moving.ny);
}

LabelFrame warp(const LabelFrame& moving, const AffineTransform2D& t, Spacing spacing) {
  return warp(moving, t, spacing, moving.nx, moving.ny);
}

}  // namespace cine::reg
