#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "cine/error.hpp"
#include "cine/phantom.hpp"
#include "cine/registration.hpp"

using namespace cine;

namespace {

Image phantom_frame() {
  phantom::PhantomSpec spec;
  spec.n_frames = 2;
  return phantom::generate(spec).image.magnitude_frame(0, 0);
}

double max_abs_diff(const reg::AffineTransform2D& a, const reg::AffineTransform2D& b) {
  double d = 0;
  for (int i = 0; i < 6; ++i) d = std::max(d, std::abs(a.m[i] - b.m[i]));
  return d;
}

}  // namespace

TEST(Affine, InverseAndCompose) {
  const auto t = reg::AffineTransform2D::rotation(0.3).compose(reg::AffineTransform2D::translation(2, -1));
  const auto id = t.compose(t.inverse());
  EXPECT_LT(max_abs_diff(id, reg::AffineTransform2D::identity()), 1e-12);
  double x, y;
  reg::AffineTransform2D::translation(2, -1).apply(1, 1, x, y);
  EXPECT_EQ(x, 3);
  EXPECT_EQ(y, 0);
  reg::AffineTransform2D sing;
  sing.m = {1, 2, 0, 2, 4, 0};
  try {
    sing.inverse();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularTransform);
  }
}

TEST(Warp, IdentityAndIntegerShift) {
  const Image img = phantom_frame();
  const reg::Spacing sp{2.5, 2.5};
  EXPECT_EQ(reg::warp(img, reg::AffineTransform2D::identity(), sp).px, img.px);
  LabelFrame l(32, 32);
  for (int y = 10; y < 20; ++y)
    for (int x = 5; x < 12; ++x) l(x, y) = 2;
  // out(p) = in(p + t): a translation by (-3, +2) px moves content by (+3, -2) px.
  const LabelFrame w = reg::warp(l, reg::AffineTransform2D::translation(-3 * 2.5, 2 * 2.5), sp);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) {
      const int sx = x - 3, sy = y + 2;
      const std::uint8_t expect = (sx >= 0 && sx < 32 && sy >= 0 && sy < 32) ? l(sx, sy) : 0;
      ASSERT_EQ(w(x, y), expect) << x << "," << y;
    }
}

TEST(Warp, RoundTripAgreement) {
  phantom::PhantomSpec spec;
  spec.n_frames = 2;
  const LabelFrame l = phantom::generate(spec).labels.frame(0, 0);
  const reg::Spacing sp{2.5, 2.5};
  auto t = reg::AffineTransform2D::rotation(0.2);
  t.m[2] = 3.1;
  t.m[5] = -1.7;
  t.m[0] *= 1.05;
  const LabelFrame back = reg::warp(reg::warp(l, t, sp), t.inverse(), sp);
  int agree = 0, total = 0;
  for (int y = 8; y < 56; ++y)
    for (int x = 8; x < 56; ++x) {
      ++total;
      agree += back(x, y) == l(x, y);
    }
  EXPECT_GE(agree, 0.95 * total);
}

TEST(Warp, SingularTransformRejected) {
  reg::AffineTransform2D s;
  s.m = {0, 0, 0, 0, 0, 0};
  EXPECT_THROW(reg::warp(phantom_frame(), s, {1, 1}), Error);
}

TEST(Register, IdentityForEqualImages) {
  const Image img = phantom_frame();
  const auto t = reg::register_affine(img, img, {2.5, 2.5});
  EXPECT_LE(max_abs_diff(t, reg::AffineTransform2D::identity()), 1e-3);
}

TEST(Register, RecoversTranslation) {
  const Image fixed = phantom_frame();
  const reg::Spacing sp{2.5, 2.5};
  // Content moved by (5, -3) px: moving(p) = fixed(p - (5, -3) px), so the
  // fixed-to-moving map is p + (5, -3) px.
  const Image moving = reg::warp(fixed, reg::AffineTransform2D::translation(-5 * 2.5, 3 * 2.5), sp);
  const auto t = reg::register_affine(moving, fixed, sp);
  EXPECT_NEAR(t.m[2] / 2.5, 5.0, 0.5);
  EXPECT_NEAR(t.m[5] / 2.5, -3.0, 0.5);
  EXPECT_LT(reg::ssd(moving, fixed, t, sp), reg::ssd(moving, fixed, {}, sp));
}

TEST(Register, RecoversRotation) {
  const Image fixed = phantom_frame();
  const reg::Spacing sp{2.5, 2.5};
  const double angle = 10 * std::numbers::pi / 180;
  // Content rotated by +10 degrees.
  const Image moving = reg::warp(fixed, reg::AffineTransform2D::rotation(-angle), sp);
  const auto t = reg::register_affine(moving, fixed, sp);
  const double got = std::atan2(t.m[3], t.m[0]);
  EXPECT_NEAR(got * 180 / std::numbers::pi, 10.0, 1.0);
}

TEST(Register, NeverWorseThanIdentity) {
  const Image a = phantom_frame();
  Image b(64, 64);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) b(x, y) = ((x / 8 + y / 8) % 2) * 0.7;
  const reg::Spacing sp{2.5, 2.5};
  const auto t = reg::register_affine(b, a, sp);
  EXPECT_LE(reg::ssd(b, a, t, sp), reg::ssd(b, a, {}, sp));
}

TEST(Register, InputChecks) {
  Image small(16, 16);
  EXPECT_THROW(reg::register_affine(small, small, {1, 1}), Error);
  Image bad = phantom_frame();
  bad(3, 3) = std::nan("");
  try {
    reg::register_affine(bad, phantom_frame(), {1, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonFiniteImage);
  }
}
