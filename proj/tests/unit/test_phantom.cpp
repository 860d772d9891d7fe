#include <gtest/gtest.h>

#include <cmath>

#include "cine/cardio.hpp"
#include "cine/error.hpp"
#include "cine/phantom.hpp"

using namespace cine;

TEST(Phantom, SingleSliceEjectionFractionIsOneMinusCSquared) {
  for (double c : {0.5, 0.632, 0.707, 0.9}) {
    phantom::PhantomSpec spec;
    spec.contraction = c;
    const auto p = phantom::analytic_params(spec);
    EXPECT_NEAR(p.lv_ef, 1 - c * c, 1e-12) << c;
  }
  phantom::PhantomSpec spec;
  spec.contraction = 0.632;
  EXPECT_NEAR(phantom::analytic_params(spec).lv_ef, 0.60, 0.005);
}

TEST(Phantom, EdAtFrameZeroEsAtHalfCycle) {
  phantom::PhantomSpec spec;
  spec.n_frames = 20;
  const auto ph = phantom::generate(spec);
  EXPECT_EQ(cardio::ed_frame(ph.analytic_curve), 0);
  EXPECT_EQ(cardio::es_frame(ph.analytic_curve), 10);
  // Rasterized areas are only piecewise constant in the radius.
  const auto raster = cardio::volume_curve(ph.labels);
  EXPECT_EQ(cardio::ed_frame(raster), 0);
  EXPECT_NEAR(cardio::es_frame(raster), 10, 1);
}

TEST(Phantom, RasterVolumesConvergeToAnalytic) {
  phantom::PhantomSpec spec;
  spec.nx = spec.ny = 128;
  spec.dx_mm = spec.dy_mm = 1.0;
  spec.n_frames = 8;
  spec.n_slices = 3;
  spec.lv_endo_radius_mm = 18;
  spec.lv_epi_radius_mm = 25;
  spec.rv_radius_mm = 22;
  spec.rv_offset_mm = 26;
  const auto ph = phantom::generate(spec);
  const auto raster = cardio::volume_curve(ph.labels);
  for (std::size_t t = 0; t < raster.size(); ++t) {
    EXPECT_LT(std::abs(raster.lv_ml[t] / ph.analytic_curve.lv_ml[t] - 1), 0.03) << t;
    EXPECT_LT(std::abs(raster.rv_ml[t] / ph.analytic_curve.rv_ml[t] - 1), 0.03) << t;
    EXPECT_LT(std::abs(raster.myo_ml[t] / ph.analytic_curve.myo_ml[t] - 1), 0.03) << t;
  }
}

TEST(Phantom, LabelsAndIntensitiesAgree) {
  phantom::PhantomSpec spec;
  spec.n_slices = 2;
  const auto ph = phantom::generate(spec);
  for (std::size_t i = 0; i < ph.labels.data().size(); ++i) {
    const auto l = ph.labels.data()[i];
    const double v = ph.image.data()[i].real();
    if (l == kLvBloodPool || l == kRvBloodPool) ASSERT_EQ(v, spec.blood);
    else if (l == kLvMyocardium) ASSERT_EQ(v, spec.myocardium);
    else ASSERT_EQ(v, spec.background);
  }
  ph.labels.validate();
  ph.image.validate();
}

TEST(Phantom, InvalidSpecsRaiseSpecError) {
  auto code = [](phantom::PhantomSpec s) {
    try {
      phantom::generate(s);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Io;
  };
  phantom::PhantomSpec s;
  s.lv_epi_radius_mm = s.lv_endo_radius_mm;
  EXPECT_EQ(code(s), ErrorCode::Spec);
  s = {};
  s.contraction = 0.3;
  EXPECT_EQ(code(s), ErrorCode::Spec);
  s = {};
  s.contraction = 0.95;
  EXPECT_EQ(code(s), ErrorCode::Spec);
  s = {};
  s.n_frames = 1;
  EXPECT_EQ(code(s), ErrorCode::Spec);
}

TEST(Phantom, CohortIsDeterministicAndValid) {
  const auto a = phantom::make_cohort({}, 20, 5);
  const auto b = phantom::make_cohort({}, 20, 5);
  ASSERT_EQ(a.size(), 20u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].contraction, b[i].contraction);
    EXPECT_EQ(a[i].seed, b[i].seed);
    EXPECT_NO_THROW(a[i].validate());
  }
}

TEST(Phantom, LensAreaLimits) {
  EXPECT_DOUBLE_EQ(phantom::lens_area(1, 1, 3), 0.0);
  EXPECT_NEAR(phantom::lens_area(2, 1, 0.5), std::acos(-1.0), 1e-12);
  // Equal unit discs at distance 1: 2pi/3 - sqrt(3)/2.
  EXPECT_NEAR(phantom::lens_area(1, 1, 1), 2 * std::acos(-1.0) / 3 - std::sqrt(3.0) / 2, 1e-12);
}
