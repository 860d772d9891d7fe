#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "cine/error.hpp"
#include "cine/trajectory.hpp"

using namespace cine;

TEST(Trajectory, GoldenAngle) {
  const double phi = (1 + std::sqrt(5.0)) / 2;
  EXPECT_NEAR(traj::golden_angle_rad(), std::numbers::pi / phi, 1e-9);
  EXPECT_DOUBLE_EQ(traj::golden_angle_spoke(0, 8).angle_rad, 0.0);
  EXPECT_NEAR(traj::golden_angle_spoke(1, 8).angle_rad, 1.941611, 1e-6);
  EXPECT_NEAR(traj::golden_angle_spoke(1, 8).angle_rad * 180 / std::numbers::pi, 111.2461, 1e-4);
}

TEST(Trajectory, SpokeSamplesAreAntipodalAndBounded) {
  const auto s = traj::golden_angle_spoke(17, 16);
  ASSERT_EQ(s.samples.size(), 16u);
  EXPECT_DOUBLE_EQ(s.samples[8].kx, 0.0);
  EXPECT_DOUBLE_EQ(s.samples[8].ky, 0.0);
  for (int j = 1; j < 16; ++j) {
    const auto& a = s.samples[j];
    const auto& b = s.samples[16 - j];
    EXPECT_NEAR(a.kx, -b.kx, 1e-15);
    EXPECT_NEAR(a.ky, -b.ky, 1e-15);
    EXPECT_LE(std::hypot(a.kx, a.ky), 0.5 + 1e-15);
    // Collinear through the origin.
    EXPECT_NEAR(a.kx * std::sin(s.angle_rad) - a.ky * std::cos(s.angle_rad), 0.0, 1e-15);
  }
  EXPECT_NEAR(std::hypot(s.samples[0].kx, s.samples[0].ky), 0.5, 1e-15);
}

TEST(Trajectory, ThousandAnglesPairwiseDistinct) {
  std::vector<std::int64_t> idx(1000);
  for (int i = 0; i < 1000; ++i) idx[i] = i;
  const auto spokes = traj::golden_angle_spokes(idx, 8);
  std::vector<double> a;
  for (const auto& s : spokes) a.push_back(s.angle_rad);
  std::sort(a.begin(), a.end());
  for (std::size_t i = 1; i < a.size(); ++i) EXPECT_GT(a[i] - a[i - 1], 1e-9);
  EXPECT_GE(a.front(), 0.0);
  EXPECT_LT(a.back(), std::numbers::pi);
}

TEST(Trajectory, ScheduleArithmetic) {
  Geometry g;
  EXPECT_EQ(traj::total_spokes(1, 2.6), 384);
  EXPECT_EQ(traj::total_spokes(30, 2.6), 11538);
  EXPECT_EQ(traj::total_spokes(3, 2.6), 1153);
  EXPECT_EQ(traj::total_spokes(4, 2.6), 1538);
  const auto s = traj::schedule_profiles(1, g, 64, 64);
  ASSERT_EQ(s.n_frames(), 50);
  for (int f = 0; f < 50; ++f) EXPECT_EQ(s.spokes_in_frame(f), f < 34 ? 8u : 7u) << f;
  for (int f = 0; f < 50; ++f)
    for (const auto& sp : s.frame(f)) EXPECT_EQ(sp.global_index % 50, f);
}

TEST(Trajectory, SchedulesAreNested) {
  Geometry g;
  for (int t1 = 1; t1 < 30; t1 += 4) {
    const auto a = traj::schedule_profiles(t1, g, 32, 32);
    const auto b = traj::schedule_profiles(t1 + 1, g, 32, 32);
    for (int f = 0; f < g.n_frames; ++f) {
      ASSERT_LE(a.spokes_in_frame(f), b.spokes_in_frame(f));
      for (std::size_t i = 0; i < a.spokes_in_frame(f); ++i)
        ASSERT_EQ(a.frame(f)[i].global_index, b.frame(f)[i].global_index);
    }
  }
  const auto s3 = traj::schedule_profiles(3, g, 32, 32);
  std::set<std::int64_t> all;
  for (int f = 0; f < g.n_frames; ++f)
    for (const auto& sp : s3.frame(f)) all.insert(sp.global_index);
  EXPECT_EQ(all.size(), 1153u);
  EXPECT_EQ(*all.rbegin(), 1152);
}

TEST(Trajectory, BalancedFramesAndMonotoneUndersampling) {
  Geometry g;
  double prev = 1e300;
  for (int t = 1; t <= 30; ++t) {
    const auto s = traj::schedule_profiles(t, g, 208, 187);
    std::size_t lo = SIZE_MAX, hi = 0;
    for (int f = 0; f < s.n_frames(); ++f) {
      lo = std::min(lo, s.spokes_in_frame(f));
      hi = std::max(hi, s.spokes_in_frame(f));
    }
    EXPECT_LE(hi - lo, 1u);
    const double r = s.undersampling_factor(208, 187);
    EXPECT_LE(r, prev);
    prev = r;
  }
  EXPECT_NEAR(traj::schedule_profiles(4, g, 208, 187).undersampling_factor(208, 187), 327 / 30.76, 0.01);
}

TEST(Trajectory, ScanTimeRange) {
  Geometry g;
  EXPECT_THROW(traj::schedule_profiles(0, g, 32, 32), Error);
  EXPECT_THROW(traj::schedule_profiles(31, g, 32, 32), Error);
  try {
    traj::schedule_profiles(31, g, 32, 32);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Range);
  }
  traj::ScheduleOptions o;
  o.allow_any_time = true;
  EXPECT_EQ(traj::schedule_profiles(40, g, 32, 32, o).total_spokes(), traj::total_spokes(40, 2.6));
}

TEST(Trajectory, ReadoutDefault) {
  EXPECT_EQ(traj::default_readout(64, 64), 128);
  EXPECT_EQ(traj::default_readout(208, 187), 416);
}

TEST(Trajectory, RampDcfByHand) {
  const traj::Spoke s = traj::golden_angle_spoke(3, 8);
  const auto w = traj::ramp_dcf(std::span(&s, 1));
  ASSERT_EQ(w.weights.size(), 8u);
  for (int j = 0; j < 8; ++j) {
    const double k = std::abs(j - 4) / 8.0;
    EXPECT_NEAR(w.weights[j], std::max(k, 1.0 / 16), 1e-15) << j;
  }
  const auto v = traj::ramp_dcf(std::span(&s, 1), traj::kVoronoiCenterFloor);
  EXPECT_NEAR(v.weights[4], 1.0 / 32, 1e-15);
}

TEST(Trajectory, RampDcfScalesWithSpokeCount) {
  std::vector<std::int64_t> one{5}, two{5, 6};
  const auto a = traj::ramp_dcf(traj::golden_angle_spokes(one, 16));
  const auto b = traj::ramp_dcf(traj::golden_angle_spokes(two, 16));
  ASSERT_EQ(b.weights.size(), 32u);
  for (std::size_t i = 0; i < 16; ++i) {
    EXPECT_DOUBLE_EQ(b.weights[i], a.weights[i] / 2);
    EXPECT_GT(b.weights[i], 0.0);
  }
  try {
    traj::ramp_dcf({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyFrame);
  }
}

TEST(Trajectory, CsvDump) {
  Geometry g;
  g.n_frames = 2;
  const auto s = traj::schedule_profiles(1, g, 8, 8);
  std::ostringstream out;
  traj::write_trajectory_csv(out, s);
  const std::string text = out.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "global_index,frame,angle_rad,sample_index,kx,ky");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1 + 384 * 16);
}
