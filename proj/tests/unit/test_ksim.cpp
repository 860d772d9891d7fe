#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "cine/error.hpp"
#include "cine/ksim.hpp"
#include "cine/phantom.hpp"

using namespace cine;

namespace {

phantom::PhantomCase small_phantom(int frames = 4) {
  phantom::PhantomSpec spec;
  spec.n_frames = frames;
  return phantom::generate(spec);
}

double wrapped(double d) { return std::remainder(d, 2 * std::numbers::pi); }

}  // namespace

TEST(Ksim, PhasePreservesMagnitude) {
  const auto ph = small_phantom();
  const CineVolume c = ksim::synthesize_phase(ph.image, 8.0, 1);
  EXPECT_TRUE(c.is_complex());
  for (std::size_t i = 0; i < c.data().size(); ++i)
    ASSERT_NEAR(std::abs(c.data()[i]), ph.image.data()[i].real(), 1e-12);
  // Constant across frames.
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x)
      ASSERT_NEAR(std::arg(c.at(x, y, 0, 0)), std::arg(c.at(x, y, 0, 3)), 1e-12);
}

TEST(Ksim, PhaseSeeding) {
  const Image a = ksim::phase_field(64, 64, 8.0, 1, 0);
  const Image b = ksim::phase_field(64, 64, 8.0, 1, 0);
  const Image c = ksim::phase_field(64, 64, 8.0, 2, 0);
  const Image d = ksim::phase_field(64, 64, 8.0, 1, 1);
  EXPECT_EQ(a.px, b.px);
  double diff_seed = 0, diff_slice = 0;
  for (std::size_t i = 0; i < a.px.size(); ++i) {
    EXPECT_GE(a.px[i], -std::numbers::pi);
    EXPECT_LT(a.px[i], std::numbers::pi);
    diff_seed = std::max(diff_seed, std::abs(wrapped(a.px[i] - c.px[i])));
    diff_slice = std::max(diff_slice, std::abs(wrapped(a.px[i] - d.px[i])));
  }
  EXPECT_GT(diff_seed, 0.1);
  EXPECT_GT(diff_slice, 0.1);
}

TEST(Ksim, HeavySmoothingGivesNearlyConstantPhase) {
  const Image p = ksim::phase_field(64, 64, 64.0, 3, 0);
  double mean = 0;
  for (double v : p.px) mean += v;
  mean /= static_cast<double>(p.px.size());
  double var = 0;
  for (double v : p.px) var += (v - mean) * (v - mean);
  EXPECT_LT(std::sqrt(var / static_cast<double>(p.px.size())), 0.05);
}

TEST(Ksim, PhaseInputChecks) {
  const auto ph = small_phantom();
  CineVolume neg = ph.image;
  neg.data()[5] = -1.0;
  try {
    ksim::synthesize_phase(neg, 8.0, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NegativeMagnitude);
  }
  EXPECT_THROW(ksim::synthesize_phase(ph.image, 0.5, 1), Error);
}

TEST(Ksim, ZeroImageGivesZeroData) {
  phantom::PhantomSpec spec;
  spec.n_frames = 4;
  CineVolume zero(Shape4{64, 64, 1, 4}, spec.geometry(), true);
  const auto sched = traj::schedule_profiles(1, zero.geometry(), 64, 64);
  const auto ds = ksim::acquire(zero, sched, nufft::plan(64, 64));
  ASSERT_GT(ds.total_samples(), 0u);
  for (const auto& f : ds.frames[0])
    for (cplx v : f.samples) ASSERT_EQ(v, cplx(0));
}

TEST(Ksim, ConstantImageConcentratesAtDc) {
  Geometry g;
  g.n_frames = 2;
  CineVolume one(Shape4{32, 32, 1, 2}, g, false);
  for (cplx& v : one.data()) v = 1.0;
  const auto sched = traj::schedule_profiles(1, g, 32, 32);
  const auto ds = ksim::acquire(one, sched, nufft::plan(32, 32));
  const auto& f = ds.at(0, 0);
  const int nr = ds.n_readout;
  double centre = 0, off = 0;
  std::size_t n_off = 0;
  for (std::size_t s = 0; s < f.spokes.size(); ++s)
    for (int j = 0; j < nr; ++j) {
      const double m = std::abs(f.samples[s * nr + j]);
      if (j == nr / 2) centre = std::max(centre, m);
      else {
        off += m;
        ++n_off;
      }
    }
  EXPECT_GT(centre, 10 * off / static_cast<double>(n_off));
}

TEST(Ksim, DatasetsAreNestedAcrossScanTimes) {
  const auto ph = small_phantom();
  const CineVolume c = ksim::synthesize_phase(ph.image, 8.0, 4);
  const auto plan = nufft::plan(64, 64);
  const auto d2 = ksim::acquire(c, traj::schedule_profiles(2, c.geometry(), 64, 64), plan);
  const auto d5 = ksim::acquire(c, traj::schedule_profiles(5, c.geometry(), 64, 64), plan);
  for (int f = 0; f < 4; ++f) {
    const auto& a = d2.at(0, f);
    const auto& b = d5.at(0, f);
    ASSERT_LT(a.samples.size(), b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) ASSERT_EQ(a.samples[i], b.samples[i]);
  }
}

TEST(Ksim, IncrementalMatchesColdAcquisition) {
  const auto ph = small_phantom();
  const CineVolume c = ksim::synthesize_phase(ph.image, 8.0, 4);
  const auto plan = nufft::plan(64, 64);
  ksim::IncrementalAcquirer inc(c, plan);
  for (int t : {1, 2, 4}) {
    const auto sched = traj::schedule_profiles(t, c.geometry(), 64, 64);
    const auto hot = inc.acquire(sched);
    const auto cold = ksim::acquire(c, sched, plan);
    for (int f = 0; f < 4; ++f) ASSERT_EQ(hot.at(0, f).samples, cold.at(0, f).samples);
  }
}

TEST(Ksim, NoiseSnrAndSeeding) {
  const auto ph = small_phantom(10);
  const CineVolume c = ksim::synthesize_phase(ph.image, 8.0, 4);
  const auto plan = nufft::plan(64, 64);
  const auto ds = ksim::acquire(c, traj::schedule_profiles(8, c.geometry(), 64, 64), plan);
  ASSERT_GE(ds.total_samples(), 100000u);

  const auto same = ksim::add_noise(ds, std::nullopt, 1);
  for (int f = 0; f < 10; ++f) EXPECT_EQ(same.at(0, f).samples, ds.at(0, f).samples);
  EXPECT_FALSE(same.noise.has_value());

  for (double snr : {10.0, 20.0, 30.0}) {
    const auto noisy = ksim::add_noise(ds, snr, 9);
    double ps = 0, pn = 0;
    for (int f = 0; f < 10; ++f)
      for (std::size_t i = 0; i < ds.at(0, f).samples.size(); ++i) {
        ps += std::norm(ds.at(0, f).samples[i]);
        pn += std::norm(noisy.at(0, f).samples[i] - ds.at(0, f).samples[i]);
      }
    EXPECT_NEAR(10 * std::log10(ps / pn), snr, 0.5);
    ASSERT_TRUE(noisy.noise.has_value());
    EXPECT_EQ(noisy.noise->snr_db, snr);
  }
  const auto a = ksim::add_noise(ds, 20.0, 9), b = ksim::add_noise(ds, 20.0, 9), c2 = ksim::add_noise(ds, 20.0, 10);
  EXPECT_EQ(a.at(0, 3).samples, b.at(0, 3).samples);
  EXPECT_NE(a.at(0, 3).samples, c2.at(0, 3).samples);
}

TEST(Ksim, NoiseIsNestedWithFixedSigma) {
  const auto ph = small_phantom();
  const CineVolume c = ksim::synthesize_phase(ph.image, 8.0, 4);
  const auto plan = nufft::plan(64, 64);
  const auto d2 = ksim::acquire(c, traj::schedule_profiles(2, c.geometry(), 64, 64), plan);
  const auto d5 = ksim::acquire(c, traj::schedule_profiles(5, c.geometry(), 64, 64), plan);
  const double sigma = ksim::noise_sigma_for(d2, 20.0);
  const auto n2 = ksim::add_noise_sigma(d2, sigma, 3), n5 = ksim::add_noise_sigma(d5, sigma, 3);
  for (int f = 0; f < 4; ++f)
    for (std::size_t i = 0; i < n2.at(0, f).samples.size(); ++i)
      ASSERT_EQ(n2.at(0, f).samples[i], n5.at(0, f).samples[i]);
}

TEST(Ksim, CsvDump) {
  Geometry g;
  g.n_frames = 2;
  CineVolume one(Shape4{8, 8, 1, 2}, g, false);
  const auto ds = ksim::acquire(one, traj::schedule_profiles(1, g, 8, 8), nufft::plan(8, 8));
  std::ostringstream out;
  ksim::write_kspace_csv(out, ds, 0);
  const std::string s = out.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "frame,global_index,sample_index,re,im");
  EXPECT_EQ(static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')), 1 + ds.total_samples());
}
