#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cine/error.hpp"
#include "cine/nufft.hpp"
#include "oracles.hpp"

using namespace cine;

namespace {

std::vector<traj::Spoke> spokes(int first, int count, int n_readout) {
  std::vector<std::int64_t> idx(count);
  for (int i = 0; i < count; ++i) idx[i] = first + i;
  return traj::golden_angle_spokes(idx, n_readout);
}

}  // namespace

TEST(Nufft, BetaClosedForm) {
  for (auto [a, w] : {std::pair{2.0, 4}, std::pair{2.0, 6}, std::pair{1.5, 4}}) {
    const double x = (w / a) * (a - 0.5);
    EXPECT_NEAR(nufft::kaiser_bessel_beta(a, w), std::numbers::pi * std::sqrt(x * x - 0.8), 1e-12);
  }
  EXPECT_NEAR(nufft::plan(16, 16).beta(), std::numbers::pi * std::sqrt(9 - 0.8), 1e-12);
}

TEST(Nufft, PlanParameters) {
  EXPECT_THROW(nufft::plan(4, 16), Error);
  EXPECT_THROW(nufft::plan(16, 16, 1.2, 4), Error);
  EXPECT_THROW(nufft::plan(16, 16, 2.0, 1), Error);
  const auto p = nufft::plan(16, 12);
  EXPECT_EQ(p.grid_x(), 32);
  EXPECT_EQ(p.grid_y(), 24);
  EXPECT_GE(p.table_entries_per_cell() * 1, 1024);
  EXPECT_NEAR(p.kernel(0.3), p.kernel_exact(0.3), 1e-6);
  EXPECT_EQ(p.kernel(2.5), 0.0);
}

TEST(Nufft, ApodizationPositiveAndSymmetric) {
  const auto p = nufft::plan(16, 20);
  const auto a = p.apodization();
  for (int j = 0; j < 20; ++j)
    for (int i = 0; i < 16; ++i) {
      EXPECT_GT(a[j * 16 + i], 0.0);
      EXPECT_NEAR(a[j * 16 + i], a[((20 - j) % 20) * 16 + (16 - i) % 16], 1e-12);
    }
}

TEST(Nufft, ZerosMapToZeros) {
  const auto p = nufft::plan(8, 8);
  const auto sp = spokes(0, 4, 16);
  for (cplx v : nufft::forward(p, Frame(8, 8), sp)) EXPECT_EQ(v, cplx(0));
  const std::vector<cplx> zeros(64);
  for (cplx v : nufft::adjoint(p, zeros, sp).px) EXPECT_EQ(v, cplx(0));
}

TEST(Nufft, CentredImpulseHasFlatSpectrum) {
  const auto p = nufft::plan(32, 32);
  Frame x(32, 32);
  x(16, 16) = 1.0;
  for (cplx v : nufft::forward(p, x, spokes(0, 10, 64))) EXPECT_NEAR(std::abs(v), 1.0, 0.01);
}

TEST(Nufft, ForwardIsLinear) {
  std::mt19937_64 rng(3);
  const auto p = nufft::plan(16, 16);
  const auto sp = spokes(5, 6, 32);
  const Frame x = oracle::random_frame(16, 16, rng), y = oracle::random_frame(16, 16, rng);
  const cplx a(0.7, -1.2), b(-2.0, 0.4);
  Frame z(16, 16);
  for (std::size_t i = 0; i < z.px.size(); ++i) z.px[i] = a * x.px[i] + b * y.px[i];
  const auto fx = nufft::forward(p, x, sp), fy = nufft::forward(p, y, sp), fz = nufft::forward(p, z, sp);
  std::vector<cplx> combo(fx.size());
  for (std::size_t i = 0; i < fx.size(); ++i) combo[i] = a * fx[i] + b * fy[i];
  EXPECT_LT(oracle::relative_rms(fz, combo), 1e-10);
}

TEST(Nufft, ForwardMatchesDirectDft) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  const auto p = nufft::plan(16, 16);
  const Frame x = oracle::random_frame(16, 16, rng);
  std::vector<traj::KPoint> k(50);
  for (auto& q : k) q = {u(rng), u(rng)};
  const auto got = nufft::FrameOperator(p, k).forward(x);
  EXPECT_LT(oracle::relative_rms(got, oracle::direct_dft(x, k)), 1e-3);
}

TEST(Nufft, AdjointInnerProductIdentity) {
  std::mt19937_64 rng(17);
  const auto p = nufft::plan(32, 32);
  const auto sp = spokes(0, 24, 64);
  const nufft::FrameOperator op(p, sp);
  for (int c = 0; c < 5; ++c) {
    const Frame x = oracle::random_frame(32, 32, rng);
    const auto y = oracle::random_samples(op.n_samples(), rng);
    const auto ax = op.forward(x);
    const Frame ahy = op.adjoint(y);
    const double defect = std::abs(oracle::inner(ax, y) - oracle::inner(x.px, ahy.px));
    EXPECT_LT(defect / (oracle::norm(ax) * oracle::norm(y)), 1e-3);
  }
}

TEST(Nufft, WeightedAdjointAppliesWeights) {
  std::mt19937_64 rng(2);
  const auto p = nufft::plan(16, 16);
  const auto sp = spokes(0, 3, 32);
  const auto y = oracle::random_samples(96, rng);
  const auto w = traj::ramp_dcf(sp);
  std::vector<cplx> wy(96);
  for (int i = 0; i < 96; ++i) wy[i] = y[i] * w.weights[i];
  const Frame a = nufft::adjoint(p, y, sp, &w), b = nufft::adjoint(p, wy, sp);
  for (std::size_t i = 0; i < a.px.size(); ++i) EXPECT_NEAR(std::abs(a.px[i] - b.px[i]), 0.0, 1e-14);
  EXPECT_THROW(nufft::adjoint(p, std::span(y).first(10), sp), Error);
}

TEST(Nufft, ShapeMismatch) {
  const auto p = nufft::plan(16, 16);
  try {
    nufft::forward(p, Frame(8, 16), spokes(0, 1, 32));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Shape);
  }
}

TEST(Nufft, Deterministic) {
  std::mt19937_64 rng(5);
  const auto sp = spokes(0, 8, 64);
  const Frame x = oracle::random_frame(32, 32, rng);
  const auto a = nufft::forward(nufft::plan(32, 32), x, sp);
  const auto b = nufft::forward(nufft::plan(32, 32), x, sp);
  EXPECT_EQ(a, b);
  EXPECT_EQ(nufft::adjoint(nufft::plan(32, 32), a, sp).px, nufft::adjoint(nufft::plan(32, 32), a, sp).px);
}
