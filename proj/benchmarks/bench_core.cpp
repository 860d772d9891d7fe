#include <benchmark/benchmark.h>

#include <random>

#include "cine/imgqc.hpp"
#include "cine/ksim.hpp"
#include "cine/nufft.hpp"
#include "cine/phantom.hpp"
#include "cine/recon.hpp"
#include "cine/trajectory.hpp"

using namespace cine;

namespace {

Frame noise_frame(int n) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> d;
  Frame f(n, n);
  for (cplx& v : f.px) v = {d(rng), d(rng)};
  return f;
}

std::vector<traj::Spoke> spokes_for(int n, int count) {
  std::vector<std::int64_t> idx(count);
  for (int i = 0; i < count; ++i) idx[i] = i;
  return traj::golden_angle_spokes(idx, 2 * n);
}

void NufftForward(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto spokes = spokes_for(n, n);
  const nufft::FrameOperator op(nufft::plan(n, n), spokes);
  const Frame x = noise_frame(n);
  for (auto _ : state) benchmark::DoNotOptimize(op.forward(x));
  state.SetComplexityN(n);
}
BENCHMARK(NufftForward)->RangeMultiplier(2)->Range(32, 256)->Unit(benchmark::kMillisecond);

void NufftAdjoint(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto spokes = spokes_for(n, n);
  const nufft::FrameOperator op(nufft::plan(n, n), spokes);
  const auto y = op.forward(noise_frame(n));
  for (auto _ : state) benchmark::DoNotOptimize(op.adjoint(y));
  state.SetComplexityN(n);
}
BENCHMARK(NufftAdjoint)->RangeMultiplier(2)->Range(32, 256)->Unit(benchmark::kMillisecond);

struct Acquisition {
  phantom::PhantomCase ph;
  ksim::KSpaceDataset ds;
};

Acquisition acquire(double scan_time) {
  Acquisition a{phantom::generate(phantom::PhantomSpec{}), {}};
  const auto sched = traj::schedule_profiles(scan_time, a.ph.image.geometry(), a.ph.image.shape().nx,
                                             a.ph.image.shape().ny);
  a.ds = ksim::acquire(ksim::synthesize_phase(a.ph.image, 8.0, 1), sched,
                       nufft::plan(a.ph.image.shape().nx, a.ph.image.shape().ny));
  return a;
}

void ReconAdjoint(benchmark::State& state) {
  const Acquisition a = acquire(static_cast<double>(state.range(0)));
  const auto plan = nufft::plan(64, 64);
  for (auto _ : state) benchmark::DoNotOptimize(recon::recon_adjoint(a.ds, plan));
}
BENCHMARK(ReconAdjoint)->Arg(2)->Arg(8)->Unit(benchmark::kMillisecond);

void ReconUnrolled(benchmark::State& state) {
  const Acquisition a = acquire(static_cast<double>(state.range(0)));
  const auto plan = nufft::plan(64, 64);
  for (auto _ : state) benchmark::DoNotOptimize(recon::recon_unrolled(a.ds, plan, {}));
}
BENCHMARK(ReconUnrolled)->Arg(2)->Arg(8)->Unit(benchmark::kMillisecond);

void Ssim(benchmark::State& state) {
  const auto ph = phantom::generate(phantom::PhantomSpec{});
  CineVolume noisy = ph.image;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> d(0.0, 0.05);
  for (int t = 0; t < noisy.shape().nframes; ++t)
    for (int y = 0; y < noisy.shape().ny; ++y)
      for (int x = 0; x < noisy.shape().nx; ++x) noisy.at(x, y, 0, t) += d(rng);
  for (auto _ : state) benchmark::DoNotOptimize(imgqc::ssim(ph.image, noisy));
}
BENCHMARK(Ssim)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
