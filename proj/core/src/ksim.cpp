#include "cine/ksim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>

#include "cine/error.hpp"
#include "cine/parallel.hpp"

namespace cine::ksim {

namespace {

std::uint64_t mix(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::vector<double> gaussian_taps(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> taps(2 * radius + 1);
  double sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    taps[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += taps[i + radius];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

int wrap(int i, int n) {
  const int r = i % n;
  return r < 0 ? r + n : r;
}

// Separable smoothing with periodic borders, so a kernel much wider than the
// image flattens the field instead of copying its edge pixels.
Image smooth(const Image& in, double sigma) {
  const auto taps = gaussian_taps(sigma);
  const int r = static_cast<int>(taps.size() / 2);
  Image tmp(in.nx, in.ny), out(in.nx, in.ny);
  for (int y = 0; y < in.ny; ++y)
    for (int x = 0; x < in.nx; ++x) {
      double acc = 0;
      for (int k = -r; k <= r; ++k) acc += taps[k + r] * in(wrap(x + k, in.nx), y);
      tmp(x, y) = acc;
    }
  for (int y = 0; y < in.ny; ++y)
    for (int x = 0; x < in.nx; ++x) {
      double acc = 0;
      for (int k = -r; k <= r; ++k) acc += taps[k + r] * tmp(x, wrap(y + k, in.ny));
      out(x, y) = acc;
    }
  return out;
}

KSpaceDataset empty_like(const CineVolume& cine, const traj::AcquisitionSchedule& schedule) {
  KSpaceDataset ds;
  ds.geometry = cine.geometry();
  ds.nx = cine.shape().nx;
  ds.ny = cine.shape().ny;
  ds.n_readout = schedule.n_readout();
  ds.scan_time_s = schedule.scan_time_s();
  ds.frames.assign(cine.shape().nslices, std::vector<FrameData>(cine.shape().nframes));
  return ds;
}

void check_shapes(const CineVolume& cine, const traj::AcquisitionSchedule& schedule, const nufft::Plan& plan) {
  if (cine.shape().nx != plan.nx() || cine.shape().ny != plan.ny())
    fail(ErrorCode::Shape, "volume does not match NUFFT plan");
  if (cine.shape().nframes != schedule.n_frames())
    fail(ErrorCode::Shape, "schedule frame count does not match volume");
}

}  // namespace

std::size_t KSpaceDataset::total_samples() const {
  std::size_t n = 0;
  for (const auto& slice : frames)
    for (const auto& f : slice) n += f.samples.size();
  return n;
}

Image phase_field(int nx, int ny, double smoothness_sigma_px, std::uint64_t seed, int slice) {
  if (!(smoothness_sigma_px >= 1.0)) fail(ErrorCode::Parameter, "phase smoothness sigma must be >= 1 px");
  std::mt19937_64 rng(mix(seed ^ mix(static_cast<std::uint64_t>(slice) + 0x5eedULL)));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Image field(nx, ny);
  for (double& v : field.px) v = unit(rng);
  Image smoothed = smooth(field, smoothness_sigma_px);
  for (double& v : smoothed.px) v = 2.0 * std::numbers::pi * std::clamp(v, 0.0, 1.0) - std::numbers::pi;
  return smoothed;
}

CineVolume synthesize_phase(const CineVolume& magnitude, double smoothness_sigma_px, std::uint64_t seed) {
  for (const cplx& v : magnitude.data())
    if (v.real() < 0 || v.imag() != 0) fail(ErrorCode::NegativeMagnitude, "magnitude must be real and >= 0");
  const Shape4& sh = magnitude.shape();
  CineVolume out(sh, magnitude.geometry(), true);
  for (int s = 0; s < sh.nslices; ++s) {
    const Image phase = phase_field(sh.nx, sh.ny, smoothness_sigma_px, seed, s);
    std::vector<cplx> rot(phase.px.size());
    for (std::size_t i = 0; i < rot.size(); ++i) rot[i] = std::polar(1.0, phase.px[i]);
    for (int t = 0; t < sh.nframes; ++t)
      for (int y = 0; y < sh.ny; ++y)
        for (int x = 0; x < sh.nx; ++x)
          out.at(x, y, s, t) = magnitude.at(x, y, s, t).real() * rot[static_cast<std::size_t>(y) * sh.nx + x];
  }
  return out;
}

KSpaceDataset acquire(const CineVolume& complex_cine, const traj::AcquisitionSchedule& schedule,
                      const nufft::Plan& plan) {
  check_shapes(complex_cine, schedule, plan);
  KSpaceDataset ds = empty_like(complex_cine, schedule);
  const int ns = complex_cine.shape().nslices;
  const int nf = complex_cine.shape().nframes;
  parallel_for(static_cast<std::size_t>(ns) * nf, [&](std::size_t job) {
    const int s = static_cast<int>(job / nf);
    const int f = static_cast<int>(job % nf);
    FrameData& fd = ds.frames[s][f];
    fd.spokes = schedule.frame(f);
    fd.samples = nufft::FrameOperator(plan, fd.spokes).forward(complex_cine.frame(s, f));
  });
  return ds;
}

IncrementalAcquirer::IncrementalAcquirer(const CineVolume& complex_cine, const nufft::Plan& plan)
    : cine_(&complex_cine), plan_(plan) {
  const Shape4& sh = complex_cine.shape();
  if (sh.nx != plan.nx() || sh.ny != plan.ny()) fail(ErrorCode::Shape, "volume does not match NUFFT plan");
  spectra_.assign(sh.nslices, std::vector<std::vector<cplx>>(sh.nframes));
  const nufft::FrameOperator op(plan_, std::span<const traj::KPoint>{});
  parallel_for(static_cast<std::size_t>(sh.nslices) * sh.nframes, [&](std::size_t job) {
    const int s = static_cast<int>(job / sh.nframes);
    const int f = static_cast<int>(job % sh.nframes);
    spectra_[s][f] = op.spectrum(complex_cine.frame(s, f));
  });
}

KSpaceDataset IncrementalAcquirer::acquire(const traj::AcquisitionSchedule& schedule) {
  check_shapes(*cine_, schedule, plan_);
  if (cache_.frames.empty() || cache_.n_readout != schedule.n_readout()) cache_ = empty_like(*cine_, schedule);
  KSpaceDataset ds = empty_like(*cine_, schedule);
  const int ns = cine_->shape().nslices;
  const int nf = cine_->shape().nframes;
  parallel_for(static_cast<std::size_t>(ns) * nf, [&](std::size_t job) {
    const int s = static_cast<int>(job / nf);
    const int f = static_cast<int>(job % nf);
    FrameData& cached = cache_.frames[s][f];
    const auto& spokes = schedule.frame(f);
    // Schedules are prefix-nested, so only a tail of new spokes is missing.
    std::size_t common = 0;
    while (common < cached.spokes.size() && common < spokes.size() &&
           cached.spokes[common].global_index == spokes[common].global_index)
      ++common;
    cached.spokes.resize(common);
    cached.samples.resize(common * schedule.n_readout());
    if (spokes.size() > common) {
      std::span<const traj::Spoke> fresh(spokes.data() + common, spokes.size() - common);
      const auto samples = nufft::FrameOperator(plan_, fresh).interpolate(spectra_[s][f]);
      cached.spokes.insert(cached.spokes.end(), fresh.begin(), fresh.end());
      cached.samples.insert(cached.samples.end(), samples.begin(), samples.end());
    }
    FrameData& out = ds.frames[s][f];
    out.spokes.assign(cached.spokes.begin(), cached.spokes.begin() + static_cast<std::ptrdiff_t>(spokes.size()));
    out.samples.assign(cached.samples.begin(),
                       cached.samples.begin() + static_cast<std::ptrdiff_t>(spokes.size() * schedule.n_readout()));
  });
  return ds;
}

double noise_sigma_for(const KSpaceDataset& ds, double snr_db) {
  double power = 0;
  std::size_t n = 0;
  for (const auto& slice : ds.frames)
    for (const auto& f : slice)
      for (const cplx& v : f.samples) {
        power += std::norm(v);
        ++n;
      }
  if (n == 0) fail(ErrorCode::EmptyFrame, "noise on an empty dataset");
  power /= static_cast<double>(n);
  const double noise_power = power / std::pow(10.0, snr_db / 10.0);
  return std::sqrt(noise_power / 2.0);
}

KSpaceDataset add_noise_sigma(const KSpaceDataset& ds, double sigma, std::uint64_t seed, double snr_db_label) {
  KSpaceDataset out = ds;
  for (int s = 0; s < out.n_slices(); ++s)
    for (auto& f : out.frames[s]) {
      const std::size_t per_spoke = f.spokes.empty() ? 0 : f.samples.size() / f.spokes.size();
      for (std::size_t k = 0; k < f.spokes.size(); ++k) {
        std::mt19937_64 rng(mix(seed ^ mix(static_cast<std::uint64_t>(s) * 0x100000001b3ULL ^
                                           static_cast<std::uint64_t>(f.spokes[k].global_index))));
        std::normal_distribution<double> normal(0.0, sigma);
        for (std::size_t j = 0; j < per_spoke; ++j) {
          const double re = normal(rng);
          const double im = normal(rng);
          f.samples[k * per_spoke + j] += cplx(re, im);
        }
      }
    }
  out.noise = NoiseRecord{seed, snr_db_label, sigma};
  return out;
}

KSpaceDataset add_noise(const KSpaceDataset& ds, std::optional<double> snr_db, std::uint64_t seed) {
  if (!snr_db) return ds;
  return add_noise_sigma(ds, noise_sigma_for(ds, *snr_db), seed, *snr_db);
}

void write_kspace_csv(std::ostream& out, const KSpaceDataset& ds, int slice) {
  out << "frame,global_index,sample_index,re,im\n";
  const auto old = out.precision(17);
  const auto& frames = ds.frames.at(slice);
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const auto& fd = frames[f];
    const std::size_t per_spoke = fd.spokes.empty() ? 0 : fd.samples.size() / fd.spokes.size();
    for (std::size_t k = 0; k < fd.spokes.size(); ++k)
      for (std::size_t j = 0; j < per_spoke; ++j) {
        const cplx v = fd.samples[k * per_spoke + j];
        out << f << ',' << fd.spokes[k].global_index << ',' << j << ',' << v.real() << ',' << v.imag() << '\n';
      }
  }
  out.precision(old);
}

}  // namespace cine::ksim
