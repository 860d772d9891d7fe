#include "cine/nufft.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>

#include "cine/error.hpp"

namespace cine::nufft {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }

int wrap(int i, int n) {
  const int r = i % n;
  return r < 0 ? r + n : r;
}

}  // namespace

// In-place, alignment-agnostic FFTW plans for one oversampled grid. The
// planner is not thread-safe, execution with new-array calls is.
struct FftPlans {
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;

  FftPlans(int gx, int gy) {
    std::vector<cplx> scratch(static_cast<std::size_t>(gx) * gy);
    std::lock_guard lock(planner_mutex());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fwd = fftw_plan_dft_2d(gy, gx, as_fftw(scratch.data()), as_fftw(scratch.data()), FFTW_FORWARD, flags);
    bwd = fftw_plan_dft_2d(gy, gx, as_fftw(scratch.data()), as_fftw(scratch.data()), FFTW_BACKWARD, flags);
    if (!fwd || !bwd) fail(ErrorCode::Parameter, "FFTW could not plan the oversampled grid");
  }
  ~FftPlans() {
    std::lock_guard lock(planner_mutex());
    if (fwd) fftw_destroy_plan(fwd);
    if (bwd) fftw_destroy_plan(bwd);
  }
  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;
};

double kaiser_bessel_beta(double oversampling, int kernel_width) {
  const double a = static_cast<double>(kernel_width) / oversampling * (oversampling - 0.5);
  const double arg = a * a - 0.8;
  if (arg <= 0) fail(ErrorCode::Parameter, "oversampling/kernel width too small for Kaiser-Bessel");
  return std::numbers::pi * std::sqrt(arg);
}

Plan::Plan(int nx, int ny, double oversampling, int kernel_width)
    : nx_(nx), ny_(ny), alpha_(oversampling), width_(kernel_width) {
  if (nx < 8 || ny < 8) fail(ErrorCode::Parameter, "NUFFT grid must be at least 8x8");
  if (!(oversampling >= 1.25)) fail(ErrorCode::Parameter, "oversampling factor must be >= 1.25");
  if (kernel_width < 2) fail(ErrorCode::Parameter, "kernel width must be >= 2");
  auto grid = [&](int n) { return 2 * static_cast<int>(std::ceil(oversampling * n / 2.0)); };
  gx_ = grid(nx);
  gy_ = grid(ny);
  beta_ = kaiser_bessel_beta(oversampling, kernel_width);

  table_per_cell_ = 4096;
  const int n_table = table_per_cell_ * kernel_width / 2 + 2;
  table_.resize(n_table);
  for (int i = 0; i < n_table; ++i) table_[i] = kernel_exact(static_cast<double>(i) / table_per_cell_);

  std::vector<double> ax(nx), ay(ny);
  for (int i = 0; i < nx; ++i) ax[i] = kernel_transform(static_cast<double>(i - nx / 2) / gx_);
  for (int j = 0; j < ny; ++j) ay[j] = kernel_transform(static_cast<double>(j - ny / 2) / gy_);
  apod_.resize(static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      apod_[static_cast<std::size_t>(j) * nx + i] = ax[i] * ay[j];
      if (!(apod_[static_cast<std::size_t>(j) * nx + i] > 0))
        fail(ErrorCode::Parameter, "non-positive apodization; kernel too narrow");
    }

  fft_ = std::make_shared<const FftPlans>(gx_, gy_);
}

double Plan::kernel_exact(double u) const {
  const double half = 0.5 * width_;
  if (std::abs(u) > half) return 0.0;
  const double r = u / half;
  return std::cyl_bessel_i(0.0, beta_ * std::sqrt(std::max(0.0, 1.0 - r * r))) / std::cyl_bessel_i(0.0, beta_);
}

double Plan::kernel(double u) const {
  const double pos = std::abs(u) * table_per_cell_;
  const auto i = static_cast<std::size_t>(pos);
  if (i + 1 >= table_.size()) return 0.0;
  const double frac = pos - static_cast<double>(i);
  return table_[i] + frac * (table_[i + 1] - table_[i]);
}

double Plan::kernel_transform(double f) const {
  const double w = static_cast<double>(width_);
  const double z2 = beta_ * beta_ - std::numbers::pi * std::numbers::pi * w * w * f * f;
  double shape;
  if (z2 > 0) {
    const double z = std::sqrt(z2);
    shape = std::sinh(z) / z;
  } else if (z2 < 0) {
    const double z = std::sqrt(-z2);
    shape = std::sin(z) / z;
  } else {
    shape = 1.0;
  }
  return w * shape / std::cyl_bessel_i(0.0, beta_);
}

void Plan::fft_forward(std::span<cplx> grid) const {
  fftw_execute_dft(fft_->fwd, as_fftw(grid.data()), as_fftw(grid.data()));
}

void Plan::fft_backward(std::span<cplx> grid) const {
  fftw_execute_dft(fft_->bwd, as_fftw(grid.data()), as_fftw(grid.data()));
}

Plan plan(int nx, int ny, double oversampling, int kernel_width) {
  return Plan(nx, ny, oversampling, kernel_width);
}

FrameOperator::FrameOperator(const Plan& plan, std::span<const traj::Spoke> spokes) : plan_(plan) {
  std::vector<traj::KPoint> samples;
  for (const traj::Spoke& s : spokes) samples.insert(samples.end(), s.samples.begin(), s.samples.end());
  build(samples);
}

FrameOperator::FrameOperator(const Plan& plan, std::span<const traj::KPoint> samples) : plan_(plan) {
  build(samples);
}

void FrameOperator::build(std::span<const traj::KPoint> samples) {
  n_samples_ = samples.size();
  taps_ = plan_.kernel_width() + 1;
  const double half = 0.5 * plan_.kernel_width();
  const int gx = plan_.grid_x();
  const int gy = plan_.grid_y();
  ix_.resize(n_samples_ * taps_);
  iy_.resize(n_samples_ * taps_);
  wx_.resize(n_samples_ * taps_);
  wy_.resize(n_samples_ * taps_);
  auto fill = [&](double u, int g, int* idx, double* w) {
    const int start = static_cast<int>(std::ceil(u - half));
    for (int a = 0; a < taps_; ++a) {
      const int m = start + a;
      idx[a] = wrap(m, g);
      w[a] = plan_.kernel(u - m);
    }
  };
  for (std::size_t s = 0; s < n_samples_; ++s) {
    fill(samples[s].kx * gx, gx, &ix_[s * taps_], &wx_[s * taps_]);
    fill(samples[s].ky * gy, gy, &iy_[s * taps_], &wy_[s * taps_]);
  }
}

std::vector<cplx> FrameOperator::spectrum(const Frame& image) const {
  const int nx = plan_.nx(), ny = plan_.ny();
  if (image.nx != nx || image.ny != ny) fail(ErrorCode::Shape, "image does not match NUFFT plan");
  const int gx = plan_.grid_x(), gy = plan_.grid_y();
  std::vector<cplx> grid(static_cast<std::size_t>(gx) * gy);
  const auto apod = plan_.apodization();
  for (int j = 0; j < ny; ++j) {
    const int gj = wrap(j - ny / 2, gy);
    for (int i = 0; i < nx; ++i) {
      const std::size_t p = static_cast<std::size_t>(j) * nx + i;
      grid[static_cast<std::size_t>(gj) * gx + wrap(i - nx / 2, gx)] = image.px[p] / apod[p];
    }
  }
  plan_.fft_forward(grid);
  return grid;
}

std::vector<cplx> FrameOperator::interpolate(std::span<const cplx> spectrum) const {
  const int gx = plan_.grid_x();
  std::vector<cplx> out(n_samples_);
  for (std::size_t s = 0; s < n_samples_; ++s) {
    const int* ix = &ix_[s * taps_];
    const int* iy = &iy_[s * taps_];
    const double* wx = &wx_[s * taps_];
    const double* wy = &wy_[s * taps_];
    cplx acc = 0.0;
    for (int b = 0; b < taps_; ++b) {
      if (wy[b] == 0.0) continue;
      const cplx* row = spectrum.data() + static_cast<std::size_t>(iy[b]) * gx;
      cplx r = 0.0;
      for (int a = 0; a < taps_; ++a) r += wx[a] * row[ix[a]];
      acc += wy[b] * r;
    }
    out[s] = acc;
  }
  return out;
}

std::vector<cplx> FrameOperator::forward(const Frame& image) const { return interpolate(spectrum(image)); }

Frame FrameOperator::adjoint(std::span<const cplx> samples, std::span<const double> weights) const {
  if (samples.size() != n_samples_) fail(ErrorCode::Shape, "sample count does not match trajectory");
  if (!weights.empty() && weights.size() != n_samples_)
    fail(ErrorCode::Shape, "density compensation does not match trajectory");
  const int nx = plan_.nx(), ny = plan_.ny();
  const int gx = plan_.grid_x(), gy = plan_.grid_y();
  std::vector<cplx> grid(static_cast<std::size_t>(gx) * gy);
  for (std::size_t s = 0; s < n_samples_; ++s) {
    const cplx v = weights.empty() ? samples[s] : samples[s] * weights[s];
    if (v == cplx(0.0)) continue;
    const int* ix = &ix_[s * taps_];
    const int* iy = &iy_[s * taps_];
    const double* wx = &wx_[s * taps_];
    const double* wy = &wy_[s * taps_];
    for (int b = 0; b < taps_; ++b) {
      if (wy[b] == 0.0) continue;
      const cplx vb = v * wy[b];
      cplx* row = grid.data() + static_cast<std::size_t>(iy[b]) * gx;
      for (int a = 0; a < taps_; ++a) row[ix[a]] += wx[a] * vb;
    }
  }
  plan_.fft_backward(grid);
  Frame out(nx, ny);
  const auto apod = plan_.apodization();
  for (int j = 0; j < ny; ++j) {
    const int gj = wrap(j - ny / 2, gy);
    for (int i = 0; i < nx; ++i) {
      const std::size_t p = static_cast<std::size_t>(j) * nx + i;
      out.px[p] = grid[static_cast<std::size_t>(gj) * gx + wrap(i - nx / 2, gx)] / apod[p];
    }
  }
  return out;
}

std::vector<cplx> forward(const Plan& plan, const Frame& image, std::span<const traj::Spoke> spokes) {
  return FrameOperator(plan, spokes).forward(image);
}

Frame adjoint(const Plan& plan, std::span<const cplx> samples, std::span<const traj::Spoke> spokes,
              const traj::DensityCompensation* dcf) {
  FrameOperator op(plan, spokes);
  if (dcf) return op.adjoint(samples, dcf->weights);
  return op.adjoint(samples);
}

}  // namespace cine::nufft
