#pragma once

#include <memory>
#include <span>
#include <vector>

#include "cine/trajectory.hpp"
#include "cine/volume.hpp"

namespace cine::nufft {

struct FftPlans;

// Kaiser-Bessel gridding plan for one image size. Immutable and cheap to
// copy; copies share the FFT plans.
//
// Conventions: image pixel (i, j) sits at centred position
// p = (i - nx/2, j - ny/2), k-space positions are in cycles per pixel, and
// the forward operator evaluates sum_p x(p) exp(-2 pi i k.p).
class Plan {
public:
  Plan(int nx, int ny, double oversampling = 2.0, int kernel_width = 4);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int grid_x() const { return gx_; }
  int grid_y() const { return gy_; }
  double oversampling() const { return alpha_; }
  int kernel_width() const { return width_; }
  double beta() const { return beta_; }
  int table_entries_per_cell() const { return table_per_cell_; }

  // Kernel value at offset u (oversampled grid cells), from the lookup table.
  double kernel(double u) const;
  // Exact kernel, normalized to 1 at u = 0.
  double kernel_exact(double u) const;
  // Image-domain transform of the kernel at frequency f (cycles per grid cell).
  double kernel_transform(double f) const;

  // Per-pixel de-apodization divisor, nx * ny values, x fastest.
  std::span<const double> apodization() const { return apod_; }

  void fft_forward(std::span<cplx> grid) const;
  void fft_backward(std::span<cplx> grid) const;

private:
  int nx_, ny_, gx_, gy_;
  double alpha_;
  int width_;
  double beta_;
  int table_per_cell_;
  std::vector<double> table_;
  std::vector<double> apod_;
  std::shared_ptr<const FftPlans> fft_;
};

// beta = pi * sqrt((W / alpha)^2 (alpha - 1/2)^2 - 0.8)
double kaiser_bessel_beta(double oversampling, int kernel_width);

// Interpolation footprint for a fixed set of k-space samples. Iterative
// reconstruction reuses it across many operator applications.
class FrameOperator {
public:
  FrameOperator(const Plan& plan, std::span<const traj::Spoke> spokes);
  FrameOperator(const Plan& plan, std::span<const traj::KPoint> samples);

  std::size_t n_samples() const { return n_samples_; }
  const Plan& plan() const { return plan_; }

  std::vector<cplx> forward(const Frame& image) const;
  // Bare adjoint when `weights` is empty, otherwise samples are weighted first.
  Frame adjoint(std::span<const cplx> samples, std::span<const double> weights = {}) const;

  // Forward evaluation split in two: the oversampled spectrum of an image,
  // then interpolation at this operator's samples. Used by incremental
  // acquisition to reuse the spectrum across scan times.
  std::vector<cplx> spectrum(const Frame& image) const;
  std::vector<cplx> interpolate(std::span<const cplx> spectrum) const;

private:
  void build(std::span<const traj::KPoint> samples);

  Plan plan_;
  std::size_t n_samples_ = 0;
  int taps_ = 0;
  std::vector<int> ix_;
  std::vector<int> iy_;
  std::vector<double> wx_;
  std::vector<double> wy_;
};

Plan plan(int nx, int ny, double oversampling = 2.0, int kernel_width = 4);

std::vector<cplx> forward(const Plan& plan, const Frame& image, std::span<const traj::Spoke> spokes);

Frame adjoint(const Plan& plan, std::span<const cplx> samples, std::span<const traj::Spoke> spokes,
              const traj::DensityCompensation* dcf = nullptr);

}  // namespace cine::nufft
