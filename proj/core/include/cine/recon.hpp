#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cine/ksim.hpp"
#include "cine/nufft.hpp"
#include "cine/volume.hpp"

namespace cine::recon {

enum class Init { Zero, Adjoint };

struct UnrolledParams {
  int n_unroll = 10;
  // Gradient step; 1/L with L from power iteration on A^H A when unset.
  std::optional<double> step_size;
  int power_iterations = 20;
  // Regularization weights, relative to the data term: the effective weight
  // is lambda * L, so one step moves the image by lambda * grad R.
  double lambda_spatial = 1e-3;
  double lambda_temporal = 3e-3;
  double tv_epsilon = 1e-6;
  Init init = Init::Adjoint;

  void validate() const;
};

struct ReconResult {
  CineVolume magnitude;
  CineVolume complex_image;
  // ||A x - y||^2 summed over slices: initial value, then after each step.
  std::vector<double> residual_history;
  // Largest per-slice Lipschitz estimate (unrolled only).
  double lipschitz = 0;
};

// Area element of one ramp-weighted radial sample is pi / n_readout times
// its DCF weight.
double radial_area_scale(int n_readout);

ReconResult recon_adjoint(const ksim::KSpaceDataset& ds, const nufft::Plan& plan);

// Smoothed spatio-temporal total variation
//   R(x) = ls * sum sqrt(|dx x|^2 + |dy x|^2 + eps) + lt * sum sqrt(|dt x|^2 + eps)
// with forward differences, replicated spatial borders and a circular time axis.
double tv_value(const FrameStack& x, double lambda_spatial, double lambda_temporal, double eps);
// Gradient in the real sense: d/dRe + i d/dIm, so that
// R(x + h v) = R(x) + h Re<g, v> + O(h^2).
FrameStack tv_gradient(const FrameStack& x, double lambda_spatial, double lambda_temporal, double eps);

// Per-frame operators of one slice.
std::vector<nufft::FrameOperator> slice_operators(const ksim::KSpaceDataset& ds, const nufft::Plan& plan,
                                                  int slice);

// Largest eigenvalue of A^H A over a frame stack by power iteration.
double estimate_lipschitz(const std::vector<nufft::FrameOperator>& ops, int iterations, std::uint64_t seed = 1);

// x <- x - eta (A^H (A x - y) + grad R(x)), n_unroll times, per slice.
ReconResult recon_unrolled(const ksim::KSpaceDataset& ds, const nufft::Plan& plan, const UnrolledParams& params);

}  // namespace cine::recon
