#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "cine/nufft.hpp"
#include "cine/trajectory.hpp"
#include "cine/volume.hpp"

namespace cine::ksim {

// Samples of one frame of one slice, spoke-major.
struct FrameData {
  std::vector<traj::Spoke> spokes;
  std::vector<cplx> samples;
};

struct NoiseRecord {
  std::uint64_t seed = 0;
  double snr_db = 0;
  // Per-component standard deviation of the complex Gaussian noise.
  double sigma = 0;
};

struct KSpaceDataset {
  Geometry geometry;
  int nx = 0;
  int ny = 0;
  int n_readout = 0;
  double scan_time_s = 0;
  // frames[slice][frame]
  std::vector<std::vector<FrameData>> frames;
  std::optional<NoiseRecord> noise;

  int n_slices() const { return static_cast<int>(frames.size()); }
  int n_frames() const { return frames.empty() ? 0 : static_cast<int>(frames.front().size()); }
  const FrameData& at(int slice, int frame) const { return frames.at(slice).at(frame); }
  std::size_t total_samples() const;
};

// Smooth synthetic background phase: a seeded uniform random field per
// slice, Gaussian-smoothed and mapped linearly from [0, 1) to [-pi, pi).
// The phase is the same in every frame.
CineVolume synthesize_phase(const CineVolume& magnitude, double smoothness_sigma_px, std::uint64_t seed);
// The phase map used above, for one slice.
Image phase_field(int nx, int ny, double smoothness_sigma_px, std::uint64_t seed, int slice);

KSpaceDataset acquire(const CineVolume& complex_cine, const traj::AcquisitionSchedule& schedule,
                      const nufft::Plan& plan);

// Acquisition across growing scan times. Each frame's oversampled spectrum is
// computed once and only spokes not seen before are interpolated, so the
// dataset for a schedule is identical to a cold `acquire` call.
class IncrementalAcquirer {
public:
  IncrementalAcquirer(const CineVolume& complex_cine, const nufft::Plan& plan);

  KSpaceDataset acquire(const traj::AcquisitionSchedule& schedule);

private:
  const CineVolume* cine_;
  nufft::Plan plan_;
  // spectra_[slice][frame]
  std::vector<std::vector<std::vector<cplx>>> spectra_;
  KSpaceDataset cache_;
};

// Noise power P_signal / 10^(snr_db / 10), P_signal = mean |y|^2 of `ds`.
double noise_sigma_for(const KSpaceDataset& ds, double snr_db);

// snr_db == nullopt leaves the dataset untouched. Noise for each spoke is
// drawn from a generator keyed by (seed, slice, global spoke index), so
// nested datasets receive identical noise on their common spokes.
KSpaceDataset add_noise(const KSpaceDataset& ds, std::optional<double> snr_db, std::uint64_t seed);
KSpaceDataset add_noise_sigma(const KSpaceDataset& ds, double sigma, std::uint64_t seed,
                              double snr_db_label = 0.0);

// CSV of one slice: frame,global_index,sample_index,re,im
void write_kspace_csv(std::ostream& out, const KSpaceDataset& ds, int slice);

}  // namespace cine::ksim
