#include "cine/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "cine/error.hpp"

namespace cine::traj {

double golden_angle_rad() { return std::numbers::pi / std::numbers::phi; }

Spoke golden_angle_spoke(std::int64_t global_index, int n_readout) {
  if (n_readout < 8 || n_readout % 2 != 0) fail(ErrorCode::Parameter, "n_readout must be even and >= 8");
  Spoke spoke;
  spoke.global_index = global_index;
  spoke.angle_rad = std::fmod(static_cast<double>(global_index) * golden_angle_rad(), std::numbers::pi);
  const double c = std::cos(spoke.angle_rad);
  const double s = std::sin(spoke.angle_rad);
  spoke.samples.resize(n_readout);
  for (int j = 0; j < n_readout; ++j) {
    const double k = static_cast<double>(j - n_readout / 2) / n_readout;
    spoke.samples[j] = {k * c, k * s};
  }
  return spoke;
}

std::vector<Spoke> golden_angle_spokes(std::span<const std::int64_t> global_indices, int n_readout) {
  std::vector<Spoke> spokes;
  spokes.reserve(global_indices.size());
  for (std::int64_t g : global_indices) spokes.push_back(golden_angle_spoke(g, n_readout));
  return spokes;
}

int default_readout(int nx, int ny) {
  const int n = 2 * std::max(nx, ny);
  return n % 2 == 0 ? n : n + 1;
}

std::int64_t total_spokes(double scan_time_s, double tr_ms) {
  const auto tr_us = static_cast<std::int64_t>(std::llround(tr_ms * 1000.0));
  const auto t_us = static_cast<std::int64_t>(std::llround(scan_time_s * 1e6));
  if (tr_us <= 0) fail(ErrorCode::Parameter, "TR must be positive");
  return t_us / tr_us;
}

AcquisitionSchedule::AcquisitionSchedule(double scan_time_s, double tr_ms, int n_frames, int n_readout)
    : scan_time_s_(scan_time_s), tr_ms_(tr_ms), n_readout_(n_readout), frames_(n_frames) {
  if (n_frames < 1) fail(ErrorCode::Parameter, "schedule needs at least one frame");
  total_ = traj::total_spokes(scan_time_s, tr_ms);
  for (auto& f : frames_) f.reserve(static_cast<std::size_t>(total_ / n_frames + 1));
  for (std::int64_t g = 0; g < total_; ++g)
    frames_[static_cast<std::size_t>(g % n_frames)].push_back(golden_angle_spoke(g, n_readout));
}

double AcquisitionSchedule::undersampling_factor(int nx, int ny) const {
  const double nyquist = std::ceil(std::numbers::pi / 2.0 * std::max(nx, ny));
  const double per_frame = mean_spokes_per_frame();
  return per_frame > 0 ? nyquist / per_frame : std::numeric_limits<double>::infinity();
}

AcquisitionSchedule schedule_profiles(double scan_time_s, const Geometry& geometry, int nx, int ny,
                                      ScheduleOptions options) {
  if (!options.allow_any_time && (scan_time_s < 1.0 || scan_time_s > 30.0))
    fail(ErrorCode::Range, "scan time outside [1, 30] s");
  if (scan_time_s <= 0) fail(ErrorCode::Range, "scan time must be positive");
  geometry.validate();
  const int n_readout = options.n_readout > 0 ? options.n_readout : default_readout(nx, ny);
  return AcquisitionSchedule(scan_time_s, geometry.tr_ms, geometry.n_frames, n_readout);
}

DensityCompensation ramp_dcf(std::span<const Spoke> frame, double center_floor) {
  if (frame.empty()) fail(ErrorCode::EmptyFrame, "density compensation of an empty frame");
  if (!(center_floor > 0)) fail(ErrorCode::Parameter, "centre floor must be positive");
  DensityCompensation dcf;
  const double n_spokes = static_cast<double>(frame.size());
  for (const Spoke& spoke : frame) {
    const double floor_k = center_floor / static_cast<double>(spoke.samples.size());
    for (const KPoint& k : spoke.samples)
      dcf.weights.push_back(std::max(std::hypot(k.kx, k.ky), floor_k) / n_spokes);
  }
  return dcf;
}

void write_trajectory_csv(std::ostream& out, const AcquisitionSchedule& schedule) {
  out << "global_index,frame,angle_rad,sample_index,kx,ky\n";
  const auto old = out.precision(12);
  for (int f = 0; f < schedule.n_frames(); ++f)
    for (const Spoke& spoke : schedule.frame(f))
      for (std::size_t j = 0; j < spoke.samples.size(); ++j)
        out << spoke.global_index << ',' << f << ',' << spoke.angle_rad << ',' << j << ','
            << spoke.samples[j].kx << ',' << spoke.samples[j].ky << '\n';
  out.precision(old);
}

}  // namespace cine::traj
