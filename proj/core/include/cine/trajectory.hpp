#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "cine/volume.hpp"

namespace cine::traj {

struct KPoint {
  double kx = 0;
  double ky = 0;
};

// One radial readout through the k-space origin. Coordinates are in cycles
// per pixel, within [-0.5, 0.5).
struct Spoke {
  std::int64_t global_index = 0;
  double angle_rad = 0;
  std::vector<KPoint> samples;
};

// Increment between consecutive spokes: pi / golden ratio.
double golden_angle_rad();

std::vector<Spoke> golden_angle_spokes(std::span<const std::int64_t> global_indices, int n_readout);
Spoke golden_angle_spoke(std::int64_t global_index, int n_readout);

// 2 * max(nx, ny), rounded up to even.
int default_readout(int nx, int ny);

struct ScheduleOptions {
  int n_readout = 0;  // 0 -> default_readout
  // Allow scan times outside [1, 30] s.
  bool allow_any_time = false;
};

// Spokes acquired in `scan_time_s`, dealt round-robin over the cardiac
// frames in acquisition order. Schedules are nested: the first N spokes of
// a longer scan are exactly the spokes of a shorter one.
class AcquisitionSchedule {
public:
  AcquisitionSchedule() = default;
  AcquisitionSchedule(double scan_time_s, double tr_ms, int n_frames, int n_readout);

  double scan_time_s() const { return scan_time_s_; }
  double tr_ms() const { return tr_ms_; }
  int n_frames() const { return static_cast<int>(frames_.size()); }
  int n_readout() const { return n_readout_; }
  std::int64_t total_spokes() const { return total_; }

  const std::vector<Spoke>& frame(int f) const { return frames_.at(f); }
  std::size_t spokes_in_frame(int f) const { return frames_.at(f).size(); }
  double mean_spokes_per_frame() const {
    return static_cast<double>(total_) / static_cast<double>(frames_.size());
  }

  // ceil(pi/2 * max(nx, ny)) over the mean number of spokes per frame.
  double undersampling_factor(int nx, int ny) const;

private:
  double scan_time_s_ = 0;
  double tr_ms_ = 0;
  int n_readout_ = 0;
  std::int64_t total_ = 0;
  std::vector<std::vector<Spoke>> frames_;
};

// floor(1000 t / TR) computed on integer microseconds.
std::int64_t total_spokes(double scan_time_s, double tr_ms);

AcquisitionSchedule schedule_profiles(double scan_time_s, const Geometry& geometry, int nx, int ny,
                                      ScheduleOptions options = {});

// Ramp weights max(|k|, 1 / (2 n_readout)) / n_spokes, one per sample in
// spoke-major order.
struct DensityCompensation {
  std::vector<double> weights;
};

// Ramp weights max(|k|, center_floor / n_readout) / n_spokes. The default
// floor is 1/(2 n_readout); 0.25 gives the k = 0 sample the area of its
// Voronoi disc instead.
inline constexpr double kDefaultCenterFloor = 0.5;
inline constexpr double kVoronoiCenterFloor = 0.25;
DensityCompensation ramp_dcf(std::span<const Spoke> frame, double center_floor = kDefaultCenterFloor);

// CSV: global_index,frame,angle_rad,sample_index,kx,ky
void write_trajectory_csv(std::ostream& out, const AcquisitionSchedule& schedule);

}  // namespace cine::traj
