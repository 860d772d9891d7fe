#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cine/imgqc.hpp"
#include "cine/phantom.hpp"
#include "cine/recon.hpp"
#include "cine/registration.hpp"
#include "cine/segment.hpp"

namespace cine::config {

enum class ReconMethod { Adjoint, Unrolled };
enum class Qc1Mode { Model, OracleSsim };
enum class Qc2Mode { RcaSvm, OracleDice };
enum class SegProvider { PhantomThreshold, ExternalMasks };
enum class QcScope { Subject, Slice };

struct PipelineConfig {
  ReconMethod recon_method = ReconMethod::Unrolled;
  double t_min_s = 1.0;
  double t_max_s = 30.0;
  double t_step_s = 1.0;

  Qc1Mode qc1_mode = Qc1Mode::OracleSsim;
  double qc1_ssim_threshold = 0.85;
  std::string qc1_model;

  Qc2Mode qc2_mode = Qc2Mode::OracleDice;
  double qc2_dice_threshold = 0.90;
  std::string qc2_models;
  std::string atlas_dir;
  bool rca_template_to_test = true;

  SegProvider seg_provider = SegProvider::PhantomThreshold;
  std::string seg_dir;
  segment::IntensityModel intensity;

  QcScope scope = QcScope::Subject;

  // Subjects: a generated phantom cohort unless input_dir is set, in which
  // case <input_dir>/<id>_img.nii (and optional <id>_seg.nii) are read.
  std::string input_dir;
  int cohort_size = 20;
  phantom::PhantomSpec phantom;

  double oversampling = 2.0;
  int kernel_width = 4;
  std::optional<double> snr_db;
  double phase_sigma_px = 8.0;

  recon::UnrolledParams unrolled;
  imgqc::SsimOptions ssim;
  reg::RegistrationOptions registration;

  std::uint64_t seed = 0;

  // ConfigError for inconsistent values.
  void validate() const;
  // Scan times of the sweep, t_min + k * t_step up to t_max inclusive.
  std::vector<double> scan_times() const;
};

// Applies one key=value assignment; ConfigError for unknown keys or
// malformed values.
void apply(PipelineConfig& cfg, const std::string& key, const std::string& value);

// `key = value` lines, '#' comments. ConfigError on any problem.
PipelineConfig parse(std::istream& in, PipelineConfig base = {});
PipelineConfig load(const std::string& path, PipelineConfig base = {});

// Every key with its current value, in a fixed order.
std::vector<std::pair<std::string, std::string>> dump(const PipelineConfig& cfg);

const char* to_string(ReconMethod m);
const char* to_string(Qc1Mode m);
const char* to_string(Qc2Mode m);
const char* to_string(SegProvider p);
const char* to_string(QcScope s);

}  // namespace cine::config
