#pragma once

#include <vector>

#include "cine/config.hpp"
#include "cine/imgqc.hpp"
#include "cine/phantom.hpp"
#include "cine/segqc.hpp"

namespace cine::training {

// Label perturbations used to produce poor segmentations.
// Every structure shrinks by `px` 4-neighbour steps.
LabelFrame erode(const LabelFrame& labels, int px);
// Structures grow into the background by `px` steps.
LabelFrame dilate(const LabelFrame& labels, int px);
// Integer translation; vacated pixels become background.
LabelFrame shift(const LabelFrame& labels, int dx, int dy);

struct Qc1Sample {
  std::vector<double> features;
  int label = 0;
  double ssim = 0;
  double scan_time_s = 0;
  config::ReconMethod method = config::ReconMethod::Adjoint;
};

// Sweeps scan times and reconstruction methods over the given phantoms and
// labels each reconstruction by the oracle SSIM threshold of `cfg`.
std::vector<Qc1Sample> qc1_samples(const std::vector<phantom::PhantomSpec>& specs, const std::vector<double>& times,
                                   const std::vector<config::ReconMethod>& methods, const config::PipelineConfig& cfg);

imgqc::TrainedLinearModel train_qc1(const std::vector<Qc1Sample>& samples, const imgqc::TrainOptions& options);

// ED and ES frames of the first slice of each phantom.
segqc::Atlas phantom_atlas(const std::vector<phantom::PhantomSpec>& specs);

struct Qc2Sample {
  segqc::Phase phase = segqc::Phase::ED;
  int structure = 0;
  segqc::StructureMetrics predicted;
  double true_dice = 0;
  int label = 0;
};

// RCA-predicted metrics of intact and perturbed ground-truth segmentations
// of each phantom's ED/ES frames; label = true Dice >= cfg.qc2_dice_threshold.
std::vector<Qc2Sample> qc2_samples(const std::vector<phantom::PhantomSpec>& specs, const segqc::Atlas& atlas,
                                   const config::PipelineConfig& cfg);

struct TrainedQc2 {
  segqc::Qc2Models models;
  // stats[phase][structure]
  std::array<std::array<imgqc::ClassificationStats, kNumStructures>, segqc::kNumPhases> stats{};
};

TrainedQc2 train_qc2(const std::vector<Qc2Sample>& samples, const segqc::SvmOptions& options);

}  // namespace cine::training
