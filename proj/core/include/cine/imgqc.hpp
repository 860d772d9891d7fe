#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cine/trajectory.hpp"
#include "cine/volume.hpp"

namespace cine::imgqc {

// Reference-based image metrics. Both volumes are compared as magnitudes
// divided by the maximum magnitude of the reference.

struct SsimOptions {
  double sigma = 1.5;
  int window = 11;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

double mae(const CineVolume& ref, const CineVolume& test);
// nullopt when the inputs are identical (infinite PSNR).
std::optional<double> psnr(const CineVolume& ref, const CineVolume& test);
double ssim(const CineVolume& ref, const CineVolume& test, const SsimOptions& options = {});

// Mean local SSIM over valid window positions of one pair of normalized frames.
double ssim_frame(const Image& ref, const Image& test, const SsimOptions& options = {});

struct SliceQuality {
  double mae = 0;
  std::optional<double> psnr_db;
  double ssim = 0;
};

struct Summary {
  double mean = 0;
  double sd = 0;
};

struct ImageQualityReport {
  std::vector<SliceQuality> slices;
  Summary mae;
  // Over slices with a finite PSNR; nullopt if every slice is identical.
  std::optional<Summary> psnr_db;
  Summary ssim;
};

ImageQualityReport image_quality(const CineVolume& ref, const CineVolume& test, const SsimOptions& options = {});

Summary summarize(std::span<const double> values);

// ---- QC1: no-reference quality gate ---------------------------------------

inline constexpr int kQc1FeatureCount = 6;

// 0: high-frequency energy ratio (|f| above half Nyquist), mean over frames
// 1: temporal total variation per unit intensity
// 2: entropy of the spatial gradient-magnitude histogram
// 3: background noise estimate from corner patches, per unit intensity
// 4: blur index, energy above a quarter of Nyquist
// 5: log of the number of spokes per frame
struct Qc1Features {
  std::array<double, kQc1FeatureCount> values{};
};

const char* qc1_feature_name(int index);

Qc1Features qc1_features(const CineVolume& recon, const traj::AcquisitionSchedule& schedule);
// Features of one slice.
Qc1Features qc1_features(const CineVolume& recon, int slice, double spokes_per_frame);

struct LinearModel {
  std::vector<double> weights;
  double bias = 0;
  std::vector<double> mean;
  std::vector<double> sd;
  double threshold = 0;

  void validate() const;
  // w . ((f - mean) / sd) + b
  double score(std::span<const double> features) const;
};

struct Verdict {
  bool pass = false;
  double score = 0;
};

Verdict qc1_predict(const LinearModel& model, const Qc1Features& features);

struct TrainOptions {
  double l2 = 1e-3;
  int epochs = 2000;
  double learning_rate = 0.5;
  std::uint64_t seed = 0;
  double holdout_fraction = 0.2;
};

struct ClassificationStats {
  double sensitivity = 0;
  double specificity = 0;
  double balanced_accuracy = 0;
  int n = 0;
};

// Confusion-matrix summary; label 1 is the positive ("analyzable") class.
ClassificationStats classification_stats(std::span<const int> truth, std::span<const int> predicted);

struct TrainedLinearModel {
  LinearModel model;
  ClassificationStats train;
  ClassificationStats holdout;
};

// L2-regularized logistic regression by full-batch gradient descent on
// standardized features. The training split is balanced by resampling the
// minority class; a seeded hold-out split is scored separately.
TrainedLinearModel qc1_train(std::span<const std::vector<double>> features, std::span<const int> labels,
                             const TrainOptions& options);

// key=value text; vectors as comma-separated lists.
void write_linear_model(std::ostream& out, const LinearModel& model);
LinearModel read_linear_model(std::istream& in);
void save_linear_model(const LinearModel& model, const std::string& path);
LinearModel load_linear_model(const std::string& path);

}  // namespace cine::imgqc
