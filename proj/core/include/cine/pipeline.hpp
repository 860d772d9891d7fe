#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cine/cardio.hpp"
#include "cine/config.hpp"
#include "cine/imgqc.hpp"
#include "cine/ksim.hpp"
#include "cine/nufft.hpp"
#include "cine/segqc.hpp"
#include "cine/volume.hpp"

namespace cine::pipeline {

struct Subject {
  std::string id;
  // Fully sampled magnitude cine.
  CineVolume image;
  std::optional<LabelMap> truth;
  // Closed-form parameters, when the subject is an analytic phantom.
  std::optional<cardio::FunctionalParams> analytic;
  std::uint64_t seed = 0;
};

// Trained models and atlas needed by the non-oracle QC modes.
struct Resources {
  std::optional<imgqc::LinearModel> qc1;
  std::optional<segqc::Qc2Models> qc2;
  std::optional<segqc::Atlas> atlas;
};

Resources load_resources(const config::PipelineConfig& cfg);

struct SliceVerdict {
  bool qc1_pass = false;
  double qc1_score = 0;
  // Unset when segmentation was skipped.
  std::optional<bool> qc2_pass;
};

struct Attempt {
  double scan_time_s = 0;
  double spokes_per_frame = 0;
  imgqc::ImageQualityReport image;
  bool qc1_pass = false;
  std::vector<SliceVerdict> slices;
  bool segmented = false;
  // Mean Dice against the reference segmentation over ED/ES frames and
  // slices, per structure.
  std::optional<std::array<double, kNumStructures>> dice;
  // Subject-level QC2 verdict; unset when segmentation was skipped.
  std::optional<bool> qc2_pass;
  bool pass = false;
};

struct SubjectReport {
  std::string id;
  std::vector<Attempt> attempts;
  std::optional<double> pass_time_s;
  std::optional<cardio::FunctionalParams> at_pass;
  cardio::FunctionalParams reference;
  std::optional<cardio::FunctionalParams> analytic;
};

struct Agreement {
  std::string param;
  std::vector<std::string> subjects;
  std::vector<double> pipeline;
  std::vector<double> other;
  std::optional<cardio::BlandAltman> bland_altman;
  std::optional<double> pearson;
  double mean_abs_error = 0;
};

struct CohortReport {
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<SubjectReport> subjects;
  int n_passed = 0;
  int n_never = 0;
  std::optional<imgqc::Summary> scan_time_s;
  // Image quality at the passing time, over passed subjects.
  std::optional<imgqc::Summary> mae, psnr_db, ssim;
  std::array<std::optional<imgqc::Summary>, kNumStructures> dice;
  // QC1 verdicts against the oracle SSIM label over every attempt.
  imgqc::ClassificationStats qc1_vs_oracle;
  // Pipeline-at-pass against the fully sampled reference, and against the
  // closed-form phantom values where available.
  std::vector<Agreement> vs_reference;
  std::vector<Agreement> vs_analytic;
};

inline constexpr const char* kParamNames[6] = {"lv_edv", "lv_esv", "lv_ef", "rv_edv", "rv_esv", "rv_ef"};
double param_value(const cardio::FunctionalParams& p, int index);

// Phantom cohort from cfg.phantom / cohort_size / seed, or the subjects of
// cfg.input_dir.
std::vector<Subject> load_subjects(const config::PipelineConfig& cfg);

// The active-acquisition loop for one subject.
SubjectReport run_active_acquisition(const Subject& subject, const config::PipelineConfig& cfg,
                                     const Resources& resources);

CohortReport run_cohort(const std::vector<Subject>& subjects, const config::PipelineConfig& cfg,
                        const Resources& resources);

// Cohort aggregates from already computed subject reports.
CohortReport summarize(std::vector<SubjectReport> subjects, const config::PipelineConfig& cfg);

// Segmentation from the configured provider. `scan_time_s` selects
// per-time external masks.
LabelMap segment(const CineVolume& magnitude, const config::PipelineConfig& cfg, const std::string& subject,
                 std::optional<double> scan_time_s);

// Reconstruction with the configured method.
CineVolume reconstruct(const ksim::KSpaceDataset& ds, const nufft::Plan& plan, const config::PipelineConfig& cfg);

}  // namespace cine::pipeline
