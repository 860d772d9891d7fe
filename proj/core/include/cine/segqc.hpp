#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cine/imgqc.hpp"
#include "cine/registration.hpp"
#include "cine/volume.hpp"

namespace cine::segqc {

double dice(const LabelFrame& a, const LabelFrame& b, std::uint8_t label);

struct SurfaceDistances {
  double msd_mm = 0;
  double rmsd_mm = 0;
  double hd_mm = 0;
};

// Boundary voxels are labelled voxels with an unlabelled 4-neighbour (or on
// the image edge). Distances from each boundary to the other are pooled.
// EmptyMask if either mask has no voxel of `label`.
SurfaceDistances surface_distances(const LabelFrame& a, const LabelFrame& b, std::uint8_t label,
                                   reg::Spacing spacing);

struct StructureMetrics {
  double dsc = 0;
  double msd_mm = 0;
  double rmsd_mm = 0;
  double hd_mm = 0;
  // False when a mask was empty and the distances are undefined.
  bool defined = true;

  std::array<double, 4> features() const { return {dsc, msd_mm, rmsd_mm, hd_mm}; }
};

enum class Phase { ED = 0, ES = 1 };
inline constexpr int kNumPhases = 2;
const char* phase_name(Phase p);

// metrics[phase][structure], structures in kStructures order.
struct SegQualityMetrics {
  std::array<std::array<StructureMetrics, kNumStructures>, kNumPhases> metrics{};

  StructureMetrics& at(Phase p, int structure) { return metrics[static_cast<int>(p)][structure]; }
  const StructureMetrics& at(Phase p, int structure) const { return metrics[static_cast<int>(p)][structure]; }
};

using FrameMetrics = std::array<StructureMetrics, kNumStructures>;

// All four metrics for every structure; empty masks give defined = false.
FrameMetrics compare(const LabelFrame& a, const LabelFrame& b, reg::Spacing spacing);

struct AtlasEntry {
  Image image;
  LabelFrame labels;
};

struct Atlas {
  std::vector<AtlasEntry> entries;
  reg::Spacing spacing;

  void validate() const;
};

// Reads <dir>/<k>_img.nii and <dir>/<k>_seg.nii for k = 0, 1, ... until the
// first missing index; the first frame of the first slice is used.
Atlas load_atlas(const std::string& dir);
void save_atlas(const Atlas& atlas, const std::string& dir);

enum class Direction { TemplateToTest, TestToTemplate };

struct RcaOptions {
  reg::RegistrationOptions registration;
  Direction direction = Direction::TemplateToTest;
};

// Registered templates for one test image. Registration does not depend on
// the test segmentation, so one RcaContext can score several segmentations.
class RcaContext {
public:
  RcaContext(const Image& test_image, const Atlas& atlas, const RcaOptions& options = {});

  // Best template per metric: max DSC, min distances. A structure is
  // undefined when the test mask is empty or no template yields a distance.
  FrameMetrics predict(const LabelFrame& test_seg) const;

private:
  const Atlas* atlas_;
  Direction direction_;
  int nx_ = 0, ny_ = 0;
  std::vector<reg::AffineTransform2D> transforms_;
  // Template labels warped into test space (TemplateToTest only).
  std::vector<LabelFrame> warped_;
};

FrameMetrics rca_predict(const Image& test_image, const LabelFrame& test_seg, const Atlas& atlas,
                         const RcaOptions& options = {});

// Linear SVM over (dsc, msd, rmsd, hd) standardized features.
struct SvmModel {
  std::array<double, 4> weights{};
  double bias = 0;
  std::array<double, 4> mean{};
  std::array<double, 4> sd{1, 1, 1, 1};

  void validate() const;
  double decision(const StructureMetrics& m) const;
  // Good iff decision >= 0 and the metrics are defined.
  bool good(const StructureMetrics& m) const;
};

struct SvmOptions {
  double lambda = 1e-3;
  int epochs = 200;
  std::uint64_t seed = 0;
};

struct TrainedSvm {
  SvmModel model;
  imgqc::ClassificationStats train;
};

// Soft-margin linear SVM by stochastic subgradient descent on the hinge
// loss with L2 penalty (step 1 / (lambda t)), seeded shuffling per epoch.
// Undefined samples are skipped. Label 1 = good segmentation.
TrainedSvm qc2_train(std::span<const StructureMetrics> metrics, std::span<const int> labels, const SvmOptions& options);

// One optional model per (phase, structure).
struct Qc2Models {
  std::array<std::array<std::optional<SvmModel>, kNumStructures>, kNumPhases> models{};

  std::optional<SvmModel>& at(Phase p, int s) { return models[static_cast<int>(p)][s]; }
  const std::optional<SvmModel>& at(Phase p, int s) const { return models[static_cast<int>(p)][s]; }
};

struct Qc2Verdict {
  bool pass = false;
  // votes[phase][structure]
  std::array<std::array<bool, kNumStructures>, kNumPhases> votes{};
};

// Pass iff every model votes good. MissingModel if any model is absent.
Qc2Verdict qc2_predict(const Qc2Models& models, const SegQualityMetrics& metrics);

// key=value text with one `<phase>.<structure>.<field>` key per value.
void write_qc2_models(std::ostream& out, const Qc2Models& models);
Qc2Models read_qc2_models(std::istream& in);
void save_qc2_models(const Qc2Models& models, const std::string& path);
Qc2Models load_qc2_models(const std::string& path);

}  // namespace cine::segqc
