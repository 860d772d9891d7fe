#include "cine/segqc.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "cine/error.hpp"
#include "cine/io.hpp"
#include "cine/parallel.hpp"

namespace cine::segqc {

namespace {

Image max_normalized(const Image& img) {
  double peak = 0;
  for (double v : img.px) peak = std::max(peak, std::abs(v));
  Image out = img;
  if (peak > 0)
    for (double& v : out.px) v /= peak;
  return out;
}

bool any_label(const LabelFrame& f, std::uint8_t label) {
  return std::find(f.px.begin(), f.px.end(), label) != f.px.end();
}

FrameMetrics aggregate(const std::vector<FrameMetrics>& per_template, const LabelFrame& test_seg) {
  FrameMetrics out;
  for (int s = 0; s < kNumStructures; ++s) {
    StructureMetrics& m = out[s];
    m.dsc = 0;
    m.msd_mm = m.rmsd_mm = m.hd_mm = std::numeric_limits<double>::infinity();
    bool any = false;
    for (const FrameMetrics& fm : per_template) {
      m.dsc = std::max(m.dsc, fm[s].dsc);
      if (!fm[s].defined) continue;
      any = true;
      m.msd_mm = std::min(m.msd_mm, fm[s].msd_mm);
      m.rmsd_mm = std::min(m.rmsd_mm, fm[s].rmsd_mm);
      m.hd_mm = std::min(m.hd_mm, fm[s].hd_mm);
    }
    m.defined = any && any_label(test_seg, kStructures[s]);
    if (!m.defined) m.msd_mm = m.rmsd_mm = m.hd_mm = 0;
  }
  return out;
}

std::string join(std::span<const double> v) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

std::array<double, 4> parse4(const std::string& key, const std::string& value) {
  std::array<double, 4> out{};
  std::stringstream ss(value);
  std::string item;
  int n = 0;
  while (std::getline(ss, item, ',')) {
    if (n >= 4) fail(ErrorCode::Parameter, "too many values for " + key);
    try {
      out[n++] = std::stod(item);
    } catch (const std::exception&) {
      fail(ErrorCode::Parameter, "malformed number for " + key);
    }
  }
  if (n != 4) fail(ErrorCode::Parameter, "expected 4 values for " + key);
  return out;
}

}  // namespace

void Atlas::validate() const {
  if (entries.empty()) fail(ErrorCode::EmptyAtlas, "atlas has no templates");
  for (const AtlasEntry& e : entries)
    if (e.image.nx != e.labels.nx || e.image.ny != e.labels.ny)
      fail(ErrorCode::Shape, "atlas image and labels differ in shape");
  if (!(spacing.dx_mm > 0 && spacing.dy_mm > 0)) fail(ErrorCode::Parameter, "atlas spacing must be positive");
}

Atlas load_atlas(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) fail(ErrorCode::Io, "atlas directory not found: " + dir);
  Atlas atlas;
  for (int k = 0;; ++k) {
    const fs::path img = fs::path(dir) / (std::to_string(k) + "_img.nii");
    const fs::path seg = fs::path(dir) / (std::to_string(k) + "_seg.nii");
    if (!fs::exists(img) || !fs::exists(seg)) break;
    const CineVolume v = io::load_volume(img);
    const LabelMap l = io::load_labels(seg);
    if (k == 0) atlas.spacing = {v.geometry().dx_mm, v.geometry().dy_mm};
    atlas.entries.push_back({v.magnitude_frame(0, 0), l.frame(0, 0)});
  }
  atlas.validate();
  return atlas;
}

void save_atlas(const Atlas& atlas, const std::string& dir) {
  namespace fs = std::filesystem;
  atlas.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create atlas directory " + dir);
  Geometry g;
  g.dx_mm = atlas.spacing.dx_mm;
  g.dy_mm = atlas.spacing.dy_mm;
  g.n_frames = 1;
  for (std::size_t k = 0; k < atlas.entries.size(); ++k) {
    const AtlasEntry& e = atlas.entries[k];
    const Shape4 sh{e.image.nx, e.image.ny, 1, 1};
    CineVolume v(sh, g, false);
    for (std::size_t i = 0; i < e.image.px.size(); ++i) v.data()[i] = e.image.px[i];
    LabelMap l(sh, g);
    l.set_frame(0, 0, e.labels);
    io::save_volume(v, fs::path(dir) / (std::to_string(k) + "_img.nii"));
    io::save_labels(l, fs::path(dir) / (std::to_string(k) + "_seg.nii"));
  }
}

RcaContext::RcaContext(const Image& test_image, const Atlas& atlas, const RcaOptions& options)
    : atlas_(&atlas), direction_(options.direction), nx_(test_image.nx), ny_(test_image.ny) {
  atlas.validate();
  const Image test = max_normalized(test_image);
  const std::size_t n = atlas.entries.size();
  transforms_.resize(n);
  if (direction_ == Direction::TemplateToTest) warped_.resize(n);
  parallel_for(n, [&](std::size_t k) {
    const AtlasEntry& e = atlas.entries[k];
    const Image tmpl = max_normalized(e.image);
    if (direction_ == Direction::TemplateToTest) {
      transforms_[k] = reg::register_affine(tmpl, test, atlas.spacing, options.registration);
      warped_[k] = reg::warp(e.labels, transforms_[k], atlas.spacing, nx_, ny_);
    } else {
      transforms_[k] = reg::register_affine(test, tmpl, atlas.spacing, options.registration);
    }
  });
}

FrameMetrics RcaContext::predict(const LabelFrame& test_seg) const {
  if (test_seg.nx != nx_ || test_seg.ny != ny_) fail(ErrorCode::Shape, "segmentation does not match the test image");
  const std::size_t n = transforms_.size();
  std::vector<FrameMetrics> per(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (direction_ == Direction::TemplateToTest) {
      per[k] = compare(warped_[k], test_seg, atlas_->spacing);
    } else {
      const AtlasEntry& e = atlas_->entries[k];
      const LabelFrame moved = reg::warp(test_seg, transforms_[k], atlas_->spacing, e.labels.nx, e.labels.ny);
      per[k] = compare(e.labels, moved, atlas_->spacing);
    }
  }
  return aggregate(per, test_seg);
}

FrameMetrics rca_predict(const Image& test_image, const LabelFrame& test_seg, const Atlas& atlas,
                         const RcaOptions& options) {
  return RcaContext(test_image, atlas, options).predict(test_seg);
}

void SvmModel::validate() const {
  for (double s : sd)
    if (!(s > 0)) fail(ErrorCode::Parameter, "SVM normalization sd must be > 0");
}

double SvmModel::decision(const StructureMetrics& m) const {
  const auto f = m.features();
  double z = bias;
  for (int i = 0; i < 4; ++i) z += weights[i] * (f[i] - mean[i]) / sd[i];
  return z;
}

bool SvmModel::good(const StructureMetrics& m) const { return m.defined && decision(m) >= 0; }

TrainedSvm qc2_train(std::span<const StructureMetrics> metrics, std::span<const int> labels, const SvmOptions& options) {
  if (metrics.size() != labels.size()) fail(ErrorCode::LengthMismatch, "metrics and labels differ in length");
  if (!(options.lambda > 0) || options.epochs < 1) fail(ErrorCode::Parameter, "invalid SVM options");
  std::vector<std::size_t> idx;
  bool seen[2] = {false, false};
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) fail(ErrorCode::Parameter, "labels must be 0 or 1");
    if (!metrics[i].defined) continue;
    idx.push_back(i);
    seen[labels[i]] = true;
  }
  if (!seen[0] || !seen[1]) fail(ErrorCode::DegenerateLabels, "QC2 training needs both classes");

  TrainedSvm out;
  SvmModel& m = out.model;
  const double n = static_cast<double>(idx.size());
  m.mean.fill(0);
  m.sd.fill(0);
  for (std::size_t i : idx) {
    const auto f = metrics[i].features();
    for (int d = 0; d < 4; ++d) m.mean[d] += f[d] / n;
  }
  for (std::size_t i : idx) {
    const auto f = metrics[i].features();
    for (int d = 0; d < 4; ++d) m.sd[d] += (f[d] - m.mean[d]) * (f[d] - m.mean[d]) / n;
  }
  for (double& s : m.sd) {
    s = std::sqrt(s);
    if (!(s > 1e-12)) s = 1.0;
  }
  std::vector<std::array<double, 5>> z(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const auto f = metrics[idx[k]].features();
    for (int d = 0; d < 4; ++d) z[k][d] = (f[d] - m.mean[d]) / m.sd[d];
    z[k][4] = 1.0;  // bias as an augmented feature
  }

  // Pegasos: step 1/(lambda t), seeded permutation per epoch.
  std::array<double, 5> w{};
  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> order(idx.size());
  std::int64_t t = 0;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    for (std::size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[rng() % k]);
    for (std::size_t k : order) {
      ++t;
      const double eta = 1.0 / (options.lambda * static_cast<double>(t));
      const double y = labels[idx[k]] ? 1.0 : -1.0;
      double s = 0;
      for (int d = 0; d < 5; ++d) s += w[d] * z[k][d];
      for (int d = 0; d < 5; ++d) w[d] *= 1.0 - eta * options.lambda;
      if (y * s < 1)
        for (int d = 0; d < 5; ++d) w[d] += eta * y * z[k][d];
    }
  }
  for (int d = 0; d < 4; ++d) m.weights[d] = w[d];
  m.bias = w[4];

  std::vector<int> truth, pred;
  for (std::size_t i : idx) {
    truth.push_back(labels[i]);
    pred.push_back(m.good(metrics[i]) ? 1 : 0);
  }
  out.train = imgqc::classification_stats(truth, pred);
  return out;
}

Qc2Verdict qc2_predict(const Qc2Models& models, const SegQualityMetrics& metrics) {
  Qc2Verdict v;
  v.pass = true;
  for (int p = 0; p < kNumPhases; ++p)
    for (int s = 0; s < kNumStructures; ++s) {
      const auto& model = models.models[p][s];
      if (!model)
        fail(ErrorCode::MissingModel, std::string("no QC2 model for ") + phase_name(static_cast<Phase>(p)) + "." +
                                          structure_name(kStructures[s]));
      v.votes[p][s] = model->good(metrics.metrics[p][s]);
      v.pass = v.pass && v.votes[p][s];
    }
  return v;
}

void write_qc2_models(std::ostream& out, const Qc2Models& models) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "kind=svm\n";
  for (int p = 0; p < kNumPhases; ++p)
    for (int s = 0; s < kNumStructures; ++s) {
      const auto& m = models.models[p][s];
      if (!m) continue;
      m->validate();
      const std::string k = std::string(phase_name(static_cast<Phase>(p))) + "." + structure_name(kStructures[s]);
      out << k << ".weights=" << join(m->weights) << '\n';
      out << k << ".bias=" << m->bias << '\n';
      out << k << ".mean=" << join(m->mean) << '\n';
      out << k << ".sd=" << join(m->sd) << '\n';
    }
}

Qc2Models read_qc2_models(std::istream& in) {
  std::map<std::string, std::pair<int, int>> slots;
  for (int p = 0; p < kNumPhases; ++p)
    for (int s = 0; s < kNumStructures; ++s)
      slots[std::string(phase_name(static_cast<Phase>(p))) + "." + structure_name(kStructures[s])] = {p, s};
  Qc2Models models;
  std::array<std::array<int, kNumStructures>, kNumPhases> seen{};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorCode::Parameter, "malformed model line: " + line);
    const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    if (key == "kind") continue;
    const auto dot = key.rfind('.');
    if (dot == std::string::npos) fail(ErrorCode::Parameter, "unknown model key " + key);
    const auto slot = slots.find(key.substr(0, dot));
    if (slot == slots.end()) fail(ErrorCode::Parameter, "unknown model key " + key);
    const auto [p, s] = slot->second;
    auto& m = models.models[p][s];
    if (!m) m = SvmModel{};
    const std::string field = key.substr(dot + 1);
    if (field == "weights") {
      m->weights = parse4(key, value);
      seen[p][s] |= 1;
    } else if (field == "mean") {
      m->mean = parse4(key, value);
    } else if (field == "sd") {
      m->sd = parse4(key, value);
    } else if (field == "bias") {
      try {
        m->bias = std::stod(value);
      } catch (const std::exception&) {
        fail(ErrorCode::Parameter, "malformed number for " + key);
      }
    } else {
      fail(ErrorCode::Parameter, "unknown model key " + key);
    }
  }
  for (int p = 0; p < kNumPhases; ++p)
    for (int s = 0; s < kNumStructures; ++s)
      if (models.models[p][s]) {
        if (!seen[p][s]) fail(ErrorCode::Parameter, "model without weights");
        models.models[p][s]->validate();
      }
  return models;
}

void save_qc2_models(const Qc2Models& models, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write " + path);
  write_qc2_models(out, models);
  if (!out) fail(ErrorCode::Io, "failed writing " + path);
}

Qc2Models load_qc2_models(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot read " + path);
  return read_qc2_models(in);
}

}  // namespace cine::segqc
