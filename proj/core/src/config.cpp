#include "cine/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>

#include "cine/error.hpp"

namespace cine::config {

namespace {

[[noreturn]] void bad(const std::string& what) { fail(ErrorCode::Config, what); }

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size() || !std::isfinite(out))
    bad("invalid number for " + key + ": '" + v + "'");
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) bad("invalid integer for " + key + ": '" + v + "'");
  return out;
}

struct Entry {
  const char* key;
  std::function<void(PipelineConfig&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

template <typename T>
Entry number(const char* key, T PipelineConfig::*member) {
  return {key, [key, member](PipelineConfig& c, const std::string& v) { c.*member = to_double(key, v); },
          [member](const PipelineConfig& c) { return fmt(c.*member); }};
}

template <typename Get, typename Set>
Entry custom(const char* key, Set set, Get get) {
  return {key, set, get};
}

Entry real(const char* key, std::function<double&(PipelineConfig&)> ref) {
  return {key, [key, ref](PipelineConfig& c, const std::string& v) { ref(c) = to_double(key, v); },
          [ref](const PipelineConfig& c) { return fmt(ref(const_cast<PipelineConfig&>(c))); }};
}

Entry integer(const char* key, std::function<int&(PipelineConfig&)> ref) {
  return {key,
          [key, ref](PipelineConfig& c, const std::string& v) {
            const long long n = to_int(key, v);
            if (n < -1000000000LL || n > 1000000000LL) bad("integer out of range for " + std::string(key));
            ref(c) = static_cast<int>(n);
          },
          [ref](const PipelineConfig& c) { return std::to_string(ref(const_cast<PipelineConfig&>(c))); }};
}

Entry text(const char* key, std::string PipelineConfig::*member) {
  return {key, [member](PipelineConfig& c, const std::string& v) { c.*member = v; },
          [member](const PipelineConfig& c) { return c.*member; }};
}

template <typename E>
Entry choice(const char* key, E PipelineConfig::*member, std::vector<std::pair<const char*, E>> options) {
  return {key,
          [key, member, options](PipelineConfig& c, const std::string& v) {
            for (const auto& [name, value] : options)
              if (v == name) {
                c.*member = value;
                return;
              }
            bad("invalid value for " + std::string(key) + ": '" + v + "'");
          },
          [member, options](const PipelineConfig& c) {
            for (const auto& [name, value] : options)
              if (c.*member == value) return std::string(name);
            return std::string();
          }};
}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      choice("recon.method", &PipelineConfig::recon_method,
             {{"adjoint", ReconMethod::Adjoint}, {"unrolled", ReconMethod::Unrolled}}),
      number("scan.t_min", &PipelineConfig::t_min_s),
      number("scan.t_max", &PipelineConfig::t_max_s),
      number("scan.t_step", &PipelineConfig::t_step_s),
      choice("qc1.mode", &PipelineConfig::qc1_mode, {{"model", Qc1Mode::Model}, {"oracle-ssim", Qc1Mode::OracleSsim}}),
      number("qc1.ssim_threshold", &PipelineConfig::qc1_ssim_threshold),
      text("qc1.model", &PipelineConfig::qc1_model),
      choice("qc2.mode", &PipelineConfig::qc2_mode,
             {{"rca-svm", Qc2Mode::RcaSvm}, {"oracle-dice", Qc2Mode::OracleDice}}),
      number("qc2.dice_threshold", &PipelineConfig::qc2_dice_threshold),
      text("qc2.models", &PipelineConfig::qc2_models),
      text("qc2.atlas", &PipelineConfig::atlas_dir),
      custom(
          "qc2.direction",
          [](PipelineConfig& c, const std::string& v) {
            if (v == "template-to-test") c.rca_template_to_test = true;
            else if (v == "test-to-template") c.rca_template_to_test = false;
            else bad("invalid value for qc2.direction: '" + v + "'");
          },
          [](const PipelineConfig& c) {
            return std::string(c.rca_template_to_test ? "template-to-test" : "test-to-template");
          }),
      choice("seg.provider", &PipelineConfig::seg_provider,
             {{"phantom-threshold", SegProvider::PhantomThreshold}, {"external-masks", SegProvider::ExternalMasks}}),
      text("seg.dir", &PipelineConfig::seg_dir),
      real("seg.background", [](PipelineConfig& c) -> double& { return c.intensity.background; }),
      real("seg.myocardium", [](PipelineConfig& c) -> double& { return c.intensity.myocardium; }),
      real("seg.blood", [](PipelineConfig& c) -> double& { return c.intensity.blood; }),
      choice("qc.scope", &PipelineConfig::scope, {{"subject", QcScope::Subject}, {"slice", QcScope::Slice}}),
      text("input.dir", &PipelineConfig::input_dir),
      integer("cohort.size", [](PipelineConfig& c) -> int& { return c.cohort_size; }),
      integer("phantom.nx", [](PipelineConfig& c) -> int& { return c.phantom.nx; }),
      integer("phantom.ny", [](PipelineConfig& c) -> int& { return c.phantom.ny; }),
      integer("phantom.n_frames", [](PipelineConfig& c) -> int& { return c.phantom.n_frames; }),
      integer("phantom.n_slices", [](PipelineConfig& c) -> int& { return c.phantom.n_slices; }),
      real("phantom.dx_mm", [](PipelineConfig& c) -> double& { return c.phantom.dx_mm; }),
      real("phantom.dy_mm", [](PipelineConfig& c) -> double& { return c.phantom.dy_mm; }),
      real("phantom.thickness_mm", [](PipelineConfig& c) -> double& { return c.phantom.slice_thickness_mm; }),
      real("phantom.gap_mm", [](PipelineConfig& c) -> double& { return c.phantom.slice_gap_mm; }),
      real("phantom.tr_ms", [](PipelineConfig& c) -> double& { return c.phantom.tr_ms; }),
      real("phantom.endo_radius_mm", [](PipelineConfig& c) -> double& { return c.phantom.lv_endo_radius_mm; }),
      real("phantom.epi_radius_mm", [](PipelineConfig& c) -> double& { return c.phantom.lv_epi_radius_mm; }),
      real("phantom.rv_radius_mm", [](PipelineConfig& c) -> double& { return c.phantom.rv_radius_mm; }),
      real("phantom.rv_offset_mm", [](PipelineConfig& c) -> double& { return c.phantom.rv_offset_mm; }),
      real("phantom.contraction", [](PipelineConfig& c) -> double& { return c.phantom.contraction; }),
      real("phantom.background", [](PipelineConfig& c) -> double& { return c.phantom.background; }),
      real("phantom.myocardium", [](PipelineConfig& c) -> double& { return c.phantom.myocardium; }),
      real("phantom.blood", [](PipelineConfig& c) -> double& { return c.phantom.blood; }),
      number("nufft.oversampling", &PipelineConfig::oversampling),
      integer("nufft.kernel_width", [](PipelineConfig& c) -> int& { return c.kernel_width; }),
      custom(
          "ksim.snr_db",
          [](PipelineConfig& c, const std::string& v) {
            if (v == "none" || v.empty()) c.snr_db.reset();
            else c.snr_db = to_double("ksim.snr_db", v);
          },
          [](const PipelineConfig& c) { return c.snr_db ? fmt(*c.snr_db) : std::string("none"); }),
      number("ksim.phase_sigma_px", &PipelineConfig::phase_sigma_px),
      integer("recon.n_unroll", [](PipelineConfig& c) -> int& { return c.unrolled.n_unroll; }),
      integer("recon.power_iterations", [](PipelineConfig& c) -> int& { return c.unrolled.power_iterations; }),
      real("recon.lambda_spatial", [](PipelineConfig& c) -> double& { return c.unrolled.lambda_spatial; }),
      real("recon.lambda_temporal", [](PipelineConfig& c) -> double& { return c.unrolled.lambda_temporal; }),
      real("recon.tv_epsilon", [](PipelineConfig& c) -> double& { return c.unrolled.tv_epsilon; }),
      custom(
          "recon.step_size",
          [](PipelineConfig& c, const std::string& v) {
            if (v == "auto" || v.empty()) c.unrolled.step_size.reset();
            else c.unrolled.step_size = to_double("recon.step_size", v);
          },
          [](const PipelineConfig& c) {
            return c.unrolled.step_size ? fmt(*c.unrolled.step_size) : std::string("auto");
          }),
      real("ssim.sigma", [](PipelineConfig& c) -> double& { return c.ssim.sigma; }),
      integer("ssim.window", [](PipelineConfig& c) -> int& { return c.ssim.window; }),
      real("ssim.k1", [](PipelineConfig& c) -> double& { return c.ssim.k1; }),
      real("ssim.k2", [](PipelineConfig& c) -> double& { return c.ssim.k2; }),
      integer("registration.levels", [](PipelineConfig& c) -> int& { return c.registration.levels; }),
      integer("registration.iterations", [](PipelineConfig& c) -> int& { return c.registration.iterations; }),
      custom(
          "seed",
          [](PipelineConfig& c, const std::string& v) {
            const long long n = to_int("seed", v);
            if (n < 0) bad("seed must be non-negative");
            c.seed = static_cast<std::uint64_t>(n);
          },
          [](const PipelineConfig& c) { return std::to_string(c.seed); }),
  };
  return table;
}

}  // namespace

void PipelineConfig::validate() const {
  if (!(t_min_s > 0) || !(t_max_s >= t_min_s) || !(t_step_s > 0)) bad("scan time range must satisfy 0 < t_min <= t_max and t_step > 0");
  if (t_max_s > 30.0 || t_min_s < 1.0) bad("scan times must lie in [1, 30] s");
  if (!(qc1_ssim_threshold >= -1 && qc1_ssim_threshold <= 1)) bad("qc1.ssim_threshold must be in [-1, 1]");
  if (!(qc2_dice_threshold >= 0 && qc2_dice_threshold <= 1)) bad("qc2.dice_threshold must be in [0, 1]");
  if (qc1_mode == Qc1Mode::Model && qc1_model.empty()) bad("qc1.mode=model needs qc1.model");
  if (qc2_mode == Qc2Mode::RcaSvm && (qc2_models.empty() || atlas_dir.empty()))
    bad("qc2.mode=rca-svm needs qc2.models and qc2.atlas");
  if (seg_provider == SegProvider::ExternalMasks && seg_dir.empty()) bad("seg.provider=external-masks needs seg.dir");
  if (input_dir.empty() && cohort_size < 0) bad("cohort.size must be >= 0");
  if (!(oversampling >= 1.25) || kernel_width < 2) bad("invalid NUFFT parameters");
  if (!(phase_sigma_px >= 0)) bad("ksim.phase_sigma_px must be >= 0");
  if (ssim.window < 3 || ssim.window % 2 == 0 || !(ssim.sigma > 0)) bad("invalid SSIM window");
  if (registration.levels < 1 || registration.iterations < 1) bad("invalid registration schedule");
  try {
    unrolled.validate();
    if (input_dir.empty()) phantom.validate();
  } catch (const Error& e) {
    bad(e.detail());
  }
}

std::vector<double> PipelineConfig::scan_times() const {
  std::vector<double> out;
  // Integer stepping avoids accumulating rounding in t_min + k * t_step.
  const auto n = static_cast<long long>(std::floor((t_max_s - t_min_s) / t_step_s + 1e-9));
  for (long long k = 0; k <= n; ++k) out.push_back(t_min_s + static_cast<double>(k) * t_step_s);
  return out;
}

void apply(PipelineConfig& cfg, const std::string& key, const std::string& value) {
  for (const Entry& e : entries())
    if (key == e.key) {
      e.set(cfg, value);
      return;
    }
  bad("unknown configuration key '" + key + "'");
}

PipelineConfig parse(std::istream& in, PipelineConfig base) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) bad("line " + std::to_string(lineno) + ": expected key=value");
    apply(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

PipelineConfig load(const std::string& path, PipelineConfig base) {
  std::ifstream in(path);
  if (!in) bad("cannot read config file " + path);
  return parse(in, std::move(base));
}

std::vector<std::pair<std::string, std::string>> dump(const PipelineConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const Entry& e : entries()) out.emplace_back(e.key, e.get(cfg));
  return out;
}

const char* to_string(ReconMethod m) { return m == ReconMethod::Adjoint ? "adjoint" : "unrolled"; }
const char* to_string(Qc1Mode m) { return m == Qc1Mode::Model ? "model" : "oracle-ssim"; }
const char* to_string(Qc2Mode m) { return m == Qc2Mode::RcaSvm ? "rca-svm" : "oracle-dice"; }
const char* to_string(SegProvider p) { return p == SegProvider::PhantomThreshold ? "phantom-threshold" : "external-masks"; }
const char* to_string(QcScope s) { return s == QcScope::Subject ? "subject" : "slice"; }

}  // namespace cine::config
