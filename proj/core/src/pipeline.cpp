#include "cine/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "cine/error.hpp"
#include "cine/io.hpp"
#include "cine/ksim.hpp"
#include "cine/parallel.hpp"
#include "cine/phantom.hpp"
#include "cine/recon.hpp"
#include "cine/segment.hpp"
#include "cine/trajectory.hpp"

namespace cine::pipeline {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string time_label(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", t);
  return buf;
}

// Per-slice QC2 verdict at the ED and ES frames of `seg`.
bool qc2_slice(const CineVolume& recon, const LabelMap& seg, const LabelMap& reference, int slice, int ed, int es,
               const config::PipelineConfig& cfg, const Resources& res) {
  const int frames[2] = {ed, es};
  if (cfg.qc2_mode == config::Qc2Mode::OracleDice) {
    for (int f : frames) {
      const LabelFrame a = seg.frame(slice, f), b = reference.frame(slice, f);
      for (Label l : kStructures)
        if (segqc::dice(a, b, l) < cfg.qc2_dice_threshold) return false;
    }
    return true;
  }
  segqc::RcaOptions opt;
  opt.registration = cfg.registration;
  opt.direction = cfg.rca_template_to_test ? segqc::Direction::TemplateToTest : segqc::Direction::TestToTemplate;
  segqc::SegQualityMetrics m;
  for (int p = 0; p < segqc::kNumPhases; ++p) {
    const segqc::RcaContext ctx(recon.magnitude_frame(slice, frames[p]), *res.atlas, opt);
    m.metrics[p] = ctx.predict(seg.frame(slice, frames[p]));
  }
  return segqc::qc2_predict(*res.qc2, m).pass;
}

std::optional<Agreement> agreement(const std::vector<SubjectReport>& subjects, int param, bool analytic) {
  Agreement a;
  a.param = kParamNames[param];
  for (const SubjectReport& s : subjects) {
    if (!s.at_pass) continue;
    if (analytic && !s.analytic) continue;
    a.subjects.push_back(s.id);
    a.pipeline.push_back(param_value(*s.at_pass, param));
    a.other.push_back(param_value(analytic ? *s.analytic : s.reference, param));
  }
  if (analytic && a.subjects.empty()) return std::nullopt;
  double abs_sum = 0;
  for (std::size_t i = 0; i < a.pipeline.size(); ++i) abs_sum += std::abs(a.pipeline[i] - a.other[i]);
  if (!a.pipeline.empty()) a.mean_abs_error = abs_sum / static_cast<double>(a.pipeline.size());
  if (a.pipeline.size() >= 2) a.bland_altman = cardio::bland_altman(a.pipeline, a.other);
  try {
    if (a.pipeline.size() >= 3) a.pearson = cardio::pearson(a.pipeline, a.other);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ZeroVariance) throw;
  }
  return a;
}

}  // namespace

double param_value(const cardio::FunctionalParams& p, int index) {
  switch (index) {
    case 0: return p.lv_edv_ml;
    case 1: return p.lv_esv_ml;
    case 2: return p.lv_ef;
    case 3: return p.rv_edv_ml;
    case 4: return p.rv_esv_ml;
    case 5: return p.rv_ef;
    default: fail(ErrorCode::Parameter, "parameter index out of range");
  }
}

Resources load_resources(const config::PipelineConfig& cfg) {
  Resources r;
  try {
    if (cfg.qc1_mode == config::Qc1Mode::Model) r.qc1 = imgqc::load_linear_model(cfg.qc1_model);
    if (cfg.qc2_mode == config::Qc2Mode::RcaSvm) {
      r.qc2 = segqc::load_qc2_models(cfg.qc2_models);
      r.atlas = segqc::load_atlas(cfg.atlas_dir);
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Io) fail(ErrorCode::Config, e.detail());
    throw;
  }
  return r;
}

std::vector<Subject> load_subjects(const config::PipelineConfig& cfg) {
  std::vector<Subject> out;
  if (cfg.input_dir.empty()) {
    const auto specs = phantom::make_cohort(cfg.phantom, cfg.cohort_size, cfg.seed);
    for (std::size_t i = 0; i < specs.size(); ++i) {
      phantom::PhantomCase c = phantom::generate(specs[i]);
      Subject s;
      char id[32];
      std::snprintf(id, sizeof id, "phantom_%02zu", i);
      s.id = id;
      s.image = std::move(c.image);
      s.truth = std::move(c.labels);
      s.analytic = phantom::analytic_params(specs[i]);
      s.seed = splitmix(cfg.seed ^ splitmix(i));
      out.push_back(std::move(s));
    }
    return out;
  }
  namespace fs = std::filesystem;
  if (!fs::is_directory(cfg.input_dir)) fail(ErrorCode::Config, "input directory not found: " + cfg.input_dir);
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(cfg.input_dir)) {
    const std::string name = entry.path().filename().string();
    const std::string suffix = "_img.nii";
    if (name.size() > suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
      ids.push_back(name.substr(0, name.size() - suffix.size()));
  }
  std::sort(ids.begin(), ids.end());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    Subject s;
    s.id = ids[i];
    s.image = io::load_volume(fs::path(cfg.input_dir) / (ids[i] + "_img.nii")).magnitude();
    const fs::path seg = fs::path(cfg.input_dir) / (ids[i] + "_seg.nii");
    if (fs::exists(seg)) s.truth = io::load_labels(seg);
    s.seed = splitmix(cfg.seed ^ splitmix(i));
    out.push_back(std::move(s));
  }
  return out;
}

LabelMap segment(const CineVolume& magnitude, const config::PipelineConfig& cfg, const std::string& subject,
                 std::optional<double> scan_time_s) {
  if (cfg.seg_provider == config::SegProvider::PhantomThreshold)
    return segment::phantom_threshold(magnitude, cfg.intensity);
  LabelMap l = segment::external_mask(cfg.seg_dir, subject, scan_time_s, magnitude.shape());
  return l;
}

CineVolume reconstruct(const ksim::KSpaceDataset& ds, const nufft::Plan& plan, const config::PipelineConfig& cfg) {
  if (cfg.recon_method == config::ReconMethod::Adjoint) return recon::recon_adjoint(ds, plan).magnitude;
  return recon::recon_unrolled(ds, plan, cfg.unrolled).magnitude;
}

SubjectReport run_active_acquisition(const Subject& subject, const config::PipelineConfig& cfg,
                                     const Resources& res) {
  SubjectReport report;
  report.id = subject.id;
  report.analytic = subject.analytic;
  if (cfg.qc1_mode == config::Qc1Mode::Model && !res.qc1) fail(ErrorCode::Config, "QC1 model not loaded");
  if (cfg.qc2_mode == config::Qc2Mode::RcaSvm && (!res.qc2 || !res.atlas))
    fail(ErrorCode::Config, "QC2 models or atlas not loaded");

  double current_t = 0;
  try {
    const CineVolume mag = subject.image.magnitude();
    const Shape4 sh = mag.shape();
    Geometry geometry = mag.geometry();
    geometry.n_frames = sh.nframes;
    const CineVolume cx = cfg.phase_sigma_px > 0 ? ksim::synthesize_phase(mag, cfg.phase_sigma_px, subject.seed) : mag;
    const nufft::Plan plan(sh.nx, sh.ny, cfg.oversampling, cfg.kernel_width);

    const LabelMap reference = segment(mag, cfg, subject.id, std::nullopt);
    report.reference = cardio::functional_params(cardio::volume_curve(reference));

    ksim::IncrementalAcquirer acquirer(cx, plan);
    std::optional<double> sigma;
    std::vector<bool> slice_done(sh.nslices, false);
    LabelMap assembled(sh, geometry);

    for (double t : cfg.scan_times()) {
      current_t = t;
      Attempt a;
      a.scan_time_s = t;
      const traj::AcquisitionSchedule schedule = traj::schedule_profiles(t, geometry, sh.nx, sh.ny);
      a.spokes_per_frame = schedule.mean_spokes_per_frame();
      ksim::KSpaceDataset ds = acquirer.acquire(schedule);
      if (cfg.snr_db) {
        // Noise level is fixed by the first acquisition so later scans do not
        // see a different sigma.
        if (!sigma) sigma = ksim::noise_sigma_for(ds, *cfg.snr_db);
        ds = ksim::add_noise_sigma(ds, *sigma, subject.seed, *cfg.snr_db);
      }
      const CineVolume rec = reconstruct(ds, plan, cfg);
      a.image = imgqc::image_quality(mag, rec, cfg.ssim);

      a.slices.resize(sh.nslices);
      a.qc1_pass = true;
      for (int s = 0; s < sh.nslices; ++s) {
        SliceVerdict& v = a.slices[s];
        if (cfg.qc1_mode == config::Qc1Mode::OracleSsim) {
          v.qc1_score = a.image.slices[s].ssim;
          v.qc1_pass = v.qc1_score >= cfg.qc1_ssim_threshold;
        } else {
          const imgqc::Verdict q = imgqc::qc1_predict(*res.qc1, imgqc::qc1_features(rec, s, a.spokes_per_frame));
          v.qc1_score = q.score;
          v.qc1_pass = q.pass;
        }
        a.qc1_pass = a.qc1_pass && v.qc1_pass;
      }

      bool need_seg = a.qc1_pass;
      if (cfg.scope == config::QcScope::Slice)
        for (int s = 0; s < sh.nslices; ++s) need_seg = need_seg || (!slice_done[s] && a.slices[s].qc1_pass);

      if (need_seg) {
        a.segmented = true;
        std::optional<LabelMap> seg;
        try {
          seg = segment(rec, cfg, subject.id, t);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::IntensityModelMismatch) throw;
        }
        bool all_pass = true;
        if (seg) {
          const cardio::VolumeCurve curve = cardio::volume_curve(*seg);
          const int ed = cardio::ed_frame(curve), es = cardio::es_frame(curve);
          std::array<double, kNumStructures> dice{};
          for (int s = 0; s < sh.nslices; ++s)
            for (int f : {ed, es}) {
              const LabelFrame x = seg->frame(s, f), y = reference.frame(s, f);
              for (int k = 0; k < kNumStructures; ++k) dice[k] += segqc::dice(x, y, kStructures[k]) / (2.0 * sh.nslices);
            }
          a.dice = dice;
          for (int s = 0; s < sh.nslices; ++s) {
            SliceVerdict& v = a.slices[s];
            const bool evaluate = cfg.scope == config::QcScope::Subject ? true : (!slice_done[s] && v.qc1_pass);
            if (!evaluate) continue;
            v.qc2_pass = qc2_slice(rec, *seg, reference, s, ed, es, cfg, res);
            all_pass = all_pass && *v.qc2_pass;
          }
        } else {
          for (int s = 0; s < sh.nslices; ++s) a.slices[s].qc2_pass = false;
          all_pass = false;
        }

        if (cfg.scope == config::QcScope::Subject) {
          a.qc2_pass = all_pass;
          a.pass = a.qc1_pass && all_pass;
          if (a.pass) {
            report.pass_time_s = t;
            report.at_pass = cardio::functional_params(cardio::volume_curve(*seg));
          }
        } else {
          for (int s = 0; s < sh.nslices; ++s) {
            const SliceVerdict& v = a.slices[s];
            if (slice_done[s] || !v.qc1_pass || !v.qc2_pass.value_or(false)) continue;
            slice_done[s] = true;
            for (int f = 0; f < sh.nframes; ++f) assembled.set_frame(s, f, seg->frame(s, f));
          }
          a.qc2_pass = std::all_of(a.slices.begin(), a.slices.end(),
                                   [](const SliceVerdict& v) { return v.qc2_pass.value_or(false); });
          a.pass = std::all_of(slice_done.begin(), slice_done.end(), [](bool b) { return b; });
          if (a.pass) {
            report.pass_time_s = t;
            report.at_pass = cardio::functional_params(cardio::volume_curve(assembled));
          }
        }
      }
      report.attempts.push_back(std::move(a));
      if (report.pass_time_s) break;
    }
  } catch (const Error& e) {
    std::string where = "subject " + subject.id;
    if (current_t > 0) where += " at t=" + time_label(current_t) + " s";
    throw Error(e.code(), where + ": " + e.detail());
  }
  return report;
}

CohortReport summarize(std::vector<SubjectReport> subjects, const config::PipelineConfig& cfg) {
  CohortReport c;
  c.config = config::dump(cfg);
  c.subjects = std::move(subjects);
  std::vector<double> times, maes, psnrs, ssims;
  std::array<std::vector<double>, kNumStructures> dice;
  std::vector<int> truth, pred;
  for (const SubjectReport& s : c.subjects) {
    for (const Attempt& a : s.attempts) {
      bool oracle = true;
      for (const imgqc::SliceQuality& q : a.image.slices) oracle = oracle && q.ssim >= cfg.qc1_ssim_threshold;
      truth.push_back(oracle ? 1 : 0);
      pred.push_back(a.qc1_pass ? 1 : 0);
    }
    if (!s.pass_time_s) {
      ++c.n_never;
      continue;
    }
    ++c.n_passed;
    times.push_back(*s.pass_time_s);
    const Attempt& last = s.attempts.back();
    maes.push_back(last.image.mae.mean);
    if (last.image.psnr_db) psnrs.push_back(last.image.psnr_db->mean);
    ssims.push_back(last.image.ssim.mean);
    if (last.dice)
      for (int k = 0; k < kNumStructures; ++k) dice[k].push_back((*last.dice)[k]);
  }
  if (!times.empty()) {
    c.scan_time_s = imgqc::summarize(times);
    c.mae = imgqc::summarize(maes);
    c.ssim = imgqc::summarize(ssims);
  }
  if (!psnrs.empty()) c.psnr_db = imgqc::summarize(psnrs);
  for (int k = 0; k < kNumStructures; ++k)
    if (!dice[k].empty()) c.dice[k] = imgqc::summarize(dice[k]);
  c.qc1_vs_oracle = imgqc::classification_stats(truth, pred);
  for (int p = 0; p < 6; ++p) {
    c.vs_reference.push_back(*agreement(c.subjects, p, false));
    if (auto a = agreement(c.subjects, p, true)) c.vs_analytic.push_back(std::move(*a));
  }
  return c;
}

CohortReport run_cohort(const std::vector<Subject>& subjects, const config::PipelineConfig& cfg,
                        const Resources& resources) {
  cfg.validate();
  std::vector<SubjectReport> reports(subjects.size());
  parallel_for(subjects.size(), [&](std::size_t i) { reports[i] = run_active_acquisition(subjects[i], cfg, resources); });
  return summarize(std::move(reports), cfg);
}

}  // namespace cine::pipeline
