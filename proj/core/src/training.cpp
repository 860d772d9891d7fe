#include "cine/training.hpp"

#include "cine/error.hpp"
#include "cine/ksim.hpp"
#include "cine/parallel.hpp"
#include "cine/pipeline.hpp"
#include "cine/trajectory.hpp"

namespace cine::training {

namespace {

LabelFrame erode_once(const LabelFrame& in) {
  LabelFrame out = in;
  for (int y = 0; y < in.ny; ++y)
    for (int x = 0; x < in.nx; ++x) {
      const std::uint8_t l = in(x, y);
      if (l == kBackground) continue;
      const int nb[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
      for (const auto& q : nb)
        if (q[0] < 0 || q[1] < 0 || q[0] >= in.nx || q[1] >= in.ny || in(q[0], q[1]) != l) {
          out(x, y) = kBackground;
          break;
        }
    }
  return out;
}

LabelFrame dilate_once(const LabelFrame& in) {
  LabelFrame out = in;
  for (int y = 0; y < in.ny; ++y)
    for (int x = 0; x < in.nx; ++x) {
      if (in(x, y) != kBackground) continue;
      const int nb[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
      for (const auto& q : nb)
        if (q[0] >= 0 && q[1] >= 0 && q[0] < in.nx && q[1] < in.ny && in(q[0], q[1]) != kBackground) {
          out(x, y) = in(q[0], q[1]);
          break;
        }
    }
  return out;
}

}  // namespace

LabelFrame erode(const LabelFrame& labels, int px) {
  LabelFrame out = labels;
  for (int i = 0; i < px; ++i) out = erode_once(out);
  return out;
}

LabelFrame dilate(const LabelFrame& labels, int px) {
  LabelFrame out = labels;
  for (int i = 0; i < px; ++i) out = dilate_once(out);
  return out;
}

LabelFrame shift(const LabelFrame& labels, int dx, int dy) {
  LabelFrame out(labels.nx, labels.ny);
  for (int y = 0; y < labels.ny; ++y)
    for (int x = 0; x < labels.nx; ++x) {
      const int sx = x - dx, sy = y - dy;
      if (sx >= 0 && sy >= 0 && sx < labels.nx && sy < labels.ny) out(x, y) = labels(sx, sy);
    }
  return out;
}

std::vector<Qc1Sample> qc1_samples(const std::vector<phantom::PhantomSpec>& specs, const std::vector<double>& times,
                                   const std::vector<config::ReconMethod>& methods, const config::PipelineConfig& cfg) {
  std::vector<std::vector<Qc1Sample>> per(specs.size());
  parallel_for(specs.size(), [&](std::size_t i) {
    const phantom::PhantomCase c = phantom::generate(specs[i]);
    const Shape4 sh = c.image.shape();
    Geometry g = c.image.geometry();
    g.n_frames = sh.nframes;
    const CineVolume cx =
        cfg.phase_sigma_px > 0 ? ksim::synthesize_phase(c.image, cfg.phase_sigma_px, specs[i].seed) : c.image;
    const nufft::Plan plan(sh.nx, sh.ny, cfg.oversampling, cfg.kernel_width);
    ksim::IncrementalAcquirer acq(cx, plan);
    for (double t : times) {
      const traj::AcquisitionSchedule sched = traj::schedule_profiles(t, g, sh.nx, sh.ny);
      const ksim::KSpaceDataset ds = acq.acquire(sched);
      for (config::ReconMethod m : methods) {
        config::PipelineConfig local = cfg;
        local.recon_method = m;
        const CineVolume rec = pipeline::reconstruct(ds, plan, local);
        Qc1Sample s;
        const imgqc::Qc1Features f = imgqc::qc1_features(rec, sched);
        s.features.assign(f.values.begin(), f.values.end());
        s.ssim = imgqc::ssim(c.image, rec, cfg.ssim);
        s.label = s.ssim >= cfg.qc1_ssim_threshold ? 1 : 0;
        s.scan_time_s = t;
        s.method = m;
        per[i].push_back(std::move(s));
      }
    }
  });
  std::vector<Qc1Sample> out;
  for (auto& v : per) out.insert(out.end(), v.begin(), v.end());
  return out;
}

imgqc::TrainedLinearModel train_qc1(const std::vector<Qc1Sample>& samples, const imgqc::TrainOptions& options) {
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (const Qc1Sample& s : samples) {
    x.push_back(s.features);
    y.push_back(s.label);
  }
  return imgqc::qc1_train(x, y, options);
}

segqc::Atlas phantom_atlas(const std::vector<phantom::PhantomSpec>& specs) {
  segqc::Atlas atlas;
  if (specs.empty()) fail(ErrorCode::EmptyAtlas, "no phantoms for the atlas");
  atlas.spacing = {specs.front().dx_mm, specs.front().dy_mm};
  for (const phantom::PhantomSpec& s : specs) {
    const phantom::PhantomCase c = phantom::generate(s);
    const cardio::VolumeCurve curve = cardio::volume_curve(c.labels);
    for (int f : {cardio::ed_frame(curve), cardio::es_frame(curve)})
      atlas.entries.push_back({c.image.magnitude_frame(0, f), c.labels.frame(0, f)});
  }
  atlas.validate();
  return atlas;
}

std::vector<Qc2Sample> qc2_samples(const std::vector<phantom::PhantomSpec>& specs, const segqc::Atlas& atlas,
                                   const config::PipelineConfig& cfg) {
  segqc::RcaOptions opt;
  opt.registration = cfg.registration;
  opt.direction = cfg.rca_template_to_test ? segqc::Direction::TemplateToTest : segqc::Direction::TestToTemplate;
  std::vector<std::vector<Qc2Sample>> per(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const phantom::PhantomCase c = phantom::generate(specs[i]);
    const cardio::VolumeCurve curve = cardio::volume_curve(c.labels);
    const int frames[2] = {cardio::ed_frame(curve), cardio::es_frame(curve)};
    for (int p = 0; p < segqc::kNumPhases; ++p) {
      const LabelFrame truth = c.labels.frame(0, frames[p]);
      const segqc::RcaContext ctx(c.image.magnitude_frame(0, frames[p]), atlas, opt);
      const std::vector<LabelFrame> candidates = {truth,           erode(truth, 1),    erode(truth, 2),
                                                  erode(truth, 3), dilate(truth, 1),   dilate(truth, 2),
                                                  shift(truth, 2, 0), shift(truth, 0, -3), shift(truth, 4, 3)};
      for (const LabelFrame& cand : candidates) {
        const segqc::FrameMetrics m = ctx.predict(cand);
        for (int k = 0; k < kNumStructures; ++k) {
          Qc2Sample s;
          s.phase = static_cast<segqc::Phase>(p);
          s.structure = k;
          s.predicted = m[k];
          s.true_dice = segqc::dice(cand, truth, kStructures[k]);
          s.label = s.true_dice >= cfg.qc2_dice_threshold ? 1 : 0;
          per[i].push_back(s);
        }
      }
    }
  }
  std::vector<Qc2Sample> out;
  for (auto& v : per) out.insert(out.end(), v.begin(), v.end());
  return out;
}

TrainedQc2 train_qc2(const std::vector<Qc2Sample>& samples, const segqc::SvmOptions& options) {
  TrainedQc2 out;
  for (int p = 0; p < segqc::kNumPhases; ++p)
    for (int k = 0; k < kNumStructures; ++k) {
      std::vector<segqc::StructureMetrics> x;
      std::vector<int> y;
      for (const Qc2Sample& s : samples)
        if (static_cast<int>(s.phase) == p && s.structure == k) {
          x.push_back(s.predicted);
          y.push_back(s.label);
        }
      const segqc::TrainedSvm t = segqc::qc2_train(x, y, options);
      out.models.models[p][k] = t.model;
      out.stats[p][k] = t.train;
    }
  return out;
}

}  // namespace cine::training
