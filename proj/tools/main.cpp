#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "cine/cardio.hpp"
#include "cine/config.hpp"
#include "cine/error.hpp"
#include "cine/imgqc.hpp"
#include "cine/io.hpp"
#include "cine/ksim.hpp"
#include "cine/pipeline.hpp"
#include "cine/recon.hpp"
#include "cine/report.hpp"
#include "cine/segqc.hpp"
#include "cine/training.hpp"
#include "cine/trajectory.hpp"

namespace fs = std::filesystem;
using namespace cine;
using nlohmann::ordered_json;

namespace {

enum Exit { kOk = 0, kNeverPassed = 2, kConfigError = 3, kDataError = 4 };

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
};

config::PipelineConfig load_config(const Globals& g) {
  config::PipelineConfig cfg;
  if (!g.config_path.empty()) cfg = config::load(g.config_path);
  if (g.seed) cfg.seed = *g.seed;
  cfg.validate();
  return cfg;
}

fs::path out_dir(const Globals& g) {
  std::error_code ec;
  fs::create_directories(g.out, ec);
  if (ec) fail(ErrorCode::Io, "cannot create output directory " + g.out);
  return g.out;
}

ordered_json params_json(const cardio::FunctionalParams& p) {
  ordered_json j;
  j["lv_edv_ml"] = p.lv_edv_ml;
  j["lv_esv_ml"] = p.lv_esv_ml;
  j["lv_ef_pct"] = 100 * p.lv_ef;
  j["rv_edv_ml"] = p.rv_edv_ml;
  j["rv_esv_ml"] = p.rv_esv_ml;
  j["rv_ef_pct"] = 100 * p.rv_ef;
  j["degenerate"] = p.degenerate;
  return j;
}

ordered_json metrics_json(const segqc::StructureMetrics& m) {
  if (!m.defined) return {{"dsc", m.dsc}, {"defined", false}};
  return {{"dsc", m.dsc}, {"msd_mm", m.msd_mm}, {"rmsd_mm", m.rmsd_mm}, {"hd_mm", m.hd_mm}, {"defined", true}};
}

// The fully sampled input image: a NIfTI/raw file, or the first phantom of
// the configured cohort.
CineVolume input_image(const std::string& path, const config::PipelineConfig& cfg) {
  if (!path.empty()) return io::load_volume(path).magnitude();
  config::PipelineConfig one = cfg;
  one.cohort_size = 1;
  one.input_dir.clear();
  return pipeline::load_subjects(one).front().image;
}

ksim::KSpaceDataset simulate(const CineVolume& image, double t, const config::PipelineConfig& cfg,
                             const nufft::Plan& plan) {
  Geometry g = image.geometry();
  g.n_frames = image.shape().nframes;
  const auto sched = traj::schedule_profiles(t, g, image.shape().nx, image.shape().ny);
  const CineVolume cx = cfg.phase_sigma_px > 0 ? ksim::synthesize_phase(image, cfg.phase_sigma_px, cfg.seed) : image;
  ksim::KSpaceDataset ds = ksim::acquire(cx, sched, plan);
  if (cfg.snr_db) ds = ksim::add_noise(ds, cfg.snr_db, cfg.seed);
  return ds;
}

int cmd_phantom(const Globals& g, std::optional<int> n) {
  config::PipelineConfig cfg = load_config(g);
  if (n) cfg.cohort_size = *n;
  cfg.input_dir.clear();
  cfg.validate();
  const fs::path dir = out_dir(g);
  const auto subjects = pipeline::load_subjects(cfg);
  std::ofstream csv(dir / "analytic.csv");
  csv << "subject,lv_edv_ml,lv_esv_ml,lv_ef_pct,rv_edv_ml,rv_esv_ml,rv_ef_pct\n";
  for (const auto& s : subjects) {
    io::save_volume(s.image, dir / (s.id + "_img.nii"));
    io::save_labels(*s.truth, dir / (s.id + "_seg.nii"));
    const auto& p = *s.analytic;
    csv << s.id << ',' << p.lv_edv_ml << ',' << p.lv_esv_ml << ',' << 100 * p.lv_ef << ',' << p.rv_edv_ml << ','
        << p.rv_esv_ml << ',' << 100 * p.rv_ef << '\n';
  }
  if (!csv) fail(ErrorCode::Io, "failed writing analytic.csv");
  std::cout << "wrote " << subjects.size() << " phantoms to " << dir.string() << "\n";
  return kOk;
}

int cmd_simulate(const Globals& g, const std::string& input, double t) {
  const config::PipelineConfig cfg = load_config(g);
  const CineVolume image = input_image(input, cfg);
  const nufft::Plan plan(image.shape().nx, image.shape().ny, cfg.oversampling, cfg.kernel_width);
  const ksim::KSpaceDataset ds = simulate(image, t, cfg, plan);
  const fs::path dir = out_dir(g);
  for (int s = 0; s < ds.n_slices(); ++s) {
    std::ofstream out(dir / ("kspace_slice" + std::to_string(s) + ".csv"));
    ksim::write_kspace_csv(out, ds, s);
    if (!out) fail(ErrorCode::Io, "failed writing k-space CSV");
  }
  Geometry geo = image.geometry();
  geo.n_frames = image.shape().nframes;
  std::ofstream traj_out(dir / "trajectory.csv");
  traj::write_trajectory_csv(traj_out, traj::schedule_profiles(t, geo, image.shape().nx, image.shape().ny));
  if (!traj_out) fail(ErrorCode::Io, "failed writing trajectory CSV");
  std::cout << "samples=" << ds.total_samples() << " slices=" << ds.n_slices() << " frames=" << ds.n_frames() << "\n";
  return kOk;
}

int cmd_recon(const Globals& g, const std::string& input, double t, const std::string& method) {
  config::PipelineConfig cfg = load_config(g);
  if (!method.empty()) config::apply(cfg, "recon.method", method);
  const CineVolume image = input_image(input, cfg);
  const nufft::Plan plan(image.shape().nx, image.shape().ny, cfg.oversampling, cfg.kernel_width);
  const ksim::KSpaceDataset ds = simulate(image, t, cfg, plan);
  const CineVolume rec = pipeline::reconstruct(ds, plan, cfg);
  const fs::path dir = out_dir(g);
  io::save_volume(rec, dir / "recon.nii");
  const auto q = imgqc::image_quality(image, rec, cfg.ssim);
  ordered_json j{{"method", config::to_string(cfg.recon_method)},
                 {"scan_time_s", t},
                 {"mae", q.mae.mean},
                 {"psnr_db", q.psnr_db ? ordered_json(q.psnr_db->mean) : ordered_json("identical")},
                 {"ssim", q.ssim.mean}};
  std::cout << j.dump(2) << "\n";
  return kOk;
}

int cmd_metrics(const Globals& g, const std::string& ref_path, const std::string& test_path) {
  const config::PipelineConfig cfg = load_config(g);
  const CineVolume ref = io::load_volume(ref_path), test = io::load_volume(test_path);
  const auto q = imgqc::image_quality(ref, test, cfg.ssim);
  ordered_json j{{"mae", q.mae.mean},
                 {"psnr_db", q.psnr_db ? ordered_json(q.psnr_db->mean) : ordered_json("identical")},
                 {"ssim", q.ssim.mean}};
  std::cout << j.dump(2) << "\n";
  return kOk;
}

int cmd_rca(const Globals& g, const std::string& image_path, const std::string& seg_path, const std::string& atlas_dir,
            int slice, std::optional<int> frame) {
  config::PipelineConfig cfg = load_config(g);
  const CineVolume image = io::load_volume(image_path);
  const LabelMap seg = io::load_labels(seg_path);
  const segqc::Atlas atlas = segqc::load_atlas(atlas_dir.empty() ? cfg.atlas_dir : atlas_dir);
  std::optional<segqc::Qc2Models> models;
  if (!cfg.qc2_models.empty()) models = segqc::load_qc2_models(cfg.qc2_models);
  segqc::RcaOptions opt;
  opt.registration = cfg.registration;
  opt.direction = cfg.rca_template_to_test ? segqc::Direction::TemplateToTest : segqc::Direction::TestToTemplate;
  std::vector<int> frames;
  if (frame) {
    frames = {*frame};
  } else {
    const auto curve = cardio::volume_curve(seg);
    frames = {cardio::ed_frame(curve), cardio::es_frame(curve)};
  }
  ordered_json out = ordered_json::array();
  segqc::SegQualityMetrics all;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const segqc::FrameMetrics m =
        segqc::rca_predict(image.magnitude_frame(slice, frames[i]), seg.frame(slice, frames[i]), atlas, opt);
    ordered_json jf{{"frame", frames[i]}};
    for (int k = 0; k < kNumStructures; ++k) jf[structure_name(kStructures[k])] = metrics_json(m[k]);
    out.push_back(jf);
    if (i < 2) all.metrics[i] = m;
  }
  ordered_json j{{"slice", slice}, {"predicted", out}};
  if (models && frames.size() == 2) j["qc2_pass"] = segqc::qc2_predict(*models, all).pass;
  std::cout << j.dump(2) << "\n";
  return kOk;
}

int cmd_params(const Globals& g, const std::string& seg_path) {
  (void)load_config(g);
  const LabelMap seg = io::load_labels(seg_path);
  const auto curve = cardio::volume_curve(seg);
  ordered_json j = params_json(cardio::functional_params(curve));
  j["ed_frame"] = cardio::ed_frame(curve);
  j["es_frame"] = cardio::es_frame(curve);
  std::cout << j.dump(2) << "\n";
  return kOk;
}

int cmd_run(const Globals& g) {
  const config::PipelineConfig cfg = load_config(g);
  const pipeline::Resources res = pipeline::load_resources(cfg);
  const auto subjects = pipeline::load_subjects(cfg);
  const pipeline::CohortReport rep = pipeline::run_cohort(subjects, cfg, res);
  report::write_report(rep, g.out);
  std::cout << report::cohort_text(rep);
  return rep.n_never > 0 ? kNeverPassed : kOk;
}

int cmd_train_qc1(const Globals& g, int n) {
  const config::PipelineConfig cfg = load_config(g);
  const auto specs = phantom::make_cohort(cfg.phantom, n, cfg.seed + 1);
  const std::vector<double> times = {1, 2, 3, 4, 6, 8, 10, 12, 16, 20};
  const auto samples =
      training::qc1_samples(specs, times, {config::ReconMethod::Adjoint, config::ReconMethod::Unrolled}, cfg);
  imgqc::TrainOptions opt;
  opt.seed = cfg.seed;
  const auto trained = training::train_qc1(samples, opt);
  const fs::path dir = out_dir(g);
  imgqc::save_linear_model(trained.model, (dir / "qc1_model.txt").string());
  std::cout << "examples " << samples.size() << "\n";
  std::cout << "training  sensitivity " << trained.train.sensitivity << " specificity " << trained.train.specificity
            << " balanced accuracy " << trained.train.balanced_accuracy << "\n";
  std::cout << "held-out  sensitivity " << trained.holdout.sensitivity << " specificity "
            << trained.holdout.specificity << " balanced accuracy " << trained.holdout.balanced_accuracy << "\n";
  return kOk;
}

int cmd_train_qc2(const Globals& g, int n) {
  const config::PipelineConfig cfg = load_config(g);
  const auto atlas_specs = phantom::make_cohort(cfg.phantom, n, cfg.seed + 2);
  const auto train_specs = phantom::make_cohort(cfg.phantom, n, cfg.seed + 3);
  const segqc::Atlas atlas = training::phantom_atlas(atlas_specs);
  const auto samples = training::qc2_samples(train_specs, atlas, cfg);
  segqc::SvmOptions opt;
  opt.seed = cfg.seed;
  const auto trained = training::train_qc2(samples, opt);
  const fs::path dir = out_dir(g);
  segqc::save_atlas(atlas, (dir / "atlas").string());
  segqc::save_qc2_models(trained.models, (dir / "qc2_models.txt").string());
  for (int p = 0; p < segqc::kNumPhases; ++p)
    for (int k = 0; k < kNumStructures; ++k) {
      const auto& s = trained.stats[p][k];
      std::cout << segqc::phase_name(static_cast<segqc::Phase>(p)) << "." << structure_name(kStructures[k])
                << " training balanced accuracy " << s.balanced_accuracy << " (n=" << s.n << ")\n";
    }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quality-aware active acquisition simulator for radial cine MRI"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config_path, "key=value configuration file");
  auto* seed_opt = app.add_option("--seed", seed, "random seed (overrides the config)");
  app.add_option("--out", g.out, "output directory")->capture_default_str();

  std::optional<int> n_phantoms;
  auto* phantom = app.add_subcommand("phantom", "generate a phantom cohort");
  phantom->add_option("--n", n_phantoms, "number of phantoms");

  std::string input;
  double t = 8.0;
  auto* simulate_cmd = app.add_subcommand("simulate", "simulate golden-angle radial k-space");
  simulate_cmd->add_option("--input", input, "fully sampled image (default: first configured phantom)");
  simulate_cmd->add_option("--time", t, "scan time in seconds")->capture_default_str();

  std::string method;
  auto* recon_cmd = app.add_subcommand("recon", "simulate and reconstruct");
  recon_cmd->add_option("--input", input, "fully sampled image (default: first configured phantom)");
  recon_cmd->add_option("--time", t, "scan time in seconds")->capture_default_str();
  recon_cmd->add_option("--method", method, "adjoint or unrolled");

  std::string ref, test;
  auto* metrics = app.add_subcommand("metrics", "MAE, PSNR and SSIM between two volumes");
  metrics->add_option("--ref", ref, "reference volume")->required();
  metrics->add_option("--test", test, "test volume")->required();

  std::string image, seg, atlas;
  int slice = 0;
  std::optional<int> frame;
  auto* rca = app.add_subcommand("rca", "reverse classification accuracy of a segmentation");
  rca->add_option("--image", image, "image volume")->required();
  rca->add_option("--seg", seg, "segmentation volume")->required();
  rca->add_option("--atlas", atlas, "atlas directory (default: qc2.atlas)");
  rca->add_option("--slice", slice, "slice index")->capture_default_str();
  rca->add_option("--frame", frame, "single frame (default: ED and ES)");

  auto* params = app.add_subcommand("params", "functional parameters of a segmentation");
  params->add_option("--seg", seg, "segmentation volume")->required();

  auto* run = app.add_subcommand("run", "full active-acquisition pipeline");

  int n_train = 10;
  auto* train1 = app.add_subcommand("train-qc1", "train the QC1 classifier on a phantom sweep");
  train1->add_option("--n", n_train, "number of phantoms")->capture_default_str();
  auto* train2 = app.add_subcommand("train-qc2", "build a phantom atlas and train the QC2 SVMs");
  train2->add_option("--n", n_train, "number of phantoms")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }
  if (*seed_opt) g.seed = seed;

  try {
    if (*phantom) return cmd_phantom(g, n_phantoms);
    if (*simulate_cmd) return cmd_simulate(g, input, t);
    if (*recon_cmd) return cmd_recon(g, input, t, method);
    if (*metrics) return cmd_metrics(g, ref, test);
    if (*rca) return cmd_rca(g, image, seg, atlas, slice, frame);
    if (*params) return cmd_params(g, seg);
    if (*run) return cmd_run(g);
    if (*train1) return cmd_train_qc1(g, n_train);
    if (*train2) return cmd_train_qc2(g, n_train);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::Config ? kConfigError : kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  }
  return kOk;
}
