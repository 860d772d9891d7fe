// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "cine/cardio.hpp"
#include "cine/config.hpp"
#include "cine/error.hpp"
#include "cine/imgqc.hpp"
#include "cine/ksim.hpp"
#include "cine/nufft.hpp"
#include "cine/phantom.hpp"
#include "cine/pipeline.hpp"
#include "cine/recon.hpp"
#include "cine/report.hpp"
#include "cine/segqc.hpp"
#include "cine/training.hpp"
#include "oracles.hpp"

using namespace cine;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// One simulated phantom acquisition at a given scan time.
struct Acquired {
  phantom::PhantomCase ph;
  ksim::KSpaceDataset ds;
};

Acquired acquire_phantom(const phantom::PhantomSpec& spec, double t, std::uint64_t phase_seed) {
  Acquired a{phantom::generate(spec), {}};
  const CineVolume c = ksim::synthesize_phase(a.ph.image, 8.0, phase_seed);
  const auto sched = traj::schedule_profiles(t, a.ph.image.geometry(), spec.nx, spec.ny);
  a.ds = ksim::acquire(c, sched, nufft::plan(spec.nx, spec.ny));
  return a;
}

std::vector<phantom::PhantomSpec> cohort(int n, std::uint64_t seed) {
  return phantom::make_cohort(phantom::PhantomSpec{}, n, seed);
}

Outcome nufft_adjointness() {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> start(0, 100000);
  const auto plan = nufft::plan(32, 32);
  double worst = 0;
  for (int c = 0; c < 20; ++c) {
    std::vector<std::int64_t> idx(32);
    const int s0 = start(rng);
    for (int i = 0; i < 32; ++i) idx[i] = s0 + i;
    const auto spokes = traj::golden_angle_spokes(idx, 64);
    const nufft::FrameOperator op(plan, spokes);
    const Frame x = oracle::random_frame(32, 32, rng);
    const auto y = oracle::random_samples(op.n_samples(), rng);
    const auto ax = op.forward(x);
    const Frame ahy = op.adjoint(y);
    const double defect = std::abs(oracle::inner(ax, y) - oracle::inner(x.px, ahy.px)) /
                          (oracle::norm(ax) * oracle::norm(y));
    worst = std::max(worst, defect);
  }
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  const auto small = nufft::plan(16, 16);
  double worst_dft = 0;
  for (int c = 0; c < 5; ++c) {
    const Frame x = oracle::random_frame(16, 16, rng);
    std::vector<traj::KPoint> k(50);
    for (auto& q : k) q = {u(rng), u(rng)};
    const auto got = nufft::FrameOperator(small, k).forward(x);
    worst_dft = std::max(worst_dft, oracle::relative_rms(got, oracle::direct_dft(x, k)));
  }
  return {worst < 1e-3 && worst_dft < 1e-3,
          fmt("max inner-product defect %.2e (< 1e-3, 20 cases), max DFT rel. RMS %.2e (< 1e-3)", worst, worst_dft)};
}

Outcome radial_nyquist() {
  phantom::PhantomSpec spec;
  const Acquired a = acquire_phantom(spec, 30, 1);
  const std::size_t per_frame = a.ds.at(0, 0).spokes.size();
  const auto needed = static_cast<std::size_t>(std::ceil(std::numbers::pi / 2 * spec.nx));
  const auto r = recon::recon_adjoint(a.ds, nufft::plan(spec.nx, spec.ny));
  const double p = imgqc::psnr(a.ph.image, r.magnitude).value_or(INFINITY);
  return {per_frame >= needed && p > 30,
          fmt("64x64, %zu spokes/frame (>= %zu), DCF adjoint PSNR %.2f dB (> 30)", per_frame, needed, p)};
}

Outcome tv_gradient_check() {
  const double h = 1e-4;
  double worst = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    FrameStack x, v;
    for (int t = 0; t < 4; ++t) x.push_back(oracle::random_frame(8, 8, rng));
    for (int t = 0; t < 4; ++t) v.push_back(oracle::random_frame(8, 8, rng));
    const double ls = 1.0, lt = 0.5, eps = 1e-6;
    const FrameStack g = recon::tv_gradient(x, ls, lt, eps);
    FrameStack xp = x, xm = x;
    double analytic = 0;
    for (int t = 0; t < 4; ++t)
      for (std::size_t i = 0; i < x[t].px.size(); ++i) {
        xp[t].px[i] += h * v[t].px[i];
        xm[t].px[i] -= h * v[t].px[i];
        analytic += std::real(g[t].px[i] * std::conj(v[t].px[i]));
      }
    const double numeric = (recon::tv_value(xp, ls, lt, eps) - recon::tv_value(xm, ls, lt, eps)) / (2 * h);
    worst = std::max(worst, std::abs(numeric - analytic) / std::abs(analytic));
  }
  return {worst < 1e-4, fmt("max relative error %.2e over 10 seeds (< 1e-4)", worst)};
}

Outcome residual_monotone() {
  recon::UnrolledParams p;
  p.lambda_spatial = p.lambda_temporal = 0;
  int ok = 0;
  double worst_ratio = 0;
  const auto specs = cohort(10, 40);
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const Acquired a = acquire_phantom(specs[i], 4, 100 + i);
    const auto r = recon::recon_unrolled(a.ds, nufft::plan(64, 64), p);
    bool mono = r.residual_history.size() == 11;
    for (std::size_t k = 1; k < r.residual_history.size(); ++k) {
      mono = mono && r.residual_history[k] <= r.residual_history[k - 1];
      worst_ratio = std::max(worst_ratio, r.residual_history[k] / r.residual_history[k - 1]);
    }
    ok += mono;
  }
  return {ok == 10, fmt("%d/10 cases non-increasing over 10 iterations (max step ratio %.4f)", ok, worst_ratio)};
}

Outcome quality_ordering() {
  const auto specs = cohort(20, 50);
  const auto plan = nufft::plan(64, 64);
  const std::vector<double> times{1, 2, 4, 8};
  std::vector<double> ssim_adj(times.size()), ssim_unr(times.size());
  int unrolled_wins = 0;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    for (std::size_t k = 0; k < times.size(); ++k) {
      const Acquired a = acquire_phantom(specs[i], times[k], 200 + i);
      const auto adj = recon::recon_adjoint(a.ds, plan);
      const auto unr = recon::recon_unrolled(a.ds, plan, {});
      ssim_adj[k] += imgqc::ssim(a.ph.image, adj.magnitude) / specs.size();
      ssim_unr[k] += imgqc::ssim(a.ph.image, unr.magnitude) / specs.size();
      if (times[k] == 4)
        unrolled_wins += *imgqc::psnr(a.ph.image, unr.magnitude) >= *imgqc::psnr(a.ph.image, adj.magnitude);
    }
  }
  bool trend = true;
  for (std::size_t k = 1; k < times.size(); ++k)
    trend = trend && ssim_adj[k] >= ssim_adj[k - 1] - 0.01 && ssim_unr[k] >= ssim_unr[k - 1] - 0.01;
  return {unrolled_wins >= 18 && trend,
          fmt("unrolled PSNR >= adjoint in %d/20 at 4 s (>= 18); mean SSIM t=1,2,4,8: adjoint %.3f %.3f %.3f %.3f, "
              "unrolled %.3f %.3f %.3f %.3f (non-decreasing within 0.01)",
              unrolled_wins, ssim_adj[0], ssim_adj[1], ssim_adj[2], ssim_adj[3], ssim_unr[0], ssim_unr[1],
              ssim_unr[2], ssim_unr[3])};
}

pipeline::CohortReport run_pipeline(const config::PipelineConfig& cfg) {
  return pipeline::run_cohort(pipeline::load_subjects(cfg), cfg, pipeline::load_resources(cfg));
}

Outcome active_loop() {
  config::PipelineConfig cfg;
  cfg.recon_method = config::ReconMethod::Unrolled;
  const auto unrolled = run_pipeline(cfg);
  cfg.recon_method = config::ReconMethod::Adjoint;
  const auto adjoint = run_pipeline(cfg);
  if (!unrolled.scan_time_s || !adjoint.scan_time_s) return {false, "a method never passed any subject"};
  const double u = unrolled.scan_time_s->mean, a = adjoint.scan_time_s->mean;
  const bool ok = u <= a && u <= 30 && a <= 30 && unrolled.n_never == 0 && adjoint.n_never == 0;
  return {ok, fmt("mean pass time unrolled %.2f +/- %.2f s, adjoint %.2f +/- %.2f s; never-passed %d / %d",
                  u, unrolled.scan_time_s->sd, a, adjoint.scan_time_s->sd, unrolled.n_never, adjoint.n_never)};
}

Outcome functional_fidelity() {
  config::PipelineConfig cfg;
  cfg.phantom.nx = cfg.phantom.ny = 128;
  cfg.phantom.dx_mm = cfg.phantom.dy_mm = 1.25;
  const auto r = run_pipeline(cfg);
  std::vector<double> ef_pipe, ef_true, edv_pipe, edv_true, esv_pipe, esv_true;
  double abs_err = 0;
  for (const auto& s : r.subjects) {
    if (!s.at_pass || !s.analytic) continue;
    ef_pipe.push_back(100 * s.at_pass->lv_ef);
    ef_true.push_back(100 * s.analytic->lv_ef);
    abs_err += std::abs(ef_pipe.back() - ef_true.back());
    edv_pipe.push_back(s.at_pass->lv_edv_ml);
    edv_true.push_back(s.analytic->lv_edv_ml);
    esv_pipe.push_back(s.at_pass->lv_esv_ml);
    esv_true.push_back(s.analytic->lv_esv_ml);
  }
  if (ef_pipe.size() < 3) return {false, fmt("only %zu subjects passed", ef_pipe.size())};
  const double mae = abs_err / ef_pipe.size();
  const double rho = cardio::pearson(ef_pipe, ef_true);
  const double edv_bias = cardio::bland_altman(edv_pipe, edv_true).bias;
  const double esv_bias = cardio::bland_altman(esv_pipe, esv_true).bias;
  const bool ok = mae <= 5 && rho >= 0.95 && std::abs(edv_bias) <= 2 && std::abs(esv_bias) <= 2 &&
                  static_cast<int>(ef_pipe.size()) == cfg.cohort_size;
  return {ok, fmt("%zu/%d passed; LV EF MAE %.2f pp (<= 5), Pearson r %.4f (>= 0.95), "
                  "Bland-Altman bias EDV %+.2f mL, ESV %+.2f mL (within +/-2)",
                  ef_pipe.size(), cfg.cohort_size, mae, rho, edv_bias, esv_bias)};
}

Outcome metric_identities() {
  phantom::PhantomSpec spec;
  spec.n_frames = 6;
  const auto ph = phantom::generate(spec);
  double worst = 0;
  for (Label l : kStructures)
    worst = std::max(worst, std::abs(segqc::dice(ph.labels.frame(0, 2), ph.labels.frame(0, 2), l) - 1));
  worst = std::max(worst, std::abs(imgqc::ssim(ph.image, ph.image) - 1));
  worst = std::max(worst, std::abs(imgqc::mae(ph.image, ph.image)));
  const std::vector<double> a{3.5, 1.25, 8, 2, 9.75};
  const auto ba = cardio::bland_altman(a, a);
  worst = std::max({worst, std::abs(ba.bias), std::abs(ba.loa_low), std::abs(ba.loa_high)});
  std::mt19937_64 rng(7);
  int ordered = 0;
  for (int k = 0; k < 100; ++k) {
    const auto x = oracle::random_mask(48, 48, 2, rng), y = oracle::random_mask(48, 48, 2, rng);
    const auto d = segqc::surface_distances(x, y, 2, {1.8, 1.8});
    ordered += d.msd_mm <= d.rmsd_mm + 1e-9 && d.rmsd_mm <= d.hd_mm + 1e-9;
  }
  return {worst <= 1e-9 && ordered == 100,
          fmt("max identity defect %.1e (<= 1e-9); MSD <= RMSD <= HD on %d/100 random pairs", worst, ordered)};
}

Outcome rca_consistency() {
  phantom::PhantomSpec base;
  base.n_frames = 20;
  const auto specs = phantom::make_cohort(base, 10, 60);
  const segqc::Atlas full = training::phantom_atlas(specs);
  double min_self = 1;
  int decreased = 0;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto ph = phantom::generate(specs[i]);
    const int ed = cardio::ed_frame(ph.analytic_curve);
    const Image img = ph.image.magnitude_frame(0, ed);
    const LabelFrame seg = ph.labels.frame(0, ed);
    for (const auto& m : segqc::rca_predict(img, seg, full)) min_self = std::min(min_self, m.dsc);

    // Leave-one-out atlas for the corruption test.
    segqc::Atlas others = full;
    others.entries.erase(others.entries.begin() + 2 * i, others.entries.begin() + 2 * i + 2);
    const segqc::RcaContext ctx(img, others);
    const auto intact = ctx.predict(seg);
    const auto eroded = ctx.predict(training::erode(seg, 3));
    bool all = true;
    for (int s = 0; s < kNumStructures; ++s) all = all && eroded[s].dsc < intact[s].dsc;
    decreased += all;
  }
  return {min_self >= 0.95 && decreased >= 9,
          fmt("self-atlas min predicted DSC %.4f (>= 0.95); 3 px erosion lowers predicted DSC of every structure in "
              "%d/10 cases (>= 9)",
              min_self, decreased)};
}

Outcome determinism() {
  config::PipelineConfig cfg;
  cfg.cohort_size = 4;
  cfg.snr_db = 30.0;
  cfg.seed = 11;
  const auto dir_a = oracle::temp_dir("accept_run_a"), dir_b = oracle::temp_dir("accept_run_b");
  report::write_report(run_pipeline(cfg), dir_a);
  report::write_report(run_pipeline(cfg), dir_b);
  auto bytes = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  const std::string a = bytes(dir_a / "summary.json"), b = bytes(dir_b / "summary.json");
  return {!a.empty() && a == b, fmt("summary.json %zu bytes, identical across two runs: %s", a.size(),
                                    a == b ? "yes" : "no")};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> check;
    // Wall-clock budget in seconds, 0 when none is specified.
    double budget_s;
  };
  const std::vector<Criterion> criteria = {
      {"NUFFT adjointness and DFT agreement", nufft_adjointness, 10},
      {"radial Nyquist sanity", radial_nyquist, 30},
      {"TV gradient vs finite differences", tv_gradient_check, 0},
      {"unrolled residual monotone (lambda = 0)", residual_monotone, 0},
      {"quality ordering trend", quality_ordering, 0},
      {"active-loop scan time trend", active_loop, 600},
      {"functional-parameter fidelity", functional_fidelity, 0},
      {"metric identities", metric_identities, 0},
      {"RCA self-consistency", rca_consistency, 0},
      {"determinism of run", determinism, 0},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (criteria[i].budget_s > 0 && secs >= criteria[i].budget_s) {
      o.pass = false;
      o.detail += fmt("; over the %.0f s budget", criteria[i].budget_s);
    }
    std::printf("criterion %zu %s: %s (%.1f s) %s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].name, secs,
                o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
