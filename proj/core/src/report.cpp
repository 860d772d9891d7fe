#include "cine/report.hpp"

#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "cine/error.hpp"

namespace cine::report {

namespace {

using nlohmann::ordered_json;
using pipeline::kParamNames;

bool is_ef(const std::string& param) { return param.size() > 3 && param.compare(param.size() - 3, 3, "_ef") == 0; }
double unit_scale(const std::string& param) { return is_ef(param) ? 100.0 : 1.0; }
std::string unit_name(const std::string& param) { return is_ef(param) ? param + "_pct" : param + "_ml"; }

std::string num(double v, int precision = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

ordered_json summary(const std::optional<imgqc::Summary>& s, double scale = 1.0) {
  if (!s) return nullptr;
  return ordered_json{{"mean", s->mean * scale}, {"sd", s->sd * scale}};
}

ordered_json params(const cardio::FunctionalParams& p) {
  ordered_json j;
  for (int i = 0; i < 6; ++i) j[unit_name(kParamNames[i])] = pipeline::param_value(p, i) * unit_scale(kParamNames[i]);
  j["degenerate"] = p.degenerate;
  return j;
}

ordered_json agreement(const pipeline::Agreement& a) {
  const double k = unit_scale(a.param);
  ordered_json j;
  j["n"] = a.pipeline.size();
  j["mean_abs_error"] = a.mean_abs_error * k;
  if (a.bland_altman)
    j["bland_altman"] = {{"bias", a.bland_altman->bias * k},
                         {"loa_low", a.bland_altman->loa_low * k},
                         {"loa_high", a.bland_altman->loa_high * k}};
  else
    j["bland_altman"] = nullptr;
  j["pearson"] = a.pearson ? ordered_json(*a.pearson) : ordered_json(nullptr);
  return j;
}

ordered_json psnr_json(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json("identical");
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << content;
  if (!out) fail(ErrorCode::Io, "failed writing " + path.string());
}

std::string pm(const std::optional<imgqc::Summary>& s, int decimals) {
  if (!s) return "n/a";
  return fixed(s->mean, decimals) + " ± " + fixed(s->sd, decimals);
}

}  // namespace

std::string summary_json(const pipeline::CohortReport& r) {
  ordered_json root;
  ordered_json cfg = ordered_json::object();
  for (const auto& [k, v] : r.config) cfg[k] = v;
  root["config"] = cfg;

  ordered_json cohort;
  cohort["n_subjects"] = r.subjects.size();
  cohort["n_passed"] = r.n_passed;
  cohort["n_never"] = r.n_never;
  cohort["scan_time_s"] = summary(r.scan_time_s);
  cohort["mae"] = summary(r.mae);
  cohort["psnr_db"] = summary(r.psnr_db);
  cohort["ssim"] = summary(r.ssim);
  ordered_json dice;
  for (int k = 0; k < kNumStructures; ++k) dice[structure_name(kStructures[k])] = summary(r.dice[k]);
  cohort["dice"] = dice;
  cohort["qc1_vs_oracle"] = {{"n", r.qc1_vs_oracle.n},
                             {"sensitivity", r.qc1_vs_oracle.sensitivity},
                             {"specificity", r.qc1_vs_oracle.specificity},
                             {"balanced_accuracy", r.qc1_vs_oracle.balanced_accuracy}};
  ordered_json vs_ref, vs_an;
  for (const auto& a : r.vs_reference) vs_ref[a.param] = agreement(a);
  for (const auto& a : r.vs_analytic) vs_an[a.param] = agreement(a);
  cohort["agreement_vs_reference"] = vs_ref.is_null() ? ordered_json::object() : vs_ref;
  cohort["agreement_vs_analytic"] = vs_an.is_null() ? ordered_json::object() : vs_an;
  root["cohort"] = cohort;

  ordered_json subjects = ordered_json::array();
  for (const pipeline::SubjectReport& s : r.subjects) {
    ordered_json js;
    js["id"] = s.id;
    js["pass_time_s"] = s.pass_time_s ? ordered_json(*s.pass_time_s) : ordered_json("never");
    js["params_at_pass"] = s.at_pass ? params(*s.at_pass) : ordered_json(nullptr);
    js["params_reference"] = params(s.reference);
    js["params_analytic"] = s.analytic ? params(*s.analytic) : ordered_json(nullptr);
    ordered_json attempts = ordered_json::array();
    for (const pipeline::Attempt& a : s.attempts) {
      ordered_json ja;
      ja["scan_time_s"] = a.scan_time_s;
      ja["spokes_per_frame"] = a.spokes_per_frame;
      ja["mae"] = a.image.mae.mean;
      ja["psnr_db"] = a.image.psnr_db ? ordered_json(a.image.psnr_db->mean) : ordered_json("identical");
      ja["ssim"] = a.image.ssim.mean;
      ja["qc1_pass"] = a.qc1_pass;
      ordered_json slices = ordered_json::array();
      for (std::size_t i = 0; i < a.slices.size(); ++i) {
        const pipeline::SliceVerdict& v = a.slices[i];
        slices.push_back({{"slice", i},
                          {"mae", a.image.slices[i].mae},
                          {"psnr_db", psnr_json(a.image.slices[i].psnr_db)},
                          {"ssim", a.image.slices[i].ssim},
                          {"qc1_pass", v.qc1_pass},
                          {"qc1_score", v.qc1_score},
                          {"qc2_pass", v.qc2_pass ? ordered_json(*v.qc2_pass) : ordered_json(nullptr)}});
      }
      ja["slices"] = slices;
      ja["segmented"] = a.segmented;
      if (a.dice) {
        ordered_json d;
        for (int k = 0; k < kNumStructures; ++k) d[structure_name(kStructures[k])] = (*a.dice)[k];
        ja["dice"] = d;
      } else {
        ja["dice"] = nullptr;
      }
      ja["qc2_pass"] = a.qc2_pass ? ordered_json(*a.qc2_pass) : ordered_json(nullptr);
      ja["pass"] = a.pass;
      attempts.push_back(ja);
    }
    js["attempts"] = attempts;
    subjects.push_back(js);
  }
  root["subjects"] = subjects;
  return root.dump(2) + "\n";
}

std::string metrics_csv(const pipeline::CohortReport& r) {
  std::ostringstream os;
  os << "subject,scan_time_s,spokes_per_frame,mae,psnr_db,ssim,qc1_pass,segmented,dice_lvbp,dice_lvm,dice_rvbp,"
        "qc2_pass,pass\n";
  for (const pipeline::SubjectReport& s : r.subjects)
    for (const pipeline::Attempt& a : s.attempts) {
      os << s.id << ',' << num(a.scan_time_s) << ',' << num(a.spokes_per_frame) << ',' << num(a.image.mae.mean, 9)
         << ',' << (a.image.psnr_db ? num(a.image.psnr_db->mean, 9) : std::string("identical")) << ','
         << num(a.image.ssim.mean, 9) << ',' << (a.qc1_pass ? 1 : 0) << ',' << (a.segmented ? 1 : 0);
      for (int k = 0; k < kNumStructures; ++k) os << ',' << (a.dice ? num((*a.dice)[k], 9) : std::string());
      os << ',' << (a.qc2_pass ? (*a.qc2_pass ? "1" : "0") : "") << ',' << (a.pass ? 1 : 0) << '\n';
    }
  return os.str();
}

std::string bland_altman_csv(const pipeline::Agreement& a) {
  const double k = unit_scale(a.param);
  std::ostringstream os;
  os << "subject,pipeline,reference,mean,difference\n";
  for (std::size_t i = 0; i < a.pipeline.size(); ++i) {
    const double p = a.pipeline[i] * k, q = a.other[i] * k;
    os << a.subjects[i] << ',' << num(p, 9) << ',' << num(q, 9) << ',' << num(0.5 * (p + q), 9) << ','
       << num(p - q, 9) << '\n';
  }
  return os.str();
}

std::string cohort_text(const pipeline::CohortReport& r) {
  auto value = [&](const std::string& key) {
    for (const auto& [k, v] : r.config)
      if (k == key) return v;
    return std::string("?");
  };
  std::ostringstream os;
  char line[160];
  auto row = [&](const std::string& label, const std::string& v) {
    std::snprintf(line, sizeof line, "  %-28s %s\n", label.c_str(), v.c_str());
    os << line;
  };
  os << "Active acquisition cohort summary\n";
  os << "recon=" << value("recon.method") << "  qc1=" << value("qc1.mode") << "  qc2=" << value("qc2.mode")
     << "  scope=" << value("qc.scope") << "  seed=" << value("seed") << "\n";
  os << "subjects=" << r.subjects.size() << "  passed=" << r.n_passed << "  never=" << r.n_never << "\n\n";

  os << "QC1 (verdict vs oracle SSIM label, all attempts)\n";
  row("Sensitivity", fixed(r.qc1_vs_oracle.sensitivity, 3));
  row("Specificity", fixed(r.qc1_vs_oracle.specificity, 3));
  row("Average balanced accuracy", fixed(r.qc1_vs_oracle.balanced_accuracy, 3));
  os << '\n';

  os << "Image quality at pass\n";
  row("MAE", pm(r.mae, 3));
  row("PSNR (dB)", pm(r.psnr_db, 2));
  row("SSIM", pm(r.ssim, 3));
  os << '\n';

  os << "Dice at pass\n";
  for (int k = 0; k < kNumStructures; ++k) row(structure_name(kStructures[k]), pm(r.dice[k], 3));
  os << '\n';

  os << "Scan time\n";
  row("Scan Time (s)", pm(r.scan_time_s, 2));
  os << '\n';

  auto block = [&](const char* title, const std::vector<pipeline::Agreement>& list) {
    if (list.empty()) return;
    os << title << '\n';
    std::snprintf(line, sizeof line, "  %-12s %6s %10s %22s %8s\n", "parameter", "n", "bias", "limits of agreement",
                  "r");
    os << line;
    for (const auto& a : list) {
      const double k = unit_scale(a.param);
      const std::string bias = a.bland_altman ? fixed(a.bland_altman->bias * k, 2) : "n/a";
      const std::string loa = a.bland_altman ? "[" + fixed(a.bland_altman->loa_low * k, 2) + ", " +
                                                   fixed(a.bland_altman->loa_high * k, 2) + "]"
                                             : "n/a";
      const std::string rr = a.pearson ? fixed(*a.pearson, 3) : "n/a";
      std::snprintf(line, sizeof line, "  %-12s %6zu %10s %22s %8s\n", unit_name(a.param).c_str(), a.pipeline.size(),
                    bias.c_str(), loa.c_str(), rr.c_str());
      os << line;
    }
    os << '\n';
  };
  block("Functional parameters, pipeline at pass vs fully sampled reference", r.vs_reference);
  block("Functional parameters, pipeline at pass vs analytic phantom", r.vs_analytic);

  os << "Per subject\n";
  for (const auto& s : r.subjects) {
    const std::string t = s.pass_time_s ? num(*s.pass_time_s) + " s" : std::string("never");
    std::snprintf(line, sizeof line, "  %-16s %-10s attempts=%zu\n", s.id.c_str(), t.c_str(), s.attempts.size());
    os << line;
  }
  return os.str();
}

void write_report(const pipeline::CohortReport& report, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir)) fail(ErrorCode::Io, "cannot create output directory " + out_dir.string());
  write_file(out_dir / "summary.json", summary_json(report));
  write_file(out_dir / "metrics.csv", metrics_csv(report));
  for (const auto& a : report.vs_reference) write_file(out_dir / ("bland_altman_" + a.param + ".csv"), bland_altman_csv(a));
  write_file(out_dir / "cohort.txt", cohort_text(report));
}

}  // namespace cine::report
