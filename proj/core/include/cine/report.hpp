#pragma once

#include <filesystem>
#include <string>

#include "cine/pipeline.hpp"

namespace cine::report {

// summary.json, metrics.csv, bland_altman_<param>.csv and cohort.txt under
// `out_dir` (created if needed). Ejection fractions are written in percent.
void write_report(const pipeline::CohortReport& report, const std::filesystem::path& out_dir);

std::string summary_json(const pipeline::CohortReport& report);
std::string metrics_csv(const pipeline::CohortReport& report);
std::string bland_altman_csv(const pipeline::Agreement& agreement);
std::string cohort_text(const pipeline::CohortReport& report);

}  // namespace cine::report
