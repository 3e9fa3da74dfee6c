#pragma once

#include <optional>
#include <string>

#include "softrestrict/montecarlo.hpp"
#include "softrestrict/solow.hpp"

namespace softrestrict {

/// Schema version embedded in every JSON report.
inline constexpr const char* kReportSchemaVersion = "1";

/// Run provenance echoed into reports: tolerances, grid, seeds, laws.
struct RunProvenance {
  double c0 = 1.0;
  int grid_size = 50;
  double level = 0.95;
  double screen_level = 0.05;
  std::uint64_t seed = 0;
  int workers = 1;
  int bootstrap_B = 0;
  std::string multiplier_law = "rademacher";
  SolverOptions solver;
};

// All emitters return finished file contents. Numbers are rendered
// locale-independently (shortest round-trip, '.' decimal separator).

std::string report_json(const FitResult& fit, const Dataset& data,
                        const RestrictionSystem& system,
                        const std::optional<BootstrapSummary>& bootstrap,
                        const RunProvenance& provenance);
std::string risk_curve_csv(const RiskCurve& curve);
std::string isp_sorted_csv(const IspReport& isp, const std::vector<std::string>& labels,
                           const std::optional<BootstrapSummary>& bootstrap);
std::string bootstrap_summary_json(const BootstrapSummary& summary,
                                   const RunProvenance& provenance);
std::string cutoff_histogram_csv(const BootstrapSummary& summary);
std::string study_table1_csv(const StudyResult& result);
std::string study_table2_csv(const StudyResult& result);
std::string study_figure1_csv(const StudyResult& result);
std::string solow_report_json(const SolowReport& report, const RunProvenance& provenance);
std::string solow_table_csv(const SolowReport& report);

} // namespace softrestrict
