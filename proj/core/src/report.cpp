#include "softrestrict/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include <json.hpp>

namespace softrestrict {

namespace {

using nlohmann::json;

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

json vec_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

json mat_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json provenance_to_json(const RunProvenance& p) {
  return json{{"c0", p.c0},
              {"grid_size", p.grid_size},
              {"level", p.level},
              {"screen_level", p.screen_level},
              {"seed", p.seed},
              {"workers", p.workers},
              {"bootstrap_B", p.bootstrap_B},
              {"multiplier_law", p.multiplier_law},
              {"stationarity_tol", p.solver.stationarity_tol},
              {"constraint_tol", p.solver.constraint_tol},
              {"max_outer_iterations", p.solver.max_outer_iterations}};
}

json kkt_to_json(const KktSolution& sol) {
  return json{{"c", sol.c},
              {"lambda", sol.lambda},
              {"active", sol.active},
              {"h_value", sol.h_value},
              {"kkt_residual", sol.kkt_residual},
              {"iterations", sol.iterations},
              {"theta", vec_to_json(sol.theta)}};
}

json isp_to_json(const IspReport& isp, const std::vector<std::string>& labels) {
  json out{{"values", vec_to_json(isp.isp)},
           {"labels", labels},
           {"order_ascending", isp.order},
           {"sigma_isp_diagonal", vec_to_json(isp.sigma_isp.diagonal())},
           {"plateau_members", isp.plateau_members},
           {"break_stats", isp.break_stats},
           {"admissible", isp.admissible},
           {"sign_unstable", isp.sign_unstable},
           {"diagnostic", isp.diagnostic}};
  out["cutoff"] = isp.cutoff ? json(*isp.cutoff) : json(nullptr);
  return out;
}

json bootstrap_to_json(const BootstrapSummary& s) {
  json out{{"B", s.B},
           {"level", s.level},
           {"n_failures", s.n_failures},
           {"theta_ci_lower", vec_to_json(s.theta_ci_lower)},
           {"theta_ci_upper", vec_to_json(s.theta_ci_upper)},
           {"interval_type", "percentile"},
           {"cutoff_defined", s.cutoff_defined},
           {"plateau_members_adjusted", s.plateau_members_adjusted}};
  if (s.cutoff_defined) {
    out["cutoff_mean"] = s.cutoff_mean;
    out["cutoff_sd"] = s.cutoff_sd;
    out["adjusted_boundary"] = s.adjusted_boundary;
  } else {
    out["cutoff_mean"] = nullptr;
    out["cutoff_sd"] = nullptr;
    out["adjusted_boundary"] = nullptr;
  }
  json hist = json::array();
  for (const auto& [m, count] : s.cutoff_histogram)
    hist.push_back(json{{"cutoff", m}, {"count", count}});
  out["cutoff_histogram"] = std::move(hist);
  json chats = json::array();
  for (double c : s.c_hats) chats.push_back(c);
  out["c_hats"] = std::move(chats);
  return out;
}

json risk_to_json(const RiskCurve& curve) {
  return json{{"grid", curve.grid},
              {"bias_proxy", curve.bias_proxy},
              {"var_proxy", curve.var_proxy},
              {"total", curve.total},
              {"c_hat", curve.c_hat},
              {"c0", curve.c0}};
}

} // namespace

std::string report_json(const FitResult& fit, const Dataset& data,
                        const RestrictionSystem& system,
                        const std::optional<BootstrapSummary>& bootstrap,
                        const RunProvenance& provenance) {
  json doc;
  doc["schema_version"] = kReportSchemaVersion;
  doc["provenance"] = provenance_to_json(provenance);
  doc["data"] = json{{"n", data.n()}, {"p", data.p()}, {"columns", data.column_names}};
  doc["estimates"] = json{{"unconstrained", vec_to_json(fit.theta_tilde)},
                          {"constrained", vec_to_json(fit.solution.theta)},
                          {"debiased", vec_to_json(fit.debiased.theta_db)},
                          {"bias_correction", vec_to_json(fit.debiased.bias_correction)},
                          {"se", vec_to_json(fit.debiased.se)},
                          {"ci_lower", vec_to_json(fit.debiased.ci_lower)},
                          {"ci_upper", vec_to_json(fit.debiased.ci_upper)},
                          {"level", fit.debiased.level}};
  doc["kkt"] = kkt_to_json(fit.solution);
  doc["risk"] = risk_to_json(fit.curve);
  doc["isp"] = isp_to_json(fit.isp, system.labels());
  doc["r_squared"] = json{{"unconstrained", fit.r2_unconstrained},
                          {"at_solution", fit.r2_at_solution},
                          {"debiased", fit.r2_debiased}};
  doc["variance"] = json{{"V1_diagonal", vec_to_json(fit.blocks.V1.diagonal())},
                         {"V3", fit.blocks.V3},
                         {"n", fit.blocks.scale_n},
                         {"active", fit.blocks.active}};
  doc["bootstrap"] = bootstrap ? bootstrap_to_json(*bootstrap) : json(nullptr);
  return doc.dump(2) + "\n";
}

std::string risk_curve_csv(const RiskCurve& curve) {
  std::string out = "c,bias,var,total\n";
  for (std::size_t i = 0; i < curve.grid.size(); ++i) {
    out += fmt(curve.grid[i]);
    out += ',';
    out += fmt(curve.bias_proxy[i]);
    out += ',';
    out += fmt(curve.var_proxy[i]);
    out += ',';
    out += fmt(curve.total[i]);
    out += '\n';
  }
  return out;
}

std::string isp_sorted_csv(const IspReport& isp, const std::vector<std::string>& labels,
                           const std::optional<BootstrapSummary>& bootstrap) {
  std::string out =
      "rank,restriction_index,label,isp,abs_isp,in_plateau_point,in_plateau_adjusted,"
      "cutoff_point,boundary_adjusted\n";
  const std::string cutoff_point = isp.cutoff ? std::to_string(*isp.cutoff) : "";
  const std::string boundary =
      bootstrap && bootstrap->cutoff_defined ? fmt(bootstrap->adjusted_boundary) : "";
  for (std::size_t r = 0; r < isp.order.size(); ++r) {
    const int j = isp.order[r];
    const bool in_point =
        std::find(isp.plateau_members.begin(), isp.plateau_members.end(), j) !=
        isp.plateau_members.end();
    const bool in_adjusted =
        bootstrap && std::find(bootstrap->plateau_members_adjusted.begin(),
                               bootstrap->plateau_members_adjusted.end(),
                               j) != bootstrap->plateau_members_adjusted.end();
    out += std::to_string(r + 1);
    out += ',';
    out += std::to_string(j);
    out += ',';
    out += labels[static_cast<std::size_t>(j)];
    out += ',';
    out += fmt(isp.isp[j]);
    out += ',';
    out += fmt(std::fabs(isp.isp[j]));
    out += ',';
    out += in_point ? '1' : '0';
    out += ',';
    out += in_adjusted ? '1' : '0';
    out += ',';
    out += cutoff_point;
    out += ',';
    out += boundary;
    out += '\n';
  }
  return out;
}

std::string bootstrap_summary_json(const BootstrapSummary& summary,
                                   const RunProvenance& provenance) {
  json doc;
  doc["schema_version"] = kReportSchemaVersion;
  doc["provenance"] = provenance_to_json(provenance);
  doc["bootstrap"] = bootstrap_to_json(summary);
  return doc.dump(2) + "\n";
}

std::string cutoff_histogram_csv(const BootstrapSummary& summary) {
  std::string out = "cutoff,count\n";
  for (const auto& [m, count] : summary.cutoff_histogram) {
    out += std::to_string(m);
    out += ',';
    out += std::to_string(count);
    out += '\n';
  }
  return out;
}

std::string study_table1_csv(const StudyResult& result) {
  std::string out = "row_type,name,mean,sd,extra\n";
  const auto p = result.mean_estimate.size();
  for (Eigen::Index k = 0; k < p; ++k) {
    out += "parameter,";
    out += result.parameter_names[static_cast<std::size_t>(k)];
    out += ',';
    out += fmt(result.mean_estimate[k]);
    out += ',';
    out += fmt(result.sd_estimate[k]);
    out += ',';
    out += fmt(result.mean_abs_bias[k]); // extra = |mean - truth|
    out += '\n';
  }
  for (Eigen::Index j = 0; j < result.mean_isp.size(); ++j) {
    out += "isp,";
    out += result.restriction_labels[static_cast<std::size_t>(j)];
    out += ',';
    out += fmt(result.mean_isp[j]);
    out += ',';
    out += fmt(result.sd_isp[j]);
    out += ',';
    out += fmt(result.plateau_frequency[j]); // extra = plateau membership frequency
    out += '\n';
  }
  const auto summary_row = [&out](const char* name, double mean, double sd) {
    out += "summary,";
    out += name;
    out += ',';
    out += fmt(mean);
    out += ',';
    out += fmt(sd);
    out += ",\n";
  };
  summary_row("lambda", result.lambda_mean, result.lambda_sd);
  summary_row("c_hat", result.c_hat_mean, result.c_hat_sd);
  summary_row("risk", result.risk_mean, result.risk_sd);
  summary_row("bias_proxy", result.bias_proxy_mean, result.bias_proxy_sd);
  summary_row("var_proxy", result.var_proxy_mean, result.var_proxy_sd);
  summary_row("r_squared", result.r2_mean, 0.0);
  return out;
}

std::string study_table2_csv(const StudyResult& result) {
  std::string out = "row_type,name,analytic,bootstrap\n";
  const bool has_boot = result.bootstrap_coverage.size() > 0;
  std::vector<double> analytic, boot;
  for (Eigen::Index k = 0; k < result.analytic_coverage.size(); ++k) {
    out += "parameter,";
    out += result.parameter_names[static_cast<std::size_t>(k)];
    out += ',';
    out += fmt(result.analytic_coverage[k]);
    out += ',';
    out += has_boot ? fmt(result.bootstrap_coverage[k]) : "";
    out += '\n';
    if (k >= 1) { // summary statistics over slope parameters
      analytic.push_back(result.analytic_coverage[k]);
      if (has_boot) boot.push_back(result.bootstrap_coverage[k]);
    }
  }
  auto quantile = [](std::vector<double> v, double prob) {
    std::sort(v.begin(), v.end());
    const double pos = prob * (static_cast<double>(v.size()) - 1.0);
    const auto lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + frac * (v[hi] - v[lo]);
  };
  const auto stat_row = [&](const char* name, double prob) {
    out += "statistic,";
    out += name;
    out += ',';
    out += fmt(quantile(analytic, prob));
    out += ',';
    out += has_boot ? fmt(quantile(boot, prob)) : "";
    out += '\n';
  };
  if (!analytic.empty()) {
    stat_row("minimum", 0.0);
    stat_row("q1", 0.25);
    stat_row("median", 0.5);
    out += "statistic,mean,";
    double am = 0.0, bm = 0.0;
    for (double v : analytic) am += v;
    am /= static_cast<double>(analytic.size());
    out += fmt(am);
    out += ',';
    if (has_boot) {
      for (double v : boot) bm += v;
      out += fmt(bm / static_cast<double>(boot.size()));
    }
    out += '\n';
    stat_row("q3", 0.75);
    stat_row("maximum", 1.0);
  }
  return out;
}

std::string study_figure1_csv(const StudyResult& result) {
  // Mean ISP sorted ascending with the cutoff distribution markers.
  std::vector<int> order(static_cast<std::size_t>(result.mean_isp.size()));
  for (std::size_t j = 0; j < order.size(); ++j) order[j] = static_cast<int>(j);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return std::fabs(result.mean_isp[a]) < std::fabs(result.mean_isp[b]);
  });
  std::string out = "rank,label,mean_isp,cutoff_mean,cutoff_lower,cutoff_upper\n";
  const std::string cm = result.cutoff_defined ? fmt(result.cutoff_mean) : "";
  const std::string cl =
      result.cutoff_defined ? fmt(result.cutoff_mean - result.cutoff_sd) : "";
  const std::string cu =
      result.cutoff_defined ? fmt(result.cutoff_mean + result.cutoff_sd) : "";
  for (std::size_t r = 0; r < order.size(); ++r) {
    const int j = order[r];
    out += std::to_string(r + 1);
    out += ',';
    out += result.restriction_labels[static_cast<std::size_t>(j)];
    out += ',';
    out += fmt(result.mean_isp[j]);
    out += ',';
    out += cm;
    out += ',';
    out += cl;
    out += ',';
    out += cu;
    out += '\n';
  }
  return out;
}

std::string solow_report_json(const SolowReport& report, const RunProvenance& provenance) {
  json doc;
  doc["schema_version"] = kReportSchemaVersion;
  doc["provenance"] = provenance_to_json(provenance);
  doc["n"] = report.n_obs;
  doc["columns"] = report.column_names;
  doc["unrestricted"] = json{{"theta", vec_to_json(report.theta_unrestricted)},
                             {"se", vec_to_json(report.se_unrestricted)},
                             {"r_squared", report.r2_unrestricted}};
  doc["restricted"] = json{{"theta", vec_to_json(report.theta_restricted)},
                           {"se", vec_to_json(report.se_restricted)},
                           {"r_squared", report.r2_restricted}};
  doc["soft"] = json{{"debiased", vec_to_json(report.fit.debiased.theta_db)},
                     {"se", vec_to_json(report.fit.debiased.se)},
                     {"constrained", vec_to_json(report.fit.solution.theta)},
                     {"c_hat", report.fit.curve.c_hat},
                     {"c0", report.fit.curve.c0},
                     {"lambda", report.fit.solution.lambda},
                     {"risk", report.fit.curve.total[report.fit.curve.c_hat_index]},
                     {"bias_proxy", report.fit.curve.bias_proxy[report.fit.curve.c_hat_index]},
                     {"var_proxy", report.fit.curve.var_proxy[report.fit.curve.c_hat_index]},
                     {"r_squared", report.fit.r2_debiased}};
  doc["wald_linear"] =
      json{{"statistic", report.wald_linear.statistic}, {"p_value", report.wald_linear.p_value}};
  doc["isp"] = isp_to_json(report.fit.isp, report.restriction_labels);
  doc["bootstrap"] = report.bootstrap ? bootstrap_to_json(*report.bootstrap) : json(nullptr);
  return doc.dump(2) + "\n";
}

std::string solow_table_csv(const SolowReport& report) {
  std::string out = "row_type,name,unrestricted,restricted,soft_debiased\n";
  const auto p = report.theta_unrestricted.size();
  for (Eigen::Index k = 0; k < p; ++k) {
    out += "coefficient,";
    out += report.column_names[static_cast<std::size_t>(k)];
    out += ',';
    out += fmt(report.theta_unrestricted[k]);
    out += ',';
    out += fmt(report.theta_restricted[k]);
    out += ',';
    out += fmt(report.fit.debiased.theta_db[k]);
    out += '\n';
    out += "se,";
    out += report.column_names[static_cast<std::size_t>(k)];
    out += ',';
    out += fmt(report.se_unrestricted[k]);
    out += ',';
    out += fmt(report.se_restricted[k]);
    out += ',';
    out += fmt(report.fit.debiased.se[k]);
    out += '\n';
  }
  out += "r_squared,,";
  out += fmt(report.r2_unrestricted);
  out += ',';
  out += fmt(report.r2_restricted);
  out += ',';
  out += fmt(report.fit.r2_debiased);
  out += '\n';
  out += "wald,statistic,";
  out += fmt(report.wald_linear.statistic);
  out += ",,\n";
  out += "wald,p_value,";
  out += fmt(report.wald_linear.p_value);
  out += ",,\n";
  for (std::size_t j = 0; j < report.restriction_labels.size(); ++j) {
    const bool in_plateau =
        report.bootstrap
            ? std::find(report.bootstrap->plateau_members_adjusted.begin(),
                        report.bootstrap->plateau_members_adjusted.end(),
                        static_cast<int>(j)) != report.bootstrap->plateau_members_adjusted.end()
            : std::find(report.fit.isp.plateau_members.begin(),
                        report.fit.isp.plateau_members.end(),
                        static_cast<int>(j)) != report.fit.isp.plateau_members.end();
    out += "restriction,";
    out += report.restriction_labels[j];
    out += ',';
    out += fmt(report.fit.isp.isp[static_cast<Eigen::Index>(j)]);
    out += ',';
    out += in_plateau ? '1' : '0';
    out += ",\n";
  }
  out += "tolerance,c_hat,";
  out += fmt(report.fit.curve.c_hat);
  out += ",,\n";
  out += "tolerance,risk,";
  out += fmt(report.fit.curve.total[report.fit.curve.c_hat_index]);
  out += ",,\n";
  return out;
}

} // namespace softrestrict
