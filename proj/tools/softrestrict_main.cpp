// Command-line front end: fit / simulate / solow / bootstrap subcommands
// over JSON configs, with all randomness flowing from a single seed.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "softrestrict/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace softrestrict;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<int> bootstrap_B;
  std::optional<double> level;
};

void add_common_options(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "JSON configuration file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", args.out_dir, "Output directory")
      ->envname("SOFTRESTRICT_OUT");
  cmd->add_option("--seed", args.seed, "Root seed (overrides config)");
  cmd->add_option("--workers", args.workers, "Worker threads (overrides config)")
      ->envname("SOFTRESTRICT_WORKERS");
  cmd->add_option("--bootstrap", args.bootstrap_B, "Bootstrap replications (overrides config)");
  cmd->add_option("--level", args.level, "Confidence level (overrides config)");
}

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config '" + path + "'");
  json doc;
  in >> doc;
  return doc;
}

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << contents;
}

double require_positive(const json& cfg, const char* key, double fallback) {
  const double v = cfg.value(key, fallback);
  if (!(v > 0.0)) throw std::invalid_argument(std::string("config: ") + key + " must be positive");
  return v;
}

Eigen::MatrixXd sigma_from_config(const json& cfg, int q) {
  if (!cfg.contains("sigma") || (cfg["sigma"].is_string() && cfg["sigma"] == "identity"))
    return Eigen::MatrixXd::Identity(q, q);
  const json& spec = cfg["sigma"];
  if (spec.is_object() && spec.contains("diagonal")) {
    const auto diag = spec["diagonal"].get<std::vector<double>>();
    if (static_cast<int>(diag.size()) != q)
      throw std::invalid_argument("config: sigma diagonal size differs from restriction count");
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(q, q);
    for (int j = 0; j < q; ++j) sigma(j, j) = diag[static_cast<std::size_t>(j)];
    return sigma;
  }
  if (spec.is_object() && spec.contains("matrix")) {
    const auto rows = spec["matrix"].get<std::vector<std::vector<double>>>();
    if (static_cast<int>(rows.size()) != q)
      throw std::invalid_argument("config: sigma matrix size differs from restriction count");
    Eigen::MatrixXd sigma(q, q);
    for (int i = 0; i < q; ++i) {
      if (static_cast<int>(rows[static_cast<std::size_t>(i)].size()) != q)
        throw std::invalid_argument("config: sigma matrix is not square");
      for (int j = 0; j < q; ++j) sigma(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    return sigma;
  }
  throw std::invalid_argument("config: sigma must be \"identity\", {\"diagonal\":[...]} or {\"matrix\":[[...]]}");
}

struct FitSettings {
  Dataset data;
  RestrictionSystem system;
  PipelineConfig pipeline;
  BootstrapConfig bootstrap;
  RunProvenance provenance;
  int bootstrap_B = 0;
};

FitSettings parse_fit_config(const json& cfg, const CommonArgs& args) {
  if (!cfg.contains("data") || !cfg["data"].contains("csv"))
    throw std::invalid_argument("config: data.csv is required");
  const std::string csv = cfg["data"]["csv"].get<std::string>();
  if (!fs::exists(csv)) throw std::invalid_argument("config: data file '" + csv + "' not found");
  const std::string outcome = cfg["data"].value("outcome", "y");
  const bool add_intercept = cfg["data"].value("add_intercept", true);

  if (!cfg.contains("restrictions") || !cfg["restrictions"].is_array() ||
      cfg["restrictions"].empty())
    throw std::invalid_argument("config: restrictions must be a non-empty array");

  PipelineConfig pipeline;
  pipeline.c0 = require_positive(cfg, "c0", 1.0);
  pipeline.grid_size = cfg.value("grid_size", 50);
  if (pipeline.grid_size < 2) throw std::invalid_argument("config: grid_size must be >= 2");
  pipeline.level = args.level.value_or(cfg.value("level", 0.95));
  if (!(pipeline.level > 0.0 && pipeline.level < 1.0))
    throw std::invalid_argument("config: level must lie in (0,1)");
  pipeline.screen_level = cfg.value("screen_level", 0.05);
  if (!(pipeline.screen_level > 0.0 && pipeline.screen_level < 1.0))
    throw std::invalid_argument("config: screen_level must lie in (0,1)");

  BootstrapConfig bootstrap;
  int B = 0;
  std::string law = "rademacher";
  if (cfg.contains("bootstrap")) {
    B = cfg["bootstrap"].value("B", 0);
    law = cfg["bootstrap"].value("multiplier", "rademacher");
  }
  if (args.bootstrap_B) B = *args.bootstrap_B;
  if (B < 0) throw std::invalid_argument("config: bootstrap B must be >= 0");
  bootstrap.B = B;
  bootstrap.law = multiplier_law_from_string(law);
  bootstrap.level = pipeline.level;
  bootstrap.seed = args.seed.value_or(cfg.value("seed", 1ull));
  bootstrap.workers = args.workers.value_or(cfg.value("workers", 1));

  // Data loads after every config field has been validated.
  Dataset data = Dataset::from_csv(csv, outcome, add_intercept);
  std::vector<RestrictionExpr> exprs;
  std::vector<std::string> labels;
  for (const auto& text : cfg["restrictions"]) {
    labels.push_back(text.get<std::string>());
    exprs.push_back(RestrictionExpr::parse(labels.back(), data.p()));
  }
  const int q = static_cast<int>(exprs.size());
  RestrictionSystem system(std::move(exprs), sigma_from_config(cfg, q), std::move(labels));

  RunProvenance prov;
  prov.c0 = pipeline.c0;
  prov.grid_size = pipeline.grid_size;
  prov.level = pipeline.level;
  prov.screen_level = pipeline.screen_level;
  prov.seed = bootstrap.seed;
  prov.workers = bootstrap.workers;
  prov.bootstrap_B = B;
  prov.multiplier_law = to_string(bootstrap.law);
  prov.solver = pipeline.solver;

  return FitSettings{std::move(data), std::move(system), pipeline, bootstrap, prov, B};
}

fs::path resolve_out_dir(const json& cfg, const CommonArgs& args) {
  std::string dir = args.out_dir.empty() ? cfg.value("out_dir", "out") : args.out_dir;
  fs::path path(dir);
  fs::create_directories(path);
  return path;
}

int cmd_fit(const CommonArgs& args, bool bootstrap_command) {
  const json cfg = load_config(args.config_path);
  FitSettings settings = parse_fit_config(cfg, args);
  if (bootstrap_command && settings.bootstrap_B < 1)
    throw std::invalid_argument("bootstrap command requires bootstrap B >= 1");
  const fs::path out_dir = resolve_out_dir(cfg, args);

  const FitResult fit = run_pipeline(settings.data, settings.system, settings.pipeline);
  std::optional<BootstrapSummary> bootstrap;
  if (settings.bootstrap_B > 0)
    bootstrap = run_bootstrap(settings.data, settings.system, fit, settings.bootstrap,
                              settings.pipeline);

  write_file(out_dir / "report.json",
             report_json(fit, settings.data, settings.system, bootstrap, settings.provenance));
  write_file(out_dir / "risk_curve.csv", risk_curve_csv(fit.curve));
  write_file(out_dir / "isp_sorted.csv",
             isp_sorted_csv(fit.isp, settings.system.labels(), bootstrap));
  if (bootstrap) {
    write_file(out_dir / "bootstrap_summary.json",
               bootstrap_summary_json(*bootstrap, settings.provenance));
    write_file(out_dir / "cutoff_histogram.csv", cutoff_histogram_csv(*bootstrap));
  }
  std::cout << "wrote " << (out_dir / "report.json").string() << "\n";
  return 0;
}

int cmd_simulate(const CommonArgs& args) {
  const json cfg = load_config(args.config_path);
  ScenarioSpec spec = cfg.contains("case") ? ScenarioSpec::preset(cfg["case"].get<int>())
                                           : ScenarioSpec::preset(1);
  if (cfg.contains("n")) spec.n = cfg["n"].get<int>();
  if (cfg.contains("rho")) spec.rho = cfg["rho"].get<double>();
  if (cfg.contains("target_snr")) spec.target_snr = cfg["target_snr"].get<double>();
  if (cfg.contains("theta0")) {
    const auto v = cfg["theta0"].get<std::vector<double>>();
    spec.theta0 = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    spec.p_slopes = static_cast<int>(v.size()) - 1;
  }
  if (cfg.contains("restrictions"))
    spec.restrictions = cfg["restrictions"].get<std::vector<std::string>>();
  if (cfg.contains("c0")) spec.c0 = cfg["c0"].get<double>();
  if (cfg.contains("grid_size")) spec.grid_size = cfg["grid_size"].get<int>();
  if (cfg.contains("iterations")) spec.iterations = cfg["iterations"].get<int>();
  spec.seed = args.seed.value_or(cfg.value("seed", 1ull));
  spec.level = args.level.value_or(cfg.value("level", 0.95));
  spec.screen_level = cfg.value("screen_level", 0.05);
  spec.bootstrap_B = args.bootstrap_B.value_or(
      cfg.contains("bootstrap") ? cfg["bootstrap"].value("B", 0) : 0);
  if (cfg.contains("bootstrap") && cfg["bootstrap"].contains("multiplier"))
    spec.law = multiplier_law_from_string(cfg["bootstrap"]["multiplier"].get<std::string>());
  spec.workers = args.workers.value_or(cfg.value("workers", 1));
  spec.validate();

  const fs::path out_dir = resolve_out_dir(cfg, args);
  const StudyResult result = run_study(spec);
  write_file(out_dir / "table1.csv", study_table1_csv(result));
  write_file(out_dir / "table2.csv", study_table2_csv(result));
  write_file(out_dir / "figure1.csv", study_figure1_csv(result));
  std::cout << "wrote " << (out_dir / "table1.csv").string() << "\n";
  return 0;
}

int cmd_solow(const CommonArgs& args) {
  const json cfg = load_config(args.config_path);
  SolowConfig config;
  if (!cfg.contains("data") || !cfg["data"].contains("csv"))
    throw std::invalid_argument("config: data.csv is required");
  config.csv_path = cfg["data"]["csv"].get<std::string>();
  if (!fs::exists(config.csv_path))
    throw std::invalid_argument("config: data file '" + config.csv_path + "' not found");
  config.col_output = cfg["data"].value("output", "y");
  config.col_saving = cfg["data"].value("saving", "s");
  config.col_popgrowth = cfg["data"].value("popgrowth", "n");
  config.g_plus_delta = cfg.value("g_plus_delta", 0.05);
  if (cfg.contains("tau_list")) config.tau_list = cfg["tau_list"].get<std::vector<int>>();
  config.c0 = require_positive(cfg, "c0", 500.0);
  config.grid_size = cfg.value("grid_size", 50);
  config.level = args.level.value_or(cfg.value("level", 0.95));
  config.screen_level = cfg.value("screen_level", 0.05);
  config.bootstrap_B = args.bootstrap_B.value_or(
      cfg.contains("bootstrap") ? cfg["bootstrap"].value("B", 0) : 0);
  if (cfg.contains("bootstrap") && cfg["bootstrap"].contains("multiplier"))
    config.law = multiplier_law_from_string(cfg["bootstrap"]["multiplier"].get<std::string>());
  config.seed = args.seed.value_or(cfg.value("seed", 1ull));
  config.workers = args.workers.value_or(cfg.value("workers", 1));

  RunProvenance prov;
  prov.c0 = config.c0;
  prov.grid_size = config.grid_size;
  prov.level = config.level;
  prov.screen_level = config.screen_level;
  prov.seed = config.seed;
  prov.workers = config.workers;
  prov.bootstrap_B = config.bootstrap_B;
  prov.multiplier_law = to_string(config.law);

  const fs::path out_dir = resolve_out_dir(cfg, args);
  const SolowReport report = run_solow(config);
  write_file(out_dir / "solow_report.json", solow_report_json(report, prov));
  write_file(out_dir / "solow_table.csv", solow_table_csv(report));
  write_file(out_dir / "risk_curve.csv", risk_curve_csv(report.fit.curve));
  write_file(out_dir / "isp_sorted.csv",
             isp_sorted_csv(report.fit.isp, report.restriction_labels, report.bootstrap));
  std::cout << "wrote " << (out_dir / "solow_report.json").string() << "\n";
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained M-estimation under model uncertainty"};
  app.require_subcommand(1);

  CommonArgs fit_args, sim_args, solow_args, boot_args;
  CLI::App* fit = app.add_subcommand("fit", "Fit a dataset under soft restrictions");
  add_common_options(fit, fit_args);
  CLI::App* simulate = app.add_subcommand("simulate", "Run a Monte Carlo study");
  add_common_options(simulate, sim_args);
  CLI::App* solow = app.add_subcommand("solow", "Growth-regression application");
  add_common_options(solow, solow_args);
  CLI::App* bootstrap = app.add_subcommand("bootstrap", "Fit plus wild bootstrap summary");
  add_common_options(bootstrap, boot_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (fit->parsed()) return cmd_fit(fit_args, false);
    if (simulate->parsed()) return cmd_simulate(sim_args);
    if (solow->parsed()) return cmd_solow(solow_args);
    if (bootstrap->parsed()) return cmd_fit(boot_args, true);
  } catch (const ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const SolverError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
