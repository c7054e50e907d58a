#include "mtse/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "mtse/config_json.hpp"
#include "mtse/csv_io.hpp"

namespace mtse {

namespace {

namespace fs = std::filesystem;

Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path() && !fs::exists(path.parent_path())) {
    throw InputError("output directory does not exist: " + path.parent_path().string());
  }
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

fs::path with_suffix(const fs::path& path, const std::string& suffix) {
  fs::path out = path;
  out.replace_extension();
  out += suffix;
  return out;
}

std::chrono::year_month parse_month(const std::string& text, const std::string& flag) {
  int y = 0;
  unsigned m = 0;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%4d-%2u%c", &y, &m, &tail) != 2 || m < 1 || m > 12) {
    throw InputError(flag + ": expected YYYY-MM, got '" + text + "'");
  }
  return std::chrono::year_month{std::chrono::year{y}, std::chrono::month{m}};
}

struct EstimateArgs {
  std::string data;
  std::string mean = "unknown";
  std::string mu;
  std::string targets;
  std::string out;
  std::string matrix_out;
  std::string config;
};

int run_estimate(const EstimateArgs& a, std::ostream& out) {
  Tolerances tol;
  Json config_echo = Json::object();
  if (!a.config.empty()) {
    const Json cfg = read_json(a.config);
    if (cfg.contains("tolerances")) tol = tolerances_from_json(cfg.at("tolerances"));
  }
  // One observation per CSV row; the library wants one per column.
  const Eigen::MatrixXd rows = csv::read_matrix(fs::path(a.data));
  const Eigen::MatrixXd data = rows.transpose();
  const Eigen::Index p = data.rows();

  std::optional<ObservationMatrix> x;
  if (a.mean == "known") {
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(p);
    if (!a.mu.empty()) {
      const Eigen::MatrixXd m = csv::read_matrix(fs::path(a.mu));
      if (m.size() != p) {
        throw InputError("--mu: expected " + std::to_string(p) + " values, got " +
                         std::to_string(m.size()));
      }
      mu = Eigen::Map<const Eigen::VectorXd>(m.data(), p);
    }
    x.emplace(data, mu);
  } else if (a.mean == "unknown") {
    if (!a.mu.empty()) throw InputError("--mu: only valid with --mean known");
    x.emplace(data);
  } else {
    throw InputError("--mean: expected known or unknown, got '" + a.mean + "'");
  }

  Json target_spec = Json{{"kind", "identity"}};
  fs::path target_base = fs::current_path();
  if (!a.targets.empty()) {
    target_spec = read_json(a.targets);
    target_base = fs::path(a.targets).parent_path();
  }
  const TargetSet targets = targets_from_json(target_spec, p, target_base);
  const ShrinkageResult result = mtse(*x, targets, tol);

  const fs::path out_path(a.out);
  const fs::path matrix_path = a.matrix_out.empty() ? with_suffix(out_path, ".matrix.csv")
                                                    : fs::path(a.matrix_out);
  {
    auto m = open_out(matrix_path);
    csv::write_matrix(m, result.estimate.matrix());
  }
  Json doc{{"config",
            {{"data", a.data},
             {"mean", a.mean},
             {"mu", a.mu.empty() ? Json(nullptr) : Json(a.mu)},
             {"targets", target_spec},
             {"tolerances", to_json(tol)}}},
           {"p", p},
           {"n", x->n()},
           {"targets", {{"provenance", targets.provenance()}, {"count", targets.size()}}},
           {"result", to_json(result)},
           {"min_eigenvalue", min_eigenvalue(result.estimate)},
           {"matrix_csv", matrix_path.string()}};
  auto o = open_out(out_path);
  o << doc.dump(2) << '\n';
  out << "estimate: c0=" << result.c0 << " targets=" << targets.size()
      << (result.fallback_used ? " (fallback to S)" : "") << " -> " << out_path.string() << '\n';
  return kExitOk;
}

struct SimulateArgs {
  std::string config;
  std::string out;
  std::string json_out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

int run_simulate(const SimulateArgs& a, std::ostream& out) {
  const fs::path cfg_path(a.config);
  Json j = read_json(cfg_path);
  if (!j.is_object()) throw InputError("config: expected a JSON object");
  if (!j.contains("seed")) j["seed"] = kDefaultSeed;
  if (a.seed) j["seed"] = *a.seed;
  if (a.threads) j["threads"] = *a.threads;
  const ExperimentConfig config = experiment_config_from_json(j, cfg_path.parent_path());
  const ExperimentReport report = run_experiment(config);

  const fs::path csv_path(a.out);
  {
    auto o = open_out(csv_path);
    write_report_csv(report, o);
  }
  const fs::path json_path = a.json_out.empty() ? with_suffix(csv_path, ".json") : fs::path(a.json_out);
  {
    auto o = open_out(json_path);
    o << to_json(report).dump(2) << '\n';
  }
  out << "simulate: " << config.name << ", " << report.rows.size() << " rows in "
      << report.wall_seconds << " s -> " << csv_path.string() << '\n';
  return kExitOk;
}

struct BacktestArgs {
  std::string prices;
  std::string sectors;
  std::vector<int> windows{3};
  std::vector<std::string> estimators{"mtse-sectors"};
  std::string out;
  std::string first_month;
  std::string last_month;
  bool biased_variance = false;
};

int run_backtest_cmd(const BacktestArgs& a, std::ostream& out) {
  const ReturnsPanel panel = ingest_prices(fs::path(a.prices), fs::path(a.sectors));
  std::vector<std::string> names = a.estimators;
  if (std::find(names.begin(), names.end(), "all") != names.end()) {
    names = {"sample", "lw", "mtse-sectors"};
  }
  std::vector<BacktestReport> reports;
  for (const auto& name : names) {
    const BacktestEstimator estimator = parse_backtest_estimator(name);
    for (int k : a.windows) {
      BacktestConfig config;
      config.window_months = k;
      config.estimator = estimator;
      config.unbiased_variance = !a.biased_variance;
      if (!a.first_month.empty()) config.first_month = parse_month(a.first_month, "--first-month");
      if (!a.last_month.empty()) config.last_month = parse_month(a.last_month, "--last-month");
      reports.push_back(run_backtest(panel, config));
    }
  }
  const fs::path csv_path(a.out);
  {
    auto o = open_out(csv_path);
    write_backtest_months_csv(reports, o);
  }
  {
    auto o = open_out(with_suffix(csv_path, ".summary.csv"));
    write_backtest_summary_csv(reports, o);
  }
  Json runs = Json::array();
  for (const auto& r : reports) runs.push_back(to_json(r));
  Json doc{{"config",
            {{"prices", a.prices},
             {"sectors", a.sectors},
             {"K", a.windows},
             {"estimators", names},
             {"unbiased_variance", !a.biased_variance}}},
           {"assets", panel.assets.size()},
           {"dropped_assets", panel.dropped_assets},
           {"warnings", panel.warnings},
           {"runs", runs}};
  {
    auto o = open_out(with_suffix(csv_path, ".json"));
    o << doc.dump(2) << '\n';
  }
  for (const auto& w : panel.warnings) out << "warning: " << w << '\n';
  for (const auto& r : reports) {
    out << "backtest: " << to_string(r.config.estimator) << " K=" << r.config.window_months
        << " cumulative_variance=" << r.cumulative_variance << '\n';
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-target shrinkage covariance estimation and experiments", "mtse"};
  app.require_subcommand(1);

  EstimateArgs est;
  auto* estimate = app.add_subcommand("estimate", "Fit the shrinkage estimator to a data matrix");
  estimate->add_option("--data", est.data, "CSV, one observation per row")->required();
  estimate->add_option("--mean", est.mean, "known | unknown")->default_val("unknown");
  estimate->add_option("--mu", est.mu, "CSV with the known mean (default 0)");
  estimate->add_option("--targets", est.targets, "JSON target spec (default identity)");
  estimate->add_option("--out", est.out, "Result JSON")->required();
  estimate->add_option("--matrix-out", est.matrix_out, "Estimated matrix CSV");
  estimate->add_option("--config", est.config, "JSON with tolerance overrides");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run a Monte-Carlo PRIAL study");
  simulate->add_option("--config", sim.config, "Experiment JSON")->required();
  simulate->add_option("--out", sim.out, "Report CSV")->required();
  simulate->add_option("--json-out", sim.json_out, "Report JSON (default <out>.json)");
  simulate->add_option("--seed", sim.seed, "Root seed (overrides the config)");
  simulate->add_option("--threads", sim.threads, "Worker threads, 0 = all cores");

  BacktestArgs bt;
  auto* backtest = app.add_subcommand("backtest", "GMV portfolio backtest");
  backtest->add_option("--prices", bt.prices, "Prices CSV")->required();
  backtest->add_option("--sectors", bt.sectors, "Sectors CSV")->required();
  backtest->add_option("--K", bt.windows, "Fitting window(s) in months")->delimiter(',');
  backtest->add_option("--estimator", bt.estimators, "sample | lw | mtse-sectors | all")
      ->delimiter(',');
  backtest->add_option("--out", bt.out, "Monthly CSV")->required();
  backtest->add_option("--first-month", bt.first_month, "First evaluated month YYYY-MM");
  backtest->add_option("--last-month", bt.last_month, "Last evaluated month YYYY-MM");
  backtest->add_flag("--biased-variance", bt.biased_variance, "Divide v_T by days, not days - 1");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  }

  try {
    if (*estimate) return run_estimate(est, out);
    if (*simulate) return run_simulate(sim, out);
    return run_backtest_cmd(bt, out);
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumericalError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  }
}

}  // namespace mtse
