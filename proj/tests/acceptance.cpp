// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "mtse/backtest.hpp"
#include "mtse/estimators.hpp"
#include "mtse/sampling.hpp"
#include "mtse/simulation.hpp"
#include "oracles.hpp"
#include "synthetic_market.hpp"
#include "test_helpers.hpp"

namespace {

using namespace mtse;
using mtse::testing::random_spd;
using mtse::testing::random_symmetric;
using mtse::testing::random_unit_target;

// Tolerances.
constexpr double kOracleCoefTol = 1e-10;
constexpr double kResidualTol = 1e-9;
constexpr double kUnbiasedSigmas = 3.0;
constexpr int kUnbiasedReps = 100000;
constexpr double kFastTrickRelTol = 1e-8;
constexpr double kTranslationTol = 1e-10;
constexpr int kPrialReps = 2000;
constexpr double kGapSigmas = 2.0;
constexpr int kHeavyTailReps = 500;
constexpr double kBacktestRelTol = 0.10;
constexpr double kWeightSumTol = 1e-10;
constexpr double kScaleTol = 1e-10;
constexpr double kPsdFloor = -1e-10;
constexpr std::uint64_t kSeed = 20240601;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double g_min_eigenvalue = std::numeric_limits<double>::infinity();

void record_eigen(double e) {
  if (!std::isnan(e)) g_min_eigenvalue = std::min(g_min_eigenvalue, e);
}

void record_eigen(const SymMatrix& m) { record_eigen(min_eigenvalue(m)); }

void record_report(const ExperimentReport& r) {
  for (const auto& row : r.rows) record_eigen(row.min_eigenvalue);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

// 1. Closed-form oracle coefficients vs the normal equations.
Outcome oracle_correctness() {
  RandomStream rng(kSeed + 1);
  double worst_coef = 0.0;
  double worst_resid = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index p = 4 + static_cast<Eigen::Index>(rng() % 9);
    const int count = 1 + static_cast<int>(rng() % 4);
    const Eigen::Index n = p / 2 + 2 + static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(2 * p));
    const SymMatrix sigma = random_spd(p, rng);
    const ObservationMatrix x = sample_gaussian(sigma, n, rng);
    const SymMatrix s = sample_covariance(x);
    std::vector<SymMatrix> raw;
    for (int k = 0; k < count; ++k) raw.push_back(random_symmetric(p, rng));
    const TargetSet targets = TargetSet::orthonormalize(raw, "random");
    const ShrinkageResult r = oracle_mtse(s, targets, sigma);
    record_eigen(r.estimate);

    std::vector<Eigen::MatrixXd> ts;
    for (const auto& t : targets.members()) ts.push_back(t.matrix());
    const Eigen::VectorXd c = oracle::normal_equations(s.matrix(), ts, sigma.matrix());
    worst_coef = std::max(worst_coef, std::abs(r.c0 - c(0)));
    for (std::size_t k = 0; k < targets.size(); ++k) {
      worst_coef = std::max(worst_coef, std::abs(r.c_targets[k] - c(static_cast<Eigen::Index>(k) + 1)));
    }
    const SymMatrix residual = r.unprojected - sigma;
    worst_resid = std::max(worst_resid, std::abs(scaled_inner(residual, s)));
    for (const auto& t : targets.members()) {
      worst_resid = std::max(worst_resid, std::abs(scaled_inner(residual, t)));
    }
  }
  return {worst_coef <= kOracleCoefTol && worst_resid <= kResidualTol,
          fmt("100 instances, max coef diff %.2e (tol %.0e), max residual inner %.2e (tol %.0e)",
              worst_coef, kOracleCoefTol, worst_resid, kResidualTol)};
}

// 2. Unbiasedness of the variance estimators (paired against the realized squared errors).
Outcome unbiasedness() {
  struct Case {
    Eigen::Index p, n;
    bool student;
    MeanMode mode;
  };
  std::vector<Case> cases;
  for (auto [p, n] : {std::pair<Eigen::Index, Eigen::Index>{4, 10}, {8, 16}}) {
    for (bool student : {false, true}) {
      for (MeanMode mode : {MeanMode::Known, MeanMode::Unknown}) cases.push_back({p, n, student, mode});
    }
  }
  bool pass = true;
  double worst_z = 0.0;
  std::ostringstream failures;
  for (std::size_t ci = 0; ci < cases.size(); ++ci) {
    const Case& c = cases[ci];
    RandomStream setup = RandomStream::derive(kSeed + 2, ci);
    const SymMatrix sigma = random_spd(c.p, setup);
    const SymMatrix t = random_unit_target(c.p, setup);
    const ComplexSqrtFactor root = complex_sqrt_factor(t);
    const Eigen::VectorXd mu = Eigen::VectorXd::LinSpaced(c.p, -1.0, 2.0);
    double sum_s = 0.0, sum_s2 = 0.0, sum_t = 0.0, sum_t2 = 0.0;
    RandomStream rng = RandomStream::derive(kSeed + 2, ci, 1);
    for (int rep = 0; rep < kUnbiasedReps; ++rep) {
      const ObservationMatrix zero_mean =
          c.student ? sample_multivariate_t(sigma, 9.0, c.n, rng) : sample_gaussian(sigma, c.n, rng);
      const Eigen::MatrixXd data = zero_mean.data().colwise() + mu;
      const ObservationMatrix x = c.mode == MeanMode::Known ? ObservationMatrix(data, mu)
                                                            : ObservationMatrix(data);
      const SymMatrix s = sample_covariance(x);
      const SymMatrix err = s - sigma;
      const double ds = vhat_S(x, s) - scaled_norm_sq(err);
      const double proj = scaled_inner(err, t);
      const double dt = vhat_proj(x, s, t, root) - proj * proj;
      sum_s += ds;
      sum_s2 += ds * ds;
      sum_t += dt;
      sum_t2 += dt * dt;
    }
    const double reps = kUnbiasedReps;
    auto z = [&](double sum, double sum2) {
      const double mean = sum / reps;
      const double se = std::sqrt((sum2 / reps - mean * mean) / (reps - 1.0));
      return std::abs(mean) / se;
    };
    const double zs = z(sum_s, sum_s2);
    const double zt = z(sum_t, sum_t2);
    worst_z = std::max({worst_z, zs, zt});
    if (zs > kUnbiasedSigmas || zt > kUnbiasedSigmas) {
      pass = false;
      failures << " [p=" << c.p << " n=" << c.n << (c.student ? " t9" : " gauss")
               << (c.mode == MeanMode::Known ? " known" : " unknown") << " z_S=" << zs
               << " z_proj=" << zt << "]";
    }
  }
  return {pass, fmt("8 configurations x %.0f replications, max |bias|/SE %.2f (limit %.0f)",
                    kUnbiasedReps, worst_z, kUnbiasedSigmas) +
                    failures.str()};
}

// 3. Complex square-root quadratic forms vs the explicit double loop.
Outcome fast_trick() {
  RandomStream rng(kSeed + 3);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index p = 3 + static_cast<Eigen::Index>(rng() % 20);
    const SymMatrix t = random_unit_target(p, rng);
    const Eigen::MatrixXd raw = standard_normal_matrix(p, 15, rng);
    const Eigen::MatrixXd cols = raw.colwise() - raw.rowwise().mean();
    const Eigen::VectorXd fast = quadratic_forms(cols, complex_sqrt_factor(t));
    const Eigen::VectorXd naive = quadratic_forms_naive(cols, t);
    const double total_fast = fast.squaredNorm();
    const double total_naive = naive.squaredNorm();
    worst = std::max(worst, std::abs(total_fast - total_naive) / total_naive);
    worst = std::max(worst, (fast - naive).cwiseAbs().maxCoeff() / naive.cwiseAbs().maxCoeff());
  }
  return {worst <= kFastTrickRelTol,
          fmt("100 indefinite targets, max relative diff %.2e (tol %.0e)", worst, kFastTrickRelTol)};
}

// 4. Unknown-mean MTSE is unchanged by adding a constant vector to every observation.
Outcome translation_invariance() {
  RandomStream rng(kSeed + 4);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index p = 3 + static_cast<Eigen::Index>(rng() % 10);
    const Eigen::Index n = 4 + static_cast<Eigen::Index>(rng() % 20);
    const Eigen::MatrixXd data = standard_normal_matrix(p, n, rng);
    const Eigen::VectorXd shift = 5.0 * standard_normal_matrix(p, 1, rng);
    std::vector<SymMatrix> raw{SymMatrix::identity(p)};
    for (int k = 0; k < 2; ++k) raw.push_back(random_symmetric(p, rng));
    const TargetSet targets = TargetSet::orthonormalize(raw, "random");
    const ShrinkageResult a = mtse::mtse(ObservationMatrix(data), targets);
    const ShrinkageResult b = mtse::mtse(ObservationMatrix(Eigen::MatrixXd(data.colwise() + shift)), targets);
    record_eigen(a.estimate);
    record_eigen(b.estimate);
    const double scale = std::max(1.0, scaled_norm(a.estimate));
    worst = std::max(worst, scaled_norm(a.estimate - b.estimate) / scale);
    worst = std::max(worst, std::abs(a.c0 - b.c0));
  }
  return {worst <= kTranslationTol,
          fmt("50 cases, max difference %.2e (tol %.0e)", worst, kTranslationTol)};
}

// Reports kept for the determinism rerun.
struct StudyRun {
  ExperimentConfig config;
  std::string csv;
};
std::vector<StudyRun> g_studies;

ExperimentReport run_study(ExperimentConfig config) {
  config.seed = kSeed;
  config.threads = 1;
  ExperimentReport report = run_experiment(config);
  record_report(report);
  std::ostringstream csv;
  write_report_csv(report, csv);
  g_studies.push_back({config, csv.str()});
  return report;
}

double independent_se(const ReportRow& a, const ReportRow& b) {
  return std::sqrt(a.prial_stderr * a.prial_stderr + b.prial_stderr * b.prial_stderr);
}

// Gap in paired standard errors, with the independent-samples ratio alongside.
std::string describe_gap(const std::string& label, const PrialGap& g, double indep) {
  std::ostringstream out;
  out.precision(3);
  out << label << " gap " << g.gap << " = " << g.gap / g.standard_error << " paired SE ("
      << g.gap / indep << " independent SE)";
  return out.str();
}

// 5. Aligned targets beat misaligned targets, which beat the identity alone.
Outcome alignment_ordering() {
  const auto aligned = run_study(experiment_target_alignment(false, kPrialReps));
  const auto misaligned = run_study(experiment_target_alignment(true, kPrialReps));
  const ReportRow& s = aligned.row(kSampleSeries, 10);
  if (s.losses != misaligned.row(kSampleSeries, 10).losses) {
    return {false, "aligned and misaligned studies did not share their draws"};
  }
  const ReportRow& a = aligned.row(kMtseSeries, 10);
  const ReportRow& m = misaligned.row(kMtseSeries, 10);
  const ReportRow& lw = aligned.row(kLedoitWolfSeries, 10);
  const PrialGap g1 = paired_prial_gap(a, m, s);
  const PrialGap g2 = paired_prial_gap(m, lw, s);
  const bool pass = g1.gap > kGapSigmas * g1.standard_error &&
                    g2.gap > kGapSigmas * g2.standard_error && lw.prial > 0.0;
  std::ostringstream out;
  out.precision(4);
  out << "PRIAL k=10 aligned " << a.prial << ", misaligned " << m.prial << ", LW " << lw.prial
      << "; " << describe_gap("aligned-misaligned", g1, independent_se(a, m)) << "; "
      << describe_gap("misaligned-LW", g2, independent_se(m, lw)) << " (need > "
      << kGapSigmas << ")";
  return {pass, out.str()};
}

// 6. Ten random targets on top of the aligned ones cost little.
Outcome useless_targets() {
  ExperimentConfig config = experiment_useless_targets(kPrialReps);
  config.sweep = TargetCountSweep{{1, 10, 20}};
  const auto report = run_study(config);
  const ReportRow& m = report.row(kMtseSeries, 20);
  const ReportRow& lw = report.row(kLedoitWolfSeries, 20);
  const PrialGap g = paired_prial_gap(m, lw, report.row(kSampleSeries, 20));
  std::ostringstream out;
  out.precision(4);
  out << "PRIAL MTSE k=20 " << m.prial << ", MTSE k=10 " << report.row(kMtseSeries, 10).prial
      << ", LW " << lw.prial << "; " << describe_gap("k=20 vs LW", g, independent_se(m, lw))
      << " (need >= " << kGapSigmas << ")";
  return {g.gap >= kGapSigmas * g.standard_error, out.str()};
}

// 7. The bona fide estimator approaches the oracle as n grows, down to nu = 4.
Outcome heavy_tail_convergence() {
  bool pass = true;
  std::ostringstream detail;
  detail.precision(4);
  for (double nu : {20000.0, 8.0, 4.0}) {
    const auto report = run_study(experiment_heavy_tails(nu, kHeavyTailReps));
    const double at50 = report.row(kGapSeries, 50).mean_loss;
    const double at400 = report.row(kGapSeries, 400).mean_loss;
    pass = pass && at400 < at50;
    detail << "nu=" << nu << ": " << at50 << " -> " << at400 << "; ";
  }
  return {pass, "mean |S* - Sigma*|^2 at n=50 -> n=400: " + detail.str()};
}

std::filesystem::path dataset_dir() {
  if (const char* env = std::getenv("MTSE_DATA_DIR")) return env;
  return std::filesystem::path(MTSE_SOURCE_DIR) / "data" / "sp500";
}

// 8. GMV backtest: reference dataset if available, otherwise synthetic invariants.
Outcome backtest() {
  const std::vector<int> windows{3, 4, 6, 9, 12, 15};
  const auto dir = dataset_dir();
  if (std::filesystem::exists(dir / "prices.csv") && std::filesystem::exists(dir / "sectors.csv")) {
    const std::vector<double> reference{7.14e-3, 7.13e-3, 7.29e-3, 7.09e-3, 7.62e-3, 7.52e-3};
    const ReturnsPanel panel = ingest_prices(dir / "prices.csv", dir / "sectors.csv");
    bool pass = true;
    std::ostringstream detail;
    detail.precision(4);
    detail << panel.assets.size() << " assets; ";
    for (std::size_t i = 0; i < windows.size(); ++i) {
      double v[3];
      int e = 0;
      for (auto est : {BacktestEstimator::MtseSectors, BacktestEstimator::LedoitWolf,
                       BacktestEstimator::Sample}) {
        BacktestConfig c;
        c.window_months = windows[i];
        c.estimator = est;
        const auto report = run_backtest(panel, c);
        for (const auto& m : report.months) record_eigen(m.min_eigenvalue);
        v[e++] = report.cumulative_variance;
      }
      const bool within = std::abs(v[0] - reference[i]) <= kBacktestRelTol * reference[i];
      pass = pass && within && v[0] < v[1] && v[1] < v[2];
      detail << "K=" << windows[i] << " mtse " << v[0] << " lw " << v[1] << " s " << v[2] << "; ";
    }
    return {pass, detail.str()};
  }

  // Synthetic panel invariants.
  const auto market = mtse::testing::synthetic_market(30, 5, 18, kSeed + 8);
  std::istringstream prices(market.prices_csv);
  std::istringstream sectors(market.sectors_csv);
  const ReturnsPanel panel = ingest_prices(prices, sectors);
  ReturnsPanel scaled = panel;
  scaled.returns *= 2.0;
  ReturnsPanel constant = panel;
  constant.returns.setZero();
  double worst_sum = 0.0;
  double worst_scale = 0.0;
  double worst_const = 0.0;
  for (int k : windows) {
    for (auto est : {BacktestEstimator::MtseSectors, BacktestEstimator::LedoitWolf,
                     BacktestEstimator::Sample}) {
      BacktestConfig c;
      c.window_months = k;
      c.estimator = est;
      const auto base = run_backtest(panel, c);
      const auto twice = run_backtest(scaled, c);
      const auto flat = run_backtest(constant, c);
      for (std::size_t i = 0; i < base.months.size(); ++i) {
        record_eigen(base.months[i].min_eigenvalue);
        record_eigen(twice.months[i].min_eigenvalue);
        worst_sum = std::max(worst_sum, std::abs(base.months[i].weight_sum - 1.0));
        worst_sum = std::max(worst_sum, std::abs(twice.months[i].weight_sum - 1.0));
        worst_scale = std::max(worst_scale, std::abs(twice.months[i].variance - 4.0 * base.months[i].variance) /
                                                (4.0 * base.months[i].variance));
      }
      for (const auto& m : flat.months) worst_const = std::max(worst_const, std::abs(m.variance));
    }
  }
  const bool pass = worst_sum <= kWeightSumTol && worst_scale <= kScaleTol && worst_const == 0.0;
  return {pass, "reference dataset not found at " + dir.string() +
                    "; synthetic invariants instead: " +
                    fmt("max |sum w - 1| %.1e, max scale error %.1e, max v_T on constant returns %.1e",
                        worst_sum, worst_scale, worst_const)};
}

// 9. Every estimate produced above is PSD.
Outcome psd_guarantee() {
  return {g_min_eigenvalue >= kPsdFloor,
          fmt("smallest eigenvalue seen %.3e (floor %.0e)", g_min_eigenvalue, kPsdFloor)};
}

// 10. The studies of 5-7 produce identical CSV reports with more workers.
Outcome determinism() {
  bool pass = true;
  for (const auto& study : g_studies) {
    ExperimentConfig c = study.config;
    c.threads = 2;
    std::ostringstream csv;
    write_report_csv(run_experiment(c), csv);
    pass = pass && csv.str() == study.csv;
  }
  return {pass, std::to_string(g_studies.size()) + " studies rerun with 2 threads vs 1"};
}

}  // namespace

int main(int argc, char** argv) {
  // Optional arguments select criteria by number (for development runs).
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "oracle correctness", oracle_correctness},
      {2, "unbiasedness", unbiasedness},
      {3, "fast-trick equivalence", fast_trick},
      {4, "translation invariance", translation_invariance},
      {5, "target alignment ordering", alignment_ordering},
      {6, "useless targets", useless_targets},
      {7, "heavy-tail convergence", heavy_tail_convergence},
      {8, "gmv backtest", backtest},
      {9, "psd guarantee", psd_guarantee},
      {10, "determinism", determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << ", "
              << fmt("%.1f s", secs) << "): " << o.detail << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed")
            << std::endl;
  return failed == 0 ? 0 : 1;
}
