#pragma once

#include <chrono>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mtse/estimators.hpp"

namespace mtse {

/// Daily log-returns, one row per trading day (after the first price row),
/// one column per asset, with each asset's sector label.
struct ReturnsPanel {
  std::vector<std::chrono::year_month_day> dates;
  std::vector<std::string> assets;
  std::vector<std::string> sectors;
  Eigen::MatrixXd returns;  // dates x assets
  int dropped_assets = 0;
  std::vector<std::string> warnings;

  void validate() const;
};

/// Price CSV `date,<ticker>,...` (ISO dates, close prices; an empty or NA
/// cell is a gap) and sector CSV `ticker,sector`. Assets with gaps or no
/// sector are dropped and counted in `dropped_assets`.
ReturnsPanel ingest_prices(std::istream& prices, std::istream& sectors,
                           const std::string& prices_name = "prices",
                           const std::string& sectors_name = "sectors");
ReturnsPanel ingest_prices(const std::filesystem::path& prices_csv,
                           const std::filesystem::path& sectors_csv);

/// w = A+ 1 / (1^T A+ 1).
Eigen::VectorXd gmv_weights(const SymMatrix& sigma_hat,
                            const Tolerances& tol = default_tolerances());

enum class BacktestEstimator { Sample, LedoitWolf, MtseSectors };

std::string to_string(BacktestEstimator e);
BacktestEstimator parse_backtest_estimator(const std::string& name);

struct BacktestConfig {
  int window_months = 3;
  BacktestEstimator estimator = BacktestEstimator::MtseSectors;
  // Optional bounds (inclusive) on the evaluated months.
  std::optional<std::chrono::year_month> first_month;
  std::optional<std::chrono::year_month> last_month;
  bool unbiased_variance = true;
  Tolerances tolerances{};
};

struct MonthResult {
  std::chrono::year_month month;
  int fit_days = 0;
  int days = 0;
  double variance = 0.0;   // v_T
  double weight_sum = 0.0;
  double min_eigenvalue = 0.0;  // of the fitted covariance
  bool uniform_weights = false;  // estimated covariance was exactly zero
};

struct BacktestReport {
  BacktestConfig config;
  std::vector<MonthResult> months;
  std::vector<std::string> skipped_months;  // fewer than two days
  double cumulative_variance = 0.0;
};

/// Monthly GMV rebalancing: at each calendar month, fit on the previous K
/// calendar months of rows (unknown mean), hold for the month, record the
/// within-month variance of daily portfolio returns.
BacktestReport run_backtest(const ReturnsPanel& panel, const BacktestConfig& config);

std::string format_month(std::chrono::year_month ym);

/// `estimator,K,month,v_T`
void write_backtest_months_csv(const std::vector<BacktestReport>& reports, std::ostream& out);
/// `estimator,K,cumulative_variance`
void write_backtest_summary_csv(const std::vector<BacktestReport>& reports, std::ostream& out);

}  // namespace mtse
