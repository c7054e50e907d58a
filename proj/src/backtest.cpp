#include "mtse/backtest.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "mtse/csv_io.hpp"

namespace mtse {

namespace {

using std::chrono::year_month;
using std::chrono::year_month_day;

year_month_day parse_date(const std::string& text, const std::string& where) {
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  char tail = 0;
  if (text.size() != 10 || std::sscanf(text.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3) {
    throw InputError(where + ": expected ISO date YYYY-MM-DD, got '" + text + "'");
  }
  const year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) throw InputError(where + ": invalid date '" + text + "'");
  return ymd;
}

bool is_gap(const std::string& field) {
  return field.empty() || field == "NA" || field == "NaN" || field == "nan" || field == "null";
}

}  // namespace

void ReturnsPanel::validate() const {
  if (assets.size() != sectors.size()) throw InputError("ReturnsPanel: sector count mismatch");
  if (returns.rows() != static_cast<Eigen::Index>(dates.size()) ||
      returns.cols() != static_cast<Eigen::Index>(assets.size())) {
    throw InputError("ReturnsPanel: returns shape does not match dates x assets");
  }
  for (std::size_t i = 1; i < dates.size(); ++i) {
    if (!(dates[i - 1] < dates[i])) {
      throw InputError("ReturnsPanel: dates not strictly increasing at row " + std::to_string(i));
    }
  }
  if (!returns.allFinite()) throw InputError("ReturnsPanel: non-finite return");
}

ReturnsPanel ingest_prices(std::istream& prices, std::istream& sectors,
                           const std::string& prices_name, const std::string& sectors_name) {
  // Sector map.
  std::unordered_map<std::string, std::string> sector_of;
  std::string line;
  int line_no = 0;
  bool header = true;
  while (std::getline(sectors, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = csv::split_line(line);
    const std::string where = sectors_name + " row " + std::to_string(line_no);
    if (fields.size() != 2) throw InputError(where + ": expected 2 fields (ticker,sector)");
    if (header) {
      header = false;
      if (fields[0] == "ticker") continue;
    }
    if (fields[0].empty() || fields[1].empty()) throw InputError(where + ": empty ticker or sector");
    if (!sector_of.emplace(fields[0], fields[1]).second) {
      throw InputError(where + ": duplicate ticker '" + fields[0] + "'");
    }
  }

  // Price table.
  line_no = 0;
  std::vector<std::string> tickers;
  std::vector<year_month_day> dates;
  std::vector<std::vector<double>> table;  // per row, NaN marks a gap
  while (std::getline(prices, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = csv::split_line(line);
    const std::string where = prices_name + " row " + std::to_string(line_no);
    if (tickers.empty()) {
      if (fields.size() < 2 || fields[0] != "date") {
        throw InputError(where + ": header must be 'date,<ticker>,...'");
      }
      std::unordered_set<std::string> seen;
      for (std::size_t c = 1; c < fields.size(); ++c) {
        if (fields[c].empty() || !seen.insert(fields[c]).second) {
          throw InputError(where + ": empty or duplicate ticker in header column " +
                           std::to_string(c + 1));
        }
        tickers.push_back(fields[c]);
      }
      continue;
    }
    if (fields.size() != tickers.size() + 1) {
      throw InputError(where + ": expected " + std::to_string(tickers.size() + 1) +
                       " fields, got " + std::to_string(fields.size()));
    }
    const year_month_day date = parse_date(fields[0], where);
    if (!dates.empty() && !(dates.back() < date)) {
      throw InputError(where + ": dates must be strictly increasing");
    }
    dates.push_back(date);
    std::vector<double> row(tickers.size());
    for (std::size_t c = 0; c < tickers.size(); ++c) {
      const std::string& f = fields[c + 1];
      if (is_gap(f)) {
        row[c] = std::nan("");
        continue;
      }
      const double v = csv::parse_number(f, where + " column " + std::to_string(c + 2));
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw InputError(where + ": non-positive price for " + tickers[c]);
      }
      row[c] = v;
    }
    table.push_back(std::move(row));
  }
  if (tickers.empty()) throw InputError(prices_name + ": missing header");
  if (table.size() < 2) throw InputError(prices_name + ": need at least two price rows");

  ReturnsPanel panel;
  std::vector<std::size_t> kept;
  for (std::size_t c = 0; c < tickers.size(); ++c) {
    const auto it = sector_of.find(tickers[c]);
    if (it == sector_of.end()) {
      ++panel.dropped_assets;
      panel.warnings.push_back("dropped " + tickers[c] + ": no sector label");
      continue;
    }
    bool gap = false;
    for (const auto& row : table) gap = gap || std::isnan(row[c]);
    if (gap) {
      ++panel.dropped_assets;
      panel.warnings.push_back("dropped " + tickers[c] + ": missing prices");
      continue;
    }
    kept.push_back(c);
    panel.assets.push_back(tickers[c]);
    panel.sectors.push_back(it->second);
  }
  if (kept.empty()) throw InputError(prices_name + ": no asset left after ingestion");

  const auto rows = static_cast<Eigen::Index>(table.size() - 1);
  panel.returns.resize(rows, static_cast<Eigen::Index>(kept.size()));
  for (Eigen::Index t = 0; t < rows; ++t) {
    for (std::size_t j = 0; j < kept.size(); ++j) {
      const auto& now = table[static_cast<std::size_t>(t) + 1];
      const auto& before = table[static_cast<std::size_t>(t)];
      panel.returns(t, static_cast<Eigen::Index>(j)) =
          std::log(now[kept[j]]) - std::log(before[kept[j]]);
    }
  }
  panel.dates.assign(dates.begin() + 1, dates.end());
  return panel;
}

ReturnsPanel ingest_prices(const std::filesystem::path& prices_csv,
                           const std::filesystem::path& sectors_csv) {
  std::ifstream prices(prices_csv);
  if (!prices) throw InputError("cannot open " + prices_csv.string());
  std::ifstream sectors(sectors_csv);
  if (!sectors) throw InputError("cannot open " + sectors_csv.string());
  return ingest_prices(prices, sectors, prices_csv.string(), sectors_csv.string());
}

Eigen::VectorXd gmv_weights(const SymMatrix& sigma_hat, const Tolerances& tol) {
  const SymMatrix inv = pseudo_inverse(sigma_hat, tol);
  const Eigen::VectorXd raw = inv.matrix().rowwise().sum();
  const double denom = raw.sum();
  if (denom == 0.0 || std::abs(denom) <= 1e-14 * raw.lpNorm<1>()) {
    throw NumericalError("gmv_weights: 1^T A+ 1 vanishes");
  }
  return raw / denom;
}

std::string to_string(BacktestEstimator e) {
  switch (e) {
    case BacktestEstimator::Sample:
      return "sample";
    case BacktestEstimator::LedoitWolf:
      return "lw";
    case BacktestEstimator::MtseSectors:
      return "mtse-sectors";
  }
  return "unknown";
}

BacktestEstimator parse_backtest_estimator(const std::string& name) {
  if (name == "sample") return BacktestEstimator::Sample;
  if (name == "lw") return BacktestEstimator::LedoitWolf;
  if (name == "mtse-sectors") return BacktestEstimator::MtseSectors;
  throw InputError("estimator: expected one of sample, lw, mtse-sectors; got '" + name + "'");
}

std::string format_month(year_month ym) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u", static_cast<int>(ym.year()),
                static_cast<unsigned>(ym.month()));
  return buf;
}

BacktestReport run_backtest(const ReturnsPanel& panel, const BacktestConfig& config) {
  panel.validate();
  if (config.window_months < 1) throw InputError("window_months (K) must be >= 1");

  // Row ranges of each calendar month, in order.
  struct MonthRows {
    year_month month;
    Eigen::Index begin;
    Eigen::Index end;
  };
  std::vector<MonthRows> months;
  for (Eigen::Index t = 0; t < static_cast<Eigen::Index>(panel.dates.size()); ++t) {
    const auto& d = panel.dates[static_cast<std::size_t>(t)];
    const year_month ym{d.year(), d.month()};
    if (months.empty() || months.back().month != ym) months.push_back({ym, t, t});
    months.back().end = t + 1;
  }
  const auto k = static_cast<std::size_t>(config.window_months);
  if (months.size() < k + 1) {
    throw InputError("backtest: panel spans " + std::to_string(months.size()) +
                     " months, need K + 1 = " + std::to_string(k + 1));
  }

  const Eigen::Index p = panel.returns.cols();
  std::optional<TargetSet> targets;
  if (config.estimator == BacktestEstimator::MtseSectors) targets = sector_targets(panel.sectors);
  else if (config.estimator == BacktestEstimator::LedoitWolf) targets = identity_target(p);

  BacktestReport report;
  report.config = config;
  std::vector<double> variances;
  for (std::size_t j = k; j < months.size(); ++j) {
    const auto& eval = months[j];
    if (config.first_month && eval.month < *config.first_month) continue;
    if (config.last_month && *config.last_month < eval.month) continue;
    const Eigen::Index days = eval.end - eval.begin;
    if (days < 2) {
      report.skipped_months.push_back(format_month(eval.month));
      continue;
    }
    const Eigen::Index fit_begin = months[j - k].begin;
    const Eigen::Index fit_end = eval.begin;
    const Eigen::Index fit_days = fit_end - fit_begin;
    if (fit_days < minimum_observations(MeanMode::Unknown)) {
      throw InputError("backtest: window before " + format_month(eval.month) + " has " +
                       std::to_string(fit_days) + " days, need at least 4");
    }
    const ObservationMatrix window(
        panel.returns.middleRows(fit_begin, fit_days).transpose());
    const SymMatrix sigma_hat = targets ? mtse(window, *targets, config.tolerances).estimate
                                        : sample_covariance(window);

    MonthResult result;
    result.month = eval.month;
    result.fit_days = static_cast<int>(fit_days);
    result.days = static_cast<int>(days);
    result.min_eigenvalue = min_eigenvalue(sigma_hat);
    Eigen::VectorXd w;
    if (sigma_hat.matrix().isZero(0.0)) {
      // Every full-investment portfolio has zero estimated variance; take the minimum-norm one.
      w = Eigen::VectorXd::Constant(p, 1.0 / static_cast<double>(p));
      result.uniform_weights = true;
    } else {
      w = gmv_weights(sigma_hat, config.tolerances);
    }
    result.weight_sum = w.sum();
    const Eigen::VectorXd daily = panel.returns.middleRows(eval.begin, days) * w;
    const double mean = daily.mean();
    const double denom = config.unbiased_variance ? static_cast<double>(days - 1)
                                                  : static_cast<double>(days);
    result.variance = (daily.array() - mean).square().sum() / denom;
    variances.push_back(result.variance);
    report.months.push_back(result);
  }
  double total = 0.0;
  for (double v : variances) total += v;
  report.cumulative_variance = total;
  return report;
}

void write_backtest_months_csv(const std::vector<BacktestReport>& reports, std::ostream& out) {
  out << "estimator,K,month,v_T\n";
  std::ostringstream line;
  line << std::setprecision(17);
  for (const auto& r : reports) {
    for (const auto& m : r.months) {
      line.str("");
      line << to_string(r.config.estimator) << ',' << r.config.window_months << ','
           << format_month(m.month) << ',' << m.variance << '\n';
      out << line.str();
    }
  }
}

void write_backtest_summary_csv(const std::vector<BacktestReport>& reports, std::ostream& out) {
  out << "estimator,K,cumulative_variance\n";
  std::ostringstream line;
  line << std::setprecision(17);
  for (const auto& r : reports) {
    line.str("");
    line << to_string(r.config.estimator) << ',' << r.config.window_months << ','
         << r.cumulative_variance << '\n';
    out << line.str();
  }
}

}  // namespace mtse
