#include <doctest.h>

#include <cmath>
#include <sstream>

#include "mtse/backtest.hpp"
#include "synthetic_market.hpp"

using namespace mtse;
using namespace std::chrono;

namespace {

ReturnsPanel ingest(const std::string& prices, const std::string& sectors) {
  std::istringstream p(prices);
  std::istringstream s(sectors);
  return ingest_prices(p, s);
}

}  // namespace

TEST_CASE("ingest_prices log returns") {
  const auto panel = ingest("date,A\n2020-01-02,100\n2020-01-03,110\n", "ticker,sector\nA,Tech\n");
  REQUIRE(panel.returns.rows() == 1);
  CHECK(panel.returns(0, 0) == doctest::Approx(std::log(1.1)).epsilon(1e-14));
  CHECK(panel.dates[0] == year_month_day{year{2020}, January, day{3}});
  CHECK(panel.sectors == std::vector<std::string>{"Tech"});
  CHECK(panel.dropped_assets == 0);
}

TEST_CASE("ingest_prices drops assets with gaps or no sector") {
  const auto panel = ingest("date,A,B,C\n2020-01-02,1,2,3\n2020-01-03,1,NA,3\n2020-01-06,1,2,3\n",
                            "A,X\nB,X\n");
  CHECK(panel.assets == std::vector<std::string>{"A"});
  CHECK(panel.dropped_assets == 2);
  CHECK(panel.warnings.size() == 2);

  const auto one = ingest("date,A,B\n2020-01-02,1,2\n2020-01-03,1,2\n", "A,X\n");
  CHECK(one.dropped_assets == 1);
  CHECK(one.warnings.size() == 1);
}

TEST_CASE("ingest_prices errors") {
  const std::string sec = "A,X\n";
  CHECK_THROWS_AS(ingest("when,A\n2020-01-02,1\n2020-01-03,1\n", sec), InputError);
  CHECK_THROWS_AS(ingest("date,A\n2020-01-02,1\n2020-01-03,0\n", sec), InputError);
  CHECK_THROWS_AS(ingest("date,A\n2020-01-02,1\n2020-01-03,-2\n", sec), InputError);
  CHECK_THROWS_AS(ingest("date,A\n2020-01-03,1\n2020-01-02,1\n", sec), InputError);
  CHECK_THROWS_AS(ingest("date,A\n2020-13-02,1\n2020-01-03,1\n", sec), InputError);
  CHECK_THROWS_AS(ingest("date,A\n2020-01-02,1,3\n2020-01-03,1\n", sec), InputError);
  CHECK_THROWS_AS(ingest("date,A\n2020-01-02,1\n", sec), InputError);
  CHECK_THROWS_AS(ingest("date,A\n2020-01-02,1\n2020-01-03,1\n", "B,X\n"), InputError);
  try {
    ingest("date,A\n2020-01-02,1\n2020-01-03,abc\n", sec);
    FAIL("expected InputError");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
  }
}

TEST_CASE("gmv_weights") {
  const Eigen::VectorXd w = gmv_weights(SymMatrix::identity(4));
  CHECK(w.isApprox(Eigen::VectorXd::Constant(4, 0.25), 1e-14));
  const double d[] = {1.0, 4.0};
  const Eigen::VectorXd w2 = gmv_weights(SymMatrix::diagonal(d));
  CHECK(w2(0) == doctest::Approx(0.8).epsilon(1e-14));
  CHECK(w2(1) == doctest::Approx(0.2).epsilon(1e-14));
  // Singular: the pseudo-inverse picks the minimum-norm solution.
  const Eigen::VectorXd w3 = gmv_weights(SymMatrix(Eigen::MatrixXd::Ones(2, 2)));
  CHECK(w3(0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(w3(1) == doctest::Approx(0.5).epsilon(1e-14));
  Eigen::MatrixXd opp(2, 2);
  opp << 1, -1, -1, 1;
  CHECK_THROWS_AS(gmv_weights(SymMatrix(opp)), NumericalError);
}

TEST_CASE("estimator names round-trip") {
  for (auto e : {BacktestEstimator::Sample, BacktestEstimator::LedoitWolf,
                 BacktestEstimator::MtseSectors}) {
    CHECK(parse_backtest_estimator(to_string(e)) == e);
  }
  CHECK_THROWS_AS(parse_backtest_estimator("oracle"), InputError);
}

TEST_CASE("run_backtest on a synthetic market") {
  const auto market = mtse::testing::synthetic_market(12, 3, 8, 7);
  const auto panel = ingest(market.prices_csv, market.sectors_csv);
  for (auto e : {BacktestEstimator::Sample, BacktestEstimator::LedoitWolf,
                 BacktestEstimator::MtseSectors}) {
    BacktestConfig c;
    c.estimator = e;
    c.window_months = 3;
    const auto report = run_backtest(panel, c);
    CHECK(report.months.size() == 5);
    CHECK(report.months.front().month == year_month{year{2020}, April});
    double total = 0.0;
    for (const auto& m : report.months) {
      CHECK(m.weight_sum == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(m.variance > 0.0);
      CHECK(m.fit_days >= 60);
      total += m.variance;
    }
    CHECK(report.cumulative_variance == doctest::Approx(total).epsilon(1e-14));
  }

  SUBCASE("month bounds") {
    BacktestConfig c;
    c.first_month = year_month{year{2020}, May};
    c.last_month = year_month{year{2020}, June};
    CHECK(run_backtest(panel, c).months.size() == 2);
  }
  SUBCASE("too few months") {
    BacktestConfig c;
    c.window_months = 8;
    CHECK_THROWS_AS(run_backtest(panel, c), InputError);
    c.window_months = 0;
    CHECK_THROWS_AS(run_backtest(panel, c), InputError);
  }
}

TEST_CASE("run_backtest variance is zero on constant prices") {
  std::ostringstream prices;
  prices << "date,A,B\n";
  for (int m = 1; m <= 3; ++m) {
    for (int d = 1; d <= 5; ++d) prices << "2020-0" << m << "-0" << d << ",10,20\n";
  }
  const auto panel = ingest(prices.str(), "A,X\nB,Y\n");
  BacktestConfig c;
  c.window_months = 1;
  for (auto e : {BacktestEstimator::Sample, BacktestEstimator::MtseSectors}) {
    c.estimator = e;
    const auto report = run_backtest(panel, c);
    REQUIRE(report.months.size() == 2);
    for (const auto& m : report.months) {
      CHECK(m.variance == 0.0);
      CHECK(m.uniform_weights);
    }
  }
}

TEST_CASE("run_backtest skips months with fewer than two days") {
  std::ostringstream prices;
  prices << "date,A,B\n2020-01-01,1,1\n";
  RandomStream rng(3);
  double a = 1.0;
  double b = 1.0;
  for (int d = 2; d <= 20; ++d) {
    a *= std::exp(0.01 * standard_normal_matrix(1, 1, rng)(0, 0));
    b *= std::exp(0.01 * standard_normal_matrix(1, 1, rng)(0, 0));
    prices.precision(17);
    prices << "2020-01-" << (d < 10 ? "0" : "") << d << ',' << a << ',' << b << '\n';
  }
  prices << "2020-02-03,1.5,1.2\n";
  const auto panel = ingest(prices.str(), "A,X\nB,Y\n");
  BacktestConfig c;
  c.window_months = 1;
  const auto report = run_backtest(panel, c);
  CHECK(report.months.empty());
  CHECK(report.skipped_months == std::vector<std::string>{"2020-02"});
}

TEST_CASE("run_backtest is invariant to rescaling every price path") {
  // Multiplying prices by a constant leaves log returns unchanged, and
  // scaling returns by kappa scales every v_T by kappa^2.
  const auto market = mtse::testing::synthetic_market(9, 3, 6, 11);
  const auto panel = ingest(market.prices_csv, market.sectors_csv);
  ReturnsPanel scaled = panel;
  scaled.returns *= 2.0;
  for (auto e : {BacktestEstimator::Sample, BacktestEstimator::LedoitWolf,
                 BacktestEstimator::MtseSectors}) {
    BacktestConfig c;
    c.estimator = e;
    c.window_months = 2;
    const auto base = run_backtest(panel, c);
    const auto twice = run_backtest(scaled, c);
    REQUIRE(base.months.size() == twice.months.size());
    for (std::size_t i = 0; i < base.months.size(); ++i) {
      CHECK(std::abs(twice.months[i].variance - 4.0 * base.months[i].variance) <=
            1e-10 * 4.0 * base.months[i].variance);
    }
  }
}

TEST_CASE("backtest CSV writers") {
  const auto market = mtse::testing::synthetic_market(6, 2, 4, 5);
  const auto panel = ingest(market.prices_csv, market.sectors_csv);
  BacktestConfig c;
  c.window_months = 2;
  const auto report = run_backtest(panel, c);
  std::ostringstream months;
  write_backtest_months_csv({report}, months);
  CHECK(months.str().rfind("estimator,K,month,v_T\nmtse-sectors,2,2020-03,", 0) == 0);
  std::ostringstream summary;
  write_backtest_summary_csv({report}, summary);
  CHECK(summary.str().rfind("estimator,K,cumulative_variance\nmtse-sectors,2,", 0) == 0);
}
