#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mtse/estimators.hpp"
#include "mtse/rng.hpp"
#include "mtse/targets.hpp"

namespace mtse {

struct Gaussian {};
struct StudentT {
  double nu = 9.0;
};
using Distribution = std::variant<Gaussian, StudentT>;

/// Block-diagonal Sigma with Wishart blocks B_i ~ W(scale_i * I, dof).
/// Either explicit `block_sizes` (summing to p) or `block_count` equal blocks.
/// dof == 0 means "block size"; empty `scales` means all ones.
/// With `normalize`, each block is divided by its dof so that E[B_i] = scale_i * I.
struct BlockWishartSigma {
  std::vector<int> block_sizes;
  int block_count = 0;
  int dof = 0;
  std::vector<double> scales;
  bool normalize = false;

  std::vector<int> resolve_sizes(Eigen::Index p) const;
};
struct ExplicitSigma {
  SymMatrix sigma;
};
using SigmaSpec = std::variant<BlockWishartSigma, ExplicitSigma>;

struct AlignedTargets {};
struct MisalignedTargets {
  long shift = 2;
};
struct AlignedPlusRandomTargets {
  int extra = 10;
};
struct CustomTargets {
  TargetSet targets;
};
using TargetPlan =
    std::variant<AlignedTargets, MisalignedTargets, AlignedPlusRandomTargets, CustomTargets>;

/// Sweep over the number k of targets used (prefixes of the plan's set).
struct TargetCountSweep {
  std::vector<int> counts;
};
/// Sweep over n with p = round(p_ratio * n); every target of the plan is used.
struct SampleSizeSweep {
  std::vector<int> sizes;
  double p_ratio = 0.5;
};
using Sweep = std::variant<TargetCountSweep, SampleSizeSweep>;

struct ExperimentConfig {
  std::string name = "experiment";
  int p = 50;
  int n = 25;
  int replications = 100;
  Distribution distribution = StudentT{9.0};
  SigmaSpec sigma = BlockWishartSigma{};
  // Block layout used by the aligned plans when Sigma is explicit; defaults to one block.
  std::vector<int> target_blocks;
  TargetPlan plan = AlignedTargets{};
  Sweep sweep = TargetCountSweep{{1}};
  MeanMode mean_mode = MeanMode::Known;
  // Draw Sigma once per sweep point instead of once per replication.
  bool fix_sigma = false;
  bool track_min_eigenvalue = true;
  std::uint64_t seed = 20240601;
  int threads = 1;  // 0 = hardware concurrency
  Tolerances tolerances{};

  void validate() const;
};

struct ReportRow {
  std::string estimator;
  int point = 0;  // k or n, depending on the sweep
  int p = 0;
  double mean_loss = 0.0;
  double loss_stderr = 0.0;
  double prial = 0.0;  // NaN for the mtse-to-oracle distance series
  double prial_stderr = 0.0;
  int replications = 0;
  double min_eigenvalue = 0.0;  // NaN when not tracked
  std::vector<double> losses;   // per replication, in replication order
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<ReportRow> rows;
  double wall_seconds = 0.0;

  const ReportRow& row(const std::string& estimator, int point) const;
};

/// Series names in the report.
inline constexpr const char* kSampleSeries = "sample";
inline constexpr const char* kLedoitWolfSeries = "lw";
inline constexpr const char* kMtseSeries = "mtse";
inline constexpr const char* kOracleSeries = "oracle";
inline constexpr const char* kGapSeries = "mtse_oracle_gap";

/// 10 blocks of 5, B_i ~ Wishart(sqrt(11 - i) I_5, 5 dof).
BlockWishartSigma reference_block_sigma_spec();
SymMatrix build_block_sigma(RandomStream& rng);
SymMatrix build_block_sigma(const BlockWishartSigma& spec, Eigen::Index p, RandomStream& rng);

/// (mean(S losses) - mean(estimator losses)) / mean(S losses).
double prial(std::span<const double> losses_hat, std::span<const double> losses_s);

struct PrialGap {
  double gap = 0.0;     // PRIAL(a) - PRIAL(b)
  double standard_error = 0.0;  // of the paired difference
};

/// Paired comparison of two series evaluated on the same draws; `sample` is
/// the sample-covariance row of those draws. Throws if the lengths differ.
PrialGap paired_prial_gap(const ReportRow& a, const ReportRow& b, const ReportRow& sample);

/// Summation by recursive halving; the result depends only on the order of `values`.
double pairwise_sum(std::span<const double> values);

ExperimentReport run_experiment(const ExperimentConfig& config);

/// Target sets of the aligned / misaligned / useless-target / heavy-tail studies.
ExperimentConfig experiment_target_alignment(bool misaligned, int replications);
ExperimentConfig experiment_useless_targets(int replications);
ExperimentConfig experiment_heavy_tails(double nu, int replications);

/// CSV: estimator,k_or_n,mean_loss,prial,stderr,replications,prial_stderr
/// (stderr is the standard error of mean_loss).
void write_report_csv(const ExperimentReport& report, std::ostream& out);

}  // namespace mtse
