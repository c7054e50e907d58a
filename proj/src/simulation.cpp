#include "mtse/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <iomanip>
#include <limits>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "mtse/sampling.hpp"

namespace mtse {

namespace {

constexpr std::uint64_t kFixedSigmaStream = std::numeric_limits<std::uint64_t>::max();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

bool is_sample_size_sweep(const ExperimentConfig& c) {
  return std::holds_alternative<SampleSizeSweep>(c.sweep);
}

struct SweepPoint {
  int label = 0;  // k or n
  int p = 0;
  int n = 0;
  int target_count = 0;  // 0 = all targets
};

std::vector<SweepPoint> sweep_points(const ExperimentConfig& c) {
  std::vector<SweepPoint> points;
  std::visit(Overloaded{
                 [&](const TargetCountSweep& s) {
                   for (int k : s.counts) points.push_back({k, c.p, c.n, k});
                 },
                 [&](const SampleSizeSweep& s) {
                   for (int n : s.sizes) {
                     const int p = static_cast<int>(std::lround(s.p_ratio * n));
                     points.push_back({n, p, n, 0});
                   }
                 },
             },
             c.sweep);
  return points;
}

std::vector<int> aligned_blocks(const ExperimentConfig& c, int p) {
  if (const auto* bw = std::get_if<BlockWishartSigma>(&c.sigma)) return bw->resolve_sizes(p);
  if (!c.target_blocks.empty()) return c.target_blocks;
  return {p};
}

SymMatrix draw_sigma(const ExperimentConfig& c, int p, RandomStream& rng) {
  return std::visit(Overloaded{
                        [&](const BlockWishartSigma& s) { return build_block_sigma(s, p, rng); },
                        [&](const ExplicitSigma& s) { return s.sigma; },
                    },
                    c.sigma);
}

ObservationMatrix draw_observations(const ExperimentConfig& c, const SymMatrix& sigma, int n,
                                    RandomStream& rng) {
  ObservationMatrix x = std::visit(
      Overloaded{
          [&](const Gaussian&) { return sample_gaussian(sigma, n, rng); },
          [&](const StudentT& t) { return sample_multivariate_t(sigma, t.nu, n, rng); },
      },
      c.distribution);
  if (c.mean_mode == MeanMode::Unknown) return ObservationMatrix(x.data());
  return x;
}

// Target set that does not depend on the replication's random stream, or
// nullopt when the plan draws random targets.
std::optional<TargetSet> fixed_targets(const ExperimentConfig& c, int p) {
  return std::visit(
      Overloaded{
          [&](const AlignedTargets&) -> std::optional<TargetSet> {
            return block_identity_targets(aligned_blocks(c, p));
          },
          [&](const MisalignedTargets& m) -> std::optional<TargetSet> {
            return permuted_targets(block_identity_targets(aligned_blocks(c, p)), m.shift);
          },
          [&](const AlignedPlusRandomTargets&) -> std::optional<TargetSet> {
            return std::nullopt;
          },
          [&](const CustomTargets& t) -> std::optional<TargetSet> { return t.targets; },
      },
      c.plan);
}

std::size_t plan_size(const ExperimentConfig& c, int p) {
  if (const auto* r = std::get_if<AlignedPlusRandomTargets>(&c.plan)) {
    return block_identity_targets(aligned_blocks(c, p)).size() + static_cast<std::size_t>(r->extra);
  }
  return fixed_targets(c, p)->size();
}

double loss(const SymMatrix& estimate, const SymMatrix& sigma) {
  return scaled_norm_sq(estimate - sigma);
}

double sample_sd(std::span<const double> values, double mean) {
  if (values.size() < 2) return 0.0;
  std::vector<double> sq(values.size());
  std::transform(values.begin(), values.end(), sq.begin(),
                 [mean](double v) { return (v - mean) * (v - mean); });
  return std::sqrt(pairwise_sum(sq) / static_cast<double>(values.size() - 1));
}

double mean_of(std::span<const double> values) {
  return pairwise_sum(values) / static_cast<double>(values.size());
}

// Per sweep point, per series: one loss and one minimum eigenvalue per replication.
struct SeriesSamples {
  std::vector<double> losses;
  std::vector<double> min_eig;
};

struct ReplicationFailure {
  int replication = -1;
  std::exception_ptr error;
  std::string message;
  bool numerical = false;
};

}  // namespace

std::vector<int> BlockWishartSigma::resolve_sizes(Eigen::Index p) const {
  if (!block_sizes.empty()) {
    const long total = std::accumulate(block_sizes.begin(), block_sizes.end(), 0L);
    if (total != p) {
      throw InputError("block_sizes sum to " + std::to_string(total) + ", expected p = " +
                       std::to_string(p));
    }
    return block_sizes;
  }
  if (block_count < 1 || block_count > p) {
    throw InputError("block_count must be in [1, p], got " + std::to_string(block_count));
  }
  std::vector<int> sizes(static_cast<std::size_t>(block_count),
                         static_cast<int>(p / block_count));
  for (Eigen::Index r = 0; r < p % block_count; ++r) ++sizes[static_cast<std::size_t>(r)];
  return sizes;
}

BlockWishartSigma reference_block_sigma_spec() {
  BlockWishartSigma spec;
  spec.block_sizes.assign(10, 5);
  spec.dof = 5;
  for (int i = 1; i <= 10; ++i) spec.scales.push_back(std::sqrt(11.0 - i));
  return spec;
}

SymMatrix build_block_sigma(RandomStream& rng) {
  return build_block_sigma(reference_block_sigma_spec(), 50, rng);
}

SymMatrix build_block_sigma(const BlockWishartSigma& spec, Eigen::Index p, RandomStream& rng) {
  const std::vector<int> sizes = spec.resolve_sizes(p);
  if (!spec.scales.empty() && spec.scales.size() != sizes.size()) {
    throw InputError("block sigma: " + std::to_string(spec.scales.size()) + " scales for " +
                     std::to_string(sizes.size()) + " blocks");
  }
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(p, p);
  Eigen::Index offset = 0;
  for (std::size_t b = 0; b < sizes.size(); ++b) {
    const int dof = spec.dof > 0 ? spec.dof : sizes[b];
    double scale = spec.scales.empty() ? 1.0 : spec.scales[b];
    if (spec.normalize) scale /= dof;
    const SymMatrix block =
        sample_wishart(SymMatrix::identity(sizes[b]) * scale, dof, rng);
    sigma.block(offset, offset, sizes[b], sizes[b]) = block.matrix();
    offset += sizes[b];
  }
  return SymMatrix::symmetrize(sigma);
}

double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kLeaf = 8;
  if (values.size() <= kLeaf) {
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double prial(std::span<const double> losses_hat, std::span<const double> losses_s) {
  if (losses_hat.empty() || losses_hat.size() != losses_s.size()) {
    throw InputError("prial: loss lists must be non-empty and of equal length");
  }
  const double base = mean_of(losses_s);
  if (!(base > 0.0)) throw InputError("prial: mean sample-covariance loss must be positive");
  return (base - mean_of(losses_hat)) / base;
}

PrialGap paired_prial_gap(const ReportRow& a, const ReportRow& b, const ReportRow& sample) {
  const std::size_t reps = sample.losses.size();
  if (reps < 2 || a.losses.size() != reps || b.losses.size() != reps) {
    throw InputError("paired_prial_gap: rows need the same number (>= 2) of replications");
  }
  const double base = mean_of(sample.losses);
  if (!(base > 0.0)) throw InputError("paired_prial_gap: mean sample-covariance loss must be positive");
  std::vector<double> diff(reps);
  for (std::size_t r = 0; r < reps; ++r) diff[r] = b.losses[r] - a.losses[r];
  PrialGap out;
  out.gap = mean_of(diff) / base;
  std::vector<double> linearized(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    linearized[r] = (diff[r] - out.gap * sample.losses[r]) / base;
  }
  out.standard_error = sample_sd(linearized, mean_of(linearized)) / std::sqrt(static_cast<double>(reps));
  return out;
}

const ReportRow& ExperimentReport::row(const std::string& estimator, int point) const {
  for (const auto& r : rows) {
    if (r.estimator == estimator && r.point == point) return r;
  }
  throw InputError("report has no row for " + estimator + " at " + std::to_string(point));
}

void ExperimentConfig::validate() const {
  if (replications < 1) throw InputError("replications must be >= 1");
  if (threads < 0) throw InputError("threads must be >= 0");
  if (const auto* t = std::get_if<StudentT>(&distribution); t && !(t->nu > 2.0)) {
    throw InputError("distribution.nu must be > 2");
  }
  if (const auto* r = std::get_if<AlignedPlusRandomTargets>(&plan); r && r->extra < 1) {
    throw InputError("targets.extra must be >= 1");
  }
  const auto points = sweep_points(*this);
  if (points.empty()) throw InputError("sweep has no points");
  const Eigen::Index min_n = minimum_observations(mean_mode);
  for (const auto& pt : points) {
    if (pt.p < 1) throw InputError("sweep point " + std::to_string(pt.label) + " gives p < 1");
    if (pt.n < min_n) {
      throw InputError("sweep point " + std::to_string(pt.label) + ": n = " +
                       std::to_string(pt.n) + " is below the minimum " + std::to_string(min_n));
    }
    if (const auto* e = std::get_if<ExplicitSigma>(&sigma); e && e->sigma.dim() != pt.p) {
      throw InputError("sigma: explicit matrix has dimension " + std::to_string(e->sigma.dim()) +
                       ", expected p = " + std::to_string(pt.p));
    }
    if (const auto* c = std::get_if<CustomTargets>(&plan); c && c->targets.dim() != pt.p) {
      throw InputError("targets: custom set has dimension " + std::to_string(c->targets.dim()) +
                       ", expected p = " + std::to_string(pt.p));
    }
    const std::size_t available = plan_size(*this, pt.p);
    if (pt.target_count < 0 || static_cast<std::size_t>(pt.target_count) > available) {
      throw InputError("sweep: k = " + std::to_string(pt.target_count) + " outside [1, " +
                       std::to_string(available) + "]");
    }
    if (std::holds_alternative<TargetCountSweep>(sweep) && pt.target_count < 1) {
      throw InputError("sweep: k must be >= 1");
    }
  }
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();
  const auto points = sweep_points(config);
  const bool n_sweep = is_sample_size_sweep(config);
  std::vector<std::string> series{kSampleSeries, kLedoitWolfSeries, kMtseSeries, kOracleSeries};
  if (n_sweep) series.emplace_back(kGapSeries);
  const auto reps = static_cast<std::size_t>(config.replications);

  std::vector<std::vector<SeriesSamples>> samples(
      points.size(), std::vector<SeriesSamples>(series.size()));
  for (auto& per_point : samples) {
    for (auto& s : per_point) {
      s.losses.assign(reps, 0.0);
      s.min_eig.assign(reps, std::numeric_limits<double>::quiet_NaN());
    }
  }

  // Shared read-only inputs: Sigma per point (when fixed) and non-random target sets.
  std::vector<std::optional<SymMatrix>> fixed_sigma(points.size());
  std::vector<std::optional<TargetSet>> shared_targets(points.size());
  std::vector<TargetSet> identity_sets;
  std::vector<std::optional<TargetSet>> random_base(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const int p = points[i].p;
    const bool reuse = i > 0 && points[i - 1].p == p;
    if (config.fix_sigma) {
      RandomStream rng = RandomStream::derive(config.seed, kFixedSigmaStream, i);
      fixed_sigma[i] = draw_sigma(config, p, rng);
    }
    shared_targets[i] = reuse ? shared_targets[i - 1] : fixed_targets(config, p);
    if (std::holds_alternative<AlignedPlusRandomTargets>(config.plan)) {
      random_base[i] = reuse ? random_base[i - 1] : block_identity_targets(aligned_blocks(config, p));
    }
    identity_sets.push_back(reuse ? identity_sets.back() : identity_target(p));
  }

  const Tolerances& tol = config.tolerances;
  auto eig = [&](const SymMatrix& m) {
    return config.track_min_eigenvalue ? min_eigenvalue(m)
                                       : std::numeric_limits<double>::quiet_NaN();
  };

  // Evaluates one sweep point on one (Sigma, X) draw.
  auto evaluate = [&](std::size_t pi, std::size_t rep, const SymMatrix& sigma,
                      const ObservationMatrix& x, const TargetSet& full_set) {
    const SweepPoint& pt = points[pi];
    const TargetSet targets =
        pt.target_count > 0 ? full_set.prefix(static_cast<std::size_t>(pt.target_count))
                            : full_set;
    const SymMatrix s = sample_covariance(x);
    const ShrinkageResult lw = mtse(x, identity_sets[pi], tol);
    const ShrinkageResult bona_fide = mtse(x, targets, tol);
    const ShrinkageResult oracle = oracle_mtse(s, targets, sigma, tol);
    auto& out = samples[pi];
    out[0].losses[rep] = loss(s, sigma);
    out[1].losses[rep] = loss(lw.estimate, sigma);
    out[1].min_eig[rep] = eig(lw.estimate);
    out[2].losses[rep] = loss(bona_fide.estimate, sigma);
    out[2].min_eig[rep] = eig(bona_fide.estimate);
    out[3].losses[rep] = loss(oracle.estimate, sigma);
    out[3].min_eig[rep] = eig(oracle.estimate);
    if (n_sweep) out[4].losses[rep] = loss(bona_fide.estimate, oracle.estimate);
  };

  auto draw_targets = [&](std::size_t pi, RandomStream& rng) -> TargetSet {
    if (shared_targets[pi]) return *shared_targets[pi];
    const auto& extra = std::get<AlignedPlusRandomTargets>(config.plan);
    return random_wishart_targets(points[pi].p, extra.extra, rng, &*random_base[pi]);
  };

  auto run_replication = [&](std::size_t rep) {
    if (!n_sweep) {
      // One (Sigma, X, targets) draw shared by every k.
      RandomStream rng = RandomStream::derive(config.seed, rep);
      const SymMatrix sigma = fixed_sigma[0] ? *fixed_sigma[0] : draw_sigma(config, points[0].p, rng);
      const ObservationMatrix x = draw_observations(config, sigma, points[0].n, rng);
      const TargetSet full_set = draw_targets(0, rng);
      for (std::size_t pi = 0; pi < points.size(); ++pi) evaluate(pi, rep, sigma, x, full_set);
      return;
    }
    for (std::size_t pi = 0; pi < points.size(); ++pi) {
      RandomStream rng = RandomStream::derive(config.seed, rep, pi + 1);
      const SymMatrix sigma = fixed_sigma[pi] ? *fixed_sigma[pi] : draw_sigma(config, points[pi].p, rng);
      const ObservationMatrix x = draw_observations(config, sigma, points[pi].n, rng);
      const TargetSet full_set = draw_targets(pi, rng);
      evaluate(pi, rep, sigma, x, full_set);
    }
  };

  unsigned workers = config.threads > 0 ? static_cast<unsigned>(config.threads)
                                        : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(reps));
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex failure_mutex;
  ReplicationFailure failure;

  auto worker = [&] {
    while (!stop.load(std::memory_order_relaxed)) {
      const std::size_t rep = next.fetch_add(1);
      if (rep >= reps) return;
      try {
        run_replication(rep);
      } catch (const std::exception& e) {
        std::lock_guard lock(failure_mutex);
        if (failure.replication < 0 || static_cast<int>(rep) < failure.replication) {
          failure.replication = static_cast<int>(rep);
          failure.message = e.what();
          failure.numerical = dynamic_cast<const InputError*>(&e) == nullptr;
        }
        stop = true;
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
  }
  if (failure.replication >= 0) {
    const std::string msg =
        "replication " + std::to_string(failure.replication) + ": " + failure.message;
    if (failure.numerical) throw NumericalError(msg);
    throw InputError(msg);
  }

  ExperimentReport report;
  report.config = config;
  for (std::size_t pi = 0; pi < points.size(); ++pi) {
    const auto& base = samples[pi][0].losses;
    const double base_mean = mean_of(base);
    for (std::size_t si = 0; si < series.size(); ++si) {
      const auto& losses = samples[pi][si].losses;
      ReportRow row;
      row.estimator = series[si];
      row.point = points[pi].label;
      row.p = points[pi].p;
      row.replications = config.replications;
      row.mean_loss = mean_of(losses);
      row.loss_stderr = sample_sd(losses, row.mean_loss) / std::sqrt(static_cast<double>(reps));
      if (series[si] == kGapSeries) {
        row.prial = std::numeric_limits<double>::quiet_NaN();
        row.prial_stderr = std::numeric_limits<double>::quiet_NaN();
      } else if (base_mean > 0.0) {
        row.prial = si == 0 ? 0.0 : prial(losses, base);
        // Delta method for the ratio of means.
        const double ratio = row.mean_loss / base_mean;
        std::vector<double> linearized(reps);
        for (std::size_t r = 0; r < reps; ++r) {
          linearized[r] = (losses[r] - ratio * base[r]) / base_mean;
        }
        row.prial_stderr = si == 0 ? 0.0
                                   : sample_sd(linearized, mean_of(linearized)) /
                                         std::sqrt(static_cast<double>(reps));
      } else {
        row.prial = std::numeric_limits<double>::quiet_NaN();
        row.prial_stderr = std::numeric_limits<double>::quiet_NaN();
      }
      const auto& eigs = samples[pi][si].min_eig;
      row.min_eigenvalue = std::numeric_limits<double>::quiet_NaN();
      for (double e : eigs) {
        if (!std::isnan(e)) row.min_eigenvalue = std::isnan(row.min_eigenvalue) ? e : std::min(row.min_eigenvalue, e);
      }
      row.losses = losses;
      report.rows.push_back(std::move(row));
    }
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

ExperimentConfig experiment_target_alignment(bool misaligned, int replications) {
  ExperimentConfig c;
  c.name = misaligned ? "target-alignment-misaligned" : "target-alignment-aligned";
  c.p = 50;
  c.n = 25;
  c.replications = replications;
  c.distribution = StudentT{9.0};
  c.sigma = reference_block_sigma_spec();
  c.plan = misaligned ? TargetPlan{MisalignedTargets{2}} : TargetPlan{AlignedTargets{}};
  TargetCountSweep sweep;
  for (int k = 1; k <= 10; ++k) sweep.counts.push_back(k);
  c.sweep = sweep;
  return c;
}

ExperimentConfig experiment_useless_targets(int replications) {
  ExperimentConfig c = experiment_target_alignment(false, replications);
  c.name = "useless-targets";
  c.plan = AlignedPlusRandomTargets{10};
  TargetCountSweep sweep;
  for (int k = 1; k <= 20; ++k) sweep.counts.push_back(k);
  c.sweep = sweep;
  return c;
}

ExperimentConfig experiment_heavy_tails(double nu, int replications) {
  ExperimentConfig c;
  std::ostringstream name;
  name << "heavy-tails-nu" << nu;
  c.name = name.str();
  c.replications = replications;
  c.distribution = StudentT{nu};
  BlockWishartSigma sigma;
  sigma.block_count = 5;
  sigma.normalize = true;
  c.sigma = sigma;
  c.plan = AlignedTargets{};
  c.sweep = SampleSizeSweep{{50, 100, 200, 400}, 0.5};
  c.p = 25;
  c.n = 50;
  return c;
}

void write_report_csv(const ExperimentReport& report, std::ostream& out) {
  out << "estimator,k_or_n,mean_loss,prial,stderr,replications,prial_stderr\n";
  std::ostringstream line;
  line << std::setprecision(17);
  for (const auto& r : report.rows) {
    line.str("");
    line << r.estimator << ',' << r.point << ',' << r.mean_loss << ',' << r.prial << ','
         << r.loss_stderr << ',' << r.replications << ',' << r.prial_stderr << '\n';
    out << line.str();
  }
}

}  // namespace mtse
