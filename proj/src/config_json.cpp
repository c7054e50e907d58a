#include "mtse/config_json.hpp"

#include <cmath>
#include <set>

#include "mtse/csv_io.hpp"

namespace mtse {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

void check_keys(const Json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw InputError(where + ": expected a JSON object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.count(key)) throw InputError(where + "." + key + ": unknown field");
  }
}

template <class T>
T field(const Json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(where + "." + key + ": " + e.what());
  }
}

template <class T>
void maybe(const Json& j, const char* key, const std::string& where, T& out) {
  if (j.contains(key)) out = field<T>(j, key, where);
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Distribution distribution_from_json(const Json& j) {
  const std::string where = "distribution";
  check_keys(j, where, {"kind", "nu"});
  const auto kind = field<std::string>(j, "kind", where);
  if (kind == "gaussian") return Gaussian{};
  if (kind == "student_t") {
    const auto nu = field<double>(j, "nu", where);
    if (!(nu > 2.0)) throw InputError("distribution.nu: must be > 2");
    return StudentT{nu};
  }
  throw InputError("distribution.kind: expected gaussian or student_t, got '" + kind + "'");
}

SigmaSpec sigma_from_json(const Json& j, const std::filesystem::path& base) {
  const std::string where = "sigma";
  check_keys(j, where, {"kind", "block_sizes", "block_count", "dof", "scales", "normalize", "path", "matrix"});
  const auto kind = field<std::string>(j, "kind", where);
  if (kind == "block_wishart") {
    BlockWishartSigma s;
    maybe(j, "block_sizes", where, s.block_sizes);
    maybe(j, "block_count", where, s.block_count);
    maybe(j, "dof", where, s.dof);
    maybe(j, "scales", where, s.scales);
    maybe(j, "normalize", where, s.normalize);
    if (s.block_sizes.empty() && s.block_count < 1) {
      throw InputError("sigma.block_sizes: give block_sizes or a positive block_count");
    }
    return s;
  }
  if (kind == "explicit") {
    Eigen::MatrixXd m;
    if (j.contains("path")) {
      m = csv::read_matrix(resolve(base, field<std::string>(j, "path", where)));
    } else {
      const auto rows = field<std::vector<std::vector<double>>>(j, "matrix", where);
      if (rows.empty()) throw InputError("sigma.matrix: empty");
      m.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.size()) throw InputError("sigma.matrix: not square");
        for (std::size_t k = 0; k < rows.size(); ++k) {
          m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
        }
      }
    }
    try {
      return ExplicitSigma{SymMatrix(m)};
    } catch (const InputError& e) {
      throw InputError(std::string("sigma: ") + e.what());
    }
  }
  throw InputError("sigma.kind: expected block_wishart or explicit, got '" + kind + "'");
}

Sweep sweep_from_json(const Json& j) {
  const std::string where = "sweep";
  check_keys(j, where, {"kind", "values", "p_ratio"});
  const auto kind = field<std::string>(j, "kind", where);
  const auto values = field<std::vector<int>>(j, "values", where);
  if (values.empty()) throw InputError("sweep.values: empty");
  if (kind == "targets") return TargetCountSweep{values};
  if (kind == "n") {
    SampleSizeSweep s{values, 0.5};
    maybe(j, "p_ratio", where, s.p_ratio);
    if (!(s.p_ratio > 0.0)) throw InputError("sweep.p_ratio: must be positive");
    return s;
  }
  throw InputError("sweep.kind: expected targets or n, got '" + kind + "'");
}

}  // namespace

Tolerances tolerances_from_json(const Json& j) {
  const std::string where = "tolerances";
  check_keys(j, where,
             {"symmetry", "psd_residue", "gram_schmidt_drop", "pinv_rtol_per_dim", "degeneracy",
              "complex_residue"});
  Tolerances t;
  maybe(j, "symmetry", where, t.symmetry);
  maybe(j, "psd_residue", where, t.psd_residue);
  maybe(j, "gram_schmidt_drop", where, t.gram_schmidt_drop);
  maybe(j, "pinv_rtol_per_dim", where, t.pinv_rtol_per_dim);
  maybe(j, "degeneracy", where, t.degeneracy);
  maybe(j, "complex_residue", where, t.complex_residue);
  return t;
}

Json to_json(const Tolerances& t) {
  return Json{{"symmetry", t.symmetry},
              {"psd_residue", t.psd_residue},
              {"gram_schmidt_drop", t.gram_schmidt_drop},
              {"pinv_rtol_per_dim", t.pinv_rtol_per_dim},
              {"degeneracy", t.degeneracy},
              {"complex_residue", t.complex_residue}};
}

TargetSet targets_from_json(const Json& spec, Eigen::Index p,
                            const std::filesystem::path& base_dir) {
  const std::string where = "targets";
  check_keys(spec, where, {"kind", "sizes", "labels", "path", "shift", "extra"});
  const auto kind = field<std::string>(spec, "kind", where);
  if (kind == "identity") return identity_target(p);
  if (kind == "blocks") {
    const auto sizes = field<std::vector<int>>(spec, "sizes", where);
    long total = 0;
    for (int s : sizes) total += s;
    if (total != p) {
      throw InputError("targets.sizes: sum to " + std::to_string(total) + ", expected p = " +
                       std::to_string(p));
    }
    return block_identity_targets(sizes);
  }
  if (kind == "sectors") {
    const auto labels = field<std::vector<std::string>>(spec, "labels", where);
    if (static_cast<Eigen::Index>(labels.size()) != p) {
      throw InputError("targets.labels: " + std::to_string(labels.size()) +
                       " labels, expected p = " + std::to_string(p));
    }
    return sector_targets(labels);
  }
  if (kind == "file") {
    const auto path = resolve(base_dir, field<std::string>(spec, "path", where));
    const Eigen::MatrixXd stacked = csv::read_matrix(path);
    if (stacked.cols() != p || stacked.rows() % p != 0) {
      throw InputError("targets.path: " + path.string() + " must hold N stacked " +
                       std::to_string(p) + "x" + std::to_string(p) + " matrices");
    }
    std::vector<SymMatrix> family;
    for (Eigen::Index b = 0; b < stacked.rows() / p; ++b) {
      try {
        family.emplace_back(Eigen::MatrixXd(stacked.middleRows(b * p, p)));
      } catch (const InputError& e) {
        throw InputError("targets.path: matrix " + std::to_string(b) + ": " + e.what());
      }
    }
    return TargetSet::orthonormalize(family, "file(" + path.filename().string() + ")");
  }
  throw InputError("targets.kind: expected identity, blocks, sectors or file; got '" + kind + "'");
}

ExperimentConfig experiment_config_from_json(const Json& j,
                                             const std::filesystem::path& base_dir) {
  const std::string where = "config";
  check_keys(j, where,
             {"preset", "nu", "name", "p", "n", "replications", "distribution", "sigma",
              "target_blocks", "targets", "sweep", "mean", "fix_sigma", "track_min_eigenvalue",
              "seed", "threads", "tolerances"});
  ExperimentConfig c;
  if (j.contains("preset")) {
    const auto preset = field<std::string>(j, "preset", where);
    const int reps = j.contains("replications") ? field<int>(j, "replications", where) : 100;
    if (preset == "target-alignment-aligned") c = experiment_target_alignment(false, reps);
    else if (preset == "target-alignment-misaligned") c = experiment_target_alignment(true, reps);
    else if (preset == "useless-targets") c = experiment_useless_targets(reps);
    else if (preset == "heavy-tails") {
      c = experiment_heavy_tails(j.contains("nu") ? field<double>(j, "nu", where) : 9.0, reps);
    } else {
      throw InputError("config.preset: unknown preset '" + preset + "'");
    }
  } else if (j.contains("nu")) {
    throw InputError("config.nu: only valid with preset heavy-tails");
  }
  maybe(j, "name", where, c.name);
  maybe(j, "p", where, c.p);
  maybe(j, "n", where, c.n);
  maybe(j, "replications", where, c.replications);
  if (j.contains("distribution")) c.distribution = distribution_from_json(j.at("distribution"));
  if (j.contains("sigma")) c.sigma = sigma_from_json(j.at("sigma"), base_dir);
  maybe(j, "target_blocks", where, c.target_blocks);
  if (j.contains("sweep")) c.sweep = sweep_from_json(j.at("sweep"));
  if (j.contains("mean")) {
    const auto mean = field<std::string>(j, "mean", where);
    if (mean == "known") c.mean_mode = MeanMode::Known;
    else if (mean == "unknown") c.mean_mode = MeanMode::Unknown;
    else throw InputError("config.mean: expected known or unknown, got '" + mean + "'");
  }
  maybe(j, "fix_sigma", where, c.fix_sigma);
  maybe(j, "track_min_eigenvalue", where, c.track_min_eigenvalue);
  maybe(j, "seed", where, c.seed);
  maybe(j, "threads", where, c.threads);
  if (j.contains("tolerances")) c.tolerances = tolerances_from_json(j.at("tolerances"));
  if (j.contains("targets")) {
    const Json& t = j.at("targets");
    check_keys(t, "targets", {"kind", "shift", "extra", "sizes", "labels", "path"});
    const auto kind = field<std::string>(t, "kind", "targets");
    if (kind == "aligned") {
      c.plan = AlignedTargets{};
    } else if (kind == "misaligned") {
      MisalignedTargets m;
      maybe(t, "shift", "targets", m.shift);
      c.plan = m;
    } else if (kind == "aligned_plus_random") {
      AlignedPlusRandomTargets r;
      maybe(t, "extra", "targets", r.extra);
      c.plan = r;
    } else {
      // Any estimate-style target spec becomes a custom, fixed set.
      c.plan = CustomTargets{targets_from_json(t, c.p, base_dir)};
    }
  }
  c.validate();
  return c;
}

Json to_json(const ExperimentConfig& c) {
  Json j;
  j["name"] = c.name;
  j["p"] = c.p;
  j["n"] = c.n;
  j["replications"] = c.replications;
  j["distribution"] = std::visit(
      Overloaded{[](const Gaussian&) { return Json{{"kind", "gaussian"}}; },
                 [](const StudentT& t) { return Json{{"kind", "student_t"}, {"nu", t.nu}}; }},
      c.distribution);
  j["sigma"] = std::visit(
      Overloaded{[](const BlockWishartSigma& s) {
                   return Json{{"kind", "block_wishart"}, {"block_sizes", s.block_sizes},
                               {"block_count", s.block_count}, {"dof", s.dof},
                               {"scales", s.scales}, {"normalize", s.normalize}};
                 },
                 [](const ExplicitSigma& s) {
                   std::vector<std::vector<double>> rows;
                   for (Eigen::Index i = 0; i < s.sigma.dim(); ++i) {
                     rows.emplace_back();
                     for (Eigen::Index k = 0; k < s.sigma.dim(); ++k) rows.back().push_back(s.sigma(i, k));
                   }
                   return Json{{"kind", "explicit"}, {"matrix", rows}};
                 }},
      c.sigma);
  j["target_blocks"] = c.target_blocks;
  j["targets"] = std::visit(
      Overloaded{[](const AlignedTargets&) { return Json{{"kind", "aligned"}}; },
                 [](const MisalignedTargets& m) {
                   return Json{{"kind", "misaligned"}, {"shift", m.shift}};
                 },
                 [](const AlignedPlusRandomTargets& r) {
                   return Json{{"kind", "aligned_plus_random"}, {"extra", r.extra}};
                 },
                 [](const CustomTargets& t) {
                   return Json{{"kind", "custom"}, {"provenance", t.targets.provenance()},
                               {"count", t.targets.size()}};
                 }},
      c.plan);
  j["sweep"] = std::visit(
      Overloaded{[](const TargetCountSweep& s) {
                   return Json{{"kind", "targets"}, {"values", s.counts}};
                 },
                 [](const SampleSizeSweep& s) {
                   return Json{{"kind", "n"}, {"values", s.sizes}, {"p_ratio", s.p_ratio}};
                 }},
      c.sweep);
  j["mean"] = c.mean_mode == MeanMode::Known ? "known" : "unknown";
  j["fix_sigma"] = c.fix_sigma;
  j["track_min_eigenvalue"] = c.track_min_eigenvalue;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["tolerances"] = to_json(c.tolerances);
  return j;
}

Json to_json(const ExperimentReport& r) {
  Json rows = Json::array();
  for (const auto& row : r.rows) {
    rows.push_back(Json{{"estimator", row.estimator},
                        {"k_or_n", row.point},
                        {"p", row.p},
                        {"mean_loss", row.mean_loss},
                        {"stderr", row.loss_stderr},
                        {"prial", number_or_null(row.prial)},
                        {"prial_stderr", number_or_null(row.prial_stderr)},
                        {"replications", row.replications},
                        {"min_eigenvalue", number_or_null(row.min_eigenvalue)}});
  }
  return Json{{"config", to_json(r.config)}, {"rows", rows}, {"wall_seconds", r.wall_seconds}};
}

Json to_json(const ShrinkageResult& r) {
  Json vproj = Json::array();
  for (double v : r.vhat_proj) vproj.push_back(number_or_null(v));
  return Json{{"c0", r.c0},
              {"c0_unclamped", r.c0_unclamped},
              {"c_targets", r.c_targets},
              {"d_squared", r.d_squared},
              {"vhat_S", number_or_null(r.vhat_S)},
              {"vhat_proj", vproj},
              {"fallback_used", r.fallback_used}};
}

Json to_json(const BacktestReport& r) {
  Json months = Json::array();
  for (const auto& m : r.months) {
    months.push_back(Json{{"month", format_month(m.month)},
                          {"v_T", m.variance},
                          {"days", m.days},
                          {"fit_days", m.fit_days},
                          {"weight_sum", m.weight_sum},
                          {"min_eigenvalue", m.min_eigenvalue},
                          {"uniform_weights", m.uniform_weights}});
  }
  Json config{{"estimator", to_string(r.config.estimator)},
              {"K", r.config.window_months},
              {"unbiased_variance", r.config.unbiased_variance},
              {"tolerances", to_json(r.config.tolerances)}};
  config["first_month"] = r.config.first_month ? Json(format_month(*r.config.first_month)) : Json(nullptr);
  config["last_month"] = r.config.last_month ? Json(format_month(*r.config.last_month)) : Json(nullptr);
  return Json{{"config", config},
              {"months", months},
              {"skipped_months", r.skipped_months},
              {"cumulative_variance", r.cumulative_variance}};
}

}  // namespace mtse
