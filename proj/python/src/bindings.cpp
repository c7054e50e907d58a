#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "mtse/backtest.hpp"
#include "mtse/config_json.hpp"
#include "mtse/estimators.hpp"
#include "mtse/simulation.hpp"

namespace py = pybind11;
using namespace mtse;

namespace {

py::object to_python(const Json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

Json from_python(const py::object& o) {
  return Json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

ObservationMatrix observations(const Eigen::MatrixXd& data, const std::optional<Eigen::VectorXd>& mean) {
  if (mean) return ObservationMatrix(data, *mean);
  return ObservationMatrix(data);
}

TargetSet target_set(const std::vector<Eigen::MatrixXd>& targets, Eigen::Index p) {
  if (targets.empty()) return identity_target(p);
  std::vector<SymMatrix> family;
  for (const auto& t : targets) family.emplace_back(t);
  return TargetSet::orthonormalize(family, "python");
}

py::dict result_dict(const ShrinkageResult& r) {
  py::dict d = to_python(to_json(r));
  d["estimate"] = r.estimate.matrix();
  d["unprojected"] = r.unprojected.matrix();
  return d;
}

std::vector<Eigen::MatrixXd> matrices(const TargetSet& t) {
  std::vector<Eigen::MatrixXd> out;
  for (const auto& m : t.members()) out.push_back(m.matrix());
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multi-target shrinkage covariance estimation";

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def("scaled_inner", [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return scaled_inner(SymMatrix(a), SymMatrix(b));
  }, py::arg("a"), py::arg("b"), "Tr(A B^T) / p.");
  m.def("psd_project", [](const Eigen::MatrixXd& a) { return psd_project(SymMatrix(a)).matrix(); },
        py::arg("a"));
  m.def("orthonormalize", [](const std::vector<Eigen::MatrixXd>& family) {
    return matrices(target_set(family, family.empty() ? 1 : family.front().rows()));
  }, py::arg("family"));
  m.def("block_identity_targets", [](const std::vector<int>& sizes) {
    return matrices(block_identity_targets(sizes));
  }, py::arg("block_sizes"));
  m.def("sector_targets", [](const std::vector<std::string>& labels) {
    return matrices(sector_targets(labels));
  }, py::arg("labels"));

  m.def("sample_covariance", [](const Eigen::MatrixXd& data, const std::optional<Eigen::VectorXd>& mean) {
    return sample_covariance(observations(data, mean)).matrix();
  }, py::arg("data"), py::arg("mean") = py::none(),
     "Data is p x n (one observation per column). Pass `mean` for the known-mean form.");
  m.def("vhat_s", [](const Eigen::MatrixXd& data, const std::optional<Eigen::VectorXd>& mean) {
    const auto x = observations(data, mean);
    return vhat_S(x, sample_covariance(x));
  }, py::arg("data"), py::arg("mean") = py::none());
  m.def("vhat_proj", [](const Eigen::MatrixXd& data, const Eigen::MatrixXd& target,
                        const std::optional<Eigen::VectorXd>& mean) {
    const auto x = observations(data, mean);
    return vhat_proj(x, sample_covariance(x), SymMatrix(target));
  }, py::arg("data"), py::arg("target"), py::arg("mean") = py::none());

  m.def("mtse", [](const Eigen::MatrixXd& data, const std::vector<Eigen::MatrixXd>& targets,
                   const std::optional<Eigen::VectorXd>& mean) {
    return result_dict(mtse::mtse(observations(data, mean), target_set(targets, data.rows())));
  }, py::arg("data"), py::arg("targets") = std::vector<Eigen::MatrixXd>{}, py::arg("mean") = py::none(),
     "Bona fide estimator; targets are orthonormalized first (identity if empty).");
  m.def("lw_estimator", [](const Eigen::MatrixXd& data, const std::optional<Eigen::VectorXd>& mean) {
    return result_dict(lw_estimator(observations(data, mean)));
  }, py::arg("data"), py::arg("mean") = py::none());
  m.def("oracle_mtse", [](const Eigen::MatrixXd& s, const std::vector<Eigen::MatrixXd>& targets,
                          const Eigen::MatrixXd& sigma) {
    return result_dict(oracle_mtse(SymMatrix(s), target_set(targets, s.rows()), SymMatrix(sigma)));
  }, py::arg("s"), py::arg("targets"), py::arg("sigma"));

  m.def("run_experiment", [](const py::object& config) {
    const ExperimentConfig c = experiment_config_from_json(from_python(config), ".");
    ExperimentReport report;
    {
      py::gil_scoped_release release;
      report = run_experiment(c);
    }
    return to_python(to_json(report));
  }, py::arg("config"), "Runs a study from a config dict (same keys as the CLI JSON).");

  m.def("gmv_weights", [](const Eigen::MatrixXd& sigma_hat) {
    return Eigen::VectorXd(gmv_weights(SymMatrix(sigma_hat)));
  }, py::arg("sigma_hat"));
  m.def("run_backtest", [](const std::filesystem::path& prices, const std::filesystem::path& sectors,
                           int window_months, const std::string& estimator) {
    const ReturnsPanel panel = ingest_prices(prices, sectors);
    BacktestConfig c;
    c.window_months = window_months;
    c.estimator = parse_backtest_estimator(estimator);
    return to_python(to_json(run_backtest(panel, c)));
  }, py::arg("prices"), py::arg("sectors"), py::arg("window_months") = 3,
     py::arg("estimator") = "mtse-sectors");
}
