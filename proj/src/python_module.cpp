#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "fgsa/error.hpp"
#include "fgsa/errquant.hpp"
#include "fgsa/pipeline.hpp"
#include "fgsa/validation.hpp"

namespace py = pybind11;
using namespace fgsa;

namespace {

InputSpace make_space(const std::vector<std::pair<double, double>>& bounds) {
  std::vector<VariableBounds> b;
  for (auto [lo, hi] : bounds) b.push_back({lo, hi});
  return InputSpace(std::move(b));
}

InputSpace space_arg(const py::object& space) {
  if (py::isinstance<py::int_>(space)) return InputSpace::unit_cube(space.cast<int>());
  return make_space(space.cast<std::vector<std::pair<double, double>>>());
}

PcaCriterion criterion_arg(std::optional<int> components, double threshold) {
  return components ? PcaCriterion::fixed(*components) : PcaCriterion::variance(threshold);
}

py::dict estimates_dict(const IndexDistribution& dist) {
  py::dict out;
  for (const IndexEstimates& e : dist.estimates) {
    py::dict d;
    d["maps"] = e.maps;
    d["gsi"] = e.gsi;
    out[to_string(e.kind)] = d;
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Functional global sensitivity analysis with GP error quantification";
  m.attr("__version__") = kVersion;

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());

  m.def(
      "lhs_sample",
      [](const py::object& space, int n, Seed seed) { return lhs_sample(space_arg(space), n, seed).points(); },
      py::arg("space"), py::arg("n"), py::arg("seed"),
      "Latin hypercube sample; `space` is a dimension count or a list of (lower, upper).");
  m.def(
      "mc_sample",
      [](const py::object& space, int n, Seed seed) { return mc_sample(space_arg(space), n, seed).points(); },
      py::arg("space"), py::arg("n"), py::arg("seed"));

  m.def(
      "additive_sine",
      [](const Eigen::MatrixXd& x, int output_dims) { return TestModel::additive_sine(output_dims).evaluate(x).values; },
      py::arg("x"), py::arg("output_dims"));
  m.def("angle_grid", &angle_grid, py::arg("m"));

  py::class_<BasisExpansion>(m, "Basis")
      .def_property_readonly("mean", &BasisExpansion::mean)
      .def_property_readonly("components", &BasisExpansion::components)
      .def_property_readonly("coefficients", &BasisExpansion::coefficients)
      .def_property_readonly("gram", &BasisExpansion::gram)
      .def_property_readonly("explained_ratio", &BasisExpansion::explained_ratio)
      .def_property_readonly("size", &BasisExpansion::size)
      .def("project", &BasisExpansion::project, py::arg("outputs"))
      .def("reconstruct", &BasisExpansion::reconstruct, py::arg("coefficients"));

  m.def(
      "fit_pca",
      [](const Eigen::MatrixXd& outputs, std::optional<int> components, double threshold) {
        return fit_pca(FunctionalOutputs{outputs, {}}, criterion_arg(components, threshold));
      },
      py::arg("outputs"), py::arg("components") = py::none(), py::arg("threshold") = 0.99);

  py::class_<VectorGp>(m, "VectorGp")
      .def_property_readonly("size", &VectorGp::size)
      .def(
          "predict",
          [](const VectorGp& v, const Eigen::MatrixXd& x) {
            Eigen::MatrixXd out(x.rows(), v.size());
            for (int q = 0; q < v.size(); ++q) out.col(q) = v[q].predict(x);
            return out;
          },
          py::arg("x"))
      .def(
          "params",
          [](const VectorGp& v, int q) {
            const KernelParams& p = v[q].params();
            py::dict d;
            d["lengthscales"] = p.lengthscales;
            d["signal_variance"] = p.signal_variance;
            d["nugget"] = p.nugget;
            return d;
          },
          py::arg("q"));

  m.def(
      "fit_vector_gp",
      [](const Eigen::MatrixXd& x, const BasisExpansion& basis, const py::object& space, int starts) {
        GpOptions opts;
        opts.starts = starts;
        const InputSpace s = space.is_none() ? InputSpace::unit_cube(static_cast<int>(x.cols())) : space_arg(space);
        py::gil_scoped_release release;
        return fit_vector_gp(DesignMatrix(x, s), basis, opts);
      },
      py::arg("x"), py::arg("basis"), py::arg("space") = py::none(), py::arg("starts") = 8);

  m.def(
      "sample_trajectories",
      [](const VectorGp& vgp, const Eigen::MatrixXd& query, int n_z, Seed seed, bool per_trajectory) {
        SamplingOptions opts;
        opts.mode = per_trajectory ? SamplingMode::PerTrajectory : SamplingMode::Batch;
        py::gil_scoped_release release;
        return sample_trajectories(vgp, query, n_z, seed, opts).draws;
      },
      py::arg("vgp"), py::arg("query"), py::arg("n_z"), py::arg("seed"), py::arg("per_trajectory") = false);

  m.def(
      "vector_closed_pf",
      [](const Eigen::MatrixXd& y, const Eigen::MatrixXd& y_star) {
        const SobolMatrixEstimate e = vector_closed_pf({y, y_star});
        py::dict d;
        d["closed"] = e.closed;
        d["cov"] = e.cov;
        d["mean"] = e.mean;
        return d;
      },
      py::arg("y"), py::arg("y_star"));
  m.def("vector_total_jansen", &vector_total_jansen, py::arg("y"), py::arg("y_star_total"));
  m.def(
      "sensitivity_map",
      [](const Eigen::MatrixXd& numerator, const Eigen::MatrixXd& variance, const Eigen::MatrixXd& components) {
        return reproject_map(numerator, variance, components).values;
      },
      py::arg("numerator"), py::arg("variance"), py::arg("components"));
  m.def(
      "gsi",
      [](const Eigen::MatrixXd& numerator, const Eigen::MatrixXd& variance, const Eigen::MatrixXd& gram) {
        return gsi(numerator, variance, gram, IndexKind::Closed).value;
      },
      py::arg("numerator"), py::arg("variance"), py::arg("gram"));

  m.def(
      "run_basis_derived",
      [](const VectorGp& vgp, const BasisExpansion& basis, const py::object& space, std::vector<int> variables,
         int n_pf, int n_z, int n_x, Seed seed, bool totals, bool fixed_covariance) {
        const InputSpace s = space_arg(space);
        RunConfig cfg;
        cfg.n_pf = n_pf;
        cfg.n_z = n_z;
        cfg.n_x = n_x;
        cfg.seed = seed;
        cfg.totals = totals;
        cfg.covariance = fixed_covariance ? CovarianceMode::Fixed : CovarianceMode::Empirical;
        IndexDistribution dist = [&] {
          py::gil_scoped_release release;
          return run_algorithm3(vgp, basis, s, IndexSet(std::move(variables), s.dims()), cfg);
        }();
        return estimates_dict(dist);
      },
      py::arg("vgp"), py::arg("basis"), py::arg("space"), py::arg("variables"), py::arg("n_pf"), py::arg("n_z"),
      py::arg("n_x"), py::arg("seed"), py::arg("totals") = false, py::arg("fixed_covariance") = false,
      "Index distributions per kind: maps (m x n_z*n_x) and gsi (n_z x n_x).");

  m.def(
      "predicted_costs",
      [](int p, int n_pf, int m) {
        const CostPrediction c = predicted_costs(p, n_pf, m);
        return py::make_tuple(c.cost_dw, c.cost_bd, c.lower_bound_ratio);
      },
      py::arg("p"), py::arg("n_pf"), py::arg("m"), "(dimension-wise cost, basis-derived cost, lower-bound ratio)");

  m.def(
      "q2",
      [](const Eigen::VectorXd& predicted, const Eigen::VectorXd& observed) { return q2(predicted, observed); },
      py::arg("predicted"), py::arg("observed"));

  m.def(
      "run_config",
      [](const std::filesystem::path& path, const std::string& command) {
        const PipelineConfig cfg = load_config(path);
        py::gil_scoped_release release;
        if (command == "run") cmd_run(cfg);
        else if (command == "sweep") cmd_sweep(cfg);
        else if (command == "validate") cmd_validate(cfg);
        else if (command == "fit") cmd_fit(cfg);
        else if (command == "bench") cmd_bench(cfg);
        else throw InvalidArgument("unknown command '" + command + "'");
        return cfg.output;
      },
      py::arg("path"), py::arg("command") = "run", "Runs a CLI verb from a YAML config; returns the output directory.");
}
