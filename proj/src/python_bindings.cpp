#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "levylse/asymptotics.hpp"
#include "levylse/cli.hpp"
#include "levylse/errors.hpp"
#include "levylse/lse.hpp"
#include "levylse/mc_harness.hpp"
#include "levylse/sde_sim.hpp"

namespace py = pybind11;
using namespace levylse;

namespace {

using BoxArg = std::optional<std::vector<std::pair<double, double>>>;

ModelCatalogEntry make_model(const std::string& id, const BoxArg& box) {
  if (!box) return catalog::make(id);
  ParameterBox b;
  for (const auto& [lo, hi] : *box) {
    b.lo.push_back(lo);
    b.hi.push_back(hi);
  }
  return catalog::make(id, ParameterBox(b.lo, b.hi));
}

void check_coord(const LevySpec& spec, std::size_t coord) {
  if (coord >= spec.jumps.size()) throw ValidationError("jump coordinate out of range");
}

py::dict result_dict(const EstimationResult& r) {
  py::dict d;
  d["theta_hat"] = r.theta_hat;
  d["contrast"] = r.contrast_value;
  d["method"] = to_string(r.method);
  d["iterations"] = r.iterations;
  d["converged"] = r.converged;
  d["boundary_hit"] = r.boundary_hit;
  d["score_norm"] = r.score_norm_at_solution;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Least-squares drift estimation for SDEs driven by small Levy noise";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  py::class_<LevySpec>(m, "LevySpec")
      .def_static("zero", &LevySpec::zero, py::arg("d"))
      .def_static("brownian", &LevySpec::brownian, py::arg("d"), py::arg("scale") = 1.0)
      .def_readwrite("drift", &LevySpec::drift)
      .def_readwrite("sigma", &LevySpec::sigma)
      .def_property_readonly("dim", &LevySpec::dim)
      .def(
          "set_stable",
          [](LevySpec& s, std::size_t i, double alpha, double beta, double scale) -> LevySpec& {
            check_coord(s, i);
            s.jumps[i] = StableJumps{alpha, beta, scale};
            return s;
          },
          py::arg("coord"), py::arg("alpha"), py::arg("beta") = 0.0, py::arg("scale") = 1.0,
          py::return_value_policy::reference_internal)
      .def(
          "set_compound_poisson",
          [](LevySpec& s, std::size_t i, double rate, const std::string& sizes, double p1, double p2) -> LevySpec& {
            check_coord(s, i);
            s.jumps[i] = CompoundPoissonJumps{rate, JumpDistribution::parse(sizes, p1, p2)};
            return s;
          },
          py::arg("coord"), py::arg("rate"), py::arg("sizes") = "normal", py::arg("p1") = 0.0, py::arg("p2") = 1.0,
          py::return_value_policy::reference_internal)
      .def(
          "set_truncated_stable",
          [](LevySpec& s, std::size_t i, double alpha, double c_plus, double c_minus, double eta) -> LevySpec& {
            check_coord(s, i);
            s.jumps[i] = TruncatedStableJumps{alpha, c_plus, c_minus, eta};
            return s;
          },
          py::arg("coord"), py::arg("alpha"), py::arg("c_plus") = 1.0, py::arg("c_minus") = 1.0,
          py::arg("eta") = 1e-3, py::return_value_policy::reference_internal)
      .def("validate", &LevySpec::validate);

  m.def("model_ids", &catalog::ids);

  m.def(
      "simulate",
      [](const std::string& model, const Eigen::VectorXd& theta0, const Eigen::VectorXd& x0, const LevySpec& levy,
         double epsilon, std::size_t n, std::size_t substeps, std::uint64_t seed, std::uint64_t replication,
         const BoxArg& box) {
        const auto entry = make_model(model, box);
        SimConfig c;
        c.epsilon = epsilon;
        c.n = n;
        c.substeps = substeps;
        c.theta0 = theta0;
        c.x0 = x0;
        c.levy = levy;
        c.seed = seed;
        c.replication = replication;
        ObservationSet obs;
        {
          py::gil_scoped_release release;
          obs = simulate(c, entry.model);
        }
        return py::make_tuple(Eigen::Map<const Eigen::VectorXd>(obs.times.data(), static_cast<Eigen::Index>(obs.times.size())).eval(),
                              obs.values);
      },
      py::arg("model"), py::arg("theta0"), py::arg("x0"), py::arg("levy"), py::arg("epsilon"), py::arg("n"),
      py::arg("substeps") = 100, py::arg("seed") = 0, py::arg("replication") = 0, py::arg("box") = py::none(),
      "Euler simulation; returns (times, values) with values of shape (n + 1, d).");

  m.def(
      "estimate",
      [](const RowMatrix& values, const std::string& model, double epsilon, const std::string& method,
         std::size_t starts, const BoxArg& box) {
        const auto entry = make_model(model, box);
        const auto obs = ObservationSet::from_values(values);
        return result_dict(estimate(obs, entry.model, epsilon, parse_estimator(method), starts));
      },
      py::arg("values"), py::arg("model"), py::arg("epsilon"), py::arg("method") = "auto", py::arg("starts") = 8,
      py::arg("box") = py::none());

  m.def(
      "contrast",
      [](const RowMatrix& values, const std::string& model, const Eigen::VectorXd& theta, double epsilon,
         const BoxArg& box) {
        return contrast(ObservationSet::from_values(values), make_model(model, box).model, theta, epsilon);
      },
      py::arg("values"), py::arg("model"), py::arg("theta"), py::arg("epsilon"), py::arg("box") = py::none());

  m.def(
      "score",
      [](const RowMatrix& values, const std::string& model, const Eigen::VectorXd& theta, const BoxArg& box) {
        return score(ObservationSet::from_values(values), make_model(model, box).model, theta);
      },
      py::arg("values"), py::arg("model"), py::arg("theta"), py::arg("box") = py::none());

  m.def(
      "information_matrix",
      [](const std::string& model, const Eigen::VectorXd& theta0, const Eigen::VectorXd& x0, std::size_t m_steps) {
        const auto entry = catalog::make(model);
        return information_matrix(entry.model, solve_x0(entry, theta0, x0), theta0, m_steps).matrix;
      },
      py::arg("model"), py::arg("theta0"), py::arg("x0"), py::arg("m") = 10000);

  m.def(
      "sample_limit",
      [](const std::string& model, const Eigen::VectorXd& theta0, const Eigen::VectorXd& x0, const LevySpec& levy,
         std::size_t count, std::size_t fine_m, std::uint64_t seed, std::size_t threads) {
        const auto entry = catalog::make(model);
        py::gil_scoped_release release;
        return sample_limit_distribution(entry.model, solve_x0(entry, theta0, x0), theta0, levy, count, fine_m, seed,
                                         threads)
            .draws;
      },
      py::arg("model"), py::arg("theta0"), py::arg("x0"), py::arg("levy"), py::arg("count"),
      py::arg("fine_m") = 10000, py::arg("seed") = 0, py::arg("threads") = 1,
      "Draws of I^{-1} S by pathwise left-point sums; shape (count, p).");

  m.def(
      "sample_limit_closed_form_sqrt_shift",
      [](double theta0, double x0, double a, double sigma, double alpha, double beta, std::size_t count,
         std::uint64_t seed) {
        py::gil_scoped_release release;
        return sample_limit_closed_form_sqrt_shift(theta0, x0, a, sigma, alpha, beta, count, seed).draws;
      },
      py::arg("theta0"), py::arg("x0"), py::arg("a"), py::arg("sigma"), py::arg("alpha"), py::arg("beta"),
      py::arg("count"), py::arg("seed") = 0);

  m.def(
      "ks_two_sample",
      [](const std::vector<double>& x, const std::vector<double>& y) { return ks_two_sample(x, y); }, py::arg("x"),
      py::arg("y"));
  m.def("ks_critical_value_1pct", &ks_critical_value_1pct, py::arg("n"), py::arg("m"));

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the levy_lse command line in-process; returns (exit_code, stdout, stderr).");
}
