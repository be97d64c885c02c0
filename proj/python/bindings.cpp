#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "cli.hpp"
#include "replab/attrition.hpp"
#include "replab/bounds.hpp"
#include "replab/errors.hpp"
#include "replab/ess.hpp"
#include "replab/game.hpp"
#include "replab/io.hpp"
#include "replab/sde.hpp"

namespace py = pybind11;
using namespace replab;

namespace {

using Rows = std::vector<std::vector<double>>;

PayoffMatrix to_payoff(const Rows& rows) { return PayoffMatrix(Matrix::from_rows(rows)); }

py::array_t<double> to_array(const Matrix& m) {
  py::array_t<double> out({m.rows(), m.cols()});
  auto v = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) v(i, j) = m(i, j);
  return out;
}

SdeConfig config(double horizon, double h, std::uint64_t seed, std::size_t stride) {
  SdeConfig cfg;
  cfg.horizon = horizon;
  cfg.h = h;
  cfg.seed = seed;
  cfg.record_stride = stride;
  return cfg;
}

py::tuple trajectory_arrays(const Trajectory& t) {
  py::array_t<double> times(t.size());
  py::array_t<double> states({t.size(), t.dimension()});
  auto tv = times.mutable_unchecked<1>();
  auto sv = states.mutable_unchecked<2>();
  for (std::size_t i = 0; i < t.size(); ++i) {
    tv(i) = t.time(i);
    const auto x = t.state(i);
    for (std::size_t j = 0; j < x.size(); ++j) sv(i, j) = x[j];
  }
  return py::make_tuple(times, states);
}

py::dict equilibrium_dict(const EquilibriumReport& e) {
  py::dict d;
  d["strategy"] = e.strategy.vec();
  d["support"] = e.support;
  d["payoff"] = e.common_payoff;
  d["status"] = std::string(to_string(e.status));
  d["equal_payoff_residual"] = e.equal_payoff_residual;
  d["inequality_residual"] = e.inequality_residual;
  return d;
}

}  // namespace

PYBIND11_MODULE(_replab, m) {
  m.doc() = "Stochastic replicator dynamics laboratory";
  m.attr("__version__") = "0.3.0";

  py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);

  // game_core
  m.def("lambda2", [](const Rows& a) { return lambda2(to_payoff(a)); }, py::arg("A"));
  m.def("centered_symmetrization", [](const Rows& a) { return to_array(centered_symmetrization(Matrix::from_rows(a))); },
        py::arg("A"));
  m.def("is_cnd", [](const Rows& a) { return is_conditionally_negative_definite(to_payoff(a)); }, py::arg("A"));
  m.def("kappa", [](const std::vector<double>& p, const std::vector<double>& sigma) {
    return kappa(SimplexPoint::closure(p), NoiseSpec(sigma));
  }, py::arg("p"), py::arg("sigma"));
  m.def("kl_distance", [](const std::vector<double>& x, const std::vector<double>& p) {
    return kl_distance(SimplexPoint::interior(x), SimplexPoint::closure(p));
  }, py::arg("x"), py::arg("p"));
  m.def("dominance", [](const Rows& a, std::size_t k, const std::vector<double>& p) {
    const auto r = verify_dominance(to_payoff(a), k, SimplexPoint::closure(p));
    const char* kinds[] = {"none", "weak", "strict"};
    return py::make_tuple(kinds[static_cast<int>(r.kind)], r.c1);
  }, py::arg("A"), py::arg("k"), py::arg("p"), "Whether pure strategy k (0-based) is dominated by p, and c1.");

  // ess_solver
  m.def("solve_all_equilibria", [](const Rows& a) {
    py::list out;
    for (const auto& e : solve_all_equilibria(to_payoff(a)).equilibria) out.append(equilibrium_dict(e));
    return out;
  }, py::arg("A"));
  m.def("unique_ess", [](const Rows& a) { return equilibrium_dict(unique_ess_under_cnd(to_payoff(a))); },
        py::arg("A"));

  // sde_engine
  m.def("simulate_sde", [](const Rows& a, const std::vector<double>& sigma, const std::vector<double>& x0,
                           double horizon, double h, std::uint64_t seed, std::uint64_t path, std::size_t stride) {
    return trajectory_arrays(
        simulate_sde(to_payoff(a), NoiseSpec(sigma), SimplexPoint::interior(x0), config(horizon, h, seed, stride), path));
  }, py::arg("A"), py::arg("sigma"), py::arg("x0"), py::arg("T"), py::arg("h") = kDefaultStep, py::arg("seed") = 0,
        py::arg("path") = 0, py::arg("stride") = 0, "Returns (times, states).");
  m.def("simulate_ode", [](const Rows& a, const std::vector<double>& x0, double horizon, double h, std::size_t stride) {
    return trajectory_arrays(simulate_ode(to_payoff(a), SimplexPoint::interior(x0), config(horizon, h, 0, stride)));
  }, py::arg("A"), py::arg("x0"), py::arg("T"), py::arg("h") = kDefaultStep, py::arg("stride") = 0);
  m.def("batch_run", [](const Rows& a, const std::vector<double>& sigma, const std::vector<double>& x0, double horizon,
                        double h, std::uint64_t seed, std::size_t n_paths, const std::string& statistic,
                        unsigned workers) {
    const auto pa = to_payoff(a);
    BatchResult b;
    {
      py::gil_scoped_release release;
      b = batch_run(pa, NoiseSpec(sigma), SimplexPoint::interior(x0), config(horizon, h, seed, 0), n_paths,
                    parse_statistic(statistic, pa.size()), BatchOptions{workers});
    }
    py::dict d;
    d["statistic"] = b.statistic;
    d["mean"] = b.mean;
    d["std_error"] = b.std_error;
    d["n_paths"] = b.n_paths;
    d["n_failed"] = b.n_failed;
    d["seed"] = b.seed;
    d["per_path"] = b.per_path;
    d["json"] = batch_json(b);
    return d;
  }, py::arg("A"), py::arg("sigma"), py::arg("x0"), py::arg("T"), py::arg("h") = kDefaultStep, py::arg("seed") = 0,
        py::arg("n_paths") = 100, py::arg("statistic") = "final:1", py::arg("workers") = 0);

  // bounds_lab
  m.def("stationary_mass_bound", &stationary_mass_bound, py::arg("delta"), py::arg("kappa"), py::arg("lam2"));
  m.def("hitting_time_bound", py::overload_cast<double, double, double, double>(&hitting_time_bound), py::arg("d"),
        py::arg("delta"), py::arg("kappa"), py::arg("lam2"));
  m.def("time_avg_bound", py::overload_cast<double, double, double, double>(&time_avg_bound_2_4), py::arg("d"),
        py::arg("t"), py::arg("kappa"), py::arg("lam2"));
  m.def("extinction_tail_bound", [](const Rows& a, std::size_t k, const std::vector<double>& p,
                                    const std::vector<double>& sigma, const std::vector<double>& x, double eps,
                                    double t) {
    const auto c = extinction_constants(to_payoff(a), k, SimplexPoint::closure(p), NoiseSpec(sigma),
                                        SimplexPoint::interior(x));
    const auto b = extinction_tail_bound(c, eps, t);
    py::dict d;
    d["c1"] = c.c1;
    d["c2"] = c.c2;
    d["c3"] = c.c3_of_x;
    d["bound"] = b.displayed;
    d["proof_tight"] = b.proof_tight;
    d["rate"] = extinction_rate_bound(c);
    return d;
  }, py::arg("A"), py::arg("k"), py::arg("p"), py::arg("sigma"), py::arg("x"), py::arg("eps"), py::arg("t"));
  m.def("normal_cdf", &normal_cdf);

  // attrition
  m.def("attrition_payoff", [](std::size_t n, double v, double rho) {
    return to_array(build_constant(ConstantAttritionSpec{n, v, rho}).matrix());
  }, py::arg("n"), py::arg("v"), py::arg("rho") = 0.0);
  m.def("closed_form_ess", [](std::size_t n, double v, double rho) {
    const auto e = closed_form_ess(ConstantAttritionSpec{n, v, rho});
    py::dict d;
    d["p"] = e.p.vec();
    d["s"] = e.s ? py::cast(*e.s) : py::none();
    d["c"] = e.c ? py::cast(*e.c) : py::none();
    return d;
  }, py::arg("n"), py::arg("v"), py::arg("rho") = 0.0);
  m.def("det_B", [](std::size_t n, double v, double rho) { return det_B_5_4(ConstantAttritionSpec{n, v, rho}); },
        py::arg("n"), py::arg("v"), py::arg("rho") = 0.0);
  m.def("chebyshev_u", &chebyshev_u, py::arg("k"), py::arg("rho"), py::arg("gamma_sq"));
  m.def("ess_sweep_csv", [](std::size_t n_max, double v_step) {
    SweepGrid g;
    g.n_max = n_max;
    g.v_step = v_step;
    return sweep_csv(ess_sweep(g));
  }, py::arg("n_max") = 8, py::arg("v_step") = 0.25);

  // cli
  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    int code;
    {
      py::gil_scoped_release release;
      code = cli::run(args, out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"), "Runs the replab command line in-process; returns (exit_code, stdout, stderr).");
}
