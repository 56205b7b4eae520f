#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "frisk/config.hpp"
#include "frisk/design.hpp"
#include "frisk/error.hpp"
#include "frisk/frc.hpp"
#include "frisk/gp.hpp"
#include "frisk/pli.hpp"
#include "frisk/sobol.hpp"
#include "frisk/testbed.hpp"

namespace py = pybind11;
using namespace frisk;

namespace {

MomentKind parse_moment(const std::string& kind) {
    if (kind == "mean") return MomentKind::Mean;
    if (kind == "variance") return MomentKind::Variance;
    throw ConfigError("moment kind must be 'mean' or 'variance'");
}

DesignScheme parse_scheme(const std::string& scheme) {
    if (scheme == "LHS") return DesignScheme::LHS;
    if (scheme == "MC") return DesignScheme::MC;
    throw ConfigError("design scheme must be 'LHS' or 'MC'");
}

NuggetPolicy parse_nugget(const py::object& nugget) {
    if (nugget.is_none()) return NuggetPolicy::none();
    if (py::isinstance<py::str>(nugget)) {
        const auto s = nugget.cast<std::string>();
        if (s == "adaptive") return NuggetPolicy::adaptive();
        if (s == "none") return NuggetPolicy::none();
        throw ConfigError("nugget must be 'adaptive', 'none', None or a number");
    }
    return NuggetPolicy::fixed(nugget.cast<double>());
}

py::dict band_dict(const std::vector<FrcBand>& bands) {
    py::dict out;
    for (const auto& b : bands) {
        py::dict entry;
        entry["lo"] = b.lo;
        entry["hi"] = b.hi;
        out[py::float_(b.level)] = entry;
    }
    return out;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.attr("__version__") = FRISK_VERSION_STRING;

    py::register_exception<ConfigError>(m, "FriskConfigError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "FriskNumericalError", PyExc_RuntimeError);
    py::register_exception<DegenerateError>(m, "FriskDegenerateError", PyExc_RuntimeError);

    py::class_<ScalarDistribution>(m, "ScalarDistribution")
        .def_static("uniform", &ScalarDistribution::uniform, py::arg("lo"), py::arg("hi"))
        .def_static("gaussian", &ScalarDistribution::gaussian, py::arg("mu"), py::arg("sigma"))
        .def("density", &ScalarDistribution::density)
        .def("mean", &ScalarDistribution::mean)
        .def("variance", &ScalarDistribution::variance)
        .def("__repr__", &ScalarDistribution::describe);

    py::class_<TiltedDistribution>(m, "TiltedDistribution")
        .def("density", &TiltedDistribution::density)
        .def("likelihood_ratio", &TiltedDistribution::likelihood_ratio)
        .def("mean", &TiltedDistribution::mean)
        .def("variance", &TiltedDistribution::variance)
        .def_property_readonly("lambda_",
                               [](const TiltedDistribution& t) {
                                   std::vector<double> l(t.lambda().begin(),
                                                         t.lambda().begin() + t.n_lambda());
                                   return l;
                               })
        .def_property_readonly("log_normalizer", &TiltedDistribution::log_normalizer);

    py::class_<InputModel>(m, "InputModel")
        .def(py::init<std::vector<ScalarDistribution>, double, double>(), py::arg("marginals"),
             py::arg("a_min"), py::arg("a_max"))
        .def_readonly("marginals", &InputModel::marginals)
        .def_readonly("a_min", &InputModel::a_min)
        .def_readonly("a_max", &InputModel::a_max)
        .def_property_readonly("dim", &InputModel::dim);

    m.def("kl_tilt",
          [](const ScalarDistribution& base, const std::string& kind, double delta) {
              return kl_tilt(base, parse_moment(kind), delta);
          },
          py::arg("base"), py::arg("kind"), py::arg("delta"));
    m.def("kl_divergence", &kl_divergence, py::arg("tilted"), py::arg("base"));
    m.def("sample",
          [](const ScalarDistribution& d, int n, std::uint64_t seed) {
              return sample(d, n, seed);
          },
          py::arg("dist"), py::arg("n"), py::arg("seed") = 0);
    m.def("sample",
          [](const TiltedDistribution& d, int n, std::uint64_t seed) {
              return sample(d, n, seed);
          },
          py::arg("dist"), py::arg("n"), py::arg("seed") = 0);

    py::class_<DesignMatrix>(m, "DesignMatrix")
        .def(py::init([](Eigen::VectorXd a, Eigen::MatrixXd x, py::object y) {
                 DesignMatrix d;
                 d.a = std::move(a);
                 d.x = std::move(x);
                 if (!y.is_none()) d.y = y.cast<Eigen::VectorXd>();
                 return d;
             }),
             py::arg("a"), py::arg("x"), py::arg("y") = py::none())
        .def_readwrite("a", &DesignMatrix::a)
        .def_readwrite("x", &DesignMatrix::x)
        .def_readwrite("y", &DesignMatrix::y)
        .def_property_readonly("n", &DesignMatrix::n)
        .def_property_readonly("dim", &DesignMatrix::dim);

    m.def("generate_design",
          [](const InputModel& model, int n, const std::string& scheme, std::uint64_t seed) {
              return generate_design(model, n, parse_scheme(scheme), seed);
          },
          py::arg("input"), py::arg("n"), py::arg("scheme") = "LHS", py::arg("seed") = 0);
    m.def("save_design_csv", &save_csv, py::arg("path"), py::arg("design"));
    m.def("load_design_csv", &load_csv, py::arg("path"));

    py::class_<AnalyticModel>(m, "AnalyticModel")
        .def(py::init([](double b0, double b1, Eigen::VectorXd c, py::object sine_amp) {
                 AnalyticModel mdl;
                 mdl.b0 = b0;
                 mdl.b1 = b1;
                 mdl.coeff = std::move(c);
                 if (sine_amp.is_none())
                     mdl.sine_amp = Eigen::VectorXd::Zero(mdl.coeff.size());
                 else
                     mdl.sine_amp = sine_amp.cast<Eigen::VectorXd>();
                 return mdl;
             }),
             py::arg("b0"), py::arg("b1"), py::arg("c"), py::arg("sine_amp") = py::none())
        .def("__call__", &AnalyticModel::eval, py::arg("a"), py::arg("x"));

    m.def("evaluate_design", &evaluate_analytic, py::arg("model"), py::arg("design"));
    m.def("oracle_frc", &oracle_frc, py::arg("model"), py::arg("input"), py::arg("s"),
          py::arg("a"));
    m.def("oracle_frc_mc", &oracle_frc_mc, py::arg("model"), py::arg("input"), py::arg("s"),
          py::arg("a"), py::arg("n"), py::arg("seed") = 0);

    py::class_<FittedGp>(m, "FittedGp")
        .def("predict",
             [](const FittedGp& gp, const Eigen::VectorXd& a, const Eigen::MatrixXd& x) {
                 PointSet pts{a, x};
                 const GpPrediction p = gp.predict(pts);
                 return py::make_tuple(p.mean, p.variance);
             },
             py::arg("a"), py::arg("x"))
        .def("simulate",
             [](const FittedGp& gp, const Eigen::VectorXd& a, const Eigen::MatrixXd& x, int msim,
                std::uint64_t seed) {
                 PointSet pts{a, x};
                 return gp.simulate_conditional(pts, msim, seed).values;
             },
             py::arg("a"), py::arg("x"), py::arg("m"), py::arg("seed") = 0)
        .def("to_json", [](const FittedGp& gp) { return gp.to_json().dump(2); })
        .def_static("from_json",
                    [](const std::string& text) {
                        return FittedGp::from_json(nlohmann::json::parse(text));
                    })
        .def_property_readonly("lengthscales",
                               [](const FittedGp& gp) { return gp.kernel().lengthscales; })
        .def_property_readonly("variance",
                               [](const FittedGp& gp) { return gp.kernel().variance; })
        .def_property_readonly("nugget", [](const FittedGp& gp) { return gp.kernel().nugget; })
        .def_property_readonly("beta0", [](const FittedGp& gp) { return gp.trend().beta0; })
        .def_property_readonly("beta1", [](const FittedGp& gp) { return gp.trend().beta1; });

    m.def("fit_gp",
          [](const DesignMatrix& design, bool trend, const py::object& nugget, int multistarts,
             std::uint64_t seed) {
              GpFitOptions opt;
              opt.trend_on = trend;
              opt.nugget = parse_nugget(nugget);
              opt.multistarts = multistarts;
              opt.seed = seed;
              return fit_gp(design, opt);
          },
          py::arg("design"), py::arg("trend") = true, py::arg("nugget") = "adaptive",
          py::arg("multistarts") = 10, py::arg("seed") = 0);

    m.def("gp_log_likelihood",
          [](const DesignMatrix& design, const Eigen::VectorXd& lengthscales, double variance,
             double nugget, double beta0, double beta1, bool grad) -> py::tuple {
              KernelSpec k{lengthscales, variance, nugget};
              TrendSpec t{beta0, beta1, true};
              if (!grad) return py::make_tuple(gp_log_likelihood(design, k, t), py::none());
              Eigen::VectorXd g;
              const double ll = gp_log_likelihood(design, k, t, &g);
              return py::make_tuple(ll, py::cast(g));
          },
          py::arg("design"), py::arg("lengthscales"), py::arg("variance"), py::arg("nugget"),
          py::arg("beta0"), py::arg("beta1"), py::arg("grad") = false);

    py::class_<BerensFit>(m, "BerensFit")
        .def_readonly("alpha", &BerensFit::alpha)
        .def_readonly("beta", &BerensFit::beta)
        .def_readonly("alpha_se", &BerensFit::alpha_se)
        .def_readonly("beta_se", &BerensFit::beta_se)
        .def_readonly("beta0", &BerensFit::beta0)
        .def_readonly("beta1", &BerensFit::beta1)
        .def_readonly("sigma_eps", &BerensFit::sigma_eps)
        .def_readonly("lambda_", &BerensFit::lambda)
        .def("frc", &BerensFit::frc)
        .def("inverse", &BerensFit::inverse);

    m.def("fit_berens",
          [](const Eigen::VectorXd& a, const Eigen::VectorXd& y, double s, bool boxcox,
             py::object fixed_lambda) {
              std::optional<double> fl;
              if (!fixed_lambda.is_none()) fl = fixed_lambda.cast<double>();
              return fit_berens(a, y, s, boxcox, fl);
          },
          py::arg("a"), py::arg("y"), py::arg("s"), py::arg("boxcox") = false,
          py::arg("fixed_lambda") = py::none());

    py::class_<FrcCurve>(m, "FrcCurve")
        .def_readonly("a_grid", &FrcCurve::a_grid)
        .def_readonly("estimate", &FrcCurve::estimate)
        .def_readonly("pointwise_only", &FrcCurve::pointwise_only)
        .def_readonly("n_used", &FrcCurve::n_used)
        .def_readonly("warnings", &FrcCurve::warnings)
        .def_property_readonly("gp_band", [](const FrcCurve& c) { return band_dict(c.gp_only); })
        .def_property_readonly("mc_band", [](const FrcCurve& c) { return band_dict(c.mc_only); })
        .def_property_readonly("band", [](const FrcCurve& c) { return band_dict(c.combined); });

    m.def("frc_mean_gp", &frc_mean_gp, py::arg("gp"), py::arg("input"), py::arg("s"),
          py::arg("a_grid"), py::arg("n"), py::arg("seed") = 0);

    m.def("frc_double_mc",
          [](const FittedGp& gp, const InputModel& input, double s, const Eigen::VectorXd& a_grid,
             int n, int msim, int n_clt, std::vector<double> levels, int sim_budget,
             std::uint64_t seed) {
              FrcOptions opt;
              opt.n = n;
              opt.m = msim;
              opt.n_clt = n_clt;
              opt.levels = std::move(levels);
              opt.sim_budget = sim_budget;
              opt.seed = seed;
              return frc_double_mc(gp, input, s, a_grid, opt);
          },
          py::arg("gp"), py::arg("input"), py::arg("s"), py::arg("a_grid"), py::arg("n") = 10000,
          py::arg("m") = 3000, py::arg("n_clt") = 100000,
          py::arg("levels") = std::vector<double>{0.90}, py::arg("sim_budget") = 2000,
          py::arg("seed") = 0);

    m.def("frc_inverse",
          [](const Eigen::VectorXd& a_grid, const Eigen::VectorXd& values, double p) {
              bool rectified = false;
              const double a = frc_inverse(a_grid, values, p, &rectified);
              return py::make_tuple(a, rectified);
          },
          py::arg("a_grid"), py::arg("values"), py::arg("p"));

    py::class_<SobolOptions>(m, "SobolOptions")
        .def(py::init([](int n_pf, int B, std::uint64_t seed) {
                 SobolOptions o;
                 o.n_pf = n_pf;
                 o.B = B;
                 o.seed = seed;
                 return o;
             }),
             py::arg("n_pf") = 10000, py::arg("B") = 200, py::arg("seed") = 0);

    py::class_<SobolResult>(m, "SobolResult")
        .def_property_readonly("S",
                               [](const SobolResult& r) {
                                   std::vector<double> v;
                                   for (const auto& i : r.inputs) v.push_back(i.S);
                                   return v;
                               })
        .def_property_readonly("T",
                               [](const SobolResult& r) {
                                   std::vector<double> v;
                                   for (const auto& i : r.inputs) v.push_back(i.T);
                                   return v;
                               })
        .def_property_readonly("ci",
                               [](const SobolResult& r) {
                                   py::list out;
                                   for (const auto& i : r.inputs)
                                       out.append(py::make_tuple(i.S_lo, i.S_hi, i.T_lo, i.T_hi));
                                   return out;
                               })
        .def_readonly("warnings", &SobolResult::warnings);

    m.def("sobol_aggregated", &sobol_aggregated, py::arg("gp"), py::arg("input"), py::arg("s"),
          py::arg("a_grid"), py::arg("options") = SobolOptions{});
    m.def("sobol_pointwise", &sobol_pointwise, py::arg("gp"), py::arg("input"), py::arg("s"),
          py::arg("a"), py::arg("options") = SobolOptions{});
    m.def("sobol_inverse", &sobol_inverse, py::arg("gp"), py::arg("input"), py::arg("s"),
          py::arg("p"), py::arg("options") = SobolOptions{});

    py::class_<PliOptions>(m, "PliOptions")
        .def(py::init([](int n, std::uint64_t seed, const std::string& ci, int B) {
                 PliOptions o;
                 o.n = n;
                 o.seed = seed;
                 o.B = B;
                 if (ci == "delta")
                     o.ci = PliOptions::Ci::Delta;
                 else if (ci == "bootstrap")
                     o.ci = PliOptions::Ci::Bootstrap;
                 else
                     throw ConfigError("ci must be 'delta' or 'bootstrap'");
                 return o;
             }),
             py::arg("n") = 10000, py::arg("seed") = 0, py::arg("ci") = "delta",
             py::arg("B") = 500);

    py::class_<PliCell>(m, "PliCell")
        .def_readonly("input", &PliCell::input)
        .def_readonly("delta", &PliCell::delta)
        .def_readonly("a", &PliCell::a)
        .def_readonly("S", &PliCell::S)
        .def_readonly("ci_lo", &PliCell::ci_lo)
        .def_readonly("ci_hi", &PliCell::ci_hi)
        .def_readonly("n_eff", &PliCell::n_eff)
        .def_readonly("psi", &PliCell::psi)
        .def_readonly("psi_pert", &PliCell::psi_pert)
        .def_readonly("ok", &PliCell::ok)
        .def_readonly("note", &PliCell::note);

    py::class_<PliResult>(m, "PliResult")
        .def_readonly("cells", &PliResult::cells)
        .def_readonly("warnings", &PliResult::warnings);

    m.def("pli_point",
          [](const FittedGp& gp, const InputModel& input, double s, int input_index,
             const std::string& kind, double delta, double a, const PliOptions& options) {
              PerturbationSpec spec{input_index, parse_moment(kind), delta};
              return pli_point(gp, input, s, spec, a, options);
          },
          py::arg("gp"), py::arg("input"), py::arg("s"), py::arg("input_index"), py::arg("kind"),
          py::arg("delta"), py::arg("a"), py::arg("options") = PliOptions{});

    m.def("pli_grid",
          [](const FittedGp& gp, const InputModel& input, double s, std::vector<int> inputs,
             std::vector<double> deltas, const std::string& kind, const Eigen::VectorXd& a_grid,
             const PliOptions& options) {
              return pli_grid(gp, input, s, inputs, deltas, parse_moment(kind), a_grid, options);
          },
          py::arg("gp"), py::arg("input"), py::arg("s"), py::arg("inputs"), py::arg("deltas"),
          py::arg("kind"), py::arg("a_grid"), py::arg("options") = PliOptions{});
}
