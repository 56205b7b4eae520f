#include "frisk/testbed.hpp"

#include <cmath>

#include "frisk/error.hpp"
#include "frisk/normal.hpp"
#include "frisk/quadrature.hpp"
#include "frisk/stats.hpp"

namespace frisk {
namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

void require_linear_gaussian(const AnalyticModel& model, const InputModel& input,
                             const char* what) {
    if (!model.linear())
        throw ConfigError(std::string(what) + ": oracle is only defined for the linear model");
    for (const auto& m : input.marginals)
        if (m.kind != DistKind::Gaussian)
            throw ConfigError(std::string(what) + ": oracle requires gaussian marginals");
    if (model.coeff.size() != input.dim())
        throw ConfigError(std::string(what) + ": coefficient count does not match input model");
}

} // namespace

double AnalyticModel::eval(double a, const Eigen::Ref<const Eigen::VectorXd>& x) const {
    double y = b0 + b1 * a;
    for (int i = 0; i < coeff.size(); ++i) y += coeff[i] * x[i];
    for (int i = 0; i < sine_amp.size(); ++i)
        if (sine_amp[i] != 0.0) y += sine_amp[i] * std::sin(kTwoPi * x[i]);
    return y;
}

DesignMatrix evaluate_analytic(const AnalyticModel& model, DesignMatrix design) {
    if (model.coeff.size() != design.dim())
        throw ConfigError("evaluate_analytic: model has " + std::to_string(model.coeff.size()) +
                          " coefficients but the design has " + std::to_string(design.dim()) +
                          " inputs");
    design.y.resize(design.n());
    for (int i = 0; i < design.n(); ++i)
        design.y[i] = model.eval(design.a[i], design.x.row(i).transpose());
    return design;
}

double oracle_frc(const AnalyticModel& model, const InputModel& input, double s, double a) {
    require_linear_gaussian(model, input, "oracle_frc");
    double mean = model.b0 + model.b1 * a;
    double var = 0.0;
    for (int i = 0; i < input.dim(); ++i) {
        const auto& m = input.marginals[static_cast<std::size_t>(i)];
        mean += model.coeff[i] * m.mean();
        var += model.coeff[i] * model.coeff[i] * m.variance();
    }
    if (var == 0.0) return mean > s ? 1.0 : 0.0;
    return norm_sf((s - mean) / std::sqrt(var));
}

double oracle_frc_mc(const AnalyticModel& model, const InputModel& input, double s, double a,
                     int n, std::uint64_t seed) {
    if (n < 1) throw ConfigError("oracle_frc_mc: n must be >= 1");
    Rng rng(substream(seed, "oracle_mc"));
    Eigen::VectorXd x(input.dim());
    std::int64_t hits = 0;
    for (int k = 0; k < n; ++k) {
        for (int j = 0; j < input.dim(); ++j)
            x[j] = input.marginals[static_cast<std::size_t>(j)].sample_one(rng);
        if (model.eval(a, x) > s) ++hits;
    }
    return static_cast<double>(hits) / n;
}

OracleSobol oracle_sobol_pointwise(const AnalyticModel& model, const InputModel& input,
                                   double s, double a) {
    require_linear_gaussian(model, input, "oracle_sobol_pointwise");
    const int d = input.dim();
    const double t = s - model.b0 - model.b1 * a;
    double m_all = 0.0, v_all = 0.0;
    for (int i = 0; i < d; ++i) {
        const auto& m = input.marginals[static_cast<std::size_t>(i)];
        m_all += model.coeff[i] * m.mean();
        v_all += model.coeff[i] * model.coeff[i] * m.variance();
    }
    const double psi = v_all > 0.0 ? norm_sf((t - m_all) / std::sqrt(v_all)) : (m_all > t ? 1.0 : 0.0);
    const double var_total = psi * (1.0 - psi);

    OracleSobol out;
    out.first_order.setZero(d);
    out.total.setZero(d);
    if (var_total <= 0.0)
        throw DegenerateError("oracle_sobol_pointwise: indicator variance is zero at this a");

    for (int i = 0; i < d; ++i) {
        const auto& mi = input.marginals[static_cast<std::size_t>(i)];
        const double ci = model.coeff[i];
        const double vi = ci * ci * mi.variance();
        const double m_rest = m_all - ci * mi.mean();
        const double v_rest = v_all - vi;
        if (vi == 0.0) continue; // inert input
        // Var(E[H | X_i]) with E[H | X_i = x] = Phi((m_rest + c_i x - t)/sqrt(v_rest))
        const double mu_i = mi.mean(), sd_i = std::sqrt(mi.variance());
        const double lo = mu_i - 10.0 * sd_i, hi = mu_i + 10.0 * sd_i;
        const double e2 = integrate(
            [&](double x) {
                const double cond =
                    v_rest > 0.0 ? norm_cdf((m_rest + ci * x - t) / std::sqrt(v_rest))
                                 : (m_rest + ci * x > t ? 1.0 : 0.0);
                return cond * cond * mi.density(x);
            },
            lo, hi, {1e-10, 1e-9});
        out.first_order[i] = std::max(0.0, e2 - psi * psi) / var_total;

        // E[Var(H | X_{-i})] with W = sum_{j != i} c_j X_j ~ N(m_rest, v_rest)
        if (v_rest > 0.0) {
            const double sw = std::sqrt(v_rest);
            const double num = integrate(
                [&](double w) {
                    const double q = norm_cdf((ci * mu_i + w - t) / (std::abs(ci) * sd_i));
                    return q * (1.0 - q) * norm_pdf((w - m_rest) / sw) / sw;
                },
                m_rest - 10.0 * sw, m_rest + 10.0 * sw, {1e-10, 1e-9});
            out.total[i] = num / var_total;
        } else {
            out.total[i] = 1.0;
        }
    }
    return out;
}

OracleSobol oracle_sobol_aggregated(const AnalyticModel& model, const InputModel& input,
                                    double s, const Eigen::VectorXd& a_grid) {
    require_linear_gaussian(model, input, "oracle_sobol_aggregated");
    const int d = input.dim();
    const int g = static_cast<int>(a_grid.size());
    Eigen::MatrixXd num_s(g, d), num_t(g, d);
    Eigen::VectorXd den(g);
    for (int k = 0; k < g; ++k) {
        const double a = a_grid[k];
        const double t = s - model.b0 - model.b1 * a;
        double m_all = 0.0, v_all = 0.0;
        for (int i = 0; i < d; ++i) {
            const auto& m = input.marginals[static_cast<std::size_t>(i)];
            m_all += model.coeff[i] * m.mean();
            v_all += model.coeff[i] * model.coeff[i] * m.variance();
        }
        const double psi =
            v_all > 0.0 ? norm_sf((t - m_all) / std::sqrt(v_all)) : (m_all > t ? 1.0 : 0.0);
        den[k] = psi * (1.0 - psi);
        OracleSobol pw;
        try {
            pw = oracle_sobol_pointwise(model, input, s, a);
            num_s.row(k) = pw.first_order.transpose() * den[k];
            num_t.row(k) = pw.total.transpose() * den[k];
        } catch (const DegenerateError&) {
            num_s.row(k).setZero();
            num_t.row(k).setZero();
        }
    }
    std::vector<double> xs(a_grid.data(), a_grid.data() + g);
    std::vector<double> dv(den.data(), den.data() + g);
    const double d_agg = trapezoid(xs, dv);
    if (d_agg <= 0.0)
        throw DegenerateError("oracle_sobol_aggregated: flat risk curve, zero variance");
    OracleSobol out;
    out.first_order.resize(d);
    out.total.resize(d);
    for (int i = 0; i < d; ++i) {
        std::vector<double> ns(g), nt(g);
        for (int k = 0; k < g; ++k) {
            ns[static_cast<std::size_t>(k)] = num_s(k, i);
            nt[static_cast<std::size_t>(k)] = num_t(k, i);
        }
        out.first_order[i] = trapezoid(xs, ns) / d_agg;
        out.total[i] = trapezoid(xs, nt) / d_agg;
    }
    return out;
}

OracleSobol oracle_sobol_inverse(const AnalyticModel& model, const InputModel& input) {
    require_linear_gaussian(model, input, "oracle_sobol_inverse");
    const int d = input.dim();
    double v_all = 0.0;
    for (int i = 0; i < d; ++i)
        v_all += model.coeff[i] * model.coeff[i] *
                 input.marginals[static_cast<std::size_t>(i)].variance();
    if (v_all <= 0.0)
        throw DegenerateError("oracle_sobol_inverse: all coefficients are zero");
    OracleSobol out;
    out.first_order.resize(d);
    out.total.resize(d);
    for (int i = 0; i < d; ++i) {
        const double vi = model.coeff[i] * model.coeff[i] *
                          input.marginals[static_cast<std::size_t>(i)].variance();
        out.first_order[i] = vi / v_all;
        out.total[i] = vi / v_all;
    }
    return out;
}

double oracle_pli_mean_shift(const AnalyticModel& model, const InputModel& input, double s,
                             double a, int input_index, double delta) {
    require_linear_gaussian(model, input, "oracle_pli_mean_shift");
    const double psi = oracle_frc(model, input, s, a);
    double mean = model.b0 + model.b1 * a;
    double var = 0.0;
    for (int i = 0; i < input.dim(); ++i) {
        const auto& m = input.marginals[static_cast<std::size_t>(i)];
        mean += model.coeff[i] * m.mean();
        var += model.coeff[i] * model.coeff[i] * m.variance();
    }
    const auto& mi = input.marginals[static_cast<std::size_t>(input_index)];
    const double mean_pert = mean + model.coeff[input_index] * (delta - mi.mean());
    const double psi_pert = norm_sf((s - mean_pert) / std::sqrt(var));
    if (psi_pert == psi) return 0.0;
    return psi_pert >= psi ? (psi_pert - psi) / psi_pert : (psi_pert - psi) / psi;
}

} // namespace frisk
