#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "frisk/error.hpp"
#include "frisk/frc.hpp"
#include "frisk/normal.hpp"
#include "frisk/sobol.hpp"
#include "frisk/testbed.hpp"

using namespace frisk;

namespace {

InputModel gauss_model(int d, double a_min = 0.0, double a_max = 2.0) {
    std::vector<ScalarDistribution> m(static_cast<std::size_t>(d),
                                      ScalarDistribution::gaussian(0.0, 1.0));
    return InputModel(m, a_min, a_max);
}

AnalyticModel linear_model(double b0, double b1, std::vector<double> c) {
    AnalyticModel m;
    m.b0 = b0;
    m.b1 = b1;
    m.coeff = Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
    m.sine_amp = Eigen::VectorXd::Zero(m.coeff.size());
    return m;
}

FittedGp testbed_gp(const AnalyticModel& model, const InputModel& input, int n,
                    std::uint64_t seed) {
    const DesignMatrix d =
        evaluate_analytic(model, generate_design(input, n, DesignScheme::LHS, seed));
    GpFitOptions opt;
    opt.seed = seed;
    return fit_gp(d, opt);
}

Eigen::VectorXd linspace(double lo, double hi, int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
    return v;
}

} // namespace

TEST_CASE("inert input carries no sensitivity") {
    const AnalyticModel model = linear_model(0.0, 1.0, {1.0, 0.0});
    const InputModel input = gauss_model(2);
    const FittedGp gp = testbed_gp(model, input, 60, 1);
    SobolOptions opt;
    opt.n_pf = 4000;
    opt.B = 120;
    opt.seed = 2;
    const SobolResult agg = sobol_aggregated(gp, input, 1.0, linspace(0.2, 1.8, 9), opt);
    CHECK(std::abs(agg.inputs[1].S) <= 0.02);
    CHECK(std::abs(agg.inputs[1].T) <= 0.02);
    CHECK(agg.inputs[1].S_lo <= 0.0);
    CHECK(agg.inputs[1].S_hi >= 0.0);
    // the active input dominates
    CHECK(agg.inputs[0].S > 0.5);
}

TEST_CASE("additive output: first-order equals total within estimator noise") {
    // the pick-freeze identity S_i = T_i holds for outputs with no
    // interactions; the curve p(a, X) itself is a nonlinear transform of the
    // additive response and genuinely has interactions, so the check runs on
    // an additive synthetic output
    const InputModel input = gauss_model(2);
    const ScalarOutputFn additive = [](const Eigen::MatrixXd& x) {
        return (x.col(0) + 0.6 * x.col(1)).eval();
    };
    SobolOptions opt;
    opt.n_pf = 10000;
    opt.B = 120;
    opt.seed = 4;
    const SobolResult res = sobol_pointwise_with(additive, input, 0.0, opt);
    for (int i = 0; i < 2; ++i) {
        const auto& ix = res.inputs[static_cast<std::size_t>(i)];
        CHECK(std::abs(ix.S - ix.T) <= 0.03);
        // and within three bootstrap standard errors
        const double se = (ix.S_hi - ix.S_lo + ix.T_hi - ix.T_lo) /
                          (2.0 * 2.0 * 1.959963984540054);
        CHECK(std::abs(ix.S - ix.T) <= 3.0 * 2.0 * se);
    }
    // closed-form shares of an additive linear map
    const double v1 = 1.0, v2 = 0.36;
    CHECK(res.inputs[0].S == doctest::Approx(v1 / (v1 + v2)).epsilon(0.05));
    CHECK(res.inputs[1].S == doctest::Approx(v2 / (v1 + v2)).epsilon(0.05));
}

TEST_CASE("aggregated and pointwise estimates match the quadrature oracle") {
    const AnalyticModel model = linear_model(0.0, 1.0, {1.0, 1.0});
    const InputModel input = gauss_model(2);
    const FittedGp gp = testbed_gp(model, input, 100, 5);
    const Eigen::VectorXd grid = linspace(0.2, 1.8, 9);
    SobolOptions opt;
    opt.n_pf = 10000;
    opt.B = 120;
    opt.seed = 6;

    const SobolResult agg = sobol_aggregated(gp, input, 1.0, grid, opt);
    const OracleSobol agg_ref = oracle_sobol_aggregated(model, input, 1.0, grid);
    for (int i = 0; i < 2; ++i) {
        CHECK(agg.inputs[static_cast<std::size_t>(i)].S ==
              doctest::Approx(agg_ref.first_order[i]).scale(1.0).epsilon(0.05));
        CHECK(agg.inputs[static_cast<std::size_t>(i)].T ==
              doctest::Approx(agg_ref.total[i]).scale(1.0).epsilon(0.05));
    }

    const double a_mid = 1.0;
    const SobolResult pw = sobol_pointwise(gp, input, 1.0, a_mid, opt);
    const OracleSobol pw_ref = oracle_sobol_pointwise(model, input, 1.0, a_mid);
    double sum_first = 0.0;
    for (int i = 0; i < 2; ++i) {
        CHECK(pw.inputs[static_cast<std::size_t>(i)].S ==
              doctest::Approx(pw_ref.first_order[i]).scale(1.0).epsilon(0.05));
        CHECK(pw.inputs[static_cast<std::size_t>(i)].T ==
              doctest::Approx(pw_ref.total[i]).scale(1.0).epsilon(0.05));
        sum_first += pw.inputs[static_cast<std::size_t>(i)].S;
    }
    CHECK(sum_first <= 1.03);
}

TEST_CASE("saturated curve region raises the degenerate-variance error") {
    const AnalyticModel model = linear_model(0.0, 1.0, {1.0});
    const InputModel input = gauss_model(1, 0.0, 50.0);
    const FittedGp gp = testbed_gp(model, input, 40, 7);
    SobolOptions opt;
    opt.n_pf = 500;
    opt.B = 100;
    opt.seed = 8;
    // far plateau: every sample evaluates to probability ~1
    CHECK_THROWS_AS(sobol_pointwise(gp, input, -1e7, 25.0, opt), DegenerateError);
}

TEST_CASE("indices are invariant to output scaling") {
    const InputModel input = gauss_model(2);
    auto raw = [](const Eigen::MatrixXd& x) {
        Eigen::VectorXd y(x.rows());
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            y[i] = std::sin(x(i, 0)) + 0.4 * x(i, 1) * x(i, 1);
        return y;
    };
    SobolOptions opt;
    opt.n_pf = 2000;
    opt.B = 100;
    opt.seed = 9;
    const SobolResult base = sobol_pointwise_with(raw, input, 0.0, opt);
    const SobolResult scaled = sobol_pointwise_with(
        [&](const Eigen::MatrixXd& x) { return (7.3 * raw(x).array()).matrix().eval(); }, input,
        0.0, opt);
    for (int i = 0; i < 2; ++i) {
        CHECK(base.inputs[static_cast<std::size_t>(i)].S ==
              doctest::Approx(scaled.inputs[static_cast<std::size_t>(i)].S).epsilon(1e-12));
        CHECK(base.inputs[static_cast<std::size_t>(i)].T ==
              doctest::Approx(scaled.inputs[static_cast<std::size_t>(i)].T).epsilon(1e-12));
    }
}

TEST_CASE("same seed reproduces identical indices and intervals") {
    const AnalyticModel model = linear_model(0.0, 1.0, {1.0, 0.5});
    const InputModel input = gauss_model(2);
    const FittedGp gp = testbed_gp(model, input, 50, 10);
    SobolOptions opt;
    opt.n_pf = 1500;
    opt.B = 100;
    opt.seed = 11;
    const SobolResult r1 = sobol_aggregated(gp, input, 1.0, linspace(0.2, 1.8, 5), opt);
    const SobolResult r2 = sobol_aggregated(gp, input, 1.0, linspace(0.2, 1.8, 5), opt);
    for (int i = 0; i < 2; ++i) {
        CHECK(r1.inputs[static_cast<std::size_t>(i)].S == r2.inputs[static_cast<std::size_t>(i)].S);
        CHECK(r1.inputs[static_cast<std::size_t>(i)].S_lo ==
              r2.inputs[static_cast<std::size_t>(i)].S_lo);
        CHECK(r1.inputs[static_cast<std::size_t>(i)].T_hi ==
              r2.inputs[static_cast<std::size_t>(i)].T_hi);
    }
}

TEST_CASE("inverse-curve indices: crossing abscissae and the double oracle") {
    const AnalyticModel model = linear_model(0.0, 1.0, {1.0, 1.0});
    const InputModel input = gauss_model(2, 0.0, 8.0);
    const FittedGp gp = testbed_gp(model, input, 120, 12);
    const double s = 4.0, p = 0.9;

    SUBCASE("per-sample crossings approximate the analytic threshold") {
        // with a near-exact metamodel the curve in a is a steep step at
        // a*(x) = s - b0 - c.x, softened by the predictive sd; the p-crossing
        // stays within a few softening widths of the step
        Eigen::MatrixXd x(5, 2);
        x << 0.0, 0.0, 0.5, -0.5, 1.0, 0.2, -0.8, 0.3, 0.4, 0.9;
        double clamped = 0.0;
        const Eigen::VectorXd cross = crossing_abscissae(gp, input, s, p, x, &clamped);
        CHECK(clamped == 0.0);
        for (int r = 0; r < 5; ++r) {
            const double a_star = s - x.row(r).sum();
            CHECK(cross[r] == doctest::Approx(a_star).scale(1.0).epsilon(0.15));
        }
    }

    SUBCASE("pick-freeze on a(x) against the closed-form shares") {
        SobolOptions opt;
        opt.n_pf = 6000;
        opt.B = 120;
        opt.seed = 13;
        const SobolResult inv = sobol_inverse(gp, input, s, p, opt);
        const OracleSobol ref = oracle_sobol_inverse(model, input);
        for (int i = 0; i < 2; ++i) {
            CHECK(inv.inputs[static_cast<std::size_t>(i)].S ==
                  doctest::Approx(ref.first_order[i]).scale(1.0).epsilon(0.05));
            CHECK(inv.inputs[static_cast<std::size_t>(i)].T ==
                  doctest::Approx(ref.total[i]).scale(1.0).epsilon(0.05));
        }
    }

    SUBCASE("brute-force pick-freeze on the analytic crossing agrees") {
        // the analytic a(x) is linear in x, so indices have a closed form;
        // estimate them by pick-freeze on the analytic map as a second route
        const ScalarOutputFn analytic_crossing = [&](const Eigen::MatrixXd& x) {
            Eigen::VectorXd a(x.rows());
            for (Eigen::Index r = 0; r < x.rows(); ++r)
                a[r] = std::clamp(s - x.row(r).sum(), input.a_min, input.a_max);
            return a;
        };
        SobolOptions opt;
        opt.n_pf = 20000;
        opt.B = 100;
        opt.seed = 14;
        const SobolResult brute = sobol_inverse_with(analytic_crossing, input, p, opt);
        const OracleSobol ref = oracle_sobol_inverse(model, input);
        for (int i = 0; i < 2; ++i)
            CHECK(brute.inputs[static_cast<std::size_t>(i)].S ==
                  doctest::Approx(ref.first_order[i]).scale(1.0).epsilon(0.05));
    }
}

TEST_CASE("inverse flavor reports unreachable levels") {
    const AnalyticModel model = linear_model(0.0, 1.0, {1.0});
    const InputModel input = gauss_model(1, 0.0, 0.2); // too short an a-range
    const FittedGp gp = testbed_gp(model, input, 40, 15);
    SobolOptions opt;
    opt.n_pf = 500;
    opt.B = 100;
    opt.seed = 16;
    CHECK_THROWS_AS(sobol_inverse(gp, input, 30.0, 0.9, opt), DegenerateError);
}

TEST_CASE("csv output clips display values into [0,1]") {
    SobolResult r;
    r.flavor = SobolFlavor::Pointwise;
    r.inputs.push_back({-0.01, 1.02, -0.05, 0.1, 0.9, 1.1});
    std::ostringstream os;
    write_sobol_csv(os, r);
    const std::string text = os.str();
    CHECK(text.find("-0.01") == std::string::npos);
    CHECK(text.find("1.02") == std::string::npos);
    CHECK(text.find("x1,pointwise,0,") != std::string::npos);
}
