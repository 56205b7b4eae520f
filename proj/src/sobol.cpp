#include "frisk/sobol.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "frisk/error.hpp"
#include "frisk/frc.hpp"
#include "frisk/parallel.hpp"
#include "frisk/stats.hpp"

namespace frisk {
namespace {

constexpr double kDegenerateVariance = 1e-10;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

Eigen::MatrixXd sample_matrix(const InputModel& input, int n, std::uint64_t seed,
                              std::string_view tag) {
    Rng rng(substream(seed, tag));
    Eigen::MatrixXd x(n, input.dim());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < input.dim(); ++j)
            x(i, j) = input.marginals[static_cast<std::size_t>(j)].sample_one(rng);
    return x;
}

// All pick-freeze evaluations for one output map: Y on X, Y on the mixed
// samples (column i picked from X, rest from X'), and on the complementary
// mixes (all but column i from X).
struct PickFreezeData {
    Eigen::MatrixXd y;                  // n x G
    std::vector<Eigen::MatrixXd> y_i;   // per input, n x G
    std::vector<Eigen::MatrixXd> y_mi;  // per input, n x G
};

PickFreezeData pick_freeze_evaluations(const CurveOutputFn& output, const InputModel& input,
                                       int n, std::uint64_t seed) {
    const int d = input.dim();
    const Eigen::MatrixXd x = sample_matrix(input, n, seed, "pf_x");
    const Eigen::MatrixXd xp = sample_matrix(input, n, seed, "pf_xp");
    PickFreezeData data;
    data.y = output(x);
    data.y_i.resize(static_cast<std::size_t>(d));
    data.y_mi.resize(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        Eigen::MatrixXd mixed = xp;
        mixed.col(i) = x.col(i);
        data.y_i[static_cast<std::size_t>(i)] = output(mixed);
        Eigen::MatrixXd comp = x;
        comp.col(i) = xp.col(i);
        data.y_mi[static_cast<std::size_t>(i)] = output(comp);
    }
    return data;
}

// Covariance of two columns over a row subset (identity subset = plain
// estimate; bootstrap passes resampled indices).
double subset_cov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int col,
                  const std::vector<int>& idx) {
    const double n = static_cast<double>(idx.size());
    double ma = 0.0, mb = 0.0;
    for (const int k : idx) {
        ma += a(k, col);
        mb += b(k, col);
    }
    ma /= n;
    mb /= n;
    double s = 0.0;
    for (const int k : idx) s += (a(k, col) - ma) * (b(k, col) - mb);
    return s / (n - 1.0);
}

struct IndexEstimates {
    Eigen::VectorXd s, t;
    bool degenerate = false;
    double denominator = 0.0;
};

// Owen-style centered covariance estimators, aggregated over the grid when
// a_grid has more than one point:
//   V_i = Cov(Y, Y^{(i)}),  V_{-i} = Cov(Y, Y^{(-i)}),  T_i = 1 - V_{-i}/V,
// with numerators and the denominator integrated over a before the ratios.
IndexEstimates estimate_indices(const PickFreezeData& data, const Eigen::VectorXd& a_grid,
                                const std::vector<int>& idx) {
    const int d = static_cast<int>(data.y_i.size());
    const int g = static_cast<int>(data.y.cols());
    IndexEstimates out;
    out.s.resize(d);
    out.t.resize(d);

    std::vector<double> var_g(static_cast<std::size_t>(g));
    for (int k = 0; k < g; ++k)
        var_g[static_cast<std::size_t>(k)] = subset_cov(data.y, data.y, k, idx);

    std::vector<double> xs(static_cast<std::size_t>(g));
    for (int k = 0; k < g; ++k)
        xs[static_cast<std::size_t>(k)] = g > 1 ? a_grid[k] : 0.0;

    const double den = g > 1 ? trapezoid(xs, var_g) : var_g[0];
    out.denominator = den;
    if (!(den > kDegenerateVariance)) {
        out.degenerate = true;
        out.s.setZero();
        out.t.setZero();
        return out;
    }
    for (int i = 0; i < d; ++i) {
        std::vector<double> num_s(static_cast<std::size_t>(g)), num_t(static_cast<std::size_t>(g));
        for (int k = 0; k < g; ++k) {
            const double cs = subset_cov(data.y, data.y_i[static_cast<std::size_t>(i)], k, idx);
            const double cmi = subset_cov(data.y, data.y_mi[static_cast<std::size_t>(i)], k, idx);
            num_s[static_cast<std::size_t>(k)] = cs;
            num_t[static_cast<std::size_t>(k)] = var_g[static_cast<std::size_t>(k)] - cmi;
        }
        if (g > 1) {
            out.s[i] = trapezoid(xs, num_s) / den;
            out.t[i] = trapezoid(xs, num_t) / den;
        } else {
            out.s[i] = num_s[0] / den;
            out.t[i] = num_t[0] / den;
        }
    }
    return out;
}

SobolResult run_pick_freeze(const CurveOutputFn& output, const InputModel& input,
                            const Eigen::VectorXd& a_grid, const SobolOptions& options,
                            SobolFlavor flavor, double at, const std::string& degenerate_msg) {
    if (options.n_pf < 100) throw ConfigError("pick-freeze needs n_pf >= 100");
    if (options.B < 100) throw ConfigError("bootstrap needs B >= 100");
    const int d = input.dim();
    const int n = options.n_pf;

    const PickFreezeData data = pick_freeze_evaluations(output, input, n, options.seed);

    std::vector<int> all(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) all[static_cast<std::size_t>(k)] = k;
    const IndexEstimates est = estimate_indices(data, a_grid, all);
    if (est.degenerate) throw DegenerateError(degenerate_msg);

    // joint row bootstrap, percentile CIs
    Eigen::MatrixXd boot_s(options.B, d), boot_t(options.B, d);
    parallel_for(static_cast<std::size_t>(options.B), [&](std::size_t b) {
        Rng rng(substream(options.seed, "pf_boot", b));
        std::vector<int> idx(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k)
            idx[static_cast<std::size_t>(k)] =
                static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(n));
        const IndexEstimates e = estimate_indices(data, a_grid, idx);
        for (int i = 0; i < d; ++i) {
            boot_s(static_cast<Eigen::Index>(b), i) = e.degenerate ? est.s[i] : e.s[i];
            boot_t(static_cast<Eigen::Index>(b), i) = e.degenerate ? est.t[i] : e.t[i];
        }
    });

    SobolResult result;
    result.flavor = flavor;
    result.at = at;
    result.settings = options;
    result.inputs.resize(static_cast<std::size_t>(d));
    const double q_lo = 0.5 * (1.0 - options.ci_level);
    for (int i = 0; i < d; ++i) {
        SobolIndex& ix = result.inputs[static_cast<std::size_t>(i)];
        ix.S = est.s[i];
        ix.T = est.t[i];
        std::vector<double> bs(boot_s.col(i).data(), boot_s.col(i).data() + options.B);
        std::vector<double> bt(boot_t.col(i).data(), boot_t.col(i).data() + options.B);
        std::sort(bs.begin(), bs.end());
        std::sort(bt.begin(), bt.end());
        ix.S_lo = std::min(quantile_type7_sorted(bs, q_lo), ix.S);
        ix.S_hi = std::max(quantile_type7_sorted(bs, 1.0 - q_lo), ix.S);
        ix.T_lo = std::min(quantile_type7_sorted(bt, q_lo), ix.T);
        ix.T_hi = std::max(quantile_type7_sorted(bt, 1.0 - q_lo), ix.T);
    }
    return result;
}

} // namespace

double sobol_clip(double v) { return std::clamp(v, 0.0, 1.0); }

SobolResult sobol_aggregated_with(const CurveOutputFn& output, const InputModel& input,
                                  const Eigen::VectorXd& a_grid, const SobolOptions& options) {
    if (a_grid.size() < 2)
        throw ConfigError("aggregated indices need an a-grid with at least two points");
    return run_pick_freeze(output, input, a_grid, options, SobolFlavor::Aggregated, 0.0,
                           "degenerate variance: the curve does not respond to X anywhere "
                           "on the grid");
}

SobolResult sobol_pointwise_with(const ScalarOutputFn& output, const InputModel& input,
                                 double a, const SobolOptions& options) {
    const CurveOutputFn wrap = [&](const Eigen::MatrixXd& x) {
        Eigen::MatrixXd y(x.rows(), 1);
        y.col(0) = output(x);
        return y;
    };
    Eigen::VectorXd grid(1);
    grid[0] = a;
    std::ostringstream msg;
    msg << "degenerate variance at a=" << a
        << ": the curve is saturated there (FRC ~ 0 or 1)";
    return run_pick_freeze(wrap, input, grid, options, SobolFlavor::Pointwise, a, msg.str());
}

SobolResult sobol_inverse_with(const ScalarOutputFn& crossing, const InputModel& input,
                               double prob, const SobolOptions& options) {
    const CurveOutputFn wrap = [&](const Eigen::MatrixXd& x) {
        Eigen::MatrixXd y(x.rows(), 1);
        y.col(0) = crossing(x);
        return y;
    };
    Eigen::VectorXd grid(1);
    grid[0] = 0.0;
    std::ostringstream msg;
    msg << "degenerate variance of the crossing abscissa at p=" << prob;
    return run_pick_freeze(wrap, input, grid, options, SobolFlavor::Inverse, prob, msg.str());
}

SobolResult sobol_aggregated(const FittedGp& gp, const InputModel& input, double s,
                             const Eigen::VectorXd& a_grid, const SobolOptions& options) {
    const ConditionalFrcEvaluator ev{&gp, s};
    const CurveOutputFn output = [&](const Eigen::MatrixXd& x) {
        return ev.eval_grid(a_grid, x);
    };
    return sobol_aggregated_with(output, input, a_grid, options);
}

SobolResult sobol_pointwise(const FittedGp& gp, const InputModel& input, double s, double a,
                            const SobolOptions& options) {
    const ConditionalFrcEvaluator ev{&gp, s};
    const ScalarOutputFn output = [&](const Eigen::MatrixXd& x) { return ev.eval(a, x); };
    return sobol_pointwise_with(output, input, a, options);
}

SobolResult sobol_inverse(const FittedGp& gp, const InputModel& input, double s, double prob,
                          const SobolOptions& options) {
    if (!(prob > 0.0 && prob < 1.0)) throw ConfigError("sobol_inverse needs p in (0,1)");
    double worst_clamped = 0.0;
    const ScalarOutputFn crossing = [&](const Eigen::MatrixXd& x) {
        double frac = 0.0;
        const Eigen::VectorXd a = crossing_abscissae(gp, input, s, prob, x, &frac);
        worst_clamped = std::max(worst_clamped, frac);
        return a;
    };
    SobolResult result = sobol_inverse_with(crossing, input, prob, options);
    if (worst_clamped > 0.0) {
        std::ostringstream os;
        os << worst_clamped * 100.0 << "% of samples never reached p=" << prob
           << " and were clamped to a_max";
        result.warnings.push_back(os.str());
    }
    return result;
}

Eigen::VectorXd crossing_abscissae(const FittedGp& gp, const InputModel& input, double s,
                                   double prob, const Eigen::MatrixXd& x,
                                   double* clamped_fraction) {
    const int n = static_cast<int>(x.rows());
    const ConditionalFrcEvaluator ev{&gp, s};
    constexpr int kScan = 33;
    Eigen::VectorXd scan(kScan);
    for (int k = 0; k < kScan; ++k)
        scan[k] = input.a_min + (input.a_max - input.a_min) * k / (kScan - 1);
    const Eigen::MatrixXd p = ev.eval_grid(scan, x);

    Eigen::VectorXd lo(n), hi(n), out(n);
    std::vector<bool> active(static_cast<std::size_t>(n), false);
    int clamped = 0;
    for (int r = 0; r < n; ++r) {
        if (p(r, 0) >= prob) {
            out[r] = input.a_min;
            continue;
        }
        int cross = -1;
        for (int k = 1; k < kScan; ++k)
            if (p(r, k) >= prob) {
                cross = k;
                break;
            }
        if (cross < 0) {
            out[r] = input.a_max;
            ++clamped;
            continue;
        }
        lo[r] = scan[cross - 1];
        hi[r] = scan[cross];
        active[static_cast<std::size_t>(r)] = true;
    }
    if (clamped_fraction) *clamped_fraction = static_cast<double>(clamped) / n;
    if (clamped > 0.05 * n) {
        std::ostringstream os;
        os << "crossing_abscissae: " << 100.0 * clamped / n << "% of samples never reach p="
           << prob << " on [a_min, a_max]";
        throw DegenerateError(os.str());
    }

    std::vector<int> rows;
    for (int r = 0; r < n; ++r)
        if (active[static_cast<std::size_t>(r)]) rows.push_back(r);

    // batched bisection; 26 halvings of one scan cell is far below the
    // 1e-6 * range tolerance
    for (int it = 0; it < 26 && !rows.empty(); ++it) {
        PointSet pts;
        pts.a.resize(static_cast<Eigen::Index>(rows.size()));
        pts.x.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
        for (std::size_t q = 0; q < rows.size(); ++q) {
            const int r = rows[q];
            pts.a[static_cast<Eigen::Index>(q)] = 0.5 * (lo[r] + hi[r]);
            pts.x.row(static_cast<Eigen::Index>(q)) = x.row(r);
        }
        const GpPrediction pred = gp.predict(pts);
        for (std::size_t q = 0; q < rows.size(); ++q) {
            const int r = rows[q];
            const double sd = std::sqrt(std::max(0.0, pred.variance[static_cast<Eigen::Index>(q)]));
            const double pv = sd > 0.0
                                  ? norm_sf((s - pred.mean[static_cast<Eigen::Index>(q)]) / sd)
                                  : (pred.mean[static_cast<Eigen::Index>(q)] > s ? 1.0 : 0.0);
            const double mid = pts.a[static_cast<Eigen::Index>(q)];
            if (pv >= prob)
                hi[r] = mid;
            else
                lo[r] = mid;
        }
    }
    for (const int r : rows) out[r] = 0.5 * (lo[r] + hi[r]);
    return out;
}

void write_sobol_csv(std::ostream& os, const SobolResult& result) {
    os << "input,flavor,S,S_lo,S_hi,T,T_lo,T_hi\n";
    const char* flavor = result.flavor == SobolFlavor::Aggregated
                             ? "aggregated"
                             : (result.flavor == SobolFlavor::Pointwise ? "pointwise" : "inverse");
    for (std::size_t i = 0; i < result.inputs.size(); ++i) {
        const SobolIndex& ix = result.inputs[i];
        os << "x" << (i + 1) << "," << flavor << "," << fmt(sobol_clip(ix.S)) << ","
           << fmt(sobol_clip(ix.S_lo)) << "," << fmt(sobol_clip(ix.S_hi)) << ","
           << fmt(sobol_clip(ix.T)) << "," << fmt(sobol_clip(ix.T_lo)) << ","
           << fmt(sobol_clip(ix.T_hi)) << "\n";
    }
}

} // namespace frisk
