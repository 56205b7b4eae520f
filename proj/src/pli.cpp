#include "frisk/pli.hpp"

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

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

Eigen::MatrixXd sample_base(const InputModel& input, int n, std::uint64_t seed) {
    Rng rng(substream(seed, "pli_x"));
    Eigen::MatrixXd x(n, input.dim());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < input.dim(); ++j)
            x(i, j) = input.marginals[static_cast<std::size_t>(j)].sample_one(rng);
    return x;
}

double piecewise_index(double psi, double psi_pert) {
    if (psi_pert == psi) return 0.0;
    return psi_pert > psi ? (psi_pert - psi) / psi_pert : (psi_pert - psi) / psi;
}

} // namespace

PliCell pli_cell(const Eigen::VectorXd& p, const Eigen::VectorXd& w, const PliOptions& options,
                 std::uint64_t cell_stream) {
    const int n = static_cast<int>(p.size());
    PliCell cell;

    const double sw = w.sum();
    const double sw2 = w.squaredNorm();
    cell.n_eff = sw2 > 0.0 ? sw * sw / sw2 : 0.0;
    if (cell.n_eff < options.min_ess) {
        cell.ok = false;
        std::ostringstream os;
        os << "importance weights degenerate (n_eff=" << cell.n_eff
           << " < " << options.min_ess << "): perturbation too far in the tail, "
           << "increase n or reduce delta";
        cell.note = os.str();
        return cell;
    }

    const Eigen::VectorXd v = p.cwiseProduct(w);
    cell.psi = p.mean();
    cell.psi_pert = v.mean();
    cell.S = piecewise_index(cell.psi, cell.psi_pert);

    if (cell.psi == 0.0 && cell.psi_pert == 0.0) {
        cell.note = "curve value is 0 before and after the perturbation";
        return cell;
    }

    if (options.ci == PliOptions::Ci::Delta) {
        // joint CLT of (mean p, mean pw) propagated through the piecewise
        // ratio; the two branch gradients agree at the kink, so the formula
        // is continuous in (psi, psi_pert)
        const double suu = covariance_of({p.data(), static_cast<std::size_t>(p.size())}, {p.data(), static_cast<std::size_t>(p.size())});
        const double suv = covariance_of({p.data(), static_cast<std::size_t>(p.size())}, {v.data(), static_cast<std::size_t>(v.size())});
        const double svv = covariance_of({v.data(), static_cast<std::size_t>(v.size())}, {v.data(), static_cast<std::size_t>(v.size())});
        double gu, gv;
        if (cell.psi_pert >= cell.psi) {
            gu = -1.0 / cell.psi_pert;
            gv = cell.psi / (cell.psi_pert * cell.psi_pert);
        } else {
            gu = -cell.psi_pert / (cell.psi * cell.psi);
            gv = 1.0 / cell.psi;
        }
        const double var =
            (gu * gu * suu + 2.0 * gu * gv * suv + gv * gv * svv) / static_cast<double>(n);
        const double se = std::sqrt(std::max(0.0, var));
        const double z = norm_quantile(0.5 + 0.5 * options.ci_level);
        cell.ci_lo = cell.S - z * se;
        cell.ci_hi = cell.S + z * se;
    } else {
        std::vector<double> boot(static_cast<std::size_t>(options.B));
        parallel_for(static_cast<std::size_t>(options.B), [&](std::size_t b) {
            Rng rng(substream(cell_stream, "pli_boot", b));
            double su = 0.0, sv = 0.0;
            for (int k = 0; k < n; ++k) {
                const int idx = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(n));
                su += p[idx];
                sv += v[idx];
            }
            boot[b] = piecewise_index(su / n, sv / n);
        });
        std::sort(boot.begin(), boot.end());
        const double q_lo = 0.5 * (1.0 - options.ci_level);
        cell.ci_lo = std::min(quantile_type7_sorted(boot, q_lo), cell.S);
        cell.ci_hi = std::max(quantile_type7_sorted(boot, 1.0 - q_lo), cell.S);
    }
    return cell;
}

PliCell pli_point(const FittedGp& gp, const InputModel& input, double s,
                  const PerturbationSpec& spec, double a, const PliOptions& options) {
    if (options.n < 1000) throw ConfigError("pli_point needs n >= 1000");
    if (spec.input_index < 0 || spec.input_index >= input.dim())
        throw ConfigError("perturbation input index out of range");

    const Eigen::MatrixXd x = sample_base(input, options.n, options.seed);
    const ConditionalFrcEvaluator ev{&gp, s};
    const Eigen::VectorXd p = ev.eval(a, x);

    const TiltedDistribution tilt =
        kl_tilt(input.marginals[static_cast<std::size_t>(spec.input_index)], spec.kind,
                spec.delta);
    Eigen::VectorXd w(options.n);
    for (int k = 0; k < options.n; ++k) w[k] = tilt.likelihood_ratio(x(k, spec.input_index));

    PliCell cell = pli_cell(p, w, options, substream(options.seed, "pli_cell"));
    cell.input = spec.input_index;
    cell.delta = spec.delta;
    cell.a = a;
    if (!cell.ok) throw NumericalError(cell.note);
    return cell;
}

PliResult pli_grid(const FittedGp& gp, const InputModel& input, double s,
                   const std::vector<int>& inputs, const std::vector<double>& delta_grid,
                   MomentKind kind, const Eigen::VectorXd& a_grid, const PliOptions& options) {
    if (options.n < 1000) throw ConfigError("pli_grid needs n >= 1000");
    for (const int i : inputs)
        if (i < 0 || i >= input.dim()) throw ConfigError("pli input index out of range");

    PliResult result;
    result.inputs = inputs;
    result.delta_grid = delta_grid;
    result.a_grid = a_grid;
    result.kind = kind;
    result.settings = options;

    // one base sample and one set of curve evaluations shared by every cell
    const Eigen::MatrixXd x = sample_base(input, options.n, options.seed);
    const ConditionalFrcEvaluator ev{&gp, s};
    const Eigen::MatrixXd p = ev.eval_grid(a_grid, x);

    const std::size_t pairs = inputs.size() * delta_grid.size();
    const std::size_t g = static_cast<std::size_t>(a_grid.size());
    result.cells.resize(pairs * g);

    parallel_for(pairs, [&](std::size_t pair) {
        const std::size_t ii = pair / delta_grid.size();
        const std::size_t di = pair % delta_grid.size();
        const int input_index = inputs[ii];
        const double delta = delta_grid[di];

        Eigen::VectorXd w;
        std::string tilt_error;
        try {
            const TiltedDistribution tilt =
                kl_tilt(input.marginals[static_cast<std::size_t>(input_index)], kind, delta);
            w.resize(options.n);
            for (int k = 0; k < options.n; ++k)
                w[k] = tilt.likelihood_ratio(x(k, input_index));
        } catch (const NumericalError& e) {
            tilt_error = e.what();
        }

        for (std::size_t k = 0; k < g; ++k) {
            PliCell cell;
            if (tilt_error.empty()) {
                cell = pli_cell(p.col(static_cast<Eigen::Index>(k)), w, options,
                                substream(options.seed, "pli_cell", pair, k));
            } else {
                cell.ok = false;
                cell.note = tilt_error;
            }
            cell.input = input_index;
            cell.delta = delta;
            cell.a = a_grid[static_cast<Eigen::Index>(k)];
            result.cells[pair * g + k] = cell;
        }
    });

    int failed = 0;
    for (const auto& c : result.cells)
        if (!c.ok) ++failed;
    if (failed > 0) {
        std::ostringstream os;
        os << failed << " of " << result.cells.size()
           << " cells failed (see per-cell notes)";
        result.warnings.push_back(os.str());
    }
    return result;
}

std::pair<double, double> pli_psi_direct(const FittedGp& gp, const InputModel& input, double s,
                                         const PerturbationSpec& spec, double a, int n,
                                         std::uint64_t seed) {
    const TiltedDistribution tilt =
        kl_tilt(input.marginals[static_cast<std::size_t>(spec.input_index)], spec.kind,
                spec.delta);
    Rng rng(substream(seed, "pli_direct"));
    Eigen::MatrixXd x(n, input.dim());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < input.dim(); ++j)
            x(i, j) = j == spec.input_index
                          ? tilt.sample_one(rng)
                          : input.marginals[static_cast<std::size_t>(j)].sample_one(rng);
    const ConditionalFrcEvaluator ev{&gp, s};
    const Eigen::VectorXd p = ev.eval(a, x);
    const double mean = p.mean();
    const double var = variance_of({p.data(), static_cast<std::size_t>(p.size())});
    return {mean, std::sqrt(var / n)};
}

void write_pli_csv(std::ostream& os, const PliResult& result) {
    os << "input,delta,a,S,ci_low,ci_high,n_eff\n";
    for (const auto& c : result.cells) {
        os << "x" << (c.input + 1) << "," << fmt(c.delta) << "," << fmt(c.a) << ",";
        if (c.ok)
            os << fmt(c.S) << "," << fmt(c.ci_lo) << "," << fmt(c.ci_hi) << ","
               << fmt(c.n_eff) << "\n";
        else
            os << "NA,NA,NA," << fmt(c.n_eff) << "\n";
    }
}

} // namespace frisk
