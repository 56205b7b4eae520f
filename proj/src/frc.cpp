#include "frisk/frc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

#include "frisk/error.hpp"
#include "frisk/parallel.hpp"
#include "frisk/stats.hpp"

namespace frisk {
namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

Eigen::MatrixXd sample_inputs(const InputModel& input, int n, std::uint64_t seed,
                              std::string_view tag) {
    Rng rng(substream(seed, tag));
    Eigen::MatrixXd x(n, input.dim());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < input.dim(); ++j)
            x(i, j) = input.marginals[static_cast<std::size_t>(j)].sample_one(rng);
    return x;
}

// Box-Cox transform; lambda == 0 is the log branch.
double boxcox_transform(double y, double lambda) {
    if (lambda == 0.0) return std::log(y);
    return (std::pow(y, lambda) - 1.0) / lambda;
}

struct BoxCoxProfile {
    double loglik;
    double beta0, beta1, sigma2;
};

BoxCoxProfile boxcox_profile(const Eigen::VectorXd& a, const Eigen::VectorXd& y, double lambda,
                             bool boxcox, double sum_log_y) {
    const int n = static_cast<int>(a.size());
    Eigen::VectorXd t(n);
    for (int i = 0; i < n; ++i) t[i] = boxcox ? boxcox_transform(y[i], lambda) : y[i];
    Eigen::MatrixXd f(n, 2);
    f.col(0).setOnes();
    f.col(1) = a;
    const Eigen::Vector2d beta = (f.transpose() * f).ldlt().solve(f.transpose() * t);
    const double rss = (t - f * beta).squaredNorm();
    const double sigma2 = rss / n;
    BoxCoxProfile out;
    out.beta0 = beta[0];
    out.beta1 = beta[1];
    out.sigma2 = sigma2;
    out.loglik = -0.5 * n * std::log(sigma2) + (boxcox ? (lambda - 1.0) * sum_log_y : 0.0);
    return out;
}

} // namespace

Eigen::VectorXd ConditionalFrcEvaluator::eval(double a, const Eigen::MatrixXd& x) const {
    PointSet pts;
    pts.a = Eigen::VectorXd::Constant(x.rows(), a);
    pts.x = x;
    const GpPrediction pred = gp->predict(pts);
    Eigen::VectorXd p(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double sd = std::sqrt(std::max(0.0, pred.variance[i]));
        if (sd > 0.0)
            p[i] = norm_sf((s - pred.mean[i]) / sd);
        else
            p[i] = pred.mean[i] > s ? 1.0 : 0.0;
    }
    return p;
}

Eigen::MatrixXd ConditionalFrcEvaluator::eval_grid(const Eigen::VectorXd& a_grid,
                                                   const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd p(x.rows(), a_grid.size());
    for (Eigen::Index k = 0; k < a_grid.size(); ++k) p.col(k) = eval(a_grid[k], x);
    return p;
}

double BerensFit::frc(double a) const {
    if (!(sigma_eps > 0.0)) return beta0 + beta1 * a > s_tilde ? 1.0 : 0.0;
    return norm_sf((s_tilde - beta0 - beta1 * a) / sigma_eps);
}

void BerensFit::frc_band(double a, double level, double& lo, double& hi) const {
    const double u = (beta0 + beta1 * a - s_tilde) / sigma_eps;
    const Eigen::Vector3d g(1.0 / sigma_eps, a / sigma_eps,
                            -u / (2.0 * sigma_eps * sigma_eps));
    const double se = std::sqrt(std::max(0.0, double(g.transpose() * cov * g)));
    const double z = norm_quantile(0.5 + 0.5 * level);
    lo = norm_cdf(u - z * se);
    hi = norm_cdf(u + z * se);
}

double BerensFit::inverse(double p) const {
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("inverse needs p in (0,1)");
    return alpha + beta * norm_quantile(p);
}

BerensFit fit_berens(const Eigen::VectorXd& a, const Eigen::VectorXd& y, double s,
                     bool use_boxcox, std::optional<double> fixed_lambda) {
    const int n = static_cast<int>(a.size());
    if (n < 5) throw ConfigError("fit_berens needs at least 5 (a, y) pairs");
    if (y.size() != n) throw ConfigError("fit_berens: a and y sizes differ");
    if (a.maxCoeff() - a.minCoeff() <= 0.0)
        throw ConfigError("fit_berens: all a values are equal, slope is unidentifiable");

    double sum_log_y = 0.0;
    if (use_boxcox) {
        for (int i = 0; i < n; ++i) {
            if (!(y[i] > 0.0))
                throw ConfigError("fit_berens: Box-Cox requires positive responses "
                                  "(the log branch at lambda <= 0 is undefined otherwise)");
            sum_log_y += std::log(y[i]);
        }
        if (!(s > 0.0))
            throw ConfigError("fit_berens: Box-Cox requires a positive threshold");
    }

    double lambda = 1.0;
    if (use_boxcox) {
        if (fixed_lambda) {
            lambda = *fixed_lambda;
        } else {
            // coarse grid on [-2, 2], then golden-section refinement
            double best_l = -2.0;
            double best_v = -std::numeric_limits<double>::infinity();
            for (int k = 0; k <= 80; ++k) {
                const double l = -2.0 + 4.0 * k / 80.0;
                const double v = boxcox_profile(a, y, l, true, sum_log_y).loglik;
                if (v > best_v) {
                    best_v = v;
                    best_l = l;
                }
            }
            double lo = std::max(-2.0, best_l - 0.05), hi = std::min(2.0, best_l + 0.05);
            const double gr = 0.61803398874989484820;
            double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
            double fc = boxcox_profile(a, y, c, true, sum_log_y).loglik;
            double fd = boxcox_profile(a, y, d, true, sum_log_y).loglik;
            while (hi - lo > 1e-7) {
                if (fc > fd) {
                    hi = d;
                    d = c;
                    fd = fc;
                    c = hi - gr * (hi - lo);
                    fc = boxcox_profile(a, y, c, true, sum_log_y).loglik;
                } else {
                    lo = c;
                    c = d;
                    fc = fd;
                    d = lo + gr * (hi - lo);
                    fd = boxcox_profile(a, y, d, true, sum_log_y).loglik;
                }
            }
            lambda = 0.5 * (lo + hi);
        }
    }

    const BoxCoxProfile prof = boxcox_profile(a, y, lambda, use_boxcox, sum_log_y);
    BerensFit fit;
    fit.beta0 = prof.beta0;
    fit.beta1 = prof.beta1;
    fit.sigma_eps = std::sqrt(prof.sigma2);
    fit.lambda = lambda;
    fit.boxcox = use_boxcox;
    fit.s_tilde = use_boxcox ? boxcox_transform(s, lambda) : s;

    Eigen::MatrixXd f(n, 2);
    f.col(0).setOnes();
    f.col(1) = a;
    const Eigen::Matrix2d beta_cov = prof.sigma2 * (f.transpose() * f).inverse();
    fit.cov.setZero();
    fit.cov.topLeftCorner<2, 2>() = beta_cov;
    fit.cov(2, 2) = 2.0 * prof.sigma2 * prof.sigma2 / n; // asymptotic var of sigma^2

    if (fit.beta1 > 0.0) {
        fit.alpha = (fit.s_tilde - fit.beta0) / fit.beta1;
        fit.beta = fit.sigma_eps / fit.beta1;
        // delta method through (beta0, beta1, sigma^2)
        const Eigen::Vector3d ga(-1.0 / fit.beta1,
                                 -(fit.s_tilde - fit.beta0) / (fit.beta1 * fit.beta1), 0.0);
        const Eigen::Vector3d gb(0.0, -fit.sigma_eps / (fit.beta1 * fit.beta1),
                                 1.0 / (2.0 * fit.sigma_eps * fit.beta1));
        fit.alpha_se = std::sqrt(std::max(0.0, double(ga.transpose() * fit.cov * ga)));
        fit.beta_se = std::sqrt(std::max(0.0, double(gb.transpose() * fit.cov * gb)));
    } else {
        fit.alpha = std::nan("");
        fit.beta = std::nan("");
    }
    return fit;
}

Eigen::VectorXd frc_mean_gp(const FittedGp& gp, const InputModel& input, double s,
                            const Eigen::VectorXd& a_grid, int n, std::uint64_t seed) {
    if (n < 100) throw ConfigError("frc_mean_gp needs n >= 100");
    const Eigen::MatrixXd x = sample_inputs(input, n, seed, "frc_x");
    const ConditionalFrcEvaluator ev{&gp, s};
    Eigen::VectorXd out(a_grid.size());
    std::vector<Eigen::VectorXd> cols(static_cast<std::size_t>(a_grid.size()));
    parallel_for(static_cast<std::size_t>(a_grid.size()),
                 [&](std::size_t k) { cols[k] = ev.eval(a_grid[static_cast<Eigen::Index>(k)], x); });
    for (Eigen::Index k = 0; k < a_grid.size(); ++k)
        out[k] = cols[static_cast<std::size_t>(k)].mean();
    return out;
}

std::vector<double> clt_sample(double psi, int n, int n_clt, Rng& rng, int* clamped) {
    std::vector<double> out(static_cast<std::size_t>(n_clt));
    const double sd = std::sqrt(std::max(0.0, psi * (1.0 - psi) / n));
    if (sd == 0.0) {
        std::fill(out.begin(), out.end(), psi);
        return out;
    }
    int nclamp = 0;
    for (auto& v : out) {
        double x = psi + sd * rng.normal();
        if (x < 0.0) {
            x = 0.0;
            ++nclamp;
        } else if (x > 1.0) {
            x = 1.0;
            ++nclamp;
        }
        v = x;
    }
    if (clamped) *clamped += nclamp;
    return out;
}

namespace {

// Order statistics (0-based ranks) of the pooled m x n_CLT CLT sample for one
// grid point, without materializing the sample when it is large. The draws
// are regenerated from per-realization substreams, so the two passes see the
// same values.
class PooledCltSample {
public:
    PooledCltSample(const Eigen::VectorXd& psi_col, int n_used, int n_clt, std::uint64_t seed,
                    int a_index, std::int64_t exact_cap)
        : psi_(psi_col), n_used_(n_used), n_clt_(n_clt), seed_(seed), a_index_(a_index),
          exact_cap_(exact_cap) {}

    std::int64_t size() const { return static_cast<std::int64_t>(psi_.size()) * n_clt_; }

    struct Summary {
        double mean = 0.0;
        std::int64_t clamped = 0;
        std::vector<double> stats; // order statistics, aligned with the ranks
    };

    // pooled mean, clamp count and order statistics (0-based ranks, ascending)
    Summary compute(std::vector<std::int64_t> ranks) {
        std::sort(ranks.begin(), ranks.end());
        if (size() <= exact_cap_) return compute_exact(ranks);
        Summary out;
        out.stats = order_stats_histogram(ranks, 0.0, 1.0, 0, 0, &out);
        return out;
    }

private:
    std::uint64_t stream(std::size_t j) const {
        return substream(seed_, "frc_clt", j, static_cast<std::uint64_t>(a_index_));
    }

    // single generation pass: draws land in one buffer, means and clamp
    // counts accumulate per realization, ranks resolve by selection
    Summary compute_exact(const std::vector<std::int64_t>& ranks) {
        const std::size_t m = static_cast<std::size_t>(psi_.size());
        std::vector<double> all(static_cast<std::size_t>(size()));
        std::vector<double> sums(m, 0.0);
        std::vector<int> clamps(m, 0);
        parallel_for(m, [&](std::size_t j) {
            Rng rng(stream(j));
            int c = 0;
            const std::vector<double> draws =
                clt_sample(psi_[static_cast<Eigen::Index>(j)], n_used_, n_clt_, rng, &c);
            double s = 0.0;
            for (const double v : draws) s += v;
            std::copy(draws.begin(), draws.end(),
                      all.begin() + static_cast<std::ptrdiff_t>(j * static_cast<std::size_t>(n_clt_)));
            sums[j] = s;
            clamps[j] = c;
        });
        Summary out;
        double total = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            total += sums[j];
            out.clamped += clamps[j];
        }
        out.mean = total / static_cast<double>(size());
        out.stats.reserve(ranks.size());
        for (const std::int64_t r : ranks) {
            auto nth = all.begin() + static_cast<std::ptrdiff_t>(r);
            std::nth_element(all.begin(), nth, all.end());
            out.stats.push_back(*nth);
        }
        return out;
    }

    // histogram pass over [lo, hi), then exact collection inside the bins that
    // contain the requested ranks; recurses if a bin still holds too much. The
    // depth-0 pass doubles as the mean/clamp accounting pass.
    std::vector<double> order_stats_histogram(const std::vector<std::int64_t>& ranks, double lo,
                                              double hi, std::int64_t count_below, int depth,
                                              Summary* summary) {
        constexpr int kBins = 1 << 16;
        if (depth > 4)
            throw NumericalError("pooled quantile refinement failed to isolate the ranks");
        const std::size_t m = static_cast<std::size_t>(psi_.size());
        const double width = hi - lo;

        std::vector<std::int64_t> hist(kBins, 0);
        std::vector<std::int64_t> below(m, 0);
        std::vector<double> sums(m, 0.0);
        std::vector<int> clamps(m, 0);
        {
            std::mutex merge_mutex;
            const int workers = std::max(1, max_threads());
            std::atomic<std::size_t> next{0};
            auto run = [&]() {
                std::vector<std::int64_t> local(kBins, 0);
                for (;;) {
                    const std::size_t j = next.fetch_add(1);
                    if (j >= m) break;
                    Rng rng(stream(j));
                    int c = 0;
                    const std::vector<double> draws = clt_sample(
                        psi_[static_cast<Eigen::Index>(j)], n_used_, n_clt_, rng, &c);
                    clamps[j] = c;
                    double s = 0.0;
                    for (const double v : draws) {
                        s += v;
                        if (v < lo) {
                            ++below[j];
                        } else if (v >= hi) {
                            // above the window; only the count matters
                        } else {
                            const int b = std::min(kBins - 1,
                                                   static_cast<int>((v - lo) / width * kBins));
                            ++local[static_cast<std::size_t>(b)];
                        }
                    }
                    sums[j] = s;
                }
                std::lock_guard<std::mutex> g(merge_mutex);
                for (int b = 0; b < kBins; ++b) hist[static_cast<std::size_t>(b)] += local[static_cast<std::size_t>(b)];
            };
            std::vector<std::thread> pool;
            for (int w = 1; w < workers; ++w) pool.emplace_back(run);
            run();
            for (auto& t : pool) t.join();
        }
        if (depth == 0 && summary) {
            double total = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                total += sums[j];
                summary->clamped += clamps[j];
            }
            summary->mean = total / static_cast<double>(size());
        }
        std::int64_t below_total = count_below;
        for (std::size_t j = 0; j < m; ++j) below_total += below[j];
        std::int64_t hist_total = 0;
        for (int b = 0; b < kBins; ++b) hist_total += hist[static_cast<std::size_t>(b)];

        // ranks beyond the binned mass sit in the clamp at 1.0 (only possible
        // on the full [0,1) window)
        std::vector<std::int64_t> binned_ranks;
        std::vector<std::size_t> above_positions;
        for (std::size_t q = 0; q < ranks.size(); ++q) {
            if (ranks[q] >= below_total + hist_total) {
                if (depth != 0)
                    throw NumericalError("pooled quantile rank beyond the histogram range");
                above_positions.push_back(q);
            } else {
                binned_ranks.push_back(ranks[q]);
            }
        }
        if (binned_ranks.empty()) {
            std::vector<double> out(ranks.size(), hi);
            return out;
        }

        // cumulative counts, then group the ranks by the bin that holds them
        std::vector<std::int64_t> cum(static_cast<std::size_t>(kBins) + 1, below_total);
        for (int b = 0; b < kBins; ++b)
            cum[static_cast<std::size_t>(b) + 1] =
                cum[static_cast<std::size_t>(b)] + hist[static_cast<std::size_t>(b)];
        struct BinGroup {
            int bin;
            std::vector<std::int64_t> ranks;
        };
        std::vector<BinGroup> groups;
        {
            int b = 0;
            for (const std::int64_t r : binned_ranks) {
                while (b < kBins && cum[static_cast<std::size_t>(b) + 1] <= r) ++b;
                if (b >= kBins)
                    throw NumericalError("pooled quantile rank beyond the histogram range");
                if (groups.empty() || groups.back().bin != b) groups.push_back({b, {}});
                groups.back().ranks.push_back(r);
            }
        }

        // one shared collection pass serves every bin that fits in memory;
        // overfull bins refine recursively (each step narrows by the bin count)
        std::vector<int> collect_bins;
        for (const auto& g : groups)
            if (hist[static_cast<std::size_t>(g.bin)] <= exact_cap_)
                collect_bins.push_back(g.bin);
        std::vector<std::vector<double>> buckets(collect_bins.size());
        if (!collect_bins.empty()) {
            std::vector<std::vector<std::vector<double>>> parts(
                m, std::vector<std::vector<double>>(collect_bins.size()));
            parallel_for(m, [&](std::size_t j) {
                Rng rng(stream(j));
                const std::vector<double> draws = clt_sample(
                    psi_[static_cast<Eigen::Index>(j)], n_used_, n_clt_, rng, nullptr);
                for (const double v : draws) {
                    if (v < lo || v >= hi) continue;
                    const int b =
                        std::min(kBins - 1, static_cast<int>((v - lo) / width * kBins));
                    for (std::size_t c = 0; c < collect_bins.size(); ++c)
                        if (collect_bins[c] == b) parts[j][c].push_back(v);
                }
            });
            for (std::size_t j = 0; j < m; ++j)
                for (std::size_t c = 0; c < collect_bins.size(); ++c)
                    buckets[c].insert(buckets[c].end(), parts[j][c].begin(), parts[j][c].end());
            for (auto& bucket : buckets) std::sort(bucket.begin(), bucket.end());
        }

        std::vector<double> ordered;
        ordered.reserve(binned_ranks.size());
        for (const auto& g : groups) {
            if (hist[static_cast<std::size_t>(g.bin)] > exact_cap_) {
                const double b_lo = lo + width * g.bin / kBins;
                const double b_hi = lo + width * (g.bin + 1) / kBins;
                if (b_hi - b_lo < 1e-13) {
                    ordered.insert(ordered.end(), g.ranks.size(), b_lo);
                } else {
                    const std::vector<double> sub = order_stats_histogram(
                        g.ranks, b_lo, b_hi, cum[static_cast<std::size_t>(g.bin)], depth + 1,
                        nullptr);
                    ordered.insert(ordered.end(), sub.begin(), sub.end());
                }
                continue;
            }
            const std::size_t c = static_cast<std::size_t>(
                std::find(collect_bins.begin(), collect_bins.end(), g.bin) -
                collect_bins.begin());
            for (const std::int64_t r : g.ranks) {
                const std::int64_t idx = r - cum[static_cast<std::size_t>(g.bin)];
                if (idx < 0 || idx >= static_cast<std::int64_t>(buckets[c].size()))
                    throw NumericalError("pooled quantile bookkeeping failed");
                ordered.push_back(buckets[c][static_cast<std::size_t>(idx)]);
            }
        }

        std::vector<double> merged(ranks.size());
        std::size_t bi = 0;
        for (std::size_t q = 0; q < ranks.size(); ++q) {
            if (std::find(above_positions.begin(), above_positions.end(), q) !=
                above_positions.end())
                merged[q] = 1.0;
            else
                merged[q] = ordered[bi++];
        }
        return merged;
    }

    const Eigen::VectorXd& psi_;
    int n_used_;
    int n_clt_;
    std::uint64_t seed_;
    int a_index_;
    std::int64_t exact_cap_;
};

double type7_from_ranks(const std::function<double(std::int64_t)>& value_at, std::int64_t count,
                        double q) {
    const double h = static_cast<double>(count - 1) * q;
    const std::int64_t k = static_cast<std::int64_t>(std::floor(h));
    const std::int64_t k1 = std::min(k + 1, count - 1);
    const double g = h - static_cast<double>(k);
    const double v0 = value_at(k);
    const double v1 = value_at(k1);
    return v0 + g * (v1 - v0);
}

} // namespace

FrcCurve frc_double_mc(const FittedGp& gp, const InputModel& input, double s,
                       const Eigen::VectorXd& a_grid, const FrcOptions& options) {
    const int g = static_cast<int>(a_grid.size());
    if (g < 1) throw ConfigError("frc_double_mc needs a non-empty a grid");
    if (options.n < 1 || options.m < 1 || options.n_clt < 1)
        throw ConfigError("frc_double_mc needs n, m, n_CLT >= 1");
    if (options.sim_budget > 10000)
        throw ConfigError("sim_budget exceeds the dense-Cholesky guard of 10000 points");
    for (const double level : options.levels)
        if (!(level > 0.0 && level < 1.0))
            throw ConfigError("band levels must lie in (0, 1)");

    FrcCurve curve;
    curve.a_grid = a_grid;
    curve.settings = options;

    const Eigen::MatrixXd x_all = sample_inputs(input, options.n, options.seed, "frc_x");

    // realization budget: simulate jointly over (a_grid x x-subsample) when a
    // meaningful subsample fits, otherwise fall back to per-a blocks
    int n_sim = std::min(options.n, std::max(1, options.sim_budget / g));
    const bool joint = n_sim >= 10 || n_sim >= options.n;
    Eigen::MatrixXd psi(options.m, g);

    if (joint) {
        const Eigen::MatrixXd x_sim = x_all.topRows(n_sim);
        const PointSet pts = grid_points(a_grid, x_sim);
        const ConditionalGaussian cg = gp.conditional(pts);
        for (const auto& w : cg.warnings) curve.warnings.push_back(w);
        parallel_for(static_cast<std::size_t>(options.m), [&](std::size_t j) {
            Rng rng(substream(options.seed, "frc_sim", j));
            const Eigen::VectorXd vals = cg.draw(rng);
            for (int k = 0; k < g; ++k) {
                int hits = 0;
                for (int i = 0; i < n_sim; ++i)
                    if (vals[static_cast<Eigen::Index>(k) * n_sim + i] > s) ++hits;
                psi(static_cast<Eigen::Index>(j), k) = static_cast<double>(hits) / n_sim;
            }
        });
    } else {
        n_sim = std::min(options.n, options.sim_budget);
        curve.pointwise_only = true;
        curve.warnings.push_back(
            "a-grid too fine for a joint simulation within the point budget; "
            "realizations are per-a blocks and bands are pointwise only");
        const Eigen::MatrixXd x_sim = x_all.topRows(n_sim);
        for (int k = 0; k < g; ++k) {
            PointSet pts;
            pts.a = Eigen::VectorXd::Constant(n_sim, a_grid[k]);
            pts.x = x_sim;
            const ConditionalGaussian cg = gp.conditional(pts);
            for (const auto& w : cg.warnings) curve.warnings.push_back(w);
            parallel_for(static_cast<std::size_t>(options.m), [&](std::size_t j) {
                Rng rng(substream(options.seed, "frc_sim_block", j,
                                  static_cast<std::uint64_t>(k)));
                const Eigen::VectorXd vals = cg.draw(rng);
                int hits = 0;
                for (int i = 0; i < n_sim; ++i)
                    if (vals[i] > s) ++hits;
                psi(static_cast<Eigen::Index>(j), k) = static_cast<double>(hits) / n_sim;
            });
        }
    }
    curve.n_used = n_sim;

    // bands
    curve.estimate.resize(g);
    for (const double level : options.levels) {
        curve.gp_only.push_back({level, Eigen::VectorXd(g), Eigen::VectorXd(g)});
        curve.mc_only.push_back({level, Eigen::VectorXd(g), Eigen::VectorXd(g)});
        curve.combined.push_back({level, Eigen::VectorXd(g), Eigen::VectorXd(g)});
    }

    std::int64_t clamped_total = 0;
    const std::int64_t pooled_count = static_cast<std::int64_t>(options.m) * options.n_clt;
    for (int k = 0; k < g; ++k) {
        const Eigen::VectorXd psi_col = psi.col(k);
        PooledCltSample pooled(psi_col, n_sim, options.n_clt, options.seed, k,
                               std::max<std::int64_t>(1, options.exact_quantile_cap));

        // ranks for every level at once
        std::vector<std::int64_t> ranks;
        std::vector<std::array<double, 2>> qs;
        for (const double level : options.levels) {
            const double q_lo = 0.5 * (1.0 - level);
            const double q_hi = 1.0 - q_lo;
            qs.push_back({q_lo, q_hi});
            for (const double q : {q_lo, q_hi}) {
                const double h = static_cast<double>(pooled_count - 1) * q;
                ranks.push_back(static_cast<std::int64_t>(std::floor(h)));
                ranks.push_back(std::min(static_cast<std::int64_t>(std::floor(h)) + 1,
                                         pooled_count - 1));
            }
        }
        std::sort(ranks.begin(), ranks.end());
        ranks.erase(std::unique(ranks.begin(), ranks.end()), ranks.end());
        const PooledCltSample::Summary summary = pooled.compute(ranks);
        curve.estimate[k] = summary.mean;
        clamped_total += summary.clamped;
        auto value_at = [&](std::int64_t r) {
            const auto it = std::lower_bound(ranks.begin(), ranks.end(), r);
            return summary.stats[static_cast<std::size_t>(it - ranks.begin())];
        };

        std::vector<double> psi_sorted(psi_col.data(), psi_col.data() + options.m);
        std::sort(psi_sorted.begin(), psi_sorted.end());

        for (std::size_t li = 0; li < options.levels.size(); ++li) {
            const double q_lo = qs[li][0], q_hi = qs[li][1];
            const double est = curve.estimate[k];
            curve.combined[li].lo[k] = type7_from_ranks(value_at, pooled_count, q_lo);
            curve.combined[li].hi[k] = type7_from_ranks(value_at, pooled_count, q_hi);
            curve.gp_only[li].lo[k] = quantile_type7_sorted(psi_sorted, q_lo);
            curve.gp_only[li].hi[k] = quantile_type7_sorted(psi_sorted, q_hi);
            const double sd = std::sqrt(std::max(0.0, est * (1.0 - est) / n_sim));
            const double z = norm_quantile(q_hi);
            curve.mc_only[li].lo[k] = std::max(0.0, est - z * sd);
            curve.mc_only[li].hi[k] = std::min(1.0, est + z * sd);
            // bands always bracket the point estimate; quantiles of a
            // degenerate realization spread can sit a hair of CLT noise away
            for (auto* band : {&curve.combined[li], &curve.gp_only[li], &curve.mc_only[li]}) {
                band->lo[k] = std::min(band->lo[k], est);
                band->hi[k] = std::max(band->hi[k], est);
            }
        }
    }

    const double clamp_frac = static_cast<double>(clamped_total) /
                              (static_cast<double>(pooled_count) * g);
    if (clamp_frac > 1e-3) {
        std::ostringstream os;
        os << "CLT draws clamped to [0,1] for " << clamp_frac * 100.0
           << "% of the sample; increase n for a better Gaussian approximation";
        curve.warnings.push_back(os.str());
    }
    return curve;
}

double frc_inverse(const Eigen::VectorXd& a_grid, const Eigen::VectorXd& values, double p,
                   bool* rectified) {
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("frc_inverse needs p in (0,1)");
    if (a_grid.size() != values.size() || a_grid.size() < 2)
        throw ConfigError("frc_inverse needs a grid curve with at least two points");
    std::vector<double> raw(values.data(), values.data() + values.size());
    std::vector<double> mono = isotonic_non_decreasing(raw);
    bool changed = false;
    for (std::size_t i = 0; i < raw.size(); ++i)
        if (raw[i] != mono[i]) changed = true;
    if (rectified) *rectified = changed;

    if (mono.front() >= p) return a_grid[0];
    for (std::size_t k = 1; k < mono.size(); ++k) {
        if (mono[k] >= p) {
            const double v0 = mono[k - 1], v1 = mono[k];
            const double a0 = a_grid[static_cast<Eigen::Index>(k - 1)];
            const double a1 = a_grid[static_cast<Eigen::Index>(k)];
            if (v1 == v0) return a1;
            return a0 + (p - v0) / (v1 - v0) * (a1 - a0);
        }
    }
    std::ostringstream os;
    os << "probability level " << p << " is never reached on the grid; the maximum attained "
       << "value is " << mono.back();
    throw DegenerateError(os.str());
}

double frc_inverse(const FrcCurve& curve, double p, bool* rectified) {
    return frc_inverse(curve.a_grid, curve.estimate, p, rectified);
}

void write_frc_csv(std::ostream& os, const FrcCurve& curve) {
    os << "a,estimate";
    auto band_cols = [&](const char* src, const std::vector<FrcBand>& bands) {
        for (const auto& b : bands) {
            const int pct = static_cast<int>(std::lround(b.level * 100));
            os << "," << src << "_lo" << pct << "," << src << "_hi" << pct;
        }
    };
    band_cols("gp", curve.gp_only);
    band_cols("mc", curve.mc_only);
    band_cols("total", curve.combined);
    os << "\n";
    for (Eigen::Index k = 0; k < curve.a_grid.size(); ++k) {
        os << fmt(curve.a_grid[k]) << "," << fmt(curve.estimate[k]);
        for (const auto* bands : {&curve.gp_only, &curve.mc_only, &curve.combined})
            for (const auto& b : *bands) os << "," << fmt(b.lo[k]) << "," << fmt(b.hi[k]);
        os << "\n";
    }
}

} // namespace frisk
