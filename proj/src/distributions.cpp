#include "frisk/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "frisk/error.hpp"
#include "frisk/quadrature.hpp"

namespace frisk {
namespace {

constexpr double kGaussianTailSigmas = 10.0;
constexpr double kMomentTol = 1e-10;
constexpr int kMaxNewtonIter = 200;
constexpr int kCdfTableSize = 8193;

double tilt_exponent(const std::array<double, 2>& lambda, double x) {
    return lambda[0] * x + lambda[1] * x * x;
}

struct GaussianParams {
    double mu, sigma;
};

// exp(l1 x + l2 x^2) N(mu, sigma^2) is again Gaussian when l2 < 1/(2 sigma^2).
GaussianParams tilted_gaussian_params(const ScalarDistribution& base,
                                      const std::array<double, 2>& lambda) {
    const double mu = base.p1, s2 = base.p2 * base.p2;
    const double denom = 1.0 - 2.0 * lambda[1] * s2;
    const double s2t = s2 / denom;
    const double mut = s2t * (mu / s2 + lambda[0]);
    return {mut, std::sqrt(s2t)};
}

// Raw moments 0..4 of exp(lambda.T(x)) f(x) over [lo, hi], all scaled by
// exp(-shift) to avoid overflow for large lambda.
struct TiltMoments {
    double m0, m1, m2, m3, m4;
    double shift;
};

// Shift constant for the tilt integrals: lambda.T at the maximizer of the
// full exponent lambda.T(x) + log f(x). With that choice the shifted integrand
// exp(lambda.T(x) - c) f(x) peaks at f(x*), so it neither overflows nor drops
// to a scale the quadrature tolerance cannot resolve.
double exponent_shift(const ScalarDistribution& base, const std::array<double, 2>& lambda,
                      double lo, double hi) {
    if (base.kind == DistKind::Gaussian) {
        const double s2 = base.p2 * base.p2;
        if (lambda[1] < 0.5 / s2) {
            const GaussianParams t = tilted_gaussian_params(base, lambda);
            const double x_star = std::clamp(t.mu, lo, hi);
            return tilt_exponent(lambda, x_star);
        }
    }
    // uniform base (constant log f), or a non-normalizable quadratic guard:
    // the exponent maximum sits at an endpoint or the vertex
    double m = std::max(tilt_exponent(lambda, lo), tilt_exponent(lambda, hi));
    if (lambda[1] < 0.0) {
        const double v = -lambda[0] / (2.0 * lambda[1]);
        if (v > lo && v < hi) m = std::max(m, tilt_exponent(lambda, v));
    }
    return m;
}

TiltMoments tilt_moments(const ScalarDistribution& base, const std::array<double, 2>& lambda,
                         double lo, double hi) {
    TiltMoments r{};
    r.shift = exponent_shift(base, lambda, lo, hi);
    const double c = r.shift;
    auto weighted = [&](int k) {
        return integrate(
            [&](double x) {
                const double w = std::exp(tilt_exponent(lambda, x) - c) * base.density(x);
                double p = w;
                for (int j = 0; j < k; ++j) p *= x;
                return p;
            },
            lo, hi, {1e-13, 1e-11});
    };
    r.m0 = weighted(0);
    r.m1 = weighted(1);
    r.m2 = weighted(2);
    r.m3 = weighted(3);
    r.m4 = weighted(4);
    return r;
}

// Integration window covering both base and tilted mass.
void working_window(const ScalarDistribution& base, const std::array<double, 2>& lambda,
                    double& lo, double& hi) {
    if (base.kind == DistKind::Uniform) {
        lo = base.p1;
        hi = base.p2;
        return;
    }
    const double mu = base.p1, sigma = base.p2;
    lo = mu - kGaussianTailSigmas * sigma;
    hi = mu + kGaussianTailSigmas * sigma;
    if (lambda[0] != 0.0 || lambda[1] != 0.0) {
        const double s2 = sigma * sigma;
        if (lambda[1] < 0.5 / s2) {
            const GaussianParams t = tilted_gaussian_params(base, lambda);
            lo = std::min(lo, t.mu - kGaussianTailSigmas * t.sigma);
            hi = std::max(hi, t.mu + kGaussianTailSigmas * t.sigma);
        }
    }
}

} // namespace

ScalarDistribution ScalarDistribution::uniform(double lo, double hi) {
    if (!(lo < hi)) throw ConfigError("uniform distribution requires lo < hi");
    return {DistKind::Uniform, lo, hi};
}

ScalarDistribution ScalarDistribution::gaussian(double mu, double sigma) {
    if (!(sigma > 0.0)) throw ConfigError("gaussian distribution requires sigma > 0");
    return {DistKind::Gaussian, mu, sigma};
}

double ScalarDistribution::mean() const {
    return kind == DistKind::Uniform ? 0.5 * (p1 + p2) : p1;
}

double ScalarDistribution::variance() const {
    if (kind == DistKind::Uniform) {
        const double w = p2 - p1;
        return w * w / 12.0;
    }
    return p2 * p2;
}

double ScalarDistribution::support_lo() const {
    return kind == DistKind::Uniform ? p1 : -std::numeric_limits<double>::infinity();
}

double ScalarDistribution::support_hi() const {
    return kind == DistKind::Uniform ? p2 : std::numeric_limits<double>::infinity();
}

double ScalarDistribution::density(double x) const {
    if (kind == DistKind::Uniform) {
        if (x < p1 || x > p2) return 0.0;
        return 1.0 / (p2 - p1);
    }
    const double z = (x - p1) / p2;
    return norm_pdf(z) / p2;
}

double ScalarDistribution::sample_one(Rng& rng) const {
    if (kind == DistKind::Uniform) return p1 + (p2 - p1) * rng.uniform01();
    return p1 + p2 * rng.normal();
}

std::string ScalarDistribution::describe() const {
    std::ostringstream os;
    if (kind == DistKind::Uniform)
        os << "uniform(" << p1 << ", " << p2 << ")";
    else
        os << "gaussian(" << p1 << ", " << p2 << ")";
    return os.str();
}

InputModel::InputModel(std::vector<ScalarDistribution> m, double amin, double amax)
    : marginals(std::move(m)), a_min(amin), a_max(amax) {
    if (marginals.empty()) throw ConfigError("input model needs at least one marginal");
    if (!(a_min < a_max)) throw ConfigError("input model requires a_min < a_max");
}

TiltedDistribution::TiltedDistribution(ScalarDistribution base, std::array<double, 2> lambda,
                                       int n_lambda)
    : base_(base), lambda_(lambda), n_lambda_(n_lambda) {
    if (n_lambda_ == 1) lambda_[1] = 0.0;
    working_window(base_, lambda_, work_lo_, work_hi_);
    if (lambda_[0] == 0.0 && lambda_[1] == 0.0) {
        log_normalizer_ = 0.0;
        mean_ = base_.mean();
        variance_ = base_.variance();
    } else {
        const TiltMoments m = tilt_moments(base_, lambda_, work_lo_, work_hi_);
        log_normalizer_ = m.shift + std::log(m.m0);
        mean_ = m.m1 / m.m0;
        variance_ = m.m2 / m.m0 - mean_ * mean_;
    }
    // CDF table for inverse-CDF sampling
    grid_.resize(kCdfTableSize);
    cdf_.resize(kCdfTableSize);
    const double h = (work_hi_ - work_lo_) / (kCdfTableSize - 1);
    double acc = 0.0;
    double prev = density(work_lo_);
    grid_[0] = work_lo_;
    cdf_[0] = 0.0;
    for (int i = 1; i < kCdfTableSize; ++i) {
        const double x = work_lo_ + h * i;
        const double d = density(x);
        acc += 0.5 * h * (prev + d);
        grid_[static_cast<std::size_t>(i)] = x;
        cdf_[static_cast<std::size_t>(i)] = acc;
        prev = d;
    }
    const double total = cdf_.back();
    if (!(total > 0.0)) throw NumericalError("tilted density has vanishing mass on its support");
    for (auto& c : cdf_) c /= total;
}

double TiltedDistribution::density(double x) const {
    const double fb = base_.density(x);
    if (fb == 0.0) return 0.0;
    return std::exp(tilt_exponent(lambda_, x) - log_normalizer_) * fb;
}

double TiltedDistribution::likelihood_ratio(double x) const {
    if (x < base_.support_lo() || x > base_.support_hi())
        throw NumericalError("likelihood_ratio: point outside the support of the base density");
    return std::exp(tilt_exponent(lambda_, x) - log_normalizer_);
}

double TiltedDistribution::mean() const { return mean_; }
double TiltedDistribution::variance() const { return variance_; }

double TiltedDistribution::sample_one(Rng& rng) const {
    const double u = rng.uniform01_open();
    const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
    std::size_t j = static_cast<std::size_t>(it - cdf_.begin());
    if (j == 0) j = 1;
    if (j >= cdf_.size()) j = cdf_.size() - 1;
    const double c0 = cdf_[j - 1], c1 = cdf_[j];
    const double t = c1 > c0 ? (u - c0) / (c1 - c0) : 0.5;
    return grid_[j - 1] + t * (grid_[j] - grid_[j - 1]);
}

namespace {

void check_feasible(const ScalarDistribution& base, MomentKind kind, double delta) {
    if (base.kind == DistKind::Uniform) {
        const double lo = base.p1, hi = base.p2;
        if (kind == MomentKind::Mean) {
            if (!(delta > lo && delta < hi)) {
                std::ostringstream os;
                os << "mean perturbation delta=" << delta << " infeasible for " << base.describe()
                   << "; feasible range is (" << lo << ", " << hi << ")";
                throw ConfigError(os.str());
            }
        } else {
            const double vmax = (hi - lo) * (hi - lo) / 4.0;
            if (!(delta > 0.0 && delta < vmax)) {
                std::ostringstream os;
                os << "variance perturbation delta=" << delta << " infeasible for "
                   << base.describe() << "; feasible range is (0, " << vmax << ")";
                throw ConfigError(os.str());
            }
        }
    } else {
        if (kind == MomentKind::Variance && !(delta > 0.0)) {
            std::ostringstream os;
            os << "variance perturbation delta=" << delta << " infeasible for "
               << base.describe() << "; feasible range is (0, inf)";
            throw ConfigError(os.str());
        }
        if (kind == MomentKind::Mean && !std::isfinite(delta))
            throw ConfigError("mean perturbation delta must be finite");
    }
}

// 1-D safeguarded Newton for the mean constraint: solve E_lambda[X] = delta.
double solve_mean_tilt(const ScalarDistribution& base, double delta) {
    auto moment = [&](double l) {
        std::array<double, 2> lam{l, 0.0};
        double lo, hi;
        working_window(base, lam, lo, hi);
        const TiltMoments m = tilt_moments(base, lam, lo, hi);
        return std::pair<double, double>{m.m1 / m.m0,
                                         m.m2 / m.m0 - (m.m1 / m.m0) * (m.m1 / m.m0)};
    };

    double lambda = 0.0;
    auto [mu, var] = moment(lambda);
    if (std::abs(mu - delta) <= kMomentTol) return 0.0;
    if (base.kind == DistKind::Gaussian) lambda = (delta - base.p1) / (base.p2 * base.p2);

    // establish a bracket by geometric expansion
    double lo_l = lambda, hi_l = lambda;
    auto g = [&](double l) { return moment(l).first - delta; };
    double g_at = g(lambda);
    double step = 1.0 / std::max(var, 1e-12);
    int guard = 0;
    while (g_at > 0.0 ? g(lo_l) > 0.0 : g(hi_l) < 0.0) {
        if (g_at > 0.0)
            lo_l -= step;
        else
            hi_l += step;
        step *= 2.0;
        if (++guard > 120) throw NumericalError("kl_tilt: failed to bracket the mean equation");
    }
    if (lo_l > hi_l) std::swap(lo_l, hi_l);

    for (int it = 0; it < kMaxNewtonIter; ++it) {
        auto [m, v] = moment(lambda);
        const double resid = m - delta;
        if (std::abs(resid) <= kMomentTol) return lambda;
        if (resid > 0.0)
            hi_l = lambda;
        else
            lo_l = lambda;
        double next = lambda - resid / std::max(v, 1e-300);
        if (!(next > lo_l && next < hi_l)) next = 0.5 * (lo_l + hi_l);
        lambda = next;
    }
    throw NumericalError("kl_tilt: Newton did not converge for the mean constraint");
}

// 2-D damped Newton for the variance constraint with the mean held at its
// nominal value: solve (E[X], E[X^2]) = (mu0, delta + mu0^2).
std::array<double, 2> solve_variance_tilt(const ScalarDistribution& base, double delta) {
    const double mu0 = base.mean();
    const Eigen::Vector2d target(mu0, delta + mu0 * mu0);

    std::array<double, 2> lambda{0.0, 0.0};
    if (base.kind == DistKind::Gaussian) {
        const double s2 = base.p2 * base.p2;
        lambda[1] = 0.5 * (1.0 / s2 - 1.0 / delta);
        lambda[0] = mu0 * (1.0 / delta - 1.0 / s2);
    }
    const double lambda2_cap = base.kind == DistKind::Gaussian
                                   ? (1.0 - 1e-9) * 0.5 / (base.p2 * base.p2)
                                   : std::numeric_limits<double>::infinity();

    auto residual = [&](const std::array<double, 2>& lam, Eigen::Vector2d& r, Eigen::Matrix2d& J) {
        double lo, hi;
        working_window(base, lam, lo, hi);
        const TiltMoments m = tilt_moments(base, lam, lo, hi);
        const double e1 = m.m1 / m.m0, e2 = m.m2 / m.m0, e3 = m.m3 / m.m0, e4 = m.m4 / m.m0;
        r << e1 - target[0], e2 - target[1];
        J << e2 - e1 * e1, e3 - e1 * e2, e3 - e1 * e2, e4 - e2 * e2;
    };

    Eigen::Vector2d r;
    Eigen::Matrix2d J;
    residual(lambda, r, J);
    if (r.cwiseAbs().maxCoeff() <= kMomentTol && lambda[0] == 0.0 && lambda[1] == 0.0)
        return {0.0, 0.0};

    for (int it = 0; it < kMaxNewtonIter; ++it) {
        residual(lambda, r, J);
        if (r.cwiseAbs().maxCoeff() <= kMomentTol) return lambda;
        const Eigen::Vector2d step = J.ldlt().solve(r);
        double t = 1.0;
        const double base_norm = r.norm();
        for (int halving = 0; halving < 40; ++halving) {
            std::array<double, 2> cand{lambda[0] - t * step[0], lambda[1] - t * step[1]};
            if (cand[1] < lambda2_cap) {
                Eigen::Vector2d rc;
                Eigen::Matrix2d Jc;
                residual(cand, rc, Jc);
                if (rc.norm() < base_norm || rc.cwiseAbs().maxCoeff() <= kMomentTol) {
                    lambda = cand;
                    break;
                }
            }
            t *= 0.5;
            if (halving == 39)
                throw NumericalError("kl_tilt: Newton stalled on the variance constraint");
        }
    }
    throw NumericalError("kl_tilt: Newton did not converge for the variance constraint");
}

} // namespace

TiltedDistribution kl_tilt(const ScalarDistribution& base, MomentKind kind, double delta) {
    check_feasible(base, kind, delta);
    if (kind == MomentKind::Mean) {
        const double lambda = solve_mean_tilt(base, delta);
        return TiltedDistribution(base, {lambda, 0.0}, 1);
    }
    const std::array<double, 2> lambda = solve_variance_tilt(base, delta);
    return TiltedDistribution(base, lambda, 2);
}

TiltedDistribution kl_tilt(const ScalarDistribution& base, const PerturbationSpec& spec) {
    return kl_tilt(base, spec.kind, spec.delta);
}

double kl_divergence(const TiltedDistribution& tilted, const ScalarDistribution& base) {
    if (tilted.base().kind != base.kind || tilted.base().p1 != base.p1 ||
        tilted.base().p2 != base.p2)
        throw ConfigError("kl_divergence: tilted distribution was built from a different base");
    if (tilted.lambda()[0] == 0.0 && tilted.lambda()[1] == 0.0) return 0.0;
    // log(f_delta/f) = lambda.T(x) - psi on the support, so the integrand is
    // smooth and never hits 0*log(0/0).
    const auto& lam = tilted.lambda();
    const double psi = tilted.log_normalizer();
    const double v = integrate(
        [&](double x) { return tilted.density(x) * (tilt_exponent(lam, x) - psi); },
        tilted.work_lo(), tilted.work_hi(), {1e-13, 1e-11});
    return std::max(0.0, v);
}

double density(const ScalarDistribution& d, double x) { return d.density(x); }
double density(const TiltedDistribution& d, double x) { return d.density(x); }

std::vector<double> sample(const ScalarDistribution& d, int n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> out(static_cast<std::size_t>(n));
    for (auto& v : out) v = d.sample_one(rng);
    return out;
}

std::vector<double> sample(const TiltedDistribution& d, int n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> out(static_cast<std::size_t>(n));
    for (auto& v : out) v = d.sample_one(rng);
    return out;
}

} // namespace frisk
