#include "frisk/gp.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "frisk/error.hpp"
#include "frisk/parallel.hpp"

namespace frisk {
namespace {

constexpr double kSqrt5 = 2.2360679774997896964091736687747;
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr int kSimulationPointGuard = 10000;

Eigen::VectorXd standardize_column(const Eigen::VectorXd& v, double lo, double hi) {
    const double range = hi > lo ? hi - lo : 1.0;
    return (v.array() - lo) / range;
}

// Standardized design matrix, (a, x1..xd) columns mapped by (lo, hi).
Eigen::MatrixXd standardized(const DesignMatrix& d, const Eigen::VectorXd& lo,
                             const Eigen::VectorXd& hi) {
    Eigen::MatrixXd u(d.n(), d.dim() + 1);
    u.col(0) = standardize_column(d.a, lo[0], hi[0]);
    for (int j = 0; j < d.dim(); ++j)
        u.col(j + 1) = standardize_column(d.x.col(j), lo[j + 1], hi[j + 1]);
    return u;
}

Eigen::MatrixXd standardized(const PointSet& p, const Eigen::VectorXd& lo,
                             const Eigen::VectorXd& hi) {
    Eigen::MatrixXd u(p.size(), p.x.cols() + 1);
    u.col(0) = standardize_column(p.a, lo[0], hi[0]);
    for (int j = 0; j < p.x.cols(); ++j)
        u.col(j + 1) = standardize_column(p.x.col(j), lo[j + 1], hi[j + 1]);
    return u;
}

double matern52(double r) {
    return (1.0 + kSqrt5 * r + (5.0 / 3.0) * r * r) * std::exp(-kSqrt5 * r);
}

// Correlation matrix between standardized point sets (rows).
Eigen::MatrixXd correlation(const Eigen::MatrixXd& ua, const Eigen::MatrixXd& ub,
                            const Eigen::VectorXd& theta) {
    Eigen::MatrixXd r(ua.rows(), ub.rows());
    const int dim = static_cast<int>(theta.size());
    for (Eigen::Index i = 0; i < ua.rows(); ++i) {
        for (Eigen::Index j = 0; j < ub.rows(); ++j) {
            double s = 0.0;
            for (int k = 0; k < dim; ++k) {
                const double dk = (ua(i, k) - ub(j, k)) / theta[k];
                s += dk * dk;
            }
            r(i, j) = matern52(std::sqrt(s));
        }
    }
    return r;
}

// Symmetric correlation of one set, plus (optionally) the per-dimension
// derivative factors d r_ij / d log(theta_k) = (5/3)(1 + sqrt5 r) e^{-sqrt5 r} m_k
// with m_k the squared scaled distance in dimension k.
Eigen::MatrixXd correlation_sym(const Eigen::MatrixXd& u, const Eigen::VectorXd& theta,
                                std::vector<Eigen::MatrixXd>* dlog = nullptr) {
    const Eigen::Index n = u.rows();
    const int dim = static_cast<int>(theta.size());
    Eigen::MatrixXd r(n, n);
    if (dlog) dlog->assign(static_cast<std::size_t>(dim), Eigen::MatrixXd::Zero(n, n));
    std::vector<double> m(static_cast<std::size_t>(dim));
    for (Eigen::Index i = 0; i < n; ++i) {
        r(i, i) = 1.0;
        for (Eigen::Index j = 0; j < i; ++j) {
            double s = 0.0;
            for (int k = 0; k < dim; ++k) {
                const double dk = (u(i, k) - u(j, k)) / theta[k];
                m[static_cast<std::size_t>(k)] = dk * dk;
                s += dk * dk;
            }
            const double dist = std::sqrt(s);
            const double e = std::exp(-kSqrt5 * dist);
            r(i, j) = r(j, i) = (1.0 + kSqrt5 * dist + (5.0 / 3.0) * s) * e;
            if (dlog) {
                const double fac = (5.0 / 3.0) * (1.0 + kSqrt5 * dist) * e;
                for (int k = 0; k < dim; ++k) {
                    const double v = fac * m[static_cast<std::size_t>(k)];
                    (*dlog)[static_cast<std::size_t>(k)](i, j) = v;
                    (*dlog)[static_cast<std::size_t>(k)](j, i) = v;
                }
            }
        }
    }
    return r;
}

Eigen::MatrixXd trend_basis(const Eigen::MatrixXd& u, bool trend_on) {
    Eigen::MatrixXd f(u.rows(), trend_on ? 2 : 1);
    f.col(0).setOnes();
    if (trend_on) f.col(1) = u.col(0);
    return f;
}

struct ProfileResult {
    double nll = std::numeric_limits<double>::infinity();
    bool ok = false;
    Eigen::VectorXd beta;
    double sigma2 = 0.0;
};

// Profile negative log-likelihood at theta: beta and sigma^2 concentrated out
// in closed form. eta is the relative nugget. Gradient is with respect to
// log(theta).
ProfileResult profile_nll(const Eigen::MatrixXd& u, const Eigen::MatrixXd& f,
                          const Eigen::VectorXd& y, const Eigen::VectorXd& theta, double eta,
                          Eigen::VectorXd* grad = nullptr) {
    ProfileResult out;
    const Eigen::Index n = u.rows();
    std::vector<Eigen::MatrixXd> dlog;
    Eigen::MatrixXd a = correlation_sym(u, theta, grad ? &dlog : nullptr);
    a.diagonal().array() += eta;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) return out;

    const Eigen::MatrixXd ainv_f = llt.solve(f);
    const Eigen::MatrixXd ftaf = f.transpose() * ainv_f;
    Eigen::LLT<Eigen::MatrixXd> llt_ftaf(ftaf);
    if (llt_ftaf.info() != Eigen::Success) return out;
    const Eigen::VectorXd beta = llt_ftaf.solve(f.transpose() * llt.solve(y));
    const Eigen::VectorXd resid = y - f * beta;
    const Eigen::VectorXd q = llt.solve(resid);
    const double quad = resid.dot(q);
    if (!(quad > 0.0)) return out;
    const double sigma2 = quad / static_cast<double>(n);

    double logdet = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));

    out.nll = 0.5 * (static_cast<double>(n) * std::log(sigma2) + logdet +
                     static_cast<double>(n) * (1.0 + kLog2Pi));
    out.beta = beta;
    out.sigma2 = sigma2;
    out.ok = true;

    if (grad) {
        const Eigen::MatrixXd ainv = llt.solve(Eigen::MatrixXd::Identity(n, n));
        grad->resize(theta.size());
        for (int k = 0; k < theta.size(); ++k) {
            const Eigen::MatrixXd& da = dlog[static_cast<std::size_t>(k)];
            const double quad_term = q.dot(da * q);
            const double trace_term = (ainv.array() * da.array()).sum();
            // d(nll)/dlog(theta_k); beta and sigma2 are at their optima, so
            // only the explicit dependence on A remains.
            (*grad)[k] = -0.5 * (static_cast<double>(n) * quad_term / quad - trace_term);
        }
    }
    return out;
}

// Box-constrained BFGS with backtracking on the profile objective.
struct OptimResult {
    Eigen::VectorXd z; // log theta
    double value = std::numeric_limits<double>::infinity();
    bool ok = false;
};

OptimResult minimize_profile(const Eigen::MatrixXd& u, const Eigen::MatrixXd& f,
                             const Eigen::VectorXd& y, double eta, Eigen::VectorXd z,
                             double z_lo, double z_hi, double tol, int max_iter) {
    const int dim = static_cast<int>(z.size());
    auto eval = [&](const Eigen::VectorXd& zz, Eigen::VectorXd* g) {
        const Eigen::VectorXd theta = zz.array().exp();
        const ProfileResult r = profile_nll(u, f, y, theta, eta, g);
        return r.ok ? r.nll : std::numeric_limits<double>::infinity();
    };
    auto clamp = [&](Eigen::VectorXd zz) {
        for (int k = 0; k < dim; ++k) zz[k] = std::clamp(zz[k], z_lo, z_hi);
        return zz;
    };

    z = clamp(z);
    Eigen::VectorXd g(dim);
    double fval = eval(z, &g);
    OptimResult out;
    if (!std::isfinite(fval)) return out;

    Eigen::MatrixXd h = Eigen::MatrixXd::Identity(dim, dim);
    for (int it = 0; it < max_iter; ++it) {
        Eigen::VectorXd p = -(h * g);
        if (p.dot(g) >= 0.0) {
            h.setIdentity();
            p = -g;
        }
        double t = 1.0;
        Eigen::VectorXd z_new;
        double f_new = std::numeric_limits<double>::infinity();
        bool accepted = false;
        for (int ls = 0; ls < 40; ++ls) {
            z_new = clamp(z + t * p);
            const double directional = std::min(0.0, g.dot(z_new - z));
            if ((z_new - z).lpNorm<Eigen::Infinity>() < 1e-14) break;
            f_new = eval(z_new, nullptr);
            if (std::isfinite(f_new) && f_new <= fval + 1e-4 * directional) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) break;

        Eigen::VectorXd g_new(dim);
        const double f_check = eval(z_new, &g_new);
        (void)f_check;
        const Eigen::VectorXd s = z_new - z;
        const Eigen::VectorXd dy = g_new - g;
        const double sy = s.dot(dy);
        if (sy > 1e-12 * s.norm() * dy.norm()) {
            const Eigen::MatrixXd v =
                Eigen::MatrixXd::Identity(dim, dim) - (s * dy.transpose()) / sy;
            h = v * h * v.transpose() + (s * s.transpose()) / sy;
        } else {
            h.setIdentity();
        }
        const bool converged = std::abs(fval - f_new) <= tol * (1.0 + std::abs(f_new));
        z = z_new;
        fval = f_new;
        g = g_new;
        if (converged) break;
    }
    out.z = z;
    out.value = fval;
    out.ok = std::isfinite(fval);
    return out;
}

void check_duplicates(const DesignMatrix& design) {
    for (int i = 0; i < design.n(); ++i)
        for (int j = 0; j < i; ++j)
            if (design.a[i] == design.a[j] && design.x.row(i) == design.x.row(j))
                throw ConfigError(
                    "design rows " + std::to_string(j) + " and " + std::to_string(i) +
                    " are duplicated points; interpolation with zero nugget is singular, "
                    "use an adaptive or fixed nugget policy");
}

} // namespace

PointSet grid_points(const Eigen::VectorXd& a_grid, const Eigen::MatrixXd& x) {
    const int g = static_cast<int>(a_grid.size());
    const int n = static_cast<int>(x.rows());
    PointSet p;
    p.a.resize(static_cast<Eigen::Index>(g) * n);
    p.x.resize(static_cast<Eigen::Index>(g) * n, x.cols());
    for (int k = 0; k < g; ++k) {
        p.a.segment(static_cast<Eigen::Index>(k) * n, n).setConstant(a_grid[k]);
        p.x.middleRows(static_cast<Eigen::Index>(k) * n, n) = x;
    }
    return p;
}

Eigen::VectorXd ConditionalGaussian::draw(Rng& rng) const {
    Eigen::VectorXd z(mean.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
    return mean + factor * z;
}

TrendSpec FittedGp::trend() const {
    TrendSpec t;
    t.include_a = trend_on_;
    const double lo = std_lo_[0];
    const double range = std_hi_[0] > std_lo_[0] ? std_hi_[0] - std_lo_[0] : 1.0;
    if (trend_on_) {
        t.beta1 = beta_[1] / range;
        t.beta0 = beta_[0] - beta_[1] * lo / range;
    } else {
        t.beta0 = beta_[0];
        t.beta1 = 0.0;
    }
    return t;
}

void FittedGp::build_caches() {
    u_ = standardized(design_, std_lo_, std_hi_);
    f_ = trend_basis(u_, trend_on_);
    Eigen::MatrixXd k = kernel_.variance * correlation_sym(u_, kernel_.lengthscales);
    k.diagonal().array() += kernel_.nugget;
    llt_.compute(k);
    if (llt_.info() != Eigen::Success)
        throw NumericalError("training covariance is not positive definite; "
                             "increase the nugget");
    const Eigen::VectorXd resid = design_.y - f_ * beta_;
    alpha_ = llt_.solve(resid);
    kinv_f_ = llt_.solve(f_);
    llt_ftkf_.compute(f_.transpose() * kinv_f_);
    if (llt_ftkf_.info() != Eigen::Success)
        throw NumericalError("trend normal matrix is singular; the design needs "
                             "at least two distinct a values");
}

FittedGp FittedGp::from_kernel(const DesignMatrix& design, const KernelSpec& kernel,
                               bool trend_on) {
    if (!design.has_y()) throw ConfigError("GP fitting requires a design with responses");
    FittedGp gp;
    gp.design_ = design;
    gp.kernel_ = kernel;
    gp.trend_on_ = trend_on;
    const int dim = design.dim() + 1;
    if (kernel.lengthscales.size() != dim)
        throw ConfigError("kernel has " + std::to_string(kernel.lengthscales.size()) +
                          " lengthscales, design needs " + std::to_string(dim));
    gp.std_lo_.resize(dim);
    gp.std_hi_.resize(dim);
    gp.std_lo_[0] = design.a.minCoeff();
    gp.std_hi_[0] = design.a.maxCoeff();
    for (int j = 0; j < design.dim(); ++j) {
        gp.std_lo_[j + 1] = design.x.col(j).minCoeff();
        gp.std_hi_[j + 1] = design.x.col(j).maxCoeff();
    }
    // GLS trend given the kernel
    const Eigen::MatrixXd u = standardized(design, gp.std_lo_, gp.std_hi_);
    const Eigen::MatrixXd f = trend_basis(u, trend_on);
    Eigen::MatrixXd k = kernel.variance * correlation_sym(u, kernel.lengthscales);
    k.diagonal().array() += kernel.nugget;
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() != Eigen::Success)
        throw NumericalError("training covariance is not positive definite; "
                             "increase the nugget");
    Eigen::LLT<Eigen::MatrixXd> llt_ftkf(f.transpose() * llt.solve(f));
    if (llt_ftkf.info() != Eigen::Success)
        throw NumericalError("trend normal matrix is singular; the design needs "
                             "at least two distinct a values");
    gp.beta_ = llt_ftkf.solve(f.transpose() * llt.solve(design.y));
    gp.build_caches();
    return gp;
}

GpPrediction FittedGp::predict(const PointSet& points) const {
    const Eigen::MatrixXd us = standardized(points, std_lo_, std_hi_);
    const Eigen::MatrixXd fs = trend_basis(us, trend_on_);
    const Eigen::MatrixXd kstar =
        kernel_.variance * correlation(u_, us, kernel_.lengthscales); // N x P
    GpPrediction out;
    out.mean = fs * beta_ + kstar.transpose() * alpha_;
    const Eigen::MatrixXd v = llt_.matrixL().solve(kstar); // N x P
    const Eigen::MatrixXd w = fs.transpose() - kinv_f_.transpose() * kstar; // p x P
    const Eigen::MatrixXd tw = llt_ftkf_.solve(w);
    out.variance.resize(points.size());
    for (int i = 0; i < points.size(); ++i) {
        double var = kernel_.variance - v.col(i).squaredNorm() + w.col(i).dot(tw.col(i));
        if (var < 0.0) {
            var = 0.0;
            ++out.clamped;
        }
        out.variance[i] = var;
    }
    return out;
}

Eigen::MatrixXd FittedGp::predict_cov(const PointSet& points) const {
    const Eigen::MatrixXd us = standardized(points, std_lo_, std_hi_);
    const Eigen::MatrixXd fs = trend_basis(us, trend_on_);
    const Eigen::MatrixXd kstar = kernel_.variance * correlation(u_, us, kernel_.lengthscales);
    const Eigen::MatrixXd v = llt_.matrixL().solve(kstar);
    const Eigen::MatrixXd w = fs.transpose() - kinv_f_.transpose() * kstar;
    Eigen::MatrixXd cov = kernel_.variance * correlation_sym(us, kernel_.lengthscales);
    cov.noalias() -= v.transpose() * v;
    cov.noalias() += w.transpose() * llt_ftkf_.solve(w);
    cov = 0.5 * (cov + cov.transpose()).eval();
    return cov;
}

ConditionalGaussian FittedGp::conditional(const PointSet& points) const {
    ConditionalGaussian cg;
    const GpPrediction pred = predict(points);
    cg.mean = pred.mean;
    Eigen::MatrixXd cov = predict_cov(points);

    // with a zero nugget the process interpolates: points that coincide with
    // a training row are deterministic, so strip the rounding noise that the
    // ill-conditioned covariance algebra leaves on them
    if (kernel_.nugget == 0.0) {
        for (int i = 0; i < points.size(); ++i) {
            for (int r = 0; r < design_.n(); ++r) {
                if (points.a[i] == design_.a[r] && points.x.row(i) == design_.x.row(r)) {
                    cov.row(i).setZero();
                    cov.col(i).setZero();
                    cg.mean[i] = design_.y[r];
                    break;
                }
            }
        }
    }

    // semidefinite factor first: conditional covariances are often singular
    // (training points, saturated subsets), where a plain Cholesky would force
    // jitter noise onto coordinates that are exactly deterministic
    Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
    if (ldlt.info() == Eigen::Success) {
        const Eigen::VectorXd d = ldlt.vectorD();
        const double tol = -1e-8 * std::max(kernel_.variance, d.cwiseAbs().maxCoeff());
        if (d.minCoeff() >= tol) {
            const Eigen::VectorXd root = d.cwiseMax(0.0).cwiseSqrt();
            const Eigen::MatrixXd scaled = Eigen::MatrixXd(ldlt.matrixL()) * root.asDiagonal();
            cg.factor = ldlt.transpositionsP().transpose() * scaled;
            return cg;
        }
    }

    // genuinely indefinite numerics: escalate a diagonal jitter
    double jitter = 1e-10 * kernel_.variance;
    const double jitter_cap = 1e-4 * kernel_.variance;
    Eigen::LLT<Eigen::MatrixXd> llt;
    for (;;) {
        Eigen::MatrixXd shifted = cov;
        shifted.diagonal().array() += jitter;
        llt.compute(shifted);
        if (llt.info() == Eigen::Success) break;
        jitter *= 10.0;
        if (jitter > jitter_cap)
            throw NumericalError("conditional covariance stayed non-PD up to the jitter cap");
    }
    std::ostringstream os;
    os << "conditional covariance needed diagonal jitter " << jitter;
    cg.warnings.push_back(os.str());
    cg.factor = llt.matrixL();
    return cg;
}

RealizationSet FittedGp::simulate_conditional(const PointSet& points, int m,
                                              std::uint64_t seed) const {
    if (points.size() > kSimulationPointGuard)
        throw NumericalError(
            "joint simulation over " + std::to_string(points.size()) +
            " points exceeds the dense-Cholesky guard (" +
            std::to_string(kSimulationPointGuard) + "); simulate in per-a blocks instead");
    const ConditionalGaussian cg = conditional(points);
    RealizationSet out;
    out.points = points;
    out.seed = seed;
    out.warnings = cg.warnings;
    out.values.resize(m, points.size());
    parallel_for(static_cast<std::size_t>(m), [&](std::size_t j) {
        Rng rng(substream(seed, "gp_sim", j));
        out.values.row(static_cast<Eigen::Index>(j)) = cg.draw(rng).transpose();
    });
    return out;
}

nlohmann::json FittedGp::to_json() const {
    nlohmann::json j;
    j["version"] = 1;
    j["kind"] = "frisk-gp";
    j["design"]["a"] = std::vector<double>(design_.a.data(), design_.a.data() + design_.n());
    std::vector<std::vector<double>> xs(static_cast<std::size_t>(design_.n()),
                                        std::vector<double>(static_cast<std::size_t>(design_.dim())));
    for (int i = 0; i < design_.n(); ++i)
        for (int k = 0; k < design_.dim(); ++k)
            xs[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] = design_.x(i, k);
    j["design"]["x"] = xs;
    j["design"]["y"] = std::vector<double>(design_.y.data(), design_.y.data() + design_.n());
    j["standardization"]["lo"] =
        std::vector<double>(std_lo_.data(), std_lo_.data() + std_lo_.size());
    j["standardization"]["hi"] =
        std::vector<double>(std_hi_.data(), std_hi_.data() + std_hi_.size());
    j["kernel"]["family"] = "matern52";
    j["kernel"]["lengthscales"] = std::vector<double>(
        kernel_.lengthscales.data(), kernel_.lengthscales.data() + kernel_.lengthscales.size());
    j["kernel"]["variance"] = kernel_.variance;
    j["kernel"]["nugget"] = kernel_.nugget;
    j["trend"]["on"] = trend_on_;
    j["trend"]["beta_std"] = std::vector<double>(beta_.data(), beta_.data() + beta_.size());
    const TrendSpec t = trend();
    j["trend"]["beta0"] = t.beta0;
    j["trend"]["beta1"] = t.beta1;
    return j;
}

FittedGp FittedGp::from_json(const nlohmann::json& j) {
    if (!j.contains("version")) throw ConfigError("GP document is missing the version field");
    if (j.at("version").get<int>() != 1)
        throw ConfigError("unsupported GP document version");
    if (j.value("kind", "") != std::string("frisk-gp"))
        throw ConfigError("not a GP document (kind mismatch)");
    FittedGp gp;
    const auto a = j.at("design").at("a").get<std::vector<double>>();
    const auto xs = j.at("design").at("x").get<std::vector<std::vector<double>>>();
    const auto y = j.at("design").at("y").get<std::vector<double>>();
    const int n = static_cast<int>(a.size());
    const int d = n > 0 ? static_cast<int>(xs.front().size()) : 0;
    gp.design_.a = Eigen::Map<const Eigen::VectorXd>(a.data(), n);
    gp.design_.x.resize(n, d);
    for (int i = 0; i < n; ++i)
        gp.design_.x.row(i) =
            Eigen::Map<const Eigen::VectorXd>(xs[static_cast<std::size_t>(i)].data(), d);
    gp.design_.y = Eigen::Map<const Eigen::VectorXd>(y.data(), n);
    const auto lo = j.at("standardization").at("lo").get<std::vector<double>>();
    const auto hi = j.at("standardization").at("hi").get<std::vector<double>>();
    gp.std_lo_ = Eigen::Map<const Eigen::VectorXd>(lo.data(), static_cast<int>(lo.size()));
    gp.std_hi_ = Eigen::Map<const Eigen::VectorXd>(hi.data(), static_cast<int>(hi.size()));
    if (j.at("kernel").value("family", "") != std::string("matern52"))
        throw ConfigError("unsupported kernel family in GP document");
    const auto ls = j.at("kernel").at("lengthscales").get<std::vector<double>>();
    gp.kernel_.lengthscales =
        Eigen::Map<const Eigen::VectorXd>(ls.data(), static_cast<int>(ls.size()));
    gp.kernel_.variance = j.at("kernel").at("variance").get<double>();
    gp.kernel_.nugget = j.at("kernel").at("nugget").get<double>();
    gp.trend_on_ = j.at("trend").at("on").get<bool>();
    const auto bs = j.at("trend").at("beta_std").get<std::vector<double>>();
    gp.beta_ = Eigen::Map<const Eigen::VectorXd>(bs.data(), static_cast<int>(bs.size()));
    gp.build_caches();
    return gp;
}

FittedGp fit_gp(const DesignMatrix& design, const GpFitOptions& options) {
    if (!design.has_y()) throw ConfigError("GP fitting requires a design with responses");
    const int d = design.dim();
    const int n = design.n();
    if (n < d + 3)
        throw ConfigError("GP fitting needs at least d+3 = " + std::to_string(d + 3) +
                          " design points, got " + std::to_string(n));
    if (options.trend_on) {
        const double a_span = design.a.maxCoeff() - design.a.minCoeff();
        if (!(a_span > 0.0))
            throw ConfigError("the a-trend needs at least two distinct a values in the design");
    }

    double eta = 0.0;
    switch (options.nugget.kind) {
    case NuggetPolicy::Kind::None:
        eta = 0.0;
        check_duplicates(design);
        break;
    case NuggetPolicy::Kind::Adaptive:
    case NuggetPolicy::Kind::Fixed:
        eta = options.nugget.value;
        break;
    }

    Eigen::VectorXd std_lo(d + 1), std_hi(d + 1);
    std_lo[0] = design.a.minCoeff();
    std_hi[0] = design.a.maxCoeff();
    for (int j = 0; j < d; ++j) {
        std_lo[j + 1] = design.x.col(j).minCoeff();
        std_hi[j + 1] = design.x.col(j).maxCoeff();
    }
    const Eigen::MatrixXd u = standardized(design, std_lo, std_hi);
    const Eigen::MatrixXd f = trend_basis(u, options.trend_on);

    const int dim = d + 1;
    const double z_lo = std::log(options.theta_lo);
    const double z_hi = std::log(options.theta_hi);
    const int starts = std::max(1, options.multistarts);

    std::vector<OptimResult> results(static_cast<std::size_t>(starts));
    const double eta_try = eta;
    auto run_starts = [&](double eta_run) {
        parallel_for(static_cast<std::size_t>(starts), [&](std::size_t s) {
            Eigen::VectorXd z0(dim);
            if (s == 0) {
                z0.setZero(); // theta = 1 in standardized units
            } else {
                Rng rng(substream(options.seed, "gp_fit_start", s));
                for (int k = 0; k < dim; ++k) z0[k] = z_lo + (z_hi - z_lo) * rng.uniform01();
            }
            results[s] = minimize_profile(u, f, design.y, eta_run, z0, z_lo, z_hi, options.tol,
                                          options.max_iterations);
        });
    };

    run_starts(eta_try);
    double eta_used = eta_try;
    auto best_of = [&]() {
        int best = -1;
        for (int s = 0; s < starts; ++s)
            if (results[static_cast<std::size_t>(s)].ok &&
                (best < 0 || results[static_cast<std::size_t>(s)].value <
                                 results[static_cast<std::size_t>(best)].value))
                best = s;
        return best;
    };
    int best = best_of();
    if (best < 0 && options.nugget.kind == NuggetPolicy::Kind::Adaptive) {
        for (double e = std::max(eta_try, 1e-10) * 10.0; e <= 1e-4 && best < 0; e *= 10.0) {
            run_starts(e);
            eta_used = e;
            best = best_of();
        }
    }
    if (best < 0)
        throw NumericalError("GP fit failed: training covariance not positive definite "
                             "at every tried nugget");

    const Eigen::VectorXd theta = results[static_cast<std::size_t>(best)].z.array().exp();
    const ProfileResult prof = profile_nll(u, f, design.y, theta, eta_used);
    if (!prof.ok) throw NumericalError("GP fit failed to evaluate the optimum");

    FittedGp gp;
    gp.design_ = design;
    gp.trend_on_ = options.trend_on;
    gp.std_lo_ = std_lo;
    gp.std_hi_ = std_hi;
    gp.kernel_.lengthscales = theta;
    gp.kernel_.variance = prof.sigma2;
    gp.kernel_.nugget = eta_used * prof.sigma2;
    gp.beta_ = prof.beta;
    gp.build_caches();
    return gp;
}

double gp_profile_log_likelihood(const DesignMatrix& design, const Eigen::VectorXd& theta,
                                 double eta, bool trend_on) {
    if (!design.has_y()) throw ConfigError("log-likelihood requires a design with responses");
    const int d = design.dim();
    Eigen::VectorXd lo(d + 1), hi(d + 1);
    lo[0] = design.a.minCoeff();
    hi[0] = design.a.maxCoeff();
    for (int j = 0; j < d; ++j) {
        lo[j + 1] = design.x.col(j).minCoeff();
        hi[j + 1] = design.x.col(j).maxCoeff();
    }
    const Eigen::MatrixXd u = standardized(design, lo, hi);
    const Eigen::MatrixXd f = trend_basis(u, trend_on);
    const ProfileResult r = profile_nll(u, f, design.y, theta, eta);
    return r.ok ? -r.nll : -std::numeric_limits<double>::infinity();
}

double gp_log_likelihood(const DesignMatrix& design, const KernelSpec& kernel,
                         const TrendSpec& trend, Eigen::VectorXd* grad_log_theta,
                         bool* pd_ok) {
    if (!design.has_y()) throw ConfigError("log-likelihood requires a design with responses");
    if (pd_ok) *pd_ok = true;
    const int d = design.dim();
    Eigen::VectorXd lo(d + 1), hi(d + 1);
    lo[0] = design.a.minCoeff();
    hi[0] = design.a.maxCoeff();
    for (int j = 0; j < d; ++j) {
        lo[j + 1] = design.x.col(j).minCoeff();
        hi[j + 1] = design.x.col(j).maxCoeff();
    }
    const Eigen::MatrixXd u = standardized(design, lo, hi);
    std::vector<Eigen::MatrixXd> dlog;
    Eigen::MatrixXd k =
        kernel.variance * correlation_sym(u, kernel.lengthscales, grad_log_theta ? &dlog : nullptr);
    k.diagonal().array() += kernel.nugget;
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() != Eigen::Success) {
        if (pd_ok) *pd_ok = false;
        if (grad_log_theta) grad_log_theta->setConstant(kernel.lengthscales.size(),
                                                        std::nan(""));
        return -std::numeric_limits<double>::infinity();
    }
    const Eigen::VectorXd resid =
        design.y.array() - trend.beta0 - trend.beta1 * design.a.array();
    const Eigen::VectorXd alpha = llt.solve(resid);
    double logdet = 0.0;
    const int n = design.n();
    for (int i = 0; i < n; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
    const double ll = -0.5 * (resid.dot(alpha) + logdet + n * kLog2Pi);
    if (grad_log_theta) {
        const Eigen::MatrixXd kinv = llt.solve(Eigen::MatrixXd::Identity(n, n));
        grad_log_theta->resize(kernel.lengthscales.size());
        for (int kk = 0; kk < kernel.lengthscales.size(); ++kk) {
            const Eigen::MatrixXd dk = kernel.variance * dlog[static_cast<std::size_t>(kk)];
            (*grad_log_theta)[kk] =
                0.5 * (alpha.dot(dk * alpha) - (kinv.array() * dk.array()).sum());
        }
    }
    return ll;
}

} // namespace frisk
