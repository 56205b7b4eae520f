#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "frisk/design.hpp"

#include <json.hpp>

namespace frisk {

// Anisotropic Matern 5/2 kernel. Lengthscales live in standardized [0,1]
// coordinates of (a, x1..xd); variance and nugget are in response units.
struct KernelSpec {
    Eigen::VectorXd lengthscales; // size d+1, a first
    double variance = 1.0;
    double nugget = 0.0; // absolute, added to the training covariance diagonal
};

// Trend beta0 + beta1 * a in raw units (Eq-style linear-in-a mean).
struct TrendSpec {
    double beta0 = 0.0;
    double beta1 = 0.0;
    bool include_a = true;
};

struct NuggetPolicy {
    enum class Kind { None, Adaptive, Fixed };
    Kind kind = Kind::Adaptive;
    double value = 1e-8; // relative to the fitted GP variance

    static NuggetPolicy none() { return {Kind::None, 0.0}; }
    static NuggetPolicy adaptive(double rel = 1e-8) { return {Kind::Adaptive, rel}; }
    static NuggetPolicy fixed(double rel) { return {Kind::Fixed, rel}; }
};

struct GpFitOptions {
    bool trend_on = true;
    NuggetPolicy nugget = NuggetPolicy::adaptive();
    int multistarts = 10;
    std::uint64_t seed = 0;
    double theta_lo = 1e-2; // multistart box, standardized units
    double theta_hi = 10.0;
    double tol = 1e-8;
    int max_iterations = 200;
};

// Prediction points (a_i, x_i).
struct PointSet {
    Eigen::VectorXd a;
    Eigen::MatrixXd x;

    int size() const { return static_cast<int>(a.size()); }
};

// All points of an a-grid crossed with a fixed x-sample, a-major order.
PointSet grid_points(const Eigen::VectorXd& a_grid, const Eigen::MatrixXd& x);

struct GpPrediction {
    Eigen::VectorXd mean;
    Eigen::VectorXd variance;
    int clamped = 0; // variances that came out at -eps and were clamped to 0
};

struct RealizationSet {
    PointSet points;
    Eigen::MatrixXd values; // m x |points|
    std::uint64_t seed = 0;
    std::vector<std::string> warnings;
};

// Mean and a square-root factor of the conditional covariance at a point set
// (factor * factor^T = covariance); zero-variance coordinates, e.g. training
// points under a zero nugget, carry exactly zero noise.
struct ConditionalGaussian {
    Eigen::VectorXd mean;
    Eigen::MatrixXd factor;
    std::vector<std::string> warnings;

    Eigen::VectorXd draw(Rng& rng) const;
};

// Trained kriging model with linear-in-a trend. Immutable after construction;
// predict/simulate are const and thread-safe.
class FittedGp {
public:
    const DesignMatrix& design() const { return design_; }
    const KernelSpec& kernel() const { return kernel_; }
    TrendSpec trend() const; // raw-unit coefficients
    bool trend_on() const { return trend_on_; }
    const Eigen::VectorXd& standardize_lo() const { return std_lo_; }
    const Eigen::VectorXd& standardize_hi() const { return std_hi_; }

    GpPrediction predict(const PointSet& points) const;
    Eigen::MatrixXd predict_cov(const PointSet& points) const;
    ConditionalGaussian conditional(const PointSet& points) const;
    RealizationSet simulate_conditional(const PointSet& points, int m, std::uint64_t seed) const;

    nlohmann::json to_json() const;
    static FittedGp from_json(const nlohmann::json& j);

    // Rebuild a model from explicit hyperparameters: trend by generalized
    // least squares, no optimization. fit_gp ends here after the search.
    static FittedGp from_kernel(const DesignMatrix& design, const KernelSpec& kernel,
                                bool trend_on = true);

private:
    FittedGp() = default;
    void build_caches();

    DesignMatrix design_;
    KernelSpec kernel_;
    bool trend_on_ = true;
    Eigen::VectorXd std_lo_, std_hi_;  // standardization maps, size d+1
    Eigen::VectorXd beta_;             // trend in standardized basis, size 1 or 2

    // caches
    Eigen::MatrixXd u_;              // standardized design
    Eigen::MatrixXd f_;              // trend basis at the design
    Eigen::LLT<Eigen::MatrixXd> llt_; // chol of K = sigma2 R + nugget I
    Eigen::VectorXd alpha_;          // K^{-1} (y - F beta)
    Eigen::MatrixXd kinv_f_;         // K^{-1} F
    Eigen::LLT<Eigen::MatrixXd> llt_ftkf_; // chol of F' K^{-1} F

    friend FittedGp fit_gp(const DesignMatrix&, const GpFitOptions&);
};

FittedGp fit_gp(const DesignMatrix& design, const GpFitOptions& options = {});

// Exact Gaussian log-likelihood of the design under (kernel, trend). If
// grad_log_theta is non-null it receives d(loglik)/d(log theta_k). A non-PD
// covariance returns -inf and sets *pd_ok to false instead of throwing.
double gp_log_likelihood(const DesignMatrix& design, const KernelSpec& kernel,
                         const TrendSpec& trend, Eigen::VectorXd* grad_log_theta = nullptr,
                         bool* pd_ok = nullptr);

// Profile log-likelihood at theta (standardized units) with beta and sigma^2
// concentrated out; eta is the relative nugget. This is the MLE objective.
double gp_profile_log_likelihood(const DesignMatrix& design, const Eigen::VectorXd& theta,
                                 double eta, bool trend_on = true);

} // namespace frisk
