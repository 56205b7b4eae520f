#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "frisk/rng.hpp"

namespace frisk {

enum class DistKind { Uniform, Gaussian };

// One input marginal. Uniform(lo, hi) or Gaussian(mu, sigma).
struct ScalarDistribution {
    DistKind kind = DistKind::Uniform;
    double p1 = 0.0; // lo  | mu
    double p2 = 1.0; // hi  | sigma

    static ScalarDistribution uniform(double lo, double hi);
    static ScalarDistribution gaussian(double mu, double sigma);

    double mean() const;
    double variance() const;

    // Support bounds; +-inf for the Gaussian.
    double support_lo() const;
    double support_hi() const;

    double density(double x) const;
    double sample_one(Rng& rng) const;

    std::string describe() const;
};

// Joint model of the random inputs X (independent marginals) plus the range
// of the critical parameter a.
struct InputModel {
    std::vector<ScalarDistribution> marginals;
    double a_min = 0.0;
    double a_max = 1.0;

    InputModel() = default;
    InputModel(std::vector<ScalarDistribution> m, double amin, double amax);

    int dim() const { return static_cast<int>(marginals.size()); }
};

enum class MomentKind { Mean, Variance };

// Request to move one moment of one input to a new value delta.
// Mean: E[X_i] = delta. Variance: Var(X_i) = delta with the mean held at its
// nominal value.
struct PerturbationSpec {
    int input_index = 0;
    MomentKind kind = MomentKind::Mean;
    double delta = 0.0;
};

// Exponential tilt of a base marginal: f_delta(x) = exp(lambda.T(x) - psi) f(x)
// with T(x) = x for a mean constraint and T(x) = (x, x^2) for a variance
// constraint. This is the density that meets the moment constraint at minimal
// Kullback-Leibler divergence from the base; the support is unchanged.
class TiltedDistribution {
public:
    TiltedDistribution(ScalarDistribution base, std::array<double, 2> lambda, int n_lambda);

    const ScalarDistribution& base() const { return base_; }
    const std::array<double, 2>& lambda() const { return lambda_; }
    int n_lambda() const { return n_lambda_; }
    double log_normalizer() const { return log_normalizer_; }

    double density(double x) const;
    // f_delta(x) / f(x); throws outside the support.
    double likelihood_ratio(double x) const;
    double mean() const;
    double variance() const;
    double sample_one(Rng& rng) const;

    // Integration window: the support, with Gaussian tails cut where both the
    // base and the tilted density are negligible.
    double work_lo() const { return work_lo_; }
    double work_hi() const { return work_hi_; }

private:
    ScalarDistribution base_;
    std::array<double, 2> lambda_{0.0, 0.0};
    int n_lambda_ = 1;
    double log_normalizer_ = 0.0;
    double work_lo_ = 0.0, work_hi_ = 0.0;
    double mean_ = 0.0, variance_ = 0.0;
    // tabulated CDF over the working window, for inverse-CDF sampling
    std::vector<double> grid_, cdf_;

    friend TiltedDistribution kl_tilt(const ScalarDistribution&, MomentKind, double);
};

// Solve for the KL-minimal tilt meeting the moment constraint. Throws
// ConfigError for infeasible constraints (message names the feasible range)
// and NumericalError if the moment equation does not converge.
TiltedDistribution kl_tilt(const ScalarDistribution& base, MomentKind kind, double delta);
TiltedDistribution kl_tilt(const ScalarDistribution& base, const PerturbationSpec& spec);

// KL(f_delta || f) by adaptive quadrature on the common support.
double kl_divergence(const TiltedDistribution& tilted, const ScalarDistribution& base);

// Free-function forms of the per-distribution operations.
double density(const ScalarDistribution& d, double x);
double density(const TiltedDistribution& d, double x);
std::vector<double> sample(const ScalarDistribution& d, int n, std::uint64_t seed);
std::vector<double> sample(const TiltedDistribution& d, int n, std::uint64_t seed);

} // namespace frisk
