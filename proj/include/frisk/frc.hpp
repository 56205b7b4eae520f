#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "frisk/distributions.hpp"
#include "frisk/gp.hpp"

namespace frisk {

// The conditional risk curve of the metamodel,
//   p(a, x) = P(Y > s | a, x) = 1 - Phi((s - mean(a,x)) / sd(a,x)),
// collapsing to the indicator when the predictive sd is zero.
struct ConditionalFrcEvaluator {
    const FittedGp* gp = nullptr;
    double s = 0.0;

    // p for every row of x at fixed a
    Eigen::VectorXd eval(double a, const Eigen::MatrixXd& x) const;
    // n x |a_grid| matrix of p over a common x sample
    Eigen::MatrixXd eval_grid(const Eigen::VectorXd& a_grid, const Eigen::MatrixXd& x) const;
};

// Classical Berens-style fit: linear-Gaussian regression of the (optionally
// Box-Cox transformed) response on a, giving FRC(a) = Phi((a - alpha) / beta).
struct BerensFit {
    double beta0 = 0.0;
    double beta1 = 0.0;
    double sigma_eps = 0.0;
    double lambda = 1.0; // Box-Cox exponent; meaningful when boxcox is true
    bool boxcox = false;
    double s_tilde = 0.0; // threshold on the transformed scale
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero(); // of (beta0, beta1, sigma^2)

    double alpha = 0.0; // (s_tilde - beta0) / beta1
    double beta = 0.0;  // sigma_eps / beta1
    double alpha_se = 0.0;
    double beta_se = 0.0;

    double frc(double a) const;
    // two-sided confidence band at the given level, delta method on the
    // transformed scale
    void frc_band(double a, double level, double& lo, double& hi) const;
    double inverse(double p) const; // alpha + beta * Phi^{-1}(p)
};

BerensFit fit_berens(const Eigen::VectorXd& a, const Eigen::VectorXd& y, double s,
                     bool use_boxcox, std::optional<double> fixed_lambda = std::nullopt);

struct FrcOptions {
    int n = 10000;        // Monte-Carlo sample of X
    int m = 3000;         // conditional GP realizations
    int n_clt = 100000;   // CLT draws per realization
    std::vector<double> levels = {0.90}; // central band levels
    int sim_budget = 2000; // max points for one joint conditional simulation
    // pooled samples up to this size are sorted in memory for the quantiles;
    // larger ones go through a two-pass histogram selection (same result)
    std::int64_t exact_quantile_cap = std::int64_t{1} << 23;
    std::uint64_t seed = 0;
};

struct FrcBand {
    double level = 0.90;
    Eigen::VectorXd lo, hi;
};

// A risk curve with its uncertainty split by source. The lower edge of the
// central 90% band doubles as the one-sided 95% lower bound.
struct FrcCurve {
    Eigen::VectorXd a_grid;
    Eigen::VectorXd estimate;
    std::vector<FrcBand> gp_only;   // spread of the m realization curves
    std::vector<FrcBand> mc_only;   // CLT band around the estimate
    std::vector<FrcBand> combined;  // pooled m x n_CLT sample quantiles
    bool pointwise_only = false;    // per-a blocked simulation was used
    int n_used = 0;                 // x points per a actually simulated
    FrcOptions settings;
    std::vector<std::string> warnings;
};

// Mean FRC of the metamodel, plain Monte-Carlo over one common x sample.
Eigen::VectorXd frc_mean_gp(const FittedGp& gp, const InputModel& input, double s,
                            const Eigen::VectorXd& a_grid, int n, std::uint64_t seed);

// Double Monte-Carlo: m conditional realizations, each giving an n-point MC
// estimate per a, each expanded into n_CLT CLT draws; bands from the pooled
// sample.
FrcCurve frc_double_mc(const FittedGp& gp, const InputModel& input, double s,
                       const Eigen::VectorXd& a_grid, const FrcOptions& options);

// Smallest a with curve(a) >= p on a grid curve; the curve is made monotone
// by isotonic regression first (flagged through *rectified).
double frc_inverse(const Eigen::VectorXd& a_grid, const Eigen::VectorXd& values, double p,
                   bool* rectified = nullptr);
double frc_inverse(const FrcCurve& curve, double p, bool* rectified = nullptr);

// n_CLT draws from the CLT approximation N(psi, psi(1-psi)/n), clamped to
// [0,1]; *clamped counts draws that hit the clamp.
std::vector<double> clt_sample(double psi, int n, int n_clt, Rng& rng, int* clamped = nullptr);

void write_frc_csv(std::ostream& os, const FrcCurve& curve);

} // namespace frisk
