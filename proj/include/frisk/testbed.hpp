#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "frisk/design.hpp"
#include "frisk/distributions.hpp"

namespace frisk {

// Analytic stand-in for the expensive simulator:
//   y = b0 + b1*a + sum_i c_i x_i + sum_i sine_amp_i sin(2 pi x_i).
// With all sine amplitudes zero and Gaussian inputs, the risk curve and the
// sensitivity measures below have closed forms.
struct AnalyticModel {
    double b0 = 0.0;
    double b1 = 1.0;
    Eigen::VectorXd coeff;    // c, one per input
    Eigen::VectorXd sine_amp; // optional smooth nonlinearity, one per input

    bool linear() const { return sine_amp.size() == 0 || sine_amp.isZero(0.0); }
    double eval(double a, const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

// Fills the y column (pure, returns a copy).
DesignMatrix evaluate_analytic(const AnalyticModel& model, DesignMatrix design);

// Closed-form FRC P(Y > s | a) for the linear model with Gaussian inputs.
double oracle_frc(const AnalyticModel& model, const InputModel& input, double s, double a);

// Brute-force FRC on the true function, (1/n) sum 1{G(a, x_i) > s}.
double oracle_frc_mc(const AnalyticModel& model, const InputModel& input, double s, double a,
                     int n, std::uint64_t seed);

// Quadrature/closed-form sensitivity references for the linear-Gaussian case.
struct OracleSobol {
    Eigen::VectorXd first_order;
    Eigen::VectorXd total;
};
OracleSobol oracle_sobol_pointwise(const AnalyticModel& model, const InputModel& input,
                                   double s, double a);
OracleSobol oracle_sobol_aggregated(const AnalyticModel& model, const InputModel& input,
                                    double s, const Eigen::VectorXd& a_grid);
// Indices of the threshold-crossing abscissa a(X); for the linear model they
// are c_i^2 sigma_i^2 / sum_j c_j^2 sigma_j^2 regardless of p.
OracleSobol oracle_sobol_inverse(const AnalyticModel& model, const InputModel& input);

// Closed-form perturbed-law index for a Gaussian mean shift mu_i -> delta.
double oracle_pli_mean_shift(const AnalyticModel& model, const InputModel& input, double s,
                             double a, int input_index, double delta);

} // namespace frisk
