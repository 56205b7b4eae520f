#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "frisk/distributions.hpp"
#include "frisk/gp.hpp"

namespace frisk {

enum class SobolFlavor { Aggregated, Pointwise, Inverse };

struct SobolOptions {
    int n_pf = 10000; // pick-freeze sample size
    int B = 200;      // bootstrap replicates
    double ci_level = 0.95;
    std::uint64_t seed = 0;
};

struct SobolIndex {
    double S = 0.0, T = 0.0;       // raw estimates (may fall slightly outside [0,1])
    double S_lo = 0.0, S_hi = 0.0; // bootstrap CI
    double T_lo = 0.0, T_hi = 0.0;
};

struct SobolResult {
    SobolFlavor flavor = SobolFlavor::Aggregated;
    double at = 0.0; // a for pointwise, p for inverse, unused for aggregated
    std::vector<SobolIndex> inputs;
    SobolOptions settings;
    std::vector<std::string> warnings;
};

// Display value: the raw estimate clipped into [0, 1].
double sobol_clip(double v);

// First-order and total indices of the whole curve: pick-freeze covariances
// per grid point, numerator and denominator integrated over a (trapezoid)
// before the ratio.
SobolResult sobol_aggregated(const FittedGp& gp, const InputModel& input, double s,
                             const Eigen::VectorXd& a_grid, const SobolOptions& options);

// Indices of the scalar p(a, X) at one fixed a.
SobolResult sobol_pointwise(const FittedGp& gp, const InputModel& input, double s, double a,
                            const SobolOptions& options);

// Indices of the crossing abscissa a(X) = inf{a : p(a, X) >= prob}.
SobolResult sobol_inverse(const FittedGp& gp, const InputModel& input, double s, double prob,
                          const SobolOptions& options);

// Evaluator-generic cores; x is n x d, the result one row per sample. Used by
// the GP front-ends above and directly by tests with synthetic outputs.
using CurveOutputFn = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>;
using ScalarOutputFn = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;

SobolResult sobol_aggregated_with(const CurveOutputFn& output, const InputModel& input,
                                  const Eigen::VectorXd& a_grid, const SobolOptions& options);
SobolResult sobol_pointwise_with(const ScalarOutputFn& output, const InputModel& input,
                                 double a, const SobolOptions& options);
SobolResult sobol_inverse_with(const ScalarOutputFn& crossing, const InputModel& input,
                               double prob, const SobolOptions& options);

// Per-sample crossing abscissae of the metamodel curve, by batched bisection;
// rows that never reach prob are clamped to a_max (fraction reported through
// *clamped_fraction, error above 5%).
Eigen::VectorXd crossing_abscissae(const FittedGp& gp, const InputModel& input, double s,
                                   double prob, const Eigen::MatrixXd& x,
                                   double* clamped_fraction = nullptr);

void write_sobol_csv(std::ostream& os, const SobolResult& result);

} // namespace frisk
