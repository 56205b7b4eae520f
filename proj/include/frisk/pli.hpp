#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "frisk/distributions.hpp"
#include "frisk/gp.hpp"

namespace frisk {

struct PliOptions {
    int n = 10000;
    std::uint64_t seed = 0;
    enum class Ci { Delta, Bootstrap } ci = Ci::Delta;
    int B = 500; // bootstrap replicates when ci == Bootstrap
    double ci_level = 0.95;
    double min_ess = 50.0; // effective-sample-size gate on the weights
};

struct PliCell {
    int input = 0;
    double delta = 0.0;
    double a = 0.0;
    double S = 0.0;
    double ci_lo = 0.0, ci_hi = 0.0;
    double n_eff = 0.0;
    double psi = 0.0;      // nominal curve value
    double psi_pert = 0.0; // perturbed curve value (reverse importance sampling)
    bool ok = true;
    std::string note;
};

struct PliResult {
    std::vector<PliCell> cells; // input-major, then delta, then a
    std::vector<int> inputs;
    std::vector<double> delta_grid;
    Eigen::VectorXd a_grid;
    MomentKind kind = MomentKind::Mean;
    PliOptions settings;
    std::vector<std::string> warnings;
};

// One perturbed-law index: the nominal sample is reweighted by the tilt's
// likelihood ratio, and the two curve values are compared through the
// piecewise ratio (divide by the larger probability). Throws NumericalError
// when the importance weights degenerate (n_eff below the gate).
PliCell pli_point(const FittedGp& gp, const InputModel& input, double s,
                  const PerturbationSpec& spec, double a, const PliOptions& options);

// Full (input, delta, a) grid sharing one base sample and one set of curve
// evaluations; only the weights change per cell. Per-cell weight failures are
// recorded on the cell, not fatal.
PliResult pli_grid(const FittedGp& gp, const InputModel& input, double s,
                   const std::vector<int>& inputs, const std::vector<double>& delta_grid,
                   MomentKind kind, const Eigen::VectorXd& a_grid, const PliOptions& options);

// Core estimator on precomputed curve values p and weights w; exposed for
// synthetic-evaluator tests.
PliCell pli_cell(const Eigen::VectorXd& p, const Eigen::VectorXd& w, const PliOptions& options,
                 std::uint64_t cell_stream);

// Perturbed curve value by direct sampling from the tilted marginal (instead
// of reweighting); returns the estimate and its standard error.
std::pair<double, double> pli_psi_direct(const FittedGp& gp, const InputModel& input, double s,
                                         const PerturbationSpec& spec, double a, int n,
                                         std::uint64_t seed);

void write_pli_csv(std::ostream& os, const PliResult& result);

} // namespace frisk
