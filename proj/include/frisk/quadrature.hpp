#pragma once

#include <functional>

namespace frisk {

struct QuadratureOptions {
    double abs_tol = 1e-12;
    double rel_tol = 1e-10;
    int max_intervals = 20000;
};

// Adaptive quadrature on [a, b] with a nested Gauss-Legendre 15/30 pair and
// interval bisection. Throws NumericalError if the interval budget is
// exhausted before the tolerance is met.
double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureOptions& opt = {});

} // namespace frisk
