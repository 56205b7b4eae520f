#include "frisk/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "frisk/error.hpp"

namespace frisk {
namespace {

// Gauss-Legendre nodes/weights on [-1, 1], computed once by Newton iteration
// on the Legendre recurrence (machine precision, no tabulated constants).
template <int N>
struct GaussRule {
    std::array<double, N> node{};
    std::array<double, N> weight{};

    GaussRule() {
        constexpr double pi = 3.14159265358979323846264338327950288;
        for (int i = 0; i < N; ++i) {
            double x = std::cos(pi * (i + 0.75) / (N + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = x;
                for (int k = 2; k <= N; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = N * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-16) break;
            }
            node[static_cast<std::size_t>(i)] = x;
            weight[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
    }
};

const GaussRule<15>& rule15() {
    static const GaussRule<15> r;
    return r;
}
const GaussRule<30>& rule30() {
    static const GaussRule<30> r;
    return r;
}

template <int N>
double apply(const GaussRule<N>& r, const std::function<double(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < N; ++i)
        s += r.weight[static_cast<std::size_t>(i)] * f(c + h * r.node[static_cast<std::size_t>(i)]);
    return s * h;
}

struct Segment {
    double a, b, coarse, fine, err;
};

Segment make_segment(const std::function<double(double)>& f, double a, double b) {
    Segment s;
    s.a = a;
    s.b = b;
    s.coarse = apply(rule15(), f, a, b);
    s.fine = apply(rule30(), f, a, b);
    s.err = std::abs(s.fine - s.coarse);
    return s;
}

} // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureOptions& opt) {
    if (a == b) return 0.0;
    double sign = 1.0;
    if (a > b) {
        std::swap(a, b);
        sign = -1.0;
    }
    std::vector<Segment> segs{make_segment(f, a, b)};
    for (int round = 0; round < opt.max_intervals; ++round) {
        double total = 0.0, err = 0.0;
        std::size_t worst = 0;
        for (std::size_t i = 0; i < segs.size(); ++i) {
            total += segs[i].fine;
            err += segs[i].err;
            if (segs[i].err > segs[worst].err) worst = i;
        }
        const double tol = std::max(opt.abs_tol, opt.rel_tol * std::abs(total));
        if (err <= tol) return sign * total;
        const Segment w = segs[worst];
        const double mid = 0.5 * (w.a + w.b);
        if (mid <= w.a || mid >= w.b)
            throw NumericalError("adaptive quadrature hit an interval too small to split");
        segs[worst] = make_segment(f, w.a, mid);
        segs.push_back(make_segment(f, mid, w.b));
    }
    throw NumericalError("adaptive quadrature failed to converge within the interval budget");
}

} // namespace frisk
