// Adaptive Gauss-Kronrod quadrature (G7,K15).
#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace schedkit::quad {

struct IntegrationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    double abs_tol = 1e-10;
    int max_depth = 24;
    double overflow_guard = 1e15;
};

namespace detail {

// Kronrod 15-point nodes on [-1,1] (positive half) and weights; the
// even-index nodes are the embedded 7-point Gauss rule.
inline constexpr double kXgk[8] = {
    0.9914553711208126, 0.9491079123427585, 0.8648644233597691,
    0.7415311855993944, 0.5860872354676911, 0.4058451513773972,
    0.2077849550078985, 0.0};
inline constexpr double kWgk[8] = {
    0.02293532201052922, 0.06309209262997855, 0.1047900103222502,
    0.1406532597155259,  0.1690047266392679,  0.1903505780647854,
    0.2044329400752989,  0.2094821410847278};
inline constexpr double kWg[4] = {
    0.1294849661688697, 0.2797053914892767, 0.3818300505051189,
    0.4179591836734694};

template <class F>
std::pair<double, double> kronrod_panel(F&& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double fv[15];
    for (int i = 0; i < 7; ++i) {
        fv[i] = f(center - half * kXgk[i]);
        fv[14 - i] = f(center + half * kXgk[i]);
    }
    fv[7] = f(center);
    double kronrod = kWgk[7] * fv[7];
    double gauss = kWg[3] * fv[7];
    for (int i = 0; i < 7; ++i) {
        kronrod += kWgk[i] * (fv[i] + fv[14 - i]);
        if (i % 2 == 1) gauss += kWg[i / 2] * (fv[i] + fv[14 - i]);
    }
    kronrod *= half;
    gauss *= half;
    if (!std::isfinite(kronrod))
        throw IntegrationError("non-finite integrand value in [" + std::to_string(a) +
                               ", " + std::to_string(b) + "]");
    return {kronrod, std::abs(kronrod - gauss)};
}

} // namespace detail

/// Integrate f over [a, b] to absolute tolerance opts.abs_tol. Panels that
/// fail to converge by opts.max_depth bisections are accepted with their
/// current estimate; a divergent integral trips the overflow guard instead.
template <class F>
double integrate(F&& f, double a, double b, const Options& opts = {}) {
    if (!(a <= b)) throw IntegrationError("integration bounds out of order");
    if (a == b) return 0.0;

    struct Segment {
        double a, b;
        int depth;
    };
    std::vector<Segment> stack{{a, b, 0}};
    const double width = b - a;
    double total = 0.0;
    while (!stack.empty()) {
        const Segment seg = stack.back();
        stack.pop_back();
        auto [value, err] = detail::kronrod_panel(f, seg.a, seg.b);
        const double local_tol = opts.abs_tol * ((seg.b - seg.a) / width);
        if (err <= local_tol || seg.depth >= opts.max_depth) {
            total += value;
            if (std::abs(total) > opts.overflow_guard)
                throw IntegrationError("integral estimate exceeds overflow guard");
        } else {
            const double mid = 0.5 * (seg.a + seg.b);
            stack.push_back({seg.a, mid, seg.depth + 1});
            stack.push_back({mid, seg.b, seg.depth + 1});
        }
    }
    return total;
}

} // namespace schedkit::quad
