// Density-to-schedule engine: a sampling density pi(theta) on theta in (0,1]
// is normalized, turned into the survival CDF integrating from theta to 1,
// and inverted at the uniform marks k/T; alpha_bar_k = theta_k^2. Analytic
// fast paths cover the named densities, a quadrature-plus-bisection fallback
// covers custom ones.
#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "schedkit/quadrature.hpp"

namespace schedkit::design {

struct NonIntegrableError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InversionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class DensityKind { kCvInverse, kFisherSqrt, kCustom };

enum class PipelineMode { kPreferAnalytic, kForceNumeric };

enum class CdfMethod { kAnalytic, kNumeric };

/// A sampling density over theta = e^{-t} in (0,1]. The evaluator is the
/// unnormalized density and must be positive on (0,1); densities unbounded at
/// theta = 1 must set singular_at_one so quadrature applies the theta = sin(u)
/// substitution. Custom evaluators must be side-effect-free.
struct DesignDensity {
    DensityKind kind = DensityKind::kCustom;
    std::function<double(double)> evaluator;
    std::function<double(double)> analytic_survival; // optional closed-form survival CDF
    std::function<double(double)> analytic_inverse;  // optional inverse of the survival CDF
    double analytic_normalization = 0.0;             // > 0 when known in closed form
    bool singular_at_one = false;

    /// pi(theta) = theta / sqrt(1 - theta^2), the reciprocal coefficient of
    /// variation. Survival CDF sqrt(1 - theta^2); marks give alpha_bar = 1 - (k/T)^2.
    static DesignDensity cv_inverse() {
        DesignDensity d;
        d.kind = DensityKind::kCvInverse;
        d.evaluator = [](double theta) {
            return theta / std::sqrt((1.0 - theta) * (1.0 + theta));
        };
        d.analytic_survival = [](double theta) {
            return std::sqrt((1.0 - theta) * (1.0 + theta));
        };
        d.analytic_inverse = [](double c) { return std::sqrt((1.0 - c) * (1.0 + c)); };
        d.analytic_normalization = 1.0;
        d.singular_at_one = true;
        return d;
    }

    /// pi(theta) = 1 / sqrt(1 - theta^2), the square root of the Fisher
    /// information. Survival CDF 1 - (2/pi) asin(theta); marks give
    /// theta_k = cos(k pi / (2T)).
    static DesignDensity fisher_sqrt() {
        DesignDensity d;
        d.kind = DensityKind::kFisherSqrt;
        d.evaluator = [](double theta) {
            return 1.0 / std::sqrt((1.0 - theta) * (1.0 + theta));
        };
        d.analytic_survival = [](double theta) {
            return 1.0 - (2.0 / M_PI) * std::asin(theta);
        };
        d.analytic_inverse = [](double c) { return std::cos(0.5 * M_PI * c); };
        d.analytic_normalization = 0.5 * M_PI;
        d.singular_at_one = true;
        return d;
    }

    static DesignDensity custom(std::function<double(double)> evaluator,
                                bool singular_at_one_) {
        DesignDensity d;
        d.kind = DensityKind::kCustom;
        d.evaluator = std::move(evaluator);
        d.singular_at_one = singular_at_one_;
        return d;
    }
};

struct InverseCdfResult {
    std::vector<double> thetas;     // strictly decreasing, k = 1..T
    std::vector<double> alpha_bars; // thetas squared
    double normalization;
    CdfMethod method;
};

namespace detail {

/// Integral of the unnormalized density over [lo, hi] inside (0, 1].
/// Densities flagged singular at 1 are integrated in u with theta = sin(u),
/// which removes the integrable endpoint blowup.
inline double density_integral(const DesignDensity& d, double lo, double hi) {
    quad::Options opts;
    opts.abs_tol = 1e-10;
    try {
        if (d.singular_at_one) {
            // sin(u) can round to 1.0 arbitrarily close to u = pi/2; keep the
            // evaluator argument strictly inside the domain.
            constexpr double kBelowOne = 1.0 - 0x1p-53;
            return quad::integrate(
                [&d](double u) {
                    return d.evaluator(std::fmin(std::sin(u), kBelowOne)) * std::cos(u);
                },
                std::asin(lo), std::asin(hi), opts);
        }
        return quad::integrate([&d](double theta) { return d.evaluator(theta); }, lo, hi,
                               opts);
    } catch (const quad::IntegrationError& e) {
        throw NonIntegrableError(std::string("density integral failed: ") + e.what());
    }
}

inline void check_positive_density(const DesignDensity& d) {
    for (int i = 1; i < 128; ++i) {
        const double theta = static_cast<double>(i) / 128.0;
        const double value = d.evaluator(theta);
        if (!(value > 0.0) || !std::isfinite(value))
            throw InversionError("density evaluator is not positive at theta = " +
                                 std::to_string(theta));
    }
}

} // namespace detail

/// Normalization constant Z = integral of pi over (0, 1).
inline double normalize(const DesignDensity& d,
                        PipelineMode mode = PipelineMode::kPreferAnalytic) {
    if (mode == PipelineMode::kPreferAnalytic && d.analytic_normalization > 0.0)
        return d.analytic_normalization;
    return detail::density_integral(d, 0.0, 1.0);
}

/// Survival CDF(theta) = integral of pi over [theta, 1] divided by Z;
/// decreasing from 1 at theta -> 0+ to 0 at theta = 1.
inline double survival_cdf(const DesignDensity& d, double theta,
                           PipelineMode mode = PipelineMode::kPreferAnalytic) {
    if (!(theta > 0.0) || !(theta <= 1.0))
        throw std::domain_error("survival_cdf: theta must lie in (0, 1]");
    if (mode == PipelineMode::kPreferAnalytic && d.analytic_survival)
        return d.analytic_survival(theta);
    return detail::density_integral(d, theta, 1.0) / normalize(d, mode);
}

/// Solve survival_cdf(theta_k) = k/T for k = 1..T. Analytic inversion when the
/// density provides one (and the mode allows it), otherwise bisection on the
/// monotone numeric CDF to absolute theta tolerance 1e-14. The terminal mark
/// c = 1 corresponds to theta = 0 exactly.
inline InverseCdfResult invert_at_marks(const DesignDensity& d, int T,
                                        PipelineMode mode = PipelineMode::kPreferAnalytic) {
    if (T < 1) throw std::invalid_argument("invert_at_marks: T must be at least 1");

    InverseCdfResult result;
    result.thetas.reserve(static_cast<std::size_t>(T));
    result.alpha_bars.reserve(static_cast<std::size_t>(T));

    const bool analytic = mode == PipelineMode::kPreferAnalytic &&
                          static_cast<bool>(d.analytic_inverse);
    result.method = analytic ? CdfMethod::kAnalytic : CdfMethod::kNumeric;

    double normalization = 0.0;
    if (analytic) {
        normalization = normalize(d, mode);
    } else {
        detail::check_positive_density(d);
        normalization = detail::density_integral(d, 0.0, 1.0);
    }
    result.normalization = normalization;

    double previous = 1.0; // theta_0, not stored
    for (int k = 1; k <= T; ++k) {
        const double c = static_cast<double>(k) / static_cast<double>(T);
        double theta = 0.0;
        if (analytic) {
            theta = d.analytic_inverse(c);
        } else if (c == 1.0) {
            theta = 0.0;
        } else {
            double lo = 0.0; // survival(lo) = 1 >= c
            double hi = 1.0; // survival(hi) = 0 <= c
            for (int iter = 0; iter < 60 && (hi - lo) > 1e-14; ++iter) {
                const double mid = 0.5 * (lo + hi);
                const double cdf = detail::density_integral(d, mid, 1.0) / normalization;
                if (cdf >= c)
                    lo = mid;
                else
                    hi = mid;
            }
            theta = 0.5 * (lo + hi);
        }
        if (k > 1 && !(theta < previous))
            throw InversionError("inverted marks are not strictly decreasing at k = " +
                                 std::to_string(k));
        previous = theta;
        result.thetas.push_back(theta);
        result.alpha_bars.push_back(theta * theta);
    }
    return result;
}

/// Check the change-of-variable invariance of the sqrt-Fisher density on a
/// grid of theta values: pi(theta) |dtheta/dt| with theta = e^{-t} must match
/// the same density expressed directly in t. Returns the max discrepancy.
inline double reparametrization_check(const DesignDensity& d, std::span<const double> grid) {
    if (grid.empty())
        throw std::invalid_argument("reparametrization_check: empty grid");
    if (d.kind != DensityKind::kFisherSqrt)
        throw std::invalid_argument(
            "reparametrization_check: invariance holds for the fisher-sqrt kind only");
    double max_disc = 0.0;
    for (const double theta : grid) {
        if (!(theta > 0.0) || !(theta < 1.0))
            throw std::domain_error("reparametrization_check: grid values must lie in (0, 1)");
        const double in_theta = d.evaluator(theta) * theta; // |dtheta/dt| = theta
        const double t = -std::log(theta);
        const double in_t = std::exp(-t) / std::sqrt(-std::expm1(-2.0 * t));
        max_disc = std::max(max_disc, std::abs(in_theta - in_t));
    }
    return max_disc;
}

} // namespace schedkit::design
