// Closed-form analytics of the time-homogeneous Ornstein-Uhlenbeck process
//   dX = -gamma X dt + sigma dW
// transition law and exact sampler for arbitrary (gamma, sigma), plus the
// marginal statistics (auto-variance, CV/SNR, differential entropy, Fisher
// information density, mutual information) in the unit-stationary-variance
// preset gamma = 1, sigma = sqrt(2).
#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "schedkit/rng.hpp"

namespace schedkit::ou {

/// Relaxation rate and fluctuation strength of the OU process.
struct OUParams {
    double gamma;
    double sigma;

    OUParams(double gamma_, double sigma_) : gamma(gamma_), sigma(sigma_) {
        if (!(gamma > 0.0) || !std::isfinite(gamma))
            throw std::invalid_argument("OUParams: gamma must be positive, got " +
                                        std::to_string(gamma_));
        if (!(sigma > 0.0) || !std::isfinite(sigma))
            throw std::invalid_argument("OUParams: sigma must be positive, got " +
                                        std::to_string(sigma_));
    }

    /// sigma^2 / (2 gamma), the variance of the limiting distribution.
    double stationary_variance() const {
        const double sd = sigma / std::sqrt(2.0 * gamma);
        return sd * sd;
    }

    /// Parametrization with stationary variance exactly 1.
    static OUParams ddpm_preset() { return OUParams(1.0, std::sqrt(2.0)); }
};

/// Conditional law of X_t given X_s; variance 0 only for the dt = 0 case.
struct GaussianLaw {
    double mean;
    double variance;
};

/// X_{s+dt} | X_s = x_s  ~  N(x_s e^{-gamma dt}, sigma^2 (1 - e^{-2 gamma dt}) / (2 gamma)).
inline GaussianLaw transition_law(const OUParams& params, double x_s, double dt) {
    if (!(dt >= 0.0)) throw std::domain_error("transition_law: dt must be nonnegative");
    if (dt == 0.0) return {x_s, 0.0};
    const double mean = x_s * std::exp(-params.gamma * dt);
    const double sd_stat = params.sigma / std::sqrt(2.0 * params.gamma);
    const double variance = sd_stat * sd_stat * (-std::expm1(-2.0 * params.gamma * dt));
    return {mean, variance};
}

/// Exact transition sample: mean + sqrt(variance) * z. Consumes exactly one draw.
inline double sample_transition(const OUParams& params, double x_s, double dt,
                                NormalStream& stream) {
    const GaussianLaw law = transition_law(params, x_s, dt);
    return law.mean + std::sqrt(law.variance) * stream.next();
}

// ---------------------------------------------------------------------------
// Preset-only marginal statistics (gamma = 1, sigma = sqrt(2), deterministic
// start). These embed stationary variance 1 and are not meaningful for other
// parameter values.
// ---------------------------------------------------------------------------

/// var[X_t] = 1 - e^{-2t}, increasing from 0 to 1.
inline double auto_variance(double t) {
    if (!(t >= 0.0)) throw std::domain_error("auto_variance: t must be nonnegative");
    return -std::expm1(-2.0 * t);
}

/// CV(theta) = sqrt(1 - theta^2) / theta with theta = e^{-t} in (0, 1].
inline double coefficient_of_variation(double theta) {
    if (!(theta > 0.0) || !(theta <= 1.0))
        throw std::domain_error("coefficient_of_variation: theta must lie in (0, 1]");
    return std::sqrt((1.0 - theta) * (1.0 + theta)) / theta;
}

/// SNR = CV^{-2} = theta^2 / (1 - theta^2); +infinity at theta = 1.
inline double snr(double theta) {
    if (!(theta > 0.0) || !(theta <= 1.0))
        throw std::domain_error("snr: theta must lie in (0, 1]");
    if (theta == 1.0) return std::numeric_limits<double>::infinity();
    return theta * theta / ((1.0 - theta) * (1.0 + theta));
}

/// S(t) = 1/2 + 1/2 log(2 pi (1 - e^{-2t})), strictly increasing, t > 0.
/// The t = 0 marginal is a point mass, so the entropy is rejected there.
inline double differential_entropy(double t) {
    if (!(t > 0.0))
        throw std::domain_error("differential_entropy: t must be positive (delta "
                                "distribution at t = 0)");
    return 0.5 + 0.5 * std::log(2.0 * M_PI * (-std::expm1(-2.0 * t)));
}

/// Sampling density proportional to sqrt of the Fisher information,
/// pi(theta) = 1 / sqrt(1 - theta^2) on [0, 1). Normalization over (0,1) is pi/2.
inline double fisher_density_unnormalized(double theta) {
    if (!(theta >= 0.0) || !(theta < 1.0))
        throw std::domain_error("fisher_density_unnormalized: theta must lie in [0, 1)");
    return 1.0 / std::sqrt((1.0 - theta) * (1.0 + theta));
}

/// Variance of the intrinsic initial uncertainty on standardized data.
struct InitialDispersion {
    double sigma0_sq;

    explicit InitialDispersion(double sigma0_sq_) : sigma0_sq(sigma0_sq_) {
        if (!(sigma0_sq > 0.0) || !(sigma0_sq < 1.0))
            throw std::invalid_argument("InitialDispersion: sigma0_sq must lie in (0, 1), got " +
                                        std::to_string(sigma0_sq_));
    }
};

/// Uniform quantization dispersion (1/levels)^2 / 12 for 257 intensity levels.
inline constexpr double kSigma0Sq257Levels = 1.0 / (257.0 * 257.0 * 12.0);
/// Same for 128 levels, i.e. (2/256)^2 / 12.
inline constexpr double kSigma0Sq128Levels = 1.0 / (128.0 * 128.0 * 12.0);

/// I(X_t; X_0) = 1/2 log(1 + sigma0^2 e^{-2t} / (1 - e^{-2t})), strictly
/// decreasing to 0; t = 0 is singular and rejected.
inline double mutual_information(double t, const InitialDispersion& disp) {
    if (!(t > 0.0)) throw std::domain_error("mutual_information: t must be positive");
    const double e2t = std::exp(-2.0 * t);
    return 0.5 * std::log1p(disp.sigma0_sq * e2t / (-std::expm1(-2.0 * t)));
}

struct MiFeasibilityPoint {
    double t;
    double mutual_information;
    double rhs; // 1 - I(t) / S_x0
};

/// Outcome of testing the mutual-information mark equation k/T = 1 - I(t)/S_x0.
/// Feasible placement would need the RHS inside (0,1) and increasing in t.
struct MiFeasibilityReport {
    double sigma0_sq;
    double marginal_entropy; // S_x0 = 1/2 + 1/2 log(2 pi sigma0^2), negative in range
    std::vector<MiFeasibilityPoint> points;
    bool rhs_in_unit_interval;   // all rhs in the open interval (0, 1)
    bool monotone_increasing_rhs;
    bool feasible;
};

/// Evaluate the mark equation on a grid of strictly increasing positive times.
/// Requires sigma0_sq < 1/(2 pi e) so the marginal entropy S_x0 is negative;
/// then rhs = 1 - I/S_x0 >= 1 everywhere and the construction is infeasible.
inline MiFeasibilityReport mi_schedule_feasibility(const InitialDispersion& disp,
                                                   const std::vector<double>& t_grid) {
    if (t_grid.empty())
        throw std::invalid_argument("mi_schedule_feasibility: empty time grid");
    const double entropy_bound = 1.0 / (2.0 * M_PI * M_E);
    if (!(disp.sigma0_sq < entropy_bound))
        throw std::invalid_argument(
            "mi_schedule_feasibility: sigma0_sq must be below 1/(2 pi e) so the "
            "marginal entropy is negative");
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        if (!(t_grid[i] > 0.0))
            throw std::invalid_argument("mi_schedule_feasibility: grid times must be positive");
        if (i > 0 && !(t_grid[i] > t_grid[i - 1]))
            throw std::invalid_argument(
                "mi_schedule_feasibility: grid must be strictly increasing");
    }

    MiFeasibilityReport report;
    report.sigma0_sq = disp.sigma0_sq;
    report.marginal_entropy = 0.5 + 0.5 * std::log(2.0 * M_PI * disp.sigma0_sq);
    report.points.reserve(t_grid.size());
    bool all_in_interval = true;
    bool monotone = true;
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        const double t = t_grid[i];
        const double mi = mutual_information(t, disp);
        const double rhs = 1.0 - mi / report.marginal_entropy;
        if (!(rhs > 0.0 && rhs < 1.0)) all_in_interval = false;
        if (i > 0 && !(rhs >= report.points[i - 1].rhs)) monotone = false;
        report.points.push_back({t, mi, rhs});
    }
    report.rhs_in_unit_interval = all_in_interval;
    report.monotone_increasing_rhs = monotone;
    report.feasible = all_in_interval && monotone;
    return report;
}

} // namespace schedkit::ou
