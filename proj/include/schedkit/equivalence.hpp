// Verification that a discrete chain Z_k = sqrt(alpha_k) Z_{k-1} +
// sqrt(1 - alpha_k) eps and the preset OU process observed at
// t_k = -1/2 log(alpha_bar_k) are the same process: deterministic
// transition-coefficient identities plus a Monte Carlo two-ensemble
// Kolmogorov-Smirnov harness, and the T-rescaling gap checker.
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "schedkit/ks_test.hpp"
#include "schedkit/ou_process.hpp"
#include "schedkit/rng.hpp"
#include "schedkit/schedule.hpp"

namespace schedkit {

/// Initial condition of an ensemble: a point mass or a Gaussian.
struct X0Config {
    enum class Kind { kDeterministic, kGaussian };
    Kind kind = Kind::kDeterministic;
    double value = 1.0; // point value, or mean when Gaussian
    double variance = 0.0;

    static X0Config deterministic(double value) { return {Kind::kDeterministic, value, 0.0}; }
    static X0Config gaussian(double mean, double variance) {
        if (!(variance > 0.0))
            throw std::invalid_argument("X0Config: Gaussian variance must be positive");
        return {Kind::kGaussian, mean, variance};
    }
};

/// paired shares the initial-condition draws between the two ensembles;
/// process noise is independent under both schemes.
enum class EnsembleScheme { kIndependent, kPaired };

struct EnsembleConfig {
    std::size_t n_samples = 0;
    std::uint64_t seed = 0;
    X0Config x0 = X0Config::deterministic(1.0);
    EnsembleScheme scheme = EnsembleScheme::kIndependent;

    void validate() const {
        if (n_samples < 2)
            throw std::invalid_argument("EnsembleConfig: n_samples must be at least 2");
    }
};

/// Trajectories stored step-major: by_step[0] is the initial column,
/// by_step[k] the marginal after step k = 1..steps.
struct Ensemble {
    std::size_t n = 0;
    int steps = 0;
    std::vector<std::vector<double>> by_step;
};

namespace detail {

inline std::vector<double> draw_x0_column(const X0Config& x0, std::size_t n,
                                          NormalStream& stream) {
    std::vector<double> column(n);
    if (x0.kind == X0Config::Kind::kDeterministic) {
        for (auto& v : column) v = x0.value;
    } else {
        const double sd = std::sqrt(x0.variance);
        for (auto& v : column) v = x0.value + sd * stream.next();
    }
    return column;
}

struct StepCoeffs {
    double signal; // sqrt(alpha_k)
    double noise;  // sqrt(1 - alpha_k)
};

inline StepCoeffs ddpm_step_coeffs(const NoiseSchedule& s, int k) {
    const double alpha = s.alphas()[static_cast<std::size_t>(k - 1)];
    return {std::sqrt(alpha), std::sqrt(1.0 - alpha)};
}

inline void moments(const std::vector<double>& column, double& mean, double& variance) {
    const double n = static_cast<double>(column.size());
    double sum = 0.0;
    for (const double v : column) sum += v;
    mean = sum / n;
    double ss = 0.0;
    for (const double v : column) {
        const double d = v - mean;
        ss += d * d;
    }
    variance = column.size() > 1 ? ss / (n - 1.0) : 0.0;
}

inline Ensemble run_ddpm(const NoiseSchedule& s, std::size_t n, NormalStream& stream,
                         std::vector<double> x0_column) {
    Ensemble e;
    e.n = n;
    e.steps = s.steps();
    e.by_step.reserve(static_cast<std::size_t>(e.steps) + 1);
    e.by_step.push_back(std::move(x0_column));
    for (int k = 1; k <= e.steps; ++k) {
        const auto [signal, noise] = ddpm_step_coeffs(s, k);
        const std::vector<double>& prev = e.by_step.back();
        std::vector<double> column(n);
        for (std::size_t i = 0; i < n; ++i)
            column[i] = signal * prev[i] + noise * stream.next();
        e.by_step.push_back(std::move(column));
    }
    return e;
}

inline Ensemble run_ou(const ObservationTimes& times, std::size_t n, NormalStream& stream,
                       std::vector<double> x0_column) {
    const ou::OUParams params = ou::OUParams::ddpm_preset();
    Ensemble e;
    e.n = n;
    e.steps = times.count();
    e.by_step.reserve(static_cast<std::size_t>(e.steps) + 1);
    e.by_step.push_back(std::move(x0_column));
    double t_prev = 0.0;
    for (int k = 1; k <= e.steps; ++k) {
        const double t = times.times()[static_cast<std::size_t>(k - 1)];
        const ou::GaussianLaw law = ou::transition_law(params, 1.0, t - t_prev);
        const double decay = law.mean; // e^{-gamma dt}
        const double sd = std::sqrt(law.variance);
        const std::vector<double>& prev = e.by_step.back();
        std::vector<double> column(n);
        for (std::size_t i = 0; i < n; ++i)
            column[i] = decay * prev[i] + sd * stream.next();
        e.by_step.push_back(std::move(column));
        t_prev = t;
    }
    return e;
}

} // namespace detail

/// Simulate the discrete chain; one standard-normal draw per trajectory per
/// step, deterministic under a fixed seed.
inline Ensemble simulate_ddpm_chain(const NoiseSchedule& s, const EnsembleConfig& cfg) {
    cfg.validate();
    NormalStream stream = make_substream(cfg.seed, 0);
    return detail::run_ddpm(s, cfg.n_samples, stream,
                            detail::draw_x0_column(cfg.x0, cfg.n_samples, stream));
}

/// Same, starting every trajectory from a caller-provided initial column.
inline Ensemble simulate_ddpm_chain(const NoiseSchedule& s, const EnsembleConfig& cfg,
                                    std::vector<double> x0_column) {
    cfg.validate();
    if (x0_column.size() != cfg.n_samples)
        throw std::invalid_argument("simulate_ddpm_chain: x0 column size mismatch");
    NormalStream stream = make_substream(cfg.seed, 0);
    return detail::run_ddpm(s, cfg.n_samples, stream, std::move(x0_column));
}

/// Simulate the preset OU process across the gaps dt_k = t_k - t_{k-1}
/// (t_0 = 0) with the exact transition law; no discretization error.
inline Ensemble simulate_ou_at_times(const ObservationTimes& times, const EnsembleConfig& cfg) {
    cfg.validate();
    NormalStream stream = make_substream(cfg.seed, 0);
    return detail::run_ou(times, cfg.n_samples, stream,
                          detail::draw_x0_column(cfg.x0, cfg.n_samples, stream));
}

/// Same, starting every trajectory from a caller-provided initial column.
inline Ensemble simulate_ou_at_times(const ObservationTimes& times, const EnsembleConfig& cfg,
                                     std::vector<double> x0_column) {
    cfg.validate();
    if (x0_column.size() != cfg.n_samples)
        throw std::invalid_argument("simulate_ou_at_times: x0 column size mismatch");
    NormalStream stream = make_substream(cfg.seed, 0);
    return detail::run_ou(times, cfg.n_samples, stream, std::move(x0_column));
}

struct MarginalIdentityResult {
    double max_rel_error = 0.0;
    std::vector<int> excluded_clamped; // identities skipped at clamped steps
};

/// Deterministic restatement of the equivalence at coefficient level:
/// e^{-2 t_k} = alpha_bar_k and e^{-(t_k - t_{k-1})} = sqrt(alpha_k) for all
/// non-clamped k. Returns the max relative error over both identities.
inline MarginalIdentityResult marginal_identity_check(const NoiseSchedule& s) {
    const ObservationTimes times = to_observation_times(s);
    MarginalIdentityResult result;
    double t_prev = 0.0;
    for (int k = 1; k <= s.steps(); ++k) {
        const std::size_t i = static_cast<std::size_t>(k - 1);
        const double t = times.times()[i];
        if (s.is_clamped(k)) {
            result.excluded_clamped.push_back(k);
            t_prev = t;
            continue;
        }
        const double abar = s.alpha_bars()[i];
        const double rel_abar = std::abs(std::exp(-2.0 * t) - abar) / abar;
        result.max_rel_error = std::max(result.max_rel_error, rel_abar);
        const double sqrt_alpha = std::sqrt(s.alphas()[i]);
        if (sqrt_alpha > 0.0) {
            const double rel_alpha =
                std::abs(std::exp(-(t - t_prev)) - sqrt_alpha) / sqrt_alpha;
            result.max_rel_error = std::max(result.max_rel_error, rel_alpha);
        }
        t_prev = t;
    }
    return result;
}

struct StepComparison {
    int k = 0;
    double t_k = 0.0;
    bool ks_skipped = false;
    std::string note;
    double ks_statistic = 0.0;
    double ks_threshold = 0.0;
    double mean_ddpm = 0.0, mean_ou = 0.0;
    double var_ddpm = 0.0, var_ou = 0.0;
    double mean_exact = 0.0, var_exact = 0.0;
    bool moments_ok = true;
};

struct IncrementCheck {
    int k = 0;
    bool skipped = false;
    double standardized_increment_ks = 0.0;
    double threshold = 0.0;
};

struct EquivalenceReport {
    double alpha_level = 0.0;
    std::vector<StepComparison> per_step;
    std::vector<IncrementCheck> increment_checks;
    bool pass = false;
    std::vector<int> failures; // step indices with any failed check
    std::vector<std::string> warnings;
};

/// Comparison stage shared by the DDPM-vs-OU run and the OU-vs-OU
/// calibration control: a two-sample KS test per marginal, a one-sample KS
/// test of the standardized increments of ensemble `a`,
/// (Z_k - sqrt(alpha_k) Z_{k-1}) / sqrt(1 - alpha_k), against N(0,1) probing
/// the joint structure beyond marginals, and mean/variance gates against the
/// closed forms.
inline EquivalenceReport compare_ensembles(const Ensemble& a, const Ensemble& b,
                                           const NoiseSchedule& s,
                                           const ObservationTimes& times,
                                           const EnsembleConfig& cfg, double alpha_level) {
    cfg.validate();
    if (!(alpha_level > 0.0) || !(alpha_level <= 0.1))
        throw std::invalid_argument("compare_ensembles: alpha_level must lie in (0, 0.1]");
    if (times.count() != s.steps())
        throw std::invalid_argument("compare_ensembles: times/schedule length mismatch");
    if (a.steps != s.steps() || b.steps != s.steps() || a.n != cfg.n_samples ||
        b.n != cfg.n_samples)
        throw std::invalid_argument("compare_ensembles: ensemble shape mismatch");

    const Ensemble& ddpm = a;
    const Ensemble& ou_side = b;
    EquivalenceReport report;
    report.alpha_level = alpha_level;
    const std::size_t n = cfg.n_samples;
    if (n < 1000)
        report.warnings.push_back("underpowered: n_samples = " + std::to_string(n) +
                                  " gives KS tests little detection power");

    const double two_sample_threshold = stats::ks_two_sample_threshold(alpha_level, n, n);
    const double one_sample_threshold = stats::ks_one_sample_threshold(alpha_level, n);
    const double mc = std::sqrt(1.0 / static_cast<double>(n));
    const double var_slack = 4.0 * std::sqrt(2.0 / static_cast<double>(n));

    std::vector<double> increments(n);
    for (int k = 1; k <= s.steps(); ++k) {
        const std::size_t i = static_cast<std::size_t>(k - 1);
        StepComparison step;
        step.k = k;
        step.t_k = times.times()[i];

        const std::vector<double>& zd = ddpm.by_step[static_cast<std::size_t>(k)];
        const std::vector<double>& zo = ou_side.by_step[static_cast<std::size_t>(k)];
        detail::moments(zd, step.mean_ddpm, step.var_ddpm);
        detail::moments(zo, step.mean_ou, step.var_ou);

        const double abar = s.alpha_bars()[i];
        if (cfg.x0.kind == X0Config::Kind::kDeterministic) {
            step.mean_exact = cfg.x0.value * std::sqrt(abar);
            step.var_exact = 1.0 - abar;
        } else {
            step.mean_exact = cfg.x0.value * std::sqrt(abar);
            step.var_exact = 1.0 - abar + cfg.x0.variance * abar;
        }

        bool failed = false;
        if (step.var_ddpm == 0.0 && step.var_ou == 0.0) {
            step.ks_skipped = true;
            step.note = "degenerate marginal (zero variance); KS undefined";
        } else {
            step.ks_statistic = stats::ks_two_sample(zd, zo);
            step.ks_threshold = two_sample_threshold;
            if (step.ks_statistic >= step.ks_threshold) failed = true;
        }

        const double mean_tol = std::max(4.0 * std::sqrt(step.var_exact) * mc, 1e-15);
        const double var_tol = std::max(var_slack * step.var_exact, 1e-15);
        step.moments_ok = std::abs(step.mean_ddpm - step.mean_exact) <= mean_tol &&
                          std::abs(step.mean_ou - step.mean_exact) <= mean_tol &&
                          std::abs(step.var_ddpm - step.var_exact) <= var_tol &&
                          std::abs(step.var_ou - step.var_exact) <= var_tol;
        if (!step.moments_ok) failed = true;

        IncrementCheck inc;
        inc.k = k;
        const auto [signal, noise] = detail::ddpm_step_coeffs(s, k);
        if (noise == 0.0) {
            inc.skipped = true;
        } else {
            const std::vector<double>& prev = ddpm.by_step[static_cast<std::size_t>(k - 1)];
            for (std::size_t j = 0; j < n; ++j)
                increments[j] = (zd[j] - signal * prev[j]) / noise;
            inc.standardized_increment_ks =
                stats::ks_one_sample(increments, stats::standard_normal_cdf);
            inc.threshold = one_sample_threshold;
            if (inc.standardized_increment_ks >= inc.threshold) failed = true;
        }

        if (failed) report.failures.push_back(k);
        report.per_step.push_back(std::move(step));
        report.increment_checks.push_back(inc);
    }
    report.pass = report.failures.empty();
    return report;
}

/// Build the discrete-chain and OU ensembles from independent substreams of
/// cfg.seed and compare them.
inline EquivalenceReport run_equivalence(const NoiseSchedule& s, const ObservationTimes& times,
                                         const EnsembleConfig& cfg, double alpha_level) {
    cfg.validate();
    EnsembleConfig cfg_ddpm = cfg;
    cfg_ddpm.seed = derive_stream_seed(cfg.seed, 1);
    EnsembleConfig cfg_ou = cfg;
    cfg_ou.seed = derive_stream_seed(cfg.seed, 2);

    Ensemble ddpm, ou_side;
    if (cfg.scheme == EnsembleScheme::kPaired) {
        NormalStream x0_stream = make_substream(cfg.seed, 3);
        std::vector<double> x0 = detail::draw_x0_column(cfg.x0, cfg.n_samples, x0_stream);
        ddpm = simulate_ddpm_chain(s, cfg_ddpm, x0);
        ou_side = simulate_ou_at_times(times, cfg_ou, std::move(x0));
    } else {
        ddpm = simulate_ddpm_chain(s, cfg_ddpm);
        ou_side = simulate_ou_at_times(times, cfg_ou);
    }
    return compare_ensembles(ddpm, ou_side, s, times, cfg, alpha_level);
}

/// Equivalence run with the observation times implied by the schedule.
inline EquivalenceReport run_equivalence(const NoiseSchedule& s, const EnsembleConfig& cfg,
                                         double alpha_level) {
    return run_equivalence(s, to_observation_times(s), cfg, alpha_level);
}

struct ScalingReport {
    int factor = 0;
    double max_gap = 0.0;
    std::vector<double> gaps; // |alpha_bar'_{M k} - alpha_bar_k|, k = 1..T
};

/// Generate the recipe at T and at M T and compare alpha_bar at
/// corresponding fractions. The alpha_bar-direct families match exactly; the
/// linear-beta baseline does not.
inline ScalingReport scaling_check(const ScheduleSpec& spec, int factor) {
    if (factor < 2) throw std::invalid_argument("scaling_check: factor must be at least 2");
    const NoiseSchedule base = generate(spec);
    ScheduleSpec scaled_spec = spec;
    scaled_spec.steps = spec.steps * factor;
    const NoiseSchedule scaled = generate(scaled_spec);

    ScalingReport report;
    report.factor = factor;
    report.gaps.reserve(static_cast<std::size_t>(base.steps()));
    for (int k = 1; k <= base.steps(); ++k) {
        const double gap =
            std::abs(scaled.alpha_bars()[static_cast<std::size_t>(k * factor - 1)] -
                     base.alpha_bars()[static_cast<std::size_t>(k - 1)]);
        report.gaps.push_back(gap);
        report.max_gap = std::max(report.max_gap, gap);
    }
    return report;
}

} // namespace schedkit
