// Discrete noise schedules and their exact correspondence with observation
// times of the unit-stationary-variance OU process:
//   t_k = -1/2 log(alpha_bar_k)   <=>   alpha_bar_k = e^{-2 t_k}.
// Closed-form generator families plus conversions in both directions.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "schedkit/density.hpp"
#include "schedkit/ou_process.hpp"

namespace schedkit {

inline constexpr double kDefaultAlphaBarFloor = 1e-12;

/// A discrete schedule {beta_k}, {alpha_k = 1 - beta_k}, {alpha_bar_k =
/// prod alpha_i} for k = 1..T, with alpha_bar_0 = 1 implicit. Terminal
/// alpha_bar values below the floor are clamped so observation times stay
/// finite; clamped indices are recorded and excluded from exact identities.
/// Immutable after construction.
class NoiseSchedule {
  public:
    /// Build from per-step noise strengths beta_k in [0, 1].
    static NoiseSchedule from_betas(const std::vector<double>& betas,
                                    double alpha_bar_floor = kDefaultAlphaBarFloor,
                                    std::string family = "custom",
                                    std::map<std::string, double> params = {}) {
        validate_floor(alpha_bar_floor);
        if (betas.empty()) throw std::invalid_argument("from_betas: empty schedule");
        std::string bad;
        for (std::size_t i = 0; i < betas.size(); ++i) {
            if (!(betas[i] >= 0.0) || !(betas[i] <= 1.0)) {
                if (!bad.empty()) bad += ", ";
                bad += std::to_string(i + 1);
            }
        }
        if (!bad.empty())
            throw std::invalid_argument("from_betas: beta outside [0, 1] at k = " + bad);

        NoiseSchedule s;
        s.floor_ = alpha_bar_floor;
        s.family_ = std::move(family);
        s.params_ = std::move(params);
        s.betas_ = betas;
        s.alphas_.reserve(betas.size());
        std::vector<double> raw;
        raw.reserve(betas.size());
        double running = 1.0;
        for (const double beta : betas) {
            const double alpha = 1.0 - beta;
            s.alphas_.push_back(alpha);
            running *= alpha;
            raw.push_back(running);
        }
        s.apply_clamp(raw);
        s.finalize();
        return s;
    }

    /// Build from alpha_bar values in (0, 1], non-increasing; alpha_k is the
    /// ratio of consecutive entries.
    static NoiseSchedule from_alpha_bars(const std::vector<double>& alpha_bars,
                                         double alpha_bar_floor = kDefaultAlphaBarFloor) {
        validate_floor(alpha_bar_floor);
        if (alpha_bars.empty()) throw std::invalid_argument("from_alpha_bars: empty schedule");
        for (std::size_t i = 0; i < alpha_bars.size(); ++i) {
            if (!(alpha_bars[i] > 0.0) || !(alpha_bars[i] <= 1.0))
                throw std::invalid_argument("from_alpha_bars: value outside (0, 1] at k = " +
                                            std::to_string(i + 1));
            if (i > 0 && alpha_bars[i] > alpha_bars[i - 1])
                throw std::invalid_argument("from_alpha_bars: sequence increases at k = " +
                                            std::to_string(i + 1));
        }
        return from_raw_alpha_bars(alpha_bars, alpha_bar_floor);
    }

    /// Build from a closed-form alpha_bar sequence that may end in exact
    /// zeros or sub-floor values; alpha_k comes from the raw ratios (so a
    /// terminal raw zero gives beta_T = 1 exactly) and the stored alpha_bar
    /// is clamped at the floor.
    static NoiseSchedule from_raw_alpha_bars(const std::vector<double>& raw_alpha_bars,
                                             double alpha_bar_floor = kDefaultAlphaBarFloor,
                                             std::string family = "custom",
                                             std::map<std::string, double> params = {}) {
        validate_floor(alpha_bar_floor);
        if (raw_alpha_bars.empty())
            throw std::invalid_argument("from_raw_alpha_bars: empty schedule");

        NoiseSchedule s;
        s.floor_ = alpha_bar_floor;
        s.family_ = std::move(family);
        s.params_ = std::move(params);
        s.alphas_.reserve(raw_alpha_bars.size());
        s.betas_.reserve(raw_alpha_bars.size());
        double previous = 1.0;
        for (std::size_t i = 0; i < raw_alpha_bars.size(); ++i) {
            const double current = raw_alpha_bars[i];
            if (!(current >= 0.0) || !(current <= 1.0) || current > previous)
                throw std::invalid_argument(
                    "from_raw_alpha_bars: sequence must be non-increasing within [0, 1], "
                    "violated at k = " + std::to_string(i + 1));
            const double alpha = previous > 0.0 ? current / previous : 0.0;
            s.alphas_.push_back(alpha);
            s.betas_.push_back(1.0 - alpha);
            previous = current;
        }
        s.apply_clamp(raw_alpha_bars);
        s.finalize();
        return s;
    }

    int steps() const { return static_cast<int>(betas_.size()); }
    const std::vector<double>& betas() const { return betas_; }
    const std::vector<double>& alphas() const { return alphas_; }
    const std::vector<double>& alpha_bars() const { return alpha_bars_; }
    /// 1-based indices whose stored alpha_bar was raised to the floor.
    const std::vector<int>& clamped_indices() const { return clamped_; }
    double alpha_bar_floor() const { return floor_; }
    bool is_clamped(int k) const {
        return std::find(clamped_.begin(), clamped_.end(), k) != clamped_.end();
    }
    /// False for degenerate schedules containing beta_k = 0 steps.
    bool strictly_decreasing() const { return strictly_decreasing_; }

    const std::string& family() const { return family_; }
    const std::map<std::string, double>& params() const { return params_; }

    /// Elementwise comparison at relative 1e-12 with absolute slack near zero.
    bool approx_equal(const NoiseSchedule& other, double rel = 1e-12,
                      double abs = 1e-14) const {
        if (steps() != other.steps()) return false;
        auto close = [rel, abs](double a, double b) {
            return std::abs(a - b) <= std::max(abs, rel * std::max(std::abs(a), std::abs(b)));
        };
        for (int i = 0; i < steps(); ++i) {
            if (!close(betas_[i], other.betas_[i]) || !close(alphas_[i], other.alphas_[i]) ||
                !close(alpha_bars_[i], other.alpha_bars_[i]))
                return false;
        }
        return true;
    }

  private:
    NoiseSchedule() = default;

    static void validate_floor(double floor) {
        if (!(floor > 0.0) || !(floor < 1.0))
            throw std::invalid_argument("alpha_bar_floor must lie in (0, 1)");
    }

    void apply_clamp(const std::vector<double>& raw) {
        alpha_bars_.reserve(raw.size());
        for (std::size_t i = 0; i < raw.size(); ++i) {
            if (raw[i] < floor_) {
                alpha_bars_.push_back(floor_);
                clamped_.push_back(static_cast<int>(i + 1));
            } else {
                alpha_bars_.push_back(raw[i]);
            }
        }
    }

    void finalize() {
        strictly_decreasing_ = true;
        double previous = 1.0;
        for (std::size_t i = 0; i < alpha_bars_.size(); ++i) {
            const double current = alpha_bars_[i];
            if (!(current < previous)) strictly_decreasing_ = false;
            // Clamping must not merge consecutive entries: a mid-sequence
            // total-noise step would leave no finite observation time.
            if (alphas_[i] < 1.0 && !(current < previous))
                throw std::invalid_argument(
                    "schedule is not strictly decreasing after clamping at k = " +
                    std::to_string(i + 1) +
                    "; only a terminal alpha_bar may reach the floor");
            previous = current;
        }
    }

    std::vector<double> betas_;
    std::vector<double> alphas_;
    std::vector<double> alpha_bars_;
    std::vector<int> clamped_;
    double floor_ = kDefaultAlphaBarFloor;
    bool strictly_decreasing_ = true;
    std::string family_ = "custom";
    std::map<std::string, double> params_;
};

/// Times at which observing the preset OU process reproduces a discrete
/// schedule; t_0 = 0 is implicit. Non-decreasing by construction; degenerate
/// schedules (beta_k = 0 steps) yield repeated times, and only strictly
/// increasing positive times convert back to a schedule.
class ObservationTimes {
  public:
    explicit ObservationTimes(std::vector<double> times) : times_(std::move(times)) {
        if (times_.empty()) throw std::invalid_argument("ObservationTimes: empty");
        double previous = 0.0;
        bool strict = true;
        for (std::size_t i = 0; i < times_.size(); ++i) {
            if (!std::isfinite(times_[i]) || times_[i] < 0.0)
                throw std::invalid_argument(
                    "ObservationTimes: times must be finite and nonnegative");
            if (times_[i] < previous)
                throw std::invalid_argument("ObservationTimes: times decrease at k = " +
                                            std::to_string(i + 1));
            if (!(times_[i] > previous)) strict = false;
            previous = times_[i];
        }
        strictly_increasing_ = strict;
    }

    const std::vector<double>& times() const { return times_; }
    int count() const { return static_cast<int>(times_.size()); }
    /// True when t_1 > 0 and every later time strictly exceeds its predecessor.
    bool strictly_increasing() const { return strictly_increasing_; }

  private:
    std::vector<double> times_;
    bool strictly_increasing_ = false;
};

/// t_k = -1/2 log(alpha_bar_k), equivalently -1/2 sum of log alpha_i.
inline ObservationTimes to_observation_times(const NoiseSchedule& s) {
    std::vector<double> times;
    times.reserve(static_cast<std::size_t>(s.steps()));
    for (const double abar : s.alpha_bars()) {
        if (!(abar > 0.0))
            throw std::domain_error("to_observation_times: alpha_bar must be positive");
        times.push_back(-0.5 * std::log(abar));
    }
    return ObservationTimes(std::move(times));
}

/// Inverse map alpha_bar_k = e^{-2 t_k}; requires strictly increasing
/// positive times. Roundtrip with to_observation_times is an identity to
/// relative 1e-12.
inline NoiseSchedule from_observation_times(const ObservationTimes& times,
                                            double alpha_bar_floor = kDefaultAlphaBarFloor) {
    if (!times.strictly_increasing())
        throw std::invalid_argument(
            "from_observation_times: times must be strictly increasing and positive");
    std::vector<double> alpha_bars;
    alpha_bars.reserve(times.times().size());
    for (const double t : times.times()) alpha_bars.push_back(std::exp(-2.0 * t));
    return NoiseSchedule::from_alpha_bars(alpha_bars, alpha_bar_floor);
}

// ---------------------------------------------------------------------------
// Generator families
// ---------------------------------------------------------------------------

enum class ScheduleFamily {
    kConstantVariance,
    kCvQuadratic,
    kEntropy,
    kFisherCosine,
    kLinearBeta,
    kCustomDensity,
};

enum class EntropyForm { kDerived, kPaper };

inline std::string family_to_string(ScheduleFamily family) {
    switch (family) {
        case ScheduleFamily::kConstantVariance: return "constant-variance";
        case ScheduleFamily::kCvQuadratic: return "cv-quadratic";
        case ScheduleFamily::kEntropy: return "entropy";
        case ScheduleFamily::kFisherCosine: return "fisher-cosine";
        case ScheduleFamily::kLinearBeta: return "linear-beta";
        case ScheduleFamily::kCustomDensity: return "custom-density";
    }
    throw std::invalid_argument("unknown schedule family");
}

inline ScheduleFamily family_from_string(const std::string& name) {
    if (name == "constant-variance") return ScheduleFamily::kConstantVariance;
    if (name == "cv-quadratic") return ScheduleFamily::kCvQuadratic;
    if (name == "entropy") return ScheduleFamily::kEntropy;
    if (name == "fisher-cosine") return ScheduleFamily::kFisherCosine;
    if (name == "linear-beta") return ScheduleFamily::kLinearBeta;
    if (name == "custom-density") return ScheduleFamily::kCustomDensity;
    throw std::invalid_argument("unknown schedule family '" + name + "'");
}

namespace detail {
inline void check_steps(int steps) {
    if (steps < 1) throw std::invalid_argument("schedule requires at least one step");
}
} // namespace detail

/// Equal auto-variance change per step: alpha_bar_k = 1 - k/T, so
/// beta_k = 1/(T - k + 1) and the terminal step is clamped.
inline NoiseSchedule constant_variance_schedule(int steps,
                                                double floor = kDefaultAlphaBarFloor) {
    detail::check_steps(steps);
    std::vector<double> raw(static_cast<std::size_t>(steps));
    for (int k = 1; k <= steps; ++k)
        raw[k - 1] = 1.0 - static_cast<double>(k) / static_cast<double>(steps);
    return NoiseSchedule::from_raw_alpha_bars(raw, floor, "constant-variance");
}

/// Inverse-CV sampling density: alpha_bar_k = 1 - (k/T)^2,
/// beta_k = (2k - 1)/(T^2 - (k - 1)^2).
inline NoiseSchedule cv_quadratic_schedule(int steps, double floor = kDefaultAlphaBarFloor) {
    detail::check_steps(steps);
    std::vector<double> raw(static_cast<std::size_t>(steps));
    for (int k = 1; k <= steps; ++k) {
        const double u = static_cast<double>(k) / static_cast<double>(steps);
        raw[k - 1] = 1.0 - u * u;
    }
    return NoiseSchedule::from_raw_alpha_bars(raw, floor, "cv-quadratic");
}

/// Equal entropy production between observations. The derived form
/// alpha_bar_k = 1 - sigma0^(2 - 2k/T) reaches the limiting distribution at
/// k = T; the alternative form uses exponent 2 - k/T and ends almost
/// noiseless instead.
inline NoiseSchedule entropy_schedule(int steps, double sigma0_sq,
                                      EntropyForm form = EntropyForm::kDerived,
                                      double floor = kDefaultAlphaBarFloor) {
    detail::check_steps(steps);
    ou::InitialDispersion disp(sigma0_sq); // range check
    std::vector<double> raw(static_cast<std::size_t>(steps));
    for (int k = 1; k <= steps; ++k) {
        const double u = static_cast<double>(k) / static_cast<double>(steps);
        const double exponent = form == EntropyForm::kDerived ? 1.0 - u : 1.0 - 0.5 * u;
        raw[k - 1] = 1.0 - std::pow(disp.sigma0_sq, exponent);
    }
    return NoiseSchedule::from_raw_alpha_bars(
        raw, floor, "entropy",
        {{"sigma0_sq", sigma0_sq},
         {"entropy_form", form == EntropyForm::kDerived ? 0.0 : 1.0}});
}

/// Sqrt-Fisher-information sampling density: alpha_bar_k = cos^2(k pi / (2T)),
/// evaluated in the half-angle form (1 + cos(pi k/T))/2 so the terminal value
/// is an exact zero and midpoints are exact.
inline NoiseSchedule fisher_cosine_schedule(int steps, double floor = kDefaultAlphaBarFloor) {
    detail::check_steps(steps);
    std::vector<double> raw(static_cast<std::size_t>(steps));
    for (int k = 1; k <= steps; ++k) {
        const double u = static_cast<double>(k) / static_cast<double>(steps);
        raw[k - 1] = 0.5 * (1.0 + std::cos(M_PI * u));
    }
    return NoiseSchedule::from_raw_alpha_bars(raw, floor, "fisher-cosine");
}

/// Baseline beta_k = beta_start + (beta_end - beta_start) k/T. Unlike the
/// alpha_bar-direct families this has no T-rescaling property.
inline NoiseSchedule linear_beta_schedule(int steps, double beta_start, double beta_end,
                                          double floor = kDefaultAlphaBarFloor) {
    detail::check_steps(steps);
    if (!(beta_start >= 0.0) || !(beta_start <= 1.0) || !(beta_end >= 0.0) ||
        !(beta_end <= 1.0))
        throw std::invalid_argument("linear_beta_schedule: endpoints must lie in [0, 1]");
    std::vector<double> betas(static_cast<std::size_t>(steps));
    for (int k = 1; k <= steps; ++k) {
        const double u = static_cast<double>(k) / static_cast<double>(steps);
        betas[k - 1] = beta_start + (beta_end - beta_start) * u;
    }
    return NoiseSchedule::from_betas(betas, floor, "linear-beta",
                                     {{"beta_start", beta_start}, {"beta_end", beta_end}});
}

/// Inverse-transform schedule for a user-supplied sampling density.
inline NoiseSchedule custom_density_schedule(const design::DesignDensity& density, int steps,
                                             double floor = kDefaultAlphaBarFloor) {
    detail::check_steps(steps);
    const design::InverseCdfResult marks = design::invert_at_marks(density, steps);
    return NoiseSchedule::from_raw_alpha_bars(marks.alpha_bars, floor, "custom-density");
}

/// Declarative recipe from which a schedule is generated.
struct ScheduleSpec {
    ScheduleFamily family = ScheduleFamily::kFisherCosine;
    int steps = 0;
    double alpha_bar_floor = kDefaultAlphaBarFloor;
    double sigma0_sq = ou::kSigma0Sq257Levels;            // entropy
    EntropyForm entropy_form = EntropyForm::kDerived;     // entropy
    double beta_start = 1e-4;                             // linear-beta
    double beta_end = 0.02;                               // linear-beta
    std::optional<design::DesignDensity> density;         // custom-density
};

inline NoiseSchedule generate(const ScheduleSpec& spec) {
    switch (spec.family) {
        case ScheduleFamily::kConstantVariance:
            return constant_variance_schedule(spec.steps, spec.alpha_bar_floor);
        case ScheduleFamily::kCvQuadratic:
            return cv_quadratic_schedule(spec.steps, spec.alpha_bar_floor);
        case ScheduleFamily::kEntropy:
            return entropy_schedule(spec.steps, spec.sigma0_sq, spec.entropy_form,
                                    spec.alpha_bar_floor);
        case ScheduleFamily::kFisherCosine:
            return fisher_cosine_schedule(spec.steps, spec.alpha_bar_floor);
        case ScheduleFamily::kLinearBeta:
            return linear_beta_schedule(spec.steps, spec.beta_start, spec.beta_end,
                                        spec.alpha_bar_floor);
        case ScheduleFamily::kCustomDensity:
            if (!spec.density)
                throw std::invalid_argument("generate: custom-density spec has no density");
            return custom_density_schedule(*spec.density, spec.steps, spec.alpha_bar_floor);
    }
    throw std::invalid_argument("generate: unknown schedule family");
}

} // namespace schedkit
