// Canonical JSON and CSV forms of schedules and reports. Floats are emitted
// with shortest round-trip precision.
#pragma once

#include <charconv>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "schedkit/equivalence.hpp"
#include "schedkit/ou_process.hpp"
#include "schedkit/schedule.hpp"

namespace schedkit::io {

using nlohmann::json;

inline constexpr int kFormatVersion = 1;

struct FormatError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Shortest decimal string that parses back to the same double.
inline std::string format_double(double value) {
    char buffer[32];
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return std::string(buffer, result.ptr);
}

inline json params_to_json(const std::map<std::string, double>& params) {
    json out = json::object();
    for (const auto& [key, value] : params) {
        if (key == "entropy_form")
            out[key] = value == 0.0 ? "derived" : "paper";
        else
            out[key] = value;
    }
    return out;
}

inline std::map<std::string, double> params_from_json(const json& j) {
    std::map<std::string, double> params;
    for (const auto& [key, value] : j.items()) {
        if (key == "entropy_form") {
            const std::string form = value.get<std::string>();
            if (form != "derived" && form != "paper")
                throw FormatError("params: entropy_form must be 'derived' or 'paper'");
            params[key] = form == "derived" ? 0.0 : 1.0;
        } else if (value.is_number()) {
            params[key] = value.get<double>();
        } else {
            throw FormatError("params: value of '" + key + "' is not a number");
        }
    }
    return params;
}

/// Canonical schedule document: format_version, family, T, params,
/// alpha_bar_floor, betas, alpha_bars, observation_times, clamped_indices.
inline json schedule_to_json(const NoiseSchedule& s) {
    json j;
    j["format_version"] = kFormatVersion;
    j["family"] = s.family();
    j["T"] = s.steps();
    j["params"] = params_to_json(s.params());
    j["alpha_bar_floor"] = s.alpha_bar_floor();
    j["betas"] = s.betas();
    j["alpha_bars"] = s.alpha_bars();
    std::vector<double> times;
    times.reserve(s.alpha_bars().size());
    for (const double abar : s.alpha_bars()) times.push_back(-0.5 * std::log(abar));
    j["observation_times"] = times;
    j["clamped_indices"] = s.clamped_indices();
    return j;
}

/// Parse and validate a canonical schedule document. The betas array is
/// authoritative; the stored alpha_bars must be reproducible from it, which
/// rejects hand-edited columns.
inline NoiseSchedule schedule_from_json(const json& j) {
    if (!j.is_object()) throw FormatError("schedule: not a JSON object");
    for (const char* key : {"format_version", "family", "T", "params", "alpha_bar_floor",
                            "betas", "alpha_bars", "observation_times", "clamped_indices"})
        if (!j.contains(key)) throw FormatError(std::string("schedule: missing key '") + key + "'");
    try {
        if (j["format_version"].get<int>() != kFormatVersion)
            throw FormatError("schedule: unsupported format_version");

        const auto betas = j["betas"].get<std::vector<double>>();
        const auto alpha_bars = j["alpha_bars"].get<std::vector<double>>();
        const auto steps = j["T"].get<int>();
        if (static_cast<int>(betas.size()) != steps ||
            static_cast<int>(alpha_bars.size()) != steps ||
            static_cast<int>(j["observation_times"].size()) != steps)
            throw FormatError("schedule: array lengths disagree with T");

        NoiseSchedule s = NoiseSchedule::from_betas(betas, j["alpha_bar_floor"].get<double>(),
                                                    j["family"].get<std::string>(),
                                                    params_from_json(j["params"]));

        for (int k = 0; k < steps; ++k) {
            const double expected = s.alpha_bars()[static_cast<std::size_t>(k)];
            const double stored = alpha_bars[static_cast<std::size_t>(k)];
            if (std::abs(stored - expected) >
                1e-9 * std::max(std::abs(stored), std::abs(expected)))
                throw FormatError("schedule: alpha_bars[" + std::to_string(k + 1) +
                                  "] inconsistent with betas");
        }
        if (j["clamped_indices"].get<std::vector<int>>() != s.clamped_indices())
            throw FormatError("schedule: clamp metadata inconsistent with betas");
        return s;
    } catch (const json::exception& e) {
        throw FormatError(std::string("schedule: malformed field: ") + e.what());
    }
}

/// CSV table with header k,beta,alpha,alpha_bar,t and one row per step.
inline std::string schedule_to_csv(const NoiseSchedule& s) {
    std::string out = "k,beta,alpha,alpha_bar,t\n";
    for (int k = 1; k <= s.steps(); ++k) {
        const std::size_t i = static_cast<std::size_t>(k - 1);
        out += std::to_string(k);
        out += ',';
        out += format_double(s.betas()[i]);
        out += ',';
        out += format_double(s.alphas()[i]);
        out += ',';
        out += format_double(s.alpha_bars()[i]);
        out += ',';
        out += format_double(-0.5 * std::log(s.alpha_bars()[i]));
        out += '\n';
    }
    return out;
}

/// Reduced single-array document used by representation conversion.
inline json representation_to_json(const std::string& kind, const std::vector<double>& values) {
    if (kind != "times" && kind != "betas" && kind != "alpha-bars")
        throw FormatError("representation: unknown kind '" + kind + "'");
    json j;
    j["format_version"] = kFormatVersion;
    j["kind"] = kind;
    j["values"] = values;
    return j;
}

inline json x0_to_json(const X0Config& x0) {
    json j;
    if (x0.kind == X0Config::Kind::kDeterministic) {
        j["kind"] = "deterministic";
        j["value"] = x0.value;
    } else {
        j["kind"] = "gaussian";
        j["mean"] = x0.value;
        j["variance"] = x0.variance;
    }
    return j;
}

inline json config_to_json(const EnsembleConfig& cfg) {
    json j;
    j["n_samples"] = cfg.n_samples;
    j["seed"] = cfg.seed;
    j["x0"] = x0_to_json(cfg.x0);
    j["scheme"] = cfg.scheme == EnsembleScheme::kIndependent ? "independent" : "paired";
    return j;
}

inline json report_to_json(const EquivalenceReport& report, const NoiseSchedule& s,
                           const EnsembleConfig& cfg) {
    json j;
    j["format_version"] = kFormatVersion;
    j["schedule"] = schedule_to_json(s);
    j["config"] = config_to_json(cfg);
    j["alpha_level"] = report.alpha_level;
    j["per_step"] = json::array();
    for (const auto& step : report.per_step) {
        json entry;
        entry["k"] = step.k;
        entry["t_k"] = step.t_k;
        entry["ks_skipped"] = step.ks_skipped;
        if (!step.note.empty()) entry["note"] = step.note;
        entry["ks_statistic"] = step.ks_statistic;
        entry["ks_threshold"] = step.ks_threshold;
        entry["mean_ddpm"] = step.mean_ddpm;
        entry["mean_ou"] = step.mean_ou;
        entry["var_ddpm"] = step.var_ddpm;
        entry["var_ou"] = step.var_ou;
        entry["mean_exact"] = step.mean_exact;
        entry["var_exact"] = step.var_exact;
        entry["moments_ok"] = step.moments_ok;
        j["per_step"].push_back(entry);
    }
    j["increment_checks"] = json::array();
    for (const auto& inc : report.increment_checks) {
        json entry;
        entry["k"] = inc.k;
        entry["skipped"] = inc.skipped;
        entry["standardized_increment_ks"] = inc.standardized_increment_ks;
        entry["threshold"] = inc.threshold;
        j["increment_checks"].push_back(entry);
    }
    j["verdict"] = report.pass ? "pass" : "fail";
    j["failures"] = report.failures;
    j["warnings"] = report.warnings;
    return j;
}

inline json feasibility_to_json(const ou::MiFeasibilityReport& report) {
    json j;
    j["format_version"] = kFormatVersion;
    j["sigma0_sq"] = report.sigma0_sq;
    j["marginal_entropy"] = report.marginal_entropy;
    j["points"] = json::array();
    for (const auto& point : report.points) {
        json entry;
        entry["t"] = point.t;
        entry["mutual_information"] = point.mutual_information;
        entry["rhs"] = point.rhs;
        j["points"].push_back(entry);
    }
    j["rhs_in_unit_interval"] = report.rhs_in_unit_interval;
    j["monotone_increasing_rhs"] = report.monotone_increasing_rhs;
    j["feasible"] = report.feasible;
    return j;
}

inline json scaling_to_json(const ScalingReport& report, const std::string& family, int steps) {
    json j;
    j["format_version"] = kFormatVersion;
    j["family"] = family;
    j["T"] = steps;
    j["factor"] = report.factor;
    j["max_gap"] = report.max_gap;
    j["gaps"] = report.gaps;
    return j;
}

} // namespace schedkit::io
