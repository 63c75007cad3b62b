// schedkit command line: generate/convert/verify/compare schedules, check the
// T-rescaling property, and run the mutual-information feasibility analysis.
//
// Exit codes: 0 success or verification pass, 1 verification fail,
// 2 usage or validation error, 3 I/O error.
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "schedkit/equivalence.hpp"
#include "schedkit/ou_process.hpp"
#include "schedkit/schedule.hpp"
#include "schedkit/schedule_io.hpp"

namespace {

using nlohmann::json;

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

int g_verbosity = 0;

void log_info(const std::string& message) {
    if (g_verbosity > 0) std::cerr << "schedkit: " << message << "\n";
}

void write_output(const std::string& path, const std::string& content) {
    if (path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw IoError("write to '" + path + "' failed");
}

std::string read_input(const std::string& path) {
    if (path == "-") {
        std::ostringstream buffer;
        buffer << std::cin.rdbuf();
        return buffer.str();
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

schedkit::EntropyForm parse_entropy_form(const std::string& name) {
    if (name == "derived") return schedkit::EntropyForm::kDerived;
    if (name == "paper") return schedkit::EntropyForm::kPaper;
    throw std::invalid_argument("entropy form must be 'derived' or 'paper', got '" + name + "'");
}

/// Load a schedule from a canonical document or a reduced representation file.
schedkit::NoiseSchedule load_schedule(const std::string& path) {
    json j;
    try {
        j = json::parse(read_input(path));
    } catch (const json::parse_error& e) {
        throw schedkit::io::FormatError(std::string("input is not valid JSON: ") + e.what());
    }
    if (j.is_object() && j.contains("betas") && j.contains("format_version"))
        return schedkit::io::schedule_from_json(j);
    if (j.is_object() && j.contains("kind") && j.contains("values")) {
        const std::string kind = j["kind"].get<std::string>();
        const auto values = j["values"].get<std::vector<double>>();
        if (kind == "betas") return schedkit::NoiseSchedule::from_betas(values);
        if (kind == "alpha-bars") return schedkit::NoiseSchedule::from_alpha_bars(values);
        if (kind == "times")
            return schedkit::from_observation_times(schedkit::ObservationTimes(values));
        throw schedkit::io::FormatError("unknown representation kind '" + kind + "'");
    }
    throw schedkit::io::FormatError("input is neither a schedule nor a representation file");
}

struct GenerateOptions {
    std::string family;
    int steps = 0;
    double sigma0_sq = schedkit::ou::kSigma0Sq257Levels;
    std::string entropy_form = "derived";
    double beta_start = 1e-4;
    double beta_end = 0.02;
    double alpha_bar_floor = schedkit::kDefaultAlphaBarFloor;
    std::string out;
};

schedkit::ScheduleSpec to_spec(const GenerateOptions& opt) {
    if (opt.family == "custom" || opt.family == "custom-density")
        throw std::invalid_argument(
            "custom-density schedules are built through the library API; the command "
            "line has no way to pass a density function");
    schedkit::ScheduleSpec spec;
    spec.family = schedkit::family_from_string(opt.family);
    spec.steps = opt.steps;
    spec.alpha_bar_floor = opt.alpha_bar_floor;
    spec.sigma0_sq = opt.sigma0_sq;
    spec.entropy_form = parse_entropy_form(opt.entropy_form);
    spec.beta_start = opt.beta_start;
    spec.beta_end = opt.beta_end;
    return spec;
}

int cmd_generate(const GenerateOptions& opt) {
    const auto schedule = schedkit::generate(to_spec(opt));
    log_info("generated " + opt.family + " schedule with T = " + std::to_string(opt.steps));
    write_output(opt.out, dump(schedkit::io::schedule_to_json(schedule)));
    return 0;
}

struct ConvertOptions {
    std::string in;
    std::string emit;
    std::string format = "json";
    std::string out;
};

int cmd_convert(const ConvertOptions& opt) {
    const auto schedule = load_schedule(opt.in);
    if (opt.format == "csv") {
        write_output(opt.out, schedkit::io::schedule_to_csv(schedule));
        return 0;
    }
    std::vector<double> values;
    if (opt.emit == "times") {
        for (const double abar : schedule.alpha_bars())
            values.push_back(-0.5 * std::log(abar));
    } else if (opt.emit == "betas") {
        values = schedule.betas();
    } else if (opt.emit == "alpha-bars") {
        values = schedule.alpha_bars();
    } else {
        throw std::invalid_argument("--emit must be times, betas or alpha-bars");
    }
    write_output(opt.out, dump(schedkit::io::representation_to_json(opt.emit, values)));
    return 0;
}

struct VerifyOptions {
    std::string schedule_path;
    std::size_t samples = 200000;
    std::uint64_t seed = 0;
    double alpha = 0.01;
    std::string out;
};

int cmd_verify(const VerifyOptions& opt) {
    const auto schedule = load_schedule(opt.schedule_path);
    const auto identity = schedkit::marginal_identity_check(schedule);
    const bool identity_ok = identity.max_rel_error < 1e-12;
    log_info("marginal identity max relative error " +
             schedkit::io::format_double(identity.max_rel_error));

    schedkit::EnsembleConfig cfg;
    cfg.n_samples = opt.samples;
    cfg.seed = opt.seed;
    const auto report = schedkit::run_equivalence(schedule, cfg, opt.alpha);
    log_info(std::string("equivalence verdict: ") + (report.pass ? "pass" : "fail"));

    json j = schedkit::io::report_to_json(report, schedule, cfg);
    j["marginal_identity"] = {{"max_rel_error", identity.max_rel_error},
                              {"excluded_clamped", identity.excluded_clamped},
                              {"pass", identity_ok}};
    write_output(opt.out, dump(j));
    return report.pass && identity_ok ? 0 : 1;
}

struct CompareOptions {
    std::vector<std::string> families;
    int steps = 0;
    double sigma0_sq = schedkit::ou::kSigma0Sq257Levels;
    std::string entropy_form = "derived";
    double beta_start = 1e-4;
    double beta_end = 0.02;
    std::string format = "json";
    std::string out;
};

int cmd_compare(const CompareOptions& opt) {
    if (opt.families.empty()) throw std::invalid_argument("--families must not be empty");
    std::vector<std::pair<std::string, schedkit::NoiseSchedule>> table;
    for (const auto& name : opt.families) {
        GenerateOptions gen;
        gen.family = name;
        gen.steps = opt.steps;
        gen.sigma0_sq = opt.sigma0_sq;
        gen.entropy_form = opt.entropy_form;
        gen.beta_start = opt.beta_start;
        gen.beta_end = opt.beta_end;
        table.emplace_back(name, schedkit::generate(to_spec(gen)));
    }

    if (opt.format == "csv") {
        std::string csv = "k";
        for (const auto& [name, schedule] : table)
            csv += ",beta_" + name + ",alpha_bar_" + name;
        csv += '\n';
        for (int k = 1; k <= opt.steps; ++k) {
            csv += std::to_string(k);
            for (const auto& [name, schedule] : table) {
                csv += ',';
                csv += schedkit::io::format_double(schedule.betas()[k - 1]);
                csv += ',';
                csv += schedkit::io::format_double(schedule.alpha_bars()[k - 1]);
            }
            csv += '\n';
        }
        write_output(opt.out, csv);
        return 0;
    }

    json j;
    j["format_version"] = schedkit::io::kFormatVersion;
    j["T"] = opt.steps;
    j["families"] = opt.families;
    j["columns"] = json::object();
    for (const auto& [name, schedule] : table)
        j["columns"][name] = {{"betas", schedule.betas()},
                              {"alpha_bars", schedule.alpha_bars()}};
    write_output(opt.out, dump(j));
    return 0;
}

struct ScalingOptions {
    std::string family;
    int steps = 0;
    int factor = 0;
    double sigma0_sq = schedkit::ou::kSigma0Sq257Levels;
    std::string entropy_form = "derived";
    double beta_start = 1e-4;
    double beta_end = 0.02;
    std::string out;
};

int cmd_scaling(const ScalingOptions& opt) {
    GenerateOptions gen;
    gen.family = opt.family;
    gen.steps = opt.steps;
    gen.sigma0_sq = opt.sigma0_sq;
    gen.entropy_form = opt.entropy_form;
    gen.beta_start = opt.beta_start;
    gen.beta_end = opt.beta_end;
    const auto report = schedkit::scaling_check(to_spec(gen), opt.factor);
    log_info("max scaling gap " + schedkit::io::format_double(report.max_gap));
    write_output(opt.out, dump(schedkit::io::scaling_to_json(report, opt.family, opt.steps)));
    return 0;
}

struct MiOptions {
    double sigma0_sq = schedkit::ou::kSigma0Sq257Levels;
    double t_min = 1e-4;
    double t_max = 10.0;
    int grid = 1000;
    std::string out;
};

int cmd_mi_feasibility(const MiOptions& opt) {
    if (opt.grid < 1) throw std::invalid_argument("--grid must be at least 1");
    if (!(opt.t_min > 0.0) || !(opt.t_max >= opt.t_min))
        throw std::invalid_argument("need 0 < t-min <= t-max");
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(opt.grid));
    if (opt.grid == 1) {
        grid.push_back(opt.t_min);
    } else {
        const double ratio = std::log(opt.t_max / opt.t_min);
        for (int i = 0; i < opt.grid; ++i)
            grid.push_back(opt.t_min * std::exp(ratio * i / (opt.grid - 1)));
    }
    const auto report =
        schedkit::ou::mi_schedule_feasibility(schedkit::ou::InitialDispersion(opt.sigma0_sq), grid);
    write_output(opt.out, dump(schedkit::io::feasibility_to_json(report)));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"noise-schedule engineering toolkit built on the exact correspondence "
                 "between discrete diffusion schedules and Ornstein-Uhlenbeck "
                 "observation times"};
    app.require_subcommand(1);
    app.add_flag("-v,--verbose", g_verbosity, "log progress to stderr");

    GenerateOptions gen;
    auto* cmd_gen = app.add_subcommand("generate", "generate a schedule from a family recipe");
    cmd_gen->add_option("--family", gen.family, "schedule family")
        ->required()
        ->check(CLI::IsMember({"constant-variance", "cv-quadratic", "entropy", "fisher-cosine",
                               "linear-beta", "custom"}));
    cmd_gen->add_option("--steps", gen.steps, "number of steps T")->required();
    cmd_gen->add_option("--sigma0-sq", gen.sigma0_sq, "initial dispersion for entropy family");
    cmd_gen->add_option("--entropy-form", gen.entropy_form, "derived|paper")
        ->check(CLI::IsMember({"derived", "paper"}));
    cmd_gen->add_option("--beta-start", gen.beta_start, "linear-beta start value");
    cmd_gen->add_option("--beta-end", gen.beta_end, "linear-beta end value");
    cmd_gen->add_option("--alpha-bar-floor", gen.alpha_bar_floor, "terminal clamp floor");
    cmd_gen->add_option("--out", gen.out, "output path or -")->required();

    ConvertOptions conv;
    auto* cmd_conv = app.add_subcommand("convert", "convert between schedule representations");
    cmd_conv->add_option("--in", conv.in, "input schedule or representation file")->required();
    cmd_conv->add_option("--emit", conv.emit, "times|alpha-bars|betas")
        ->required()
        ->check(CLI::IsMember({"times", "alpha-bars", "betas"}));
    cmd_conv->add_option("--format", conv.format, "json|csv")
        ->check(CLI::IsMember({"json", "csv"}));
    cmd_conv->add_option("--out", conv.out, "output path or -")->required();

    VerifyOptions ver;
    auto* cmd_ver = app.add_subcommand(
        "verify", "Monte Carlo check that the schedule matches its OU observation times");
    cmd_ver->add_option("--schedule", ver.schedule_path, "schedule file")->required();
    cmd_ver->add_option("--samples", ver.samples, "trajectories per ensemble");
    cmd_ver->add_option("--seed", ver.seed, "RNG seed")->envname("SCHEDKIT_SEED");
    cmd_ver->add_option("--alpha", ver.alpha, "per-test significance level");
    cmd_ver->add_option("--out", ver.out, "report path or -")->required();

    CompareOptions cmp;
    auto* cmd_cmp = app.add_subcommand("compare", "side-by-side beta/alpha_bar table");
    cmd_cmp->add_option("--families", cmp.families, "comma-separated family list")
        ->required()
        ->delimiter(',');
    cmd_cmp->add_option("--steps", cmp.steps, "number of steps T")->required();
    cmd_cmp->add_option("--sigma0-sq", cmp.sigma0_sq, "initial dispersion for entropy family");
    cmd_cmp->add_option("--entropy-form", cmp.entropy_form, "derived|paper")
        ->check(CLI::IsMember({"derived", "paper"}));
    cmd_cmp->add_option("--beta-start", cmp.beta_start, "linear-beta start value");
    cmd_cmp->add_option("--beta-end", cmp.beta_end, "linear-beta end value");
    cmd_cmp->add_option("--format", cmp.format, "json|csv")
        ->check(CLI::IsMember({"json", "csv"}));
    cmd_cmp->add_option("--out", cmp.out, "output path or -")->required();

    ScalingOptions sca;
    auto* cmd_sca = app.add_subcommand("scaling", "gap between T and M*T schedules");
    cmd_sca->add_option("--family", sca.family, "schedule family")->required();
    cmd_sca->add_option("--steps", sca.steps, "number of steps T")->required();
    cmd_sca->add_option("--factor", sca.factor, "scaling factor M (at least 2)")->required();
    cmd_sca->add_option("--sigma0-sq", sca.sigma0_sq, "initial dispersion for entropy family");
    cmd_sca->add_option("--entropy-form", sca.entropy_form, "derived|paper")
        ->check(CLI::IsMember({"derived", "paper"}));
    cmd_sca->add_option("--beta-start", sca.beta_start, "linear-beta start value");
    cmd_sca->add_option("--beta-end", sca.beta_end, "linear-beta end value");
    cmd_sca->add_option("--out", sca.out, "output path or -")->required();

    MiOptions mi;
    auto* cmd_mi = app.add_subcommand(
        "mi-feasibility", "mutual-information mark-equation analysis on a log time grid");
    cmd_mi->add_option("--sigma0-sq", mi.sigma0_sq, "initial dispersion");
    cmd_mi->add_option("--t-min", mi.t_min, "grid start");
    cmd_mi->add_option("--t-max", mi.t_max, "grid end");
    cmd_mi->add_option("--grid", mi.grid, "number of grid points");
    cmd_mi->add_option("--out", mi.out, "report path or -")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand(cmd_gen)) return cmd_generate(gen);
        if (app.got_subcommand(cmd_conv)) return cmd_convert(conv);
        if (app.got_subcommand(cmd_ver)) return cmd_verify(ver);
        if (app.got_subcommand(cmd_cmp)) return cmd_compare(cmp);
        if (app.got_subcommand(cmd_sca)) return cmd_scaling(sca);
        if (app.got_subcommand(cmd_mi)) return cmd_mi_feasibility(mi);
    } catch (const IoError& e) {
        std::cerr << "schedkit: I/O error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "schedkit: error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
