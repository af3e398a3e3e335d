#include "swtrack/swtrack.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitSimulationAbort = 2;

swtrack::SimConfig load_config(const std::string& config_path, const std::string& params_path) {
    swtrack::SimConfig config = config_path.empty() ? swtrack::SimConfig{}
                                                    : swtrack::config::load_sim_config(config_path);
    if (!params_path.empty()) config.params = swtrack::config::load_motor_profile(params_path);
    config.validate();
    return config;
}

void print_summary(const swtrack::SimTrace& trace, swtrack::ControllerKind kind) {
    std::printf("controller: %s\n", swtrack::to_string(kind));
    std::printf("steps: %zu\n", trace.records.size());
    std::printf("switch_count: %ld\n", trace.summary.switch_count);
    std::printf("max |err|:  tau %.6g N m   flux %.6g Wb\n", trace.summary.max_err_tau,
                trace.summary.max_err_flux);
    std::printf("mean |err|: tau %.6g N m   flux %.6g Wb\n", trace.summary.mean_err_tau,
                trace.summary.mean_err_flux);
}

nlohmann::json report_to_json(const swtrack::ScanReport& report, const std::string& condition) {
    nlohmann::json failures = nlohmann::json::array();
    for (const auto& state : report.failing_states) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index i = 0; i < state.size(); ++i) row.push_back(state[i]);
        failures.push_back(row);
    }
    return {{"condition", condition},
            {"total", report.total},
            {"failures", report.failures},
            {"failing_states", failures}};
}

int run_command(const std::string& config_path, const std::string& params_path,
                const std::string& controller, const std::string& out_path) {
    swtrack::SimConfig config = load_config(config_path, params_path);
    if (controller == "minswitch")
        config.controller = swtrack::ControllerKind::MinSwitch;
    else if (controller == "dtc")
        config.controller = swtrack::ControllerKind::Dtc;
    else
        throw swtrack::config::ConfigError("unknown controller: " + controller);

    const swtrack::SimTrace trace = swtrack::run_simulation(config);
    swtrack::export_csv(trace, out_path);
    print_summary(trace, config.controller);
    std::printf("wrote %s and %s.summary\n", out_path.c_str(), out_path.c_str());
    return kExitOk;
}

int compare_command(const std::string& config_path, const std::string& params_path,
                    const std::string& out_dir) {
    swtrack::SimConfig config = load_config(config_path, params_path);
    config.initial = config.resolved_initial();  // both controllers share the exact start

    std::filesystem::create_directories(out_dir);
    long counts[2] = {0, 0};
    const swtrack::ControllerKind kinds[2] = {swtrack::ControllerKind::MinSwitch,
                                              swtrack::ControllerKind::Dtc};
    for (int i = 0; i < 2; ++i) {
        config.controller = kinds[i];
        const swtrack::SimTrace trace = swtrack::run_simulation(config);
        counts[i] = trace.summary.switch_count;
        swtrack::export_csv(trace, std::filesystem::path(out_dir) /
                                       (std::string(swtrack::to_string(kinds[i])) + ".csv"));
        print_summary(trace, kinds[i]);
        std::printf("\n");
    }
    std::printf("minswitch switches: %ld\n", counts[0]);
    std::printf("dtc switches:       %ld\n", counts[1]);
    if (counts[1] > 0)
        std::printf("ratio minswitch/dtc: %.4f\n",
                    static_cast<double>(counts[0]) / static_cast<double>(counts[1]));
    return kExitOk;
}

int solvability_command(const std::string& config_path, const std::string& params_path,
                        double omega_max, double flux_max, long samples, std::uint64_t seed,
                        const std::string& json_path) {
    const swtrack::SimConfig config = load_config(config_path, params_path);
    const swtrack::motor::Model model(config.params);
    const swtrack::SwitchedSystem sys = model.switched_system();
    const swtrack::motor::Region region{omega_max, flux_max};

    const swtrack::ScanReport coverage = swtrack::solvability_scan(
        sys, nullptr, swtrack::motor::region_sampler(region, 0.02, seed), samples);
    const swtrack::ScanReport tracking = swtrack::solvability_scan(
        sys, &config.spec, swtrack::motor::region_sampler(region, 0.02, seed), samples);

    auto print_report = [](const char* name, const swtrack::ScanReport& r) {
        std::printf("%s: %ld/%ld passed%s\n", name, r.total - r.failures, r.total,
                    r.all_passed() ? "" : "  FAILURES FOUND");
        for (const auto& state : r.failing_states)
            std::printf("  failing state: %s\n", swtrack::detail::format_vector(state).c_str());
    };
    std::printf("region: 0 < omega < %g rad/s, |lambda| < %g Wb, %ld samples\n", omega_max,
                flux_max, samples);
    print_report("sign coverage   ", coverage);
    print_report("admissible modes", tracking);

    if (!json_path.empty()) {
        nlohmann::json doc = {report_to_json(coverage, "sign-coverage"),
                              report_to_json(tracking, "admissible-modes")};
        std::ofstream out(json_path);
        if (!out) throw swtrack::config::ConfigError("cannot write " + json_path);
        out << doc.dump(2) << "\n";
    }
    return kExitOk;
}

int vdcbound_command(const std::string& config_path, const std::string& params_path,
                     double omega_max, double flux_max, int omega_points, long samples,
                     double band, std::uint64_t seed) {
    const swtrack::SimConfig config = load_config(config_path, params_path);
    const swtrack::motor::Region region{omega_max, flux_max};
    const swtrack::motor::SearchGrid grid{omega_points, samples, band, seed};
    const double bound = swtrack::motor::vdc_lower_bound(config.params, region, grid);
    std::printf("V_DC lower bound: %.6g V  (0 < omega < %g rad/s, |lambda| < %g Wb)\n", bound,
                omega_max, flux_max);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Minimal-switch step-tracking control of an inverter-fed induction motor"};
    app.require_subcommand(1);

    std::string config_path, params_path, out_path, out_dir, controller = "minswitch";
    std::string json_path;
    double omega_max = 50.0, flux_max = 5.0, band = 0.02;
    long samples = 10000;
    int omega_points = 50;
    std::uint64_t seed = 0x5eed5eedULL;

    auto* run = app.add_subcommand("run", "Simulate one controller and export the trace");
    run->add_option("--controller", controller, "minswitch or dtc")->default_str("minswitch");
    run->add_option("--config", config_path, "experiment config file (INI)");
    run->add_option("--params", params_path, "motor parameter profile overriding [motor]");
    run->add_option("--out", out_path, "output CSV path")->required();

    auto* compare = app.add_subcommand("compare", "Run both controllers from the same state");
    compare->add_option("--config", config_path, "experiment config file (INI)");
    compare->add_option("--params", params_path, "motor parameter profile overriding [motor]");
    compare->add_option("--out-dir", out_dir, "directory for the two trace CSVs")->required();

    auto* solvability =
        app.add_subcommand("solvability", "Sampled solvability checks over a state region");
    solvability->add_option("--config", config_path, "experiment config file (INI)");
    solvability->add_option("--params", params_path, "motor parameter profile");
    solvability->add_option("--omega-max", omega_max, "speed upper bound, rad/s");
    solvability->add_option("--flux-max", flux_max, "flux-norm upper bound, Wb");
    solvability->add_option("--samples", samples, "number of sampled states");
    solvability->add_option("--seed", seed, "sampler seed");
    solvability->add_option("--json", json_path, "write the reports as JSON to this path");

    auto* vdcbound =
        app.add_subcommand("vdcbound", "Worst-case DC-link voltage bound over a region");
    vdcbound->add_option("--config", config_path, "experiment config file (INI)");
    vdcbound->add_option("--params", params_path, "motor parameter profile");
    vdcbound->add_option("--omega-max", omega_max, "speed upper bound, rad/s");
    vdcbound->add_option("--flux-max", flux_max, "flux-norm upper bound, Wb");
    vdcbound->add_option("--omega-points", omega_points, "speed grid resolution");
    vdcbound->add_option("--samples", samples, "number of flux samples");
    vdcbound->add_option("--band", band, "relative rotor-flux misalignment band");
    vdcbound->add_option("--seed", seed, "sampler seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfigError;
    }

    try {
        if (run->parsed()) return run_command(config_path, params_path, controller, out_path);
        if (compare->parsed()) return compare_command(config_path, params_path, out_dir);
        if (solvability->parsed())
            return solvability_command(config_path, params_path, omega_max, flux_max, samples,
                                       seed, json_path);
        if (vdcbound->parsed())
            return vdcbound_command(config_path, params_path, omega_max, flux_max, omega_points,
                                    samples, band, seed);
    } catch (const swtrack::SimulationAbort& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitSimulationAbort;
    } catch (const swtrack::NumericalDivergence& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitSimulationAbort;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfigError;
    }
    return kExitConfigError;
}
