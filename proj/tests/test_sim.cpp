#include <catch2/catch_amalgamated.hpp>

#include "swtrack/sim.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace swtrack;
namespace fs = std::filesystem;

namespace {

struct CsvTrace {
    std::vector<std::vector<std::string>> rows;
    std::string header;
};

CsvTrace read_csv(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE(in);
    CsvTrace csv;
    std::getline(in, csv.header);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> fields;
        std::stringstream row(line);
        std::string field;
        while (std::getline(row, field, ',')) fields.push_back(field);
        csv.rows.push_back(fields);
    }
    return csv;
}

fs::path temp_file(const std::string& name) {
    return fs::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("zero steps produce an empty trace") {
    SimConfig config;
    config.steps = 0;
    const SimTrace trace = run_simulation(config);
    CHECK(trace.records.empty());
    CHECK(trace.summary.switch_count == 0);
    CHECK(trace.summary.max_err_tau == 0.0);

    const fs::path path = temp_file("swtrack_empty.csv");
    export_csv(trace, path);
    const CsvTrace csv = read_csv(path);
    CHECK(csv.header ==
          "t,mode,omega,lambda_ds,lambda_qs,lambda_dr,lambda_qr,tau,lambda_sm,switched");
    CHECK(csv.rows.empty());

    std::ifstream summary(temp_file("swtrack_empty.csv.summary"));
    REQUIRE(summary);
    std::string header, values;
    std::getline(summary, header);
    std::getline(summary, values);
    CHECK(header == "switch_count,max_err_tau,max_err_flux,mean_err_tau,mean_err_flux");
    CHECK(values.rfind("0,", 0) == 0);
    fs::remove(path);
    fs::remove(temp_file("swtrack_empty.csv.summary"));
}

TEST_CASE("a frozen controller never switches and lets the torque decay") {
    SimConfig config;
    config.steps = 2000;
    config.controller = ControllerKind::Dtc;
    // comparator bands so wide the torque demand never engages: the zero
    // vector is held throughout
    config.dtc.torque_band = 1e6;
    config.dtc.flux_band = 1e6;

    const SimTrace trace = run_simulation(config);
    CHECK(trace.summary.switch_count <= 1);
    for (const auto& r : trace.records) CHECK(r.mode == 0);
    CHECK(trace.records.back().tau < trace.records.front().tau);
    CHECK(trace.records.front().tau == Catch::Approx(50.0).margin(1e-5));
}

TEST_CASE("csv round trip reproduces the recorded switch count") {
    SimConfig config;
    config.steps = 1500;
    const SimTrace trace = run_simulation(config);
    const fs::path path = temp_file("swtrack_roundtrip.csv");
    export_csv(trace, path);

    const CsvTrace csv = read_csv(path);
    REQUIRE(csv.rows.size() == static_cast<std::size_t>(config.steps));

    long switches = 0;
    std::string previous_mode;
    for (std::size_t k = 0; k < csv.rows.size(); ++k) {
        REQUIRE(csv.rows[k].size() == 10);
        const std::string& mode = csv.rows[k][1];
        const bool switched = csv.rows[k][9] == "1";
        if (k > 0) CHECK(switched == (mode != previous_mode));
        if (switched) ++switches;
        previous_mode = mode;
    }
    CHECK(switches == trace.summary.switch_count);
    fs::remove(path);
    fs::remove(temp_file("swtrack_roundtrip.csv.summary"));
}

TEST_CASE("identical configurations give identical traces") {
    SimConfig config;
    config.steps = 3000;
    const SimTrace a = run_simulation(config);
    const SimTrace b = run_simulation(config);
    REQUIRE(a.records.size() == b.records.size());
    CHECK(a.summary.switch_count == b.summary.switch_count);
    for (std::size_t k = 0; k < a.records.size(); ++k) {
        CHECK(a.records[k].mode == b.records[k].mode);
        CHECK(a.records[k].omega == b.records[k].omega);
        CHECK((a.records[k].lambda - b.records[k].lambda).norm() == 0.0);
    }
}

TEST_CASE("the default experiment respects the tracking condition") {
    SimConfig config;
    const SimTrace trace = run_simulation(config);
    const motor::Model model(config.params);

    // per-component slack: twice the worst output movement over one sample
    double max_rate[2] = {0.0, 0.0};
    for (const auto& r : trace.records) {
        const Eigen::Vector2d rate = model.output_rate(r.mode, r.state_vector());
        max_rate[0] = std::max(max_rate[0], std::abs(rate[0]));
        max_rate[1] = std::max(max_rate[1], std::abs(rate[1]));
    }
    const double slack[2] = {2.0 * config.dt * max_rate[0], 2.0 * config.dt * max_rate[1]};

    long violations = 0;
    for (std::size_t k = 1; k < trace.records.size(); ++k) {
        const auto& prev = trace.records[k - 1];
        const auto& cur = trace.records[k];
        const double err_prev[2] = {std::abs(prev.tau - config.spec.target[0]),
                                    std::abs(prev.lambda_sm - config.spec.target[1])};
        const double err_cur[2] = {std::abs(cur.tau - config.spec.target[0]),
                                   std::abs(cur.lambda_sm - config.spec.target[1])};
        for (int i = 0; i < 2; ++i) {
            const bool inside = err_cur[i] < config.spec.band[i] + slack[i];
            const bool shrinking = err_cur[i] < err_prev[i];
            if (!inside && !shrinking) ++violations;
        }
    }
    CHECK(violations == 0);

    SECTION("the state stays bounded") {
        const double initial_norm = trace.records.front().state_vector().norm();
        for (const auto& r : trace.records) CHECK(r.state_vector().norm() < 10.0 * initial_norm);
        CHECK(trace.final_state.norm() < 10.0 * initial_norm);
    }
}

TEST_CASE("an unreachable operating point aborts with the step index") {
    SimConfig config;
    motor::State bad = motor::initial_state_for_targets(config.params, 50.0, 2.0);
    bad.omega = 300.0;  // far outside the solvable speed range at this link voltage
    config.initial = bad;
    config.steps = 10000;
    try {
        run_simulation(config);
        FAIL("expected SimulationAbort");
    } catch (const SimulationAbort& e) {
        CHECK(e.step() >= 0);
        CHECK(std::string(e.what()).find("no admissible mode") != std::string::npos);
    }
}

TEST_CASE("config validation") {
    SimConfig config;
    config.dt = 0.0;
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);
    config = SimConfig();
    config.steps = -1;
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);
    config = SimConfig();
    config.substeps = 0;
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);
}
