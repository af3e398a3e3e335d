#pragma once

#include "swtrack/dtc.hpp"
#include "swtrack/flow.hpp"
#include "swtrack/motor.hpp"
#include "swtrack/tracking.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>

namespace swtrack {

enum class ControllerKind { MinSwitch, Dtc };

inline const char* to_string(ControllerKind kind) {
    return kind == ControllerKind::MinSwitch ? "minswitch" : "dtc";
}

/// Closed-loop experiment definition: fixed-step sampling, a controller, the
/// tracking targets, the machine profile and the starting state (resolved
/// from the targets when absent).
struct SimConfig {
    double dt = 0.5e-6;
    long steps = 10000;
    int substeps = 1;
    ControllerKind controller = ControllerKind::MinSwitch;
    TrackingSpec spec = default_spec();
    motor::Params params = motor::Params::profile();
    std::optional<motor::State> initial;
    motor::DtcConfig dtc;

    static TrackingSpec default_spec() {
        Vector target(2), band(2);
        target << 50.0, 2.0;
        band << 0.1, 0.01;
        return {target, band};
    }

    void validate() const {
        if (!(dt > 0.0)) throw std::invalid_argument("sim config: dt must be > 0");
        if (steps < 0) throw std::invalid_argument("sim config: steps must be >= 0");
        if (substeps < 1) throw std::invalid_argument("sim config: substeps must be >= 1");
        if (spec.target.size() != 2) throw std::invalid_argument("sim config: two outputs expected");
        params.validate();
        dtc.validate();
    }

    motor::State resolved_initial() const {
        if (initial) return *initial;
        return motor::initial_state_for_targets(params, spec.target[0], spec.target[1]);
    }
};

/// One sampling instant: the state the controller saw at t and the mode it
/// applied over [t, t+dt). `switched` flags a mode different from the
/// previous record's.
struct TraceRecord {
    double t = 0.0;
    ModeId mode = 0;
    double omega = 0.0;
    Eigen::Vector4d lambda = Eigen::Vector4d::Zero();
    double tau = 0.0;
    double lambda_sm = 0.0;
    bool switched = false;

    Vector state_vector() const {
        Vector xi(5);
        xi[0] = omega;
        xi.tail<4>() = lambda;
        return xi;
    }
};

struct SimSummary {
    long switch_count = 0;
    double max_err_tau = 0.0;
    double max_err_flux = 0.0;
    double mean_err_tau = 0.0;
    double mean_err_flux = 0.0;
};

struct SimTrace {
    std::vector<TraceRecord> records;
    SimSummary summary;
    Vector final_state;
};

/// Thrown when a run stops early: an empty admissible set or numerical
/// divergence, with the offending step index.
class SimulationAbort : public std::runtime_error {
public:
    SimulationAbort(long step, const std::string& reason)
        : std::runtime_error("simulation aborted at step " + std::to_string(step) + ": " + reason),
          step_(step) {}

    long step() const { return step_; }

private:
    long step_;
};

/// Runs the closed loop: at every sampling instant the controller picks the
/// mode from the current state (a due jump takes priority over flow), then
/// the state advances one dt under that mode.
inline SimTrace run_simulation(const SimConfig& config) {
    config.validate();
    const motor::Model model(config.params);
    const SwitchedSystem sys = model.switched_system();

    Vector xi = config.resolved_initial().to_state_vector();
    ModeId mode = 0;
    motor::DtcState dtc_memory;

    SimTrace trace;
    trace.records.reserve(static_cast<std::size_t>(config.steps));
    double err_tau_sum = 0.0, err_flux_sum = 0.0;

    for (long k = 0; k < config.steps; ++k) {
        const ModeId previous = mode;
        try {
            if (config.controller == ControllerKind::MinSwitch) {
                mode = select_next_mode(sys, config.spec, mode, xi);
            } else {
                mode = motor::dtc_step(model, motor::State::from_state_vector(xi), config.dtc,
                                       config.spec, dtc_memory);
            }
        } catch (const SolvabilityFailure& e) {
            throw SimulationAbort(k, e.what());
        } catch (const motor::SingularFlux& e) {
            throw SimulationAbort(k, e.what());
        }

        TraceRecord rec;
        rec.t = static_cast<double>(k) * config.dt;
        rec.mode = mode;
        rec.omega = xi[0];
        rec.lambda = xi.tail<4>();
        const Eigen::Vector2d y = model.outputs(xi);
        rec.tau = y[0];
        rec.lambda_sm = y[1];
        rec.switched = k > 0 && mode != previous;
        if (rec.switched) ++trace.summary.switch_count;
        const double err_tau = std::abs(y[0] - config.spec.target[0]);
        const double err_flux = std::abs(y[1] - config.spec.target[1]);
        trace.summary.max_err_tau = std::max(trace.summary.max_err_tau, err_tau);
        trace.summary.max_err_flux = std::max(trace.summary.max_err_flux, err_flux);
        err_tau_sum += err_tau;
        err_flux_sum += err_flux;
        trace.records.push_back(rec);

        try {
            xi = flow(sys, mode, xi, config.dt, config.substeps);
        } catch (const NumericalDivergence& e) {
            throw SimulationAbort(k, e.what());
        }
    }

    if (!trace.records.empty()) {
        trace.summary.mean_err_tau = err_tau_sum / static_cast<double>(trace.records.size());
        trace.summary.mean_err_flux = err_flux_sum / static_cast<double>(trace.records.size());
    }
    trace.final_state = xi;
    return trace;
}

/// Writes the trace as CSV (one row per record, 15 significant digits) plus a
/// sibling `<path>.summary` with the aggregate statistics.
inline void export_csv(const SimTrace& trace, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << "t,mode,omega,lambda_ds,lambda_qs,lambda_dr,lambda_qr,tau,lambda_sm,switched\n";
    char buf[64];
    auto num = [&buf](double v) {
        std::snprintf(buf, sizeof(buf), "%.15g", v);
        return std::string(buf);
    };
    for (const auto& r : trace.records) {
        out << num(r.t) << ',' << r.mode << ',' << num(r.omega) << ',' << num(r.lambda[0]) << ','
            << num(r.lambda[1]) << ',' << num(r.lambda[2]) << ',' << num(r.lambda[3]) << ','
            << num(r.tau) << ',' << num(r.lambda_sm) << ',' << (r.switched ? 1 : 0) << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());

    std::filesystem::path summary_path = path;
    summary_path += ".summary";
    std::ofstream summary(summary_path);
    if (!summary) throw std::runtime_error("cannot open for writing: " + summary_path.string());
    summary << "switch_count,max_err_tau,max_err_flux,mean_err_tau,mean_err_flux\n"
            << trace.summary.switch_count << ',' << num(trace.summary.max_err_tau) << ','
            << num(trace.summary.max_err_flux) << ',' << num(trace.summary.mean_err_tau) << ','
            << num(trace.summary.mean_err_flux) << '\n';
    if (!summary) throw std::runtime_error("write failed: " + summary_path.string());
}

}  // namespace swtrack
