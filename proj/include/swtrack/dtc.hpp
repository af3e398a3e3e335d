#pragma once

#include "swtrack/motor.hpp"

#include <array>
#include <filesystem>
#include <fstream>

namespace swtrack::motor {

/// Hysteresis direct torque control configuration: comparator half-widths and
/// the sector lookup table mapping (sector, torque demand, flux demand) to an
/// active voltage vector. The torque comparator's hold state always selects
/// the zero vector and is not part of the table.
struct DtcConfig {
    double torque_band = 0.1;  // N m half-width
    double flux_band = 0.01;   // Wb half-width

    /// table[sector][torque demand +1 -> 0, -1 -> 1][flux demand +1 -> 0, -1 -> 1]
    std::array<std::array<std::array<ModeId, 2>, 2>, 6> table = standard_table();

    ModeId entry(int sector, int torque_demand, int flux_demand) const {
        if (sector < 0 || sector > 5) throw std::out_of_range("dtc: sector outside 0..5");
        if (torque_demand == 0) return 0;
        return table[static_cast<std::size_t>(sector)][torque_demand > 0 ? 0 : 1]
                    [flux_demand > 0 ? 0 : 1];
    }

    void validate() const {
        if (!(torque_band > 0.0) || !(flux_band > 0.0))
            throw std::invalid_argument("dtc: comparator bands must be > 0");
        for (const auto& sector : table)
            for (const auto& row : sector)
                for (ModeId mode : row)
                    if (mode < 0 || mode >= kModeCount)
                        throw std::invalid_argument("dtc: table entry outside the mode set");
    }

    /// Six-sector table over the active vectors 1..6 (at 0, 60, .., 300
    /// degrees): raise torque with the vector one or two sectors ahead of the
    /// flux, lower it with the vector one or two sectors behind; the one-step
    /// neighbour raises the flux magnitude, the two-step neighbour lowers it.
    static std::array<std::array<std::array<ModeId, 2>, 2>, 6> standard_table() {
        std::array<std::array<std::array<ModeId, 2>, 2>, 6> t{};
        auto active = [](int slot) { return 1 + ((slot % 6) + 6) % 6; };
        for (int s = 0; s < 6; ++s) {
            t[s][0][0] = active(s + 1);  // torque up, flux up
            t[s][0][1] = active(s + 2);  // torque up, flux down
            t[s][1][0] = active(s - 1);  // torque down, flux up
            t[s][1][1] = active(s - 2);  // torque down, flux down
        }
        return t;
    }

    /// Replaces table entries from a text file of lines
    /// `sector torque_demand flux_demand mode` with demands in {+1, -1} and
    /// internal mode ids 0..6. Lines starting with '#' are skipped.
    void load_table(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("dtc: cannot open table file " + path.string());
        std::string line;
        while (std::getline(in, line)) {
            const auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos || line[first] == '#') continue;
            std::istringstream row(line);
            int sector = 0, torque_demand = 0, flux_demand = 0, mode = 0;
            if (!(row >> sector >> torque_demand >> flux_demand >> mode))
                throw std::runtime_error("dtc: malformed table line: " + line);
            if (sector < 0 || sector > 5 || std::abs(torque_demand) != 1 ||
                std::abs(flux_demand) != 1)
                throw std::runtime_error("dtc: table line outside domain: " + line);
            table[static_cast<std::size_t>(sector)][torque_demand > 0 ? 0 : 1]
                 [flux_demand > 0 ? 0 : 1] = mode;
        }
        validate();
    }
};

/// Comparator memory carried by the caller between steps.
struct DtcState {
    int torque_demand = 0;  // -1 lower, 0 hold, +1 raise
    int flux_demand = 1;    // -1 lower, +1 raise
};

/// Sector index 0..5 of the stator flux angle; sector k is centered at
/// k * 60 degrees.
inline int flux_sector(const Eigen::Vector4d& lambda) {
    if (Model::stator_flux_magnitude(lambda) < kFluxSingularityThreshold)
        throw SingularFlux(Model::stator_flux_magnitude(lambda));
    const double angle = std::atan2(lambda[1], lambda[0]);
    const int sector = static_cast<int>(std::floor((angle + kPi / 6.0) / (kPi / 3.0)));
    return ((sector % 6) + 6) % 6;
}

/// One control decision of the hysteresis DTC scheme. The torque comparator
/// runs two loops: demand engages when the error leaves the band and releases
/// to hold at the zero crossing; the flux comparator is a plain two-level
/// hysteresis. Hold selects the zero vector regardless of the flux demand.
inline ModeId dtc_step(const Model& model, const State& state, const DtcConfig& config,
                       const TrackingSpec& spec, DtcState& memory) {
    const Eigen::Vector2d y = model.outputs(state.to_state_vector());
    const double torque_error = spec.target[0] - y[0];
    const double flux_error = spec.target[1] - y[1];

    switch (memory.torque_demand) {
        case 0:
            if (torque_error >= config.torque_band)
                memory.torque_demand = 1;
            else if (torque_error <= -config.torque_band)
                memory.torque_demand = -1;
            break;
        case 1:
            if (torque_error <= 0.0) memory.torque_demand = 0;
            break;
        default:
            if (torque_error >= 0.0) memory.torque_demand = 0;
            break;
    }
    if (flux_error >= config.flux_band)
        memory.flux_demand = 1;
    else if (flux_error <= -config.flux_band)
        memory.flux_demand = -1;

    if (memory.torque_demand == 0) return 0;
    return config.entry(flux_sector(state.lambda), memory.torque_demand, memory.flux_demand);
}

}  // namespace swtrack::motor
