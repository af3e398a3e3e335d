#pragma once

#include "swtrack/core.hpp"
#include "swtrack/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace swtrack {

namespace detail {

/// Tracking condition for one mode at one state: every output component is
/// strictly inside its band, or its error is strictly decreasing under the
/// mode's flow. A component exactly on the band edge counts as outside.
inline bool mode_admissible(const Vector& error, const Vector& band, const Vector& rate) {
    for (Eigen::Index i = 0; i < error.size(); ++i) {
        if (std::abs(error[i]) < band[i]) continue;
        const bool decreasing = error[i] > 0.0 ? rate[i] < 0.0 : rate[i] > 0.0;
        if (!decreasing) return false;
    }
    return true;
}

}  // namespace detail

inline bool mode_admissible(const SwitchedSystem& sys, const TrackingSpec& spec, ModeId mode,
                            const Vector& xi) {
    const Vector error = sys.output(xi) - spec.target;
    return detail::mode_admissible(error, spec.band, sys.output_rate(mode, xi));
}

/// Set of modes whose flow keeps every output component inside its band or
/// moving toward it, in ascending mode order. An empty result is legal and
/// signals a solvability violation at xi; the caller decides whether that is
/// fatal.
inline std::vector<ModeId> admissible_modes(const SwitchedSystem& sys, const TrackingSpec& spec,
                                            const Vector& xi) {
    const Vector error = sys.output(xi) - spec.target;
    std::vector<ModeId> result;
    for (ModeId x = 0; x < sys.mode_count(); ++x) {
        if (detail::mode_admissible(error, spec.band, sys.output_rate(x, xi))) result.push_back(x);
    }
    return result;
}

/// Time until the tracking condition would fail under `mode`, assuming the
/// output rate stays constant along the flow. Per component: the time for the
/// error to reach the band edge lying in the direction of motion; +infinity
/// for a static component; clamped at zero when the error is already past the
/// edge and moving away. Returns the minimum over components.
inline double time_to_boundary_linear(const SwitchedSystem& sys, const TrackingSpec& spec,
                                      ModeId mode, const Vector& xi) {
    const Vector error = sys.output(xi) - spec.target;
    const Vector rate = sys.output_rate(mode, xi);
    double theta = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < error.size(); ++i) {
        if (rate[i] == 0.0) continue;
        const double edge = rate[i] > 0.0 ? spec.band[i] : -spec.band[i];
        const double theta_i = std::max(0.0, -(error[i] - edge) / rate[i]);
        theta = std::min(theta, theta_i);
    }
    return theta;
}

/// Time until the flow under `mode` actually leaves its admissible region,
/// found by sampling the flow every `step` seconds up to `horizon` and
/// refining the first crossing by bisection to resolution step/64. Returns
/// `horizon` when no exit occurs, and 0 when the mode is inadmissible at xi.
inline double time_to_boundary_exact(const SwitchedSystem& sys, const TrackingSpec& spec,
                                     ModeId mode, const Vector& xi, double horizon, double step) {
    if (!(horizon > 0.0)) throw std::invalid_argument("time_to_boundary_exact: horizon must be > 0");
    if (!(step > 0.0)) throw std::invalid_argument("time_to_boundary_exact: step must be > 0");

    if (!mode_admissible(sys, spec, mode, xi)) return 0.0;

    const double resolution = step / 64.0;
    double t = 0.0;
    Vector x = xi;
    while (t < horizon) {
        const double dt = std::min(step, horizon - t);
        const Vector next = flow(sys, mode, x, dt);
        if (!mode_admissible(sys, spec, mode, next)) {
            double lo = 0.0, hi = dt;
            while (hi - lo > resolution) {
                const double mid = 0.5 * (lo + hi);
                if (mode_admissible(sys, spec, mode, flow(sys, mode, x, mid)))
                    lo = mid;
                else
                    hi = mid;
            }
            return t + 0.5 * (lo + hi);
        }
        x = next;
        t += dt;
    }
    return horizon;
}

namespace detail {

inline std::string admissibility_diagnostics(const SwitchedSystem& sys, const TrackingSpec& spec,
                                             const Vector& xi) {
    const Vector error = sys.output(xi) - spec.target;
    std::ostringstream os;
    os << "error " << format_vector(error) << ", band " << format_vector(spec.band);
    for (ModeId x = 0; x < sys.mode_count(); ++x) {
        os << "\n  mode " << x << ": output rate " << format_vector(sys.output_rate(x, xi));
    }
    return os.str();
}

}  // namespace detail

/// One controller decision: keep the current mode while it is admissible;
/// otherwise jump to the admissible mode that maximizes the linear
/// time-to-boundary estimate. Ties break toward the lowest mode id. Throws
/// SolvabilityFailure with per-mode diagnostics when no mode is admissible.
inline ModeId select_next_mode(const SwitchedSystem& sys, const TrackingSpec& spec, ModeId current,
                               const Vector& xi) {
    const std::vector<ModeId> candidates = admissible_modes(sys, spec, xi);
    if (std::find(candidates.begin(), candidates.end(), current) != candidates.end()) return current;
    ModeId best = -1;
    double best_theta = -1.0;
    for (ModeId x : candidates) {
        if (x == current) continue;
        const double theta = time_to_boundary_linear(sys, spec, x, xi);
        if (theta > best_theta) {
            best_theta = theta;
            best = x;
        }
    }
    if (best < 0) throw SolvabilityFailure(xi, detail::admissibility_diagnostics(sys, spec, xi));
    return best;
}

}  // namespace swtrack
