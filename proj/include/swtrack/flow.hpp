#pragma once

#include "swtrack/core.hpp"

namespace swtrack {

/// Propagates xi for `dt` seconds under the vector field of `mode` with the
/// classical 4th-order Runge-Kutta scheme, using dt/substeps internal steps.
/// dt = 0 returns xi unchanged.
inline Vector flow(const SwitchedSystem& sys, ModeId mode, const Vector& xi, double dt,
                   int substeps = 1) {
    if (dt < 0.0) throw std::invalid_argument("flow: dt must be non-negative");
    if (substeps < 1) throw std::invalid_argument("flow: substeps must be >= 1");
    if (dt == 0.0) return xi;

    const double h = dt / substeps;
    Vector x = xi;
    auto eval = [&](const Vector& at) {
        Vector k = sys.field(mode, at);
        if (!k.allFinite()) throw NumericalDivergence(mode, at);
        return k;
    };
    for (int s = 0; s < substeps; ++s) {
        const Vector k1 = eval(x);
        const Vector k2 = eval(x + (0.5 * h) * k1);
        const Vector k3 = eval(x + (0.5 * h) * k2);
        const Vector k4 = eval(x + h * k3);
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!x.allFinite()) throw NumericalDivergence(mode, x);
    }
    return x;
}

}  // namespace swtrack
