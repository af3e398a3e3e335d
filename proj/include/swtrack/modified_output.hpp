#pragma once

#include "swtrack/core.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <vector>

namespace swtrack {

/// Thrown when a modified-output polynomial has a root with non-negative real
/// part (unstable or marginal).
class UnstablePolynomial : public std::runtime_error {
public:
    UnstablePolynomial(std::string message, std::vector<std::complex<double>> roots)
        : std::runtime_error(std::move(message)), roots_(std::move(roots)) {}

    const std::vector<std::complex<double>>& roots() const { return roots_; }

private:
    std::vector<std::complex<double>> roots_;
};

/// Output recombination y = sum_i a_i z^(i): the coefficient vector
/// (a_0 .. a_q) together with the roots of sum_i a_i gamma^i, all of which
/// have strictly negative real part.
struct ModifiedOutput {
    Eigen::VectorXd coeffs;
    std::vector<std::complex<double>> roots;

    int order() const { return static_cast<int>(coeffs.size()) - 1; }
};

/// Roots of sum_i coeffs[i] gamma^i via the companion-matrix eigenvalues.
inline std::vector<std::complex<double>> polynomial_roots(const Eigen::VectorXd& coeffs) {
    const Eigen::Index q = coeffs.size() - 1;
    if (q <= 0) return {};
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(q, q);
    for (Eigen::Index i = 0; i + 1 < q; ++i) companion(i + 1, i) = 1.0;
    for (Eigen::Index i = 0; i < q; ++i) companion(i, q - 1) = -coeffs[i] / coeffs[q];
    Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, /*computeEigenvectors=*/false);
    std::vector<std::complex<double>> roots(static_cast<std::size_t>(q));
    for (Eigen::Index i = 0; i < q; ++i) roots[static_cast<std::size_t>(i)] = solver.eigenvalues()[i];
    return roots;
}

/// Validates the coefficient vector and the stability of its roots.
inline ModifiedOutput modified_output_build(const Eigen::VectorXd& coeffs) {
    if (coeffs.size() == 0) throw std::invalid_argument("modified output: empty coefficient vector");
    if (coeffs[coeffs.size() - 1] == 0.0)
        throw std::invalid_argument("modified output: leading coefficient a_q must be nonzero");

    ModifiedOutput mo{coeffs, polynomial_roots(coeffs)};
    bool stable = true;
    std::ostringstream os;
    os << "modified output has non-stable roots:";
    for (const auto& r : mo.roots) {
        os << " (" << r.real() << (r.imag() < 0 ? "" : "+") << r.imag() << "i)";
        if (!(r.real() < 0.0)) stable = false;
    }
    if (!stable) throw UnstablePolynomial(os.str(), mo.roots);
    return mo;
}

/// L1 norm of the impulse response of the transfer function
/// 1 / sum_i a_i s^i, i.e. the induced L-infinity norm of the map from y back
/// to z. Computed by integrating the companion-form state until the remaining
/// tail contributes less than 1e-9 of the accumulated integral.
inline double impulse_response_l1_norm(const ModifiedOutput& mo) {
    const int q = mo.order();
    if (q == 0) return 1.0 / std::abs(mo.coeffs[0]);

    double fastest = 0.0;
    double decay = std::numeric_limits<double>::infinity();
    for (const auto& r : mo.roots) {
        fastest = std::max(fastest, std::abs(r));
        decay = std::min(decay, -r.real());
    }

    const double h = 5e-4 / fastest;
    const long chunk_panels = std::max<long>(1, static_cast<long>(std::ceil(0.5 / (decay * h))));
    const long max_panels = 400 * chunk_panels;

    // Companion-form state (z, z', .., z^(q-1)); a unit impulse in y kicks the
    // top derivative to 1/a_q, after which the response is the free motion.
    Eigen::VectorXd z = Eigen::VectorXd::Zero(q);
    z[q - 1] = 1.0 / mo.coeffs[q];
    auto deriv = [&](const Eigen::VectorXd& s) {
        Eigen::VectorXd d(q);
        for (int i = 0; i + 1 < q; ++i) d[i] = s[i + 1];
        double top = 0.0;
        for (int i = 0; i < q; ++i) top -= mo.coeffs[i] * s[i];
        d[q - 1] = top / mo.coeffs[q];
        return d;
    };
    auto rk4_step = [&](const Eigen::VectorXd& s) {
        const Eigen::VectorXd k1 = deriv(s);
        const Eigen::VectorXd k2 = deriv(s + (0.5 * h) * k1);
        const Eigen::VectorXd k3 = deriv(s + (0.5 * h) * k2);
        const Eigen::VectorXd k4 = deriv(s + h * k3);
        return Eigen::VectorXd(s + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    };

    // Simpson panels over pairs of RK4 steps; stop once a whole chunk adds
    // less than 1e-9 of the running integral.
    double integral = 0.0;
    double chunk_sum = 0.0;
    for (long panel = 0; panel < max_panels; ++panel) {
        const Eigen::VectorXd mid = rk4_step(z);
        const Eigen::VectorXd next = rk4_step(mid);
        chunk_sum += (h / 3.0) * (std::abs(z[0]) + 4.0 * std::abs(mid[0]) + std::abs(next[0]));
        z = next;
        if ((panel + 1) % chunk_panels == 0) {
            integral += chunk_sum;
            const bool converged = chunk_sum < 1e-9 * integral;
            chunk_sum = 0.0;
            if (converged) break;
        }
    }
    integral += chunk_sum;
    return integral;
}

/// Maps a tracking band on the recombined output y to the implied band on the
/// base output z. Exactly linear in eps_y.
inline double modified_output_error_bound(const ModifiedOutput& mo, double eps_y) {
    if (!(eps_y > 0.0)) throw std::invalid_argument("modified output: eps_y must be > 0");
    return eps_y * impulse_response_l1_norm(mo);
}

}  // namespace swtrack
