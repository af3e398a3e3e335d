#pragma once

#include "swtrack/core.hpp"
#include "swtrack/solvability.hpp"

#include <cmath>
#include <memory>
#include <random>

namespace swtrack::motor {

inline constexpr double kPi = 3.14159265358979323846;

/// Number of inverter voltage vectors: the zero vector plus six active
/// vectors spaced 60 degrees apart.
inline constexpr int kModeCount = 7;

/// Stator-flux magnitude below which the output Jacobian is singular.
inline constexpr double kFluxSingularityThreshold = 1e-9;

/// Thrown when an operation needs the stator-flux direction or the output
/// Jacobian at (numerically) zero stator flux.
class SingularFlux : public std::runtime_error {
public:
    explicit SingularFlux(double lambda_sm)
        : std::runtime_error("stator flux magnitude " + std::to_string(lambda_sm) +
                             " below singularity threshold") {}
};

/// Electrical and mechanical constants of the machine, SI units.
struct Params {
    double L_s;    // stator inductance, H
    double L_r;    // rotor inductance, H
    double L_m;    // mutual inductance, H
    double R_s;    // stator resistance, ohm
    double R_r;    // rotor resistance, ohm
    int P;         // pole count
    double J;      // rotor inertia, kg m^2
    double b;      // viscous friction, N m s
    double tau_L;  // constant load torque, N m
    double V_DC;   // inverter DC link voltage, V

    double linkage_determinant() const { return L_s * L_r - L_m * L_m; }

    void validate() const {
        auto positive = [](double v, const char* name) {
            if (!(v > 0.0)) throw std::invalid_argument(std::string("motor params: ") + name + " must be > 0");
        };
        positive(L_s, "L_s");
        positive(L_r, "L_r");
        positive(L_m, "L_m");
        positive(R_s, "R_s");
        positive(R_r, "R_r");
        positive(J, "J");
        positive(V_DC, "V_DC");
        if (P < 2 || P % 2 != 0) throw std::invalid_argument("motor params: P must be even and >= 2");
        if (linkage_determinant() == 0.0)
            throw std::invalid_argument("motor params: singular flux linkage (L_s*L_r == L_m^2)");
    }

    /// Shipped parameter profile. The 450 V link is the default experiment
    /// profile; pass 225 for the alternative low-voltage profile.
    static Params profile(double v_dc = 450.0) {
        return Params{0.5676, 0.5676, 0.55, 1.19, 1.04, 4, 0.04, 0.07, 5.0, v_dc};
    }
};

/// Continuous state: rotor speed and the stator/rotor flux pairs
/// (lambda_ds, lambda_qs, lambda_dr, lambda_qr).
struct State {
    double omega = 0.0;
    Eigen::Vector4d lambda = Eigen::Vector4d::Zero();

    Vector to_state_vector() const {
        Vector xi(5);
        xi[0] = omega;
        xi.tail<4>() = lambda;
        return xi;
    }

    static State from_state_vector(const Vector& xi) {
        if (xi.size() != 5) throw std::invalid_argument("motor state: expected 5 components");
        State s;
        s.omega = xi[0];
        s.lambda = xi.tail<4>();
        return s;
    }
};

/// Stator voltage vector of inverter switching combination `table_mode`
/// (external numbering 1..7; 1 is the zero vector, 2..7 the active vectors at
/// 0, 60, .., 300 degrees).
inline Eigen::Vector2d inverter_voltage(int table_mode, const Params& params) {
    const double v = params.V_DC;
    const double h = std::sqrt(3.0) * v / 2.0;
    switch (table_mode) {
        case 1: return {0.0, 0.0};
        case 2: return {v, 0.0};
        case 3: return {v / 2.0, h};
        case 4: return {-v / 2.0, h};
        case 5: return {-v, 0.0};
        case 6: return {-v / 2.0, -h};
        case 7: return {v / 2.0, -h};
        default:
            throw std::out_of_range("inverter mode " + std::to_string(table_mode) + " outside 1..7");
    }
}

/// dq-frame induction motor fed by a 7-vector inverter, exposed both as
/// direct evaluators and as a SwitchedSystem with torque and stator-flux
/// magnitude as the controlled outputs.
class Model {
public:
    explicit Model(Params params) : p_(params) {
        p_.validate();
        L_ << p_.L_s, 0, p_.L_m, 0,
              0, p_.L_s, 0, p_.L_m,
              p_.L_m, 0, p_.L_r, 0,
              0, p_.L_m, 0, p_.L_r;
        L_inv_ = L_.inverse();
        R_ = Eigen::Vector4d(p_.R_s, p_.R_s, p_.R_r, p_.R_r).asDiagonal();
        C_.setZero();
        C_(2, 3) = -1.0;
        C_(3, 2) = 1.0;
        RL_inv_ = R_ * L_inv_;
        M1_ = C_ * L_inv_ - L_inv_ * C_;
        torque_gain_ = 3.0 * p_.P / 4.0;
        torque_gradient_ = torque_gain_ * (C_ * L_inv_ + (C_ * L_inv_).transpose());
    }

    const Params& params() const { return p_; }
    const Eigen::Matrix4d& linkage() const { return L_; }
    const Eigen::Matrix4d& linkage_inverse() const { return L_inv_; }
    const Eigen::Matrix4d& resistance() const { return R_; }
    const Eigen::Matrix4d& rotation() const { return C_; }

    /// M1 = C L^-1 - L^-1 C, the coupling between flux and torque rate.
    const Eigen::Matrix4d& torque_coupling() const { return M1_; }

    /// B maps the stator voltage pair into the flux derivative.
    static const Eigen::Matrix<double, 4, 2>& input_map() {
        static const Eigen::Matrix<double, 4, 2> b = [] {
            Eigen::Matrix<double, 4, 2> m;
            m << 1, 0, 0, 1, 0, 0, 0, 0;
            return m;
        }();
        return b;
    }

    /// Stator voltage of internal mode 0..6 (table row mode+1).
    Eigen::Vector2d voltage(ModeId mode) const { return inverter_voltage(mode + 1, p_); }

    Eigen::Vector4d currents(const Eigen::Vector4d& lambda) const { return L_inv_ * lambda; }

    double torque(const Eigen::Vector4d& lambda) const {
        return torque_gain_ * lambda.dot(C_ * (L_inv_ * lambda));
    }

    static double stator_flux_magnitude(const Eigen::Vector4d& lambda) {
        return std::hypot(lambda[0], lambda[1]);
    }

    /// State derivative [omega_dot, lambda_dot] under `mode`.
    Vector field(ModeId mode, const Vector& xi) const {
        const double omega = xi[0];
        const Eigen::Vector4d lambda = xi.tail<4>();
        Vector d(5);
        d[0] = (-p_.b * omega + torque(lambda) - p_.tau_L) / p_.J;
        d.tail<4>() = -(RL_inv_ * lambda) + omega * (C_ * lambda) + input_map() * voltage(mode);
        return d;
    }

    /// Controlled outputs (torque, stator flux magnitude).
    Eigen::Vector2d outputs(const Vector& xi) const {
        const Eigen::Vector4d lambda = xi.tail<4>();
        return {torque(lambda), stator_flux_magnitude(lambda)};
    }

    /// Closed-form output rate (tau_dot, lambda_sm_dot) under `mode`.
    Eigen::Vector2d output_rate(ModeId mode, const Vector& xi) const {
        const double omega = xi[0];
        const Eigen::Vector4d lambda = xi.tail<4>();
        const double lambda_sm = stator_flux_magnitude(lambda);
        if (lambda_sm < kFluxSingularityThreshold) throw SingularFlux(lambda_sm);
        const Eigen::Vector2d v = voltage(mode);
        const Eigen::Vector4d flux_rate =
            input_map() * v - RL_inv_ * lambda + omega * (C_ * lambda);
        const double tau_rate = torque_gain_ * lambda.dot(M1_ * flux_rate);
        const Eigen::Vector2d lambda_s = lambda.head<2>();
        const double sm_rate =
            (lambda_s.dot(v) - lambda_s.dot((RL_inv_ * lambda).head<2>())) / lambda_sm;
        return {tau_rate, sm_rate};
    }

    /// Jacobian of the output map; rows are (d tau / d xi, d lambda_sm / d xi).
    Eigen::Matrix<double, 2, 5> output_jacobian(const Vector& xi) const {
        const Eigen::Vector4d lambda = xi.tail<4>();
        const double lambda_sm = stator_flux_magnitude(lambda);
        if (lambda_sm < kFluxSingularityThreshold) throw SingularFlux(lambda_sm);
        Eigen::Matrix<double, 2, 5> jac = Eigen::Matrix<double, 2, 5>::Zero();
        jac.block<1, 4>(0, 1) = (torque_gradient_ * lambda).transpose();
        jac(1, 1) = lambda[0] / lambda_sm;
        jac(1, 2) = lambda[1] / lambda_sm;
        return jac;
    }

    /// The motor as a generic switched system with the closed-form output
    /// rate installed.
    SwitchedSystem switched_system() const {
        SwitchedSystem sys(5, 2, mode_fields(),
                           [m = *this](const Vector& xi) { return Vector(m.outputs(xi)); },
                           [m = *this](const Vector& xi) { return Matrix(m.output_jacobian(xi)); });
        sys.set_output_rate(
            [m = *this](ModeId mode, const Vector& xi) { return Vector(m.output_rate(mode, xi)); });
        return sys;
    }

    /// One-output system with y = omega + a * omega_dot, the recombined speed
    /// output that restores sign coverage where plain omega has none.
    SwitchedSystem speed_modified_system(double a) const {
        if (!(a > 0.0)) throw std::invalid_argument("speed modified output: a must be > 0");
        auto self = *this;
        auto h = [self, a](const Vector& xi) {
            const double omega = xi[0];
            const double omega_dot =
                (-self.p_.b * omega + self.torque(xi.tail<4>()) - self.p_.tau_L) / self.p_.J;
            Vector y(1);
            y[0] = omega + a * omega_dot;
            return y;
        };
        auto dh = [self, a](const Vector& xi) {
            Matrix jac = Matrix::Zero(1, 5);
            jac(0, 0) = 1.0 - a * self.p_.b / self.p_.J;
            jac.block<1, 4>(0, 1) =
                (a / self.p_.J) * (self.torque_gradient_ * xi.tail<4>()).transpose();
            return jac;
        };
        return SwitchedSystem(5, 1, mode_fields(), h, dh);
    }

private:
    std::vector<SwitchedSystem::Field> mode_fields() const {
        std::vector<SwitchedSystem::Field> fields;
        fields.reserve(kModeCount);
        for (ModeId mode = 0; mode < kModeCount; ++mode) {
            fields.push_back(
                [m = *this, mode](const Vector& xi) { return m.field(mode, xi); });
        }
        return fields;
    }

    Params p_;
    Eigen::Matrix4d L_, L_inv_, R_, C_, RL_inv_, M1_;
    double torque_gain_ = 0.0;
    Eigen::Matrix4d torque_gradient_;
};

/// Operating region for solvability checks: speeds in (0, omega_max) and flux
/// 4-vectors with norm below lambda_norm_max.
struct Region {
    double omega_max = 50.0;
    double lambda_norm_max = 5.0;
};

namespace detail {

/// Deterministic uniform doubles from a fixed-width generator, independent of
/// the standard library's distribution implementations.
class UniformRng {
public:
    explicit UniformRng(std::uint64_t seed) : engine_(seed) {}
    double next() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double next_in(double lo, double hi) { return lo + (hi - lo) * next(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace detail

/// Samples physically reachable states for the region: the rotor flux tracks
/// the stator flux up to a small misalignment band, so flux pairs are drawn
/// around the aligned subspace rather than from the full 4-dimensional ball
/// (where rotor flux perpendicular to stator flux would defeat any inverter).
inline StateSampler region_sampler(const Region& region, double alignment_band = 0.02,
                                   std::uint64_t seed = 0x5eed5eedULL) {
    if (!(region.omega_max > 0.0) || !(region.lambda_norm_max > 0.0))
        throw std::invalid_argument("motor region: bounds must be positive");
    auto rng = std::make_shared<detail::UniformRng>(seed);
    return [region, alignment_band, rng](long) {
        const double omega = rng->next_in(0.0, region.omega_max);
        const double angle = rng->next_in(0.0, 2.0 * kPi);
        const double s_mag = rng->next_in(0.0, region.lambda_norm_max) / std::sqrt(2.0);
        const Eigen::Vector2d s(s_mag * std::cos(angle), s_mag * std::sin(angle));
        const double p_angle = rng->next_in(0.0, 2.0 * kPi);
        const double p_mag = alignment_band * s_mag * rng->next();
        const Eigen::Vector2d perturbation(p_mag * std::cos(p_angle), p_mag * std::sin(p_angle));
        Eigen::Vector4d lambda;
        lambda << s, s + perturbation;
        const double norm = lambda.norm();
        if (norm > region.lambda_norm_max) lambda *= region.lambda_norm_max / norm;
        Vector xi(5);
        xi[0] = omega;
        xi.tail<4>() = lambda;
        return xi;
    };
}

/// Sampling resolution of the DC-link worst-case search.
struct SearchGrid {
    int omega_points = 50;
    long flux_samples = 10000;
    double alignment_band = 0.02;
    std::uint64_t seed = 0x5eed5eedULL;
};

/// Smallest DC-link voltage for which every output-rate sign pattern stays
/// reachable over the region, from the worst case of the two coupling ratios
/// scaled by the worst-case angle cos(5*pi/12) between an active inverter
/// vector and the flux-derived directions.
inline double vdc_lower_bound(const Params& params, const Region& region,
                              const SearchGrid& grid = {}) {
    if (!(region.omega_max > 0.0) || !(region.lambda_norm_max > 0.0))
        throw std::invalid_argument("vdc_lower_bound: region bounds must be positive");
    if (grid.omega_points < 1 || grid.flux_samples < 1)
        throw std::invalid_argument("vdc_lower_bound: grid resolution must be >= 1");
    const Model model(params);
    const auto& M1 = model.torque_coupling();
    const auto& B = Model::input_map();
    const Eigen::Matrix4d RL_inv = model.resistance() * model.linkage_inverse();
    const Eigen::Matrix4d BBtRL_inv = B * B.transpose() * RL_inv;

    // Geometric scale between the flux-region norm bound and the stator-flux
    // search radius of the worst-case sweep.
    const double stator_radius =
        std::sqrt(3.0) * std::cos(5.0 * kPi / 12.0) * region.lambda_norm_max;

    detail::UniformRng rng(grid.seed);
    double worst = 0.0;
    for (long n = 0; n < grid.flux_samples; ++n) {
        const double angle = rng.next_in(0.0, 2.0 * kPi);
        const double s_mag = stator_radius * std::sqrt(rng.next());
        const Eigen::Vector2d s(s_mag * std::cos(angle), s_mag * std::sin(angle));
        const double p_angle = rng.next_in(0.0, 2.0 * kPi);
        const double p_mag = grid.alignment_band * s_mag * rng.next();
        Eigen::Vector4d lambda;
        lambda << s, s + Eigen::Vector2d(p_mag * std::cos(p_angle), p_mag * std::sin(p_angle));

        // Both ratios are affine in omega for a fixed flux sample.
        const Eigen::Vector4d m1_lambda = M1 * lambda;
        const double torque_denominator = (B.transpose() * m1_lambda).norm();
        const double flux_denominator = (B.transpose() * lambda).norm();
        const double resistive_part = lambda.dot(M1 * (RL_inv * lambda));
        const double rotational_part = lambda.dot(M1 * (model.rotation() * lambda));
        const double flux_numerator = lambda.dot(BBtRL_inv * lambda);

        if (flux_denominator > 1e-12) worst = std::max(worst, flux_numerator / flux_denominator);
        if (torque_denominator > 1e-12) {
            for (int j = 1; j <= grid.omega_points; ++j) {
                const double omega = region.omega_max * j / grid.omega_points;
                worst = std::max(worst,
                                 (resistive_part - omega * rotational_part) / torque_denominator);
            }
        }
    }
    return worst / std::cos(5.0 * kPi / 12.0);
}

/// State whose outputs sit on the requested targets: stator flux aligned with
/// the d axis at the requested magnitude, rotor d-flux from the
/// no-stator-leakage alignment heuristic, quadrature rotor flux solved from
/// the torque target, and speed at the (region-clamped) mechanical steady
/// state.
inline State initial_state_for_targets(const Params& params, double tau_d, double lambda_sm_d,
                                       const Region& region = {}) {
    if (!(lambda_sm_d > 0.0))
        throw std::invalid_argument("initial state: flux target must be > 0");
    const Model model(params);
    State s;
    s.lambda[0] = lambda_sm_d;
    s.lambda[1] = 0.0;
    s.lambda[2] = params.L_m / params.L_s * lambda_sm_d;

    auto torque_at = [&](double lambda_qr) {
        Eigen::Vector4d lambda = s.lambda;
        lambda[3] = lambda_qr;
        return model.torque(lambda) - tau_d;
    };

    double lo = -1.0, hi = 1.0;
    int expansions = 0;
    while (torque_at(lo) * torque_at(hi) > 0.0) {
        lo *= 2.0;
        hi *= 2.0;
        if (++expansions > 60)
            throw std::runtime_error("initial state: torque target unreachable at this flux");
    }
    while (hi - lo > 1e-9) {
        const double mid = 0.5 * (lo + hi);
        if (torque_at(lo) * torque_at(mid) <= 0.0)
            hi = mid;
        else
            lo = mid;
    }
    s.lambda[3] = 0.5 * (lo + hi);
    const double steady = (tau_d - params.tau_L) / params.b;
    s.omega = std::clamp(steady, 0.0, region.omega_max);
    return s;
}

}  // namespace swtrack::motor
