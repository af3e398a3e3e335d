#pragma once

#include <Eigen/Dense>

#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace swtrack {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Discrete mode label; valid values are 0 .. mode_count()-1 of the owning system.
using ModeId = int;

namespace detail {

inline std::string format_vector(const Vector& v) {
    std::ostringstream os;
    os << "[";
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i > 0) os << ", ";
        os << v[i];
    }
    os << "]";
    return os.str();
}

}  // namespace detail

/// Thrown when a vector-field evaluation or an integration step produces
/// non-finite values.
class NumericalDivergence : public std::runtime_error {
public:
    NumericalDivergence(ModeId mode, Vector state)
        : std::runtime_error("numerical divergence under mode " + std::to_string(mode) +
                             " at state " + detail::format_vector(state)),
          mode_(mode),
          state_(std::move(state)) {}

    ModeId mode() const { return mode_; }
    const Vector& state() const { return state_; }

private:
    ModeId mode_;
    Vector state_;
};

/// Thrown when no mode can keep every output inside its band or moving toward it.
class SolvabilityFailure : public std::runtime_error {
public:
    SolvabilityFailure(Vector state, const std::string& diagnostics)
        : std::runtime_error("no admissible mode at state " + detail::format_vector(state) +
                             "\n" + diagnostics),
          state_(std::move(state)) {}

    const Vector& state() const { return state_; }

private:
    Vector state_;
};

/// Step-tracking target: a constant desired output and per-component error
/// bounds (half-widths of the tracking band, strictly positive).
struct TrackingSpec {
    Vector target;
    Vector band;

    TrackingSpec(Vector target_, Vector band_) : target(std::move(target_)), band(std::move(band_)) {
        if (target.size() != band.size())
            throw std::invalid_argument("tracking spec: target and band dimensions differ");
        if (target.size() == 0) throw std::invalid_argument("tracking spec: empty target");
        for (Eigen::Index i = 0; i < band.size(); ++i) {
            if (!(band[i] > 0.0))
                throw std::invalid_argument("tracking spec: band entries must be strictly positive");
        }
    }
};

/// A finite family of smooth vector fields over a common continuous state,
/// selected by a discrete mode, plus an output map shared by all modes.
///
/// The output Jacobian feeds the output-rate d/dt h = (dh/dxi) f_x used by the
/// tracking operations; a closed-form rate can be installed as an override
/// when the Jacobian product is better computed directly.
class SwitchedSystem {
public:
    using Field = std::function<Vector(const Vector&)>;
    using Output = std::function<Vector(const Vector&)>;
    using OutputJacobian = std::function<Matrix(const Vector&)>;
    using OutputRate = std::function<Vector(ModeId, const Vector&)>;

    SwitchedSystem(int state_dim, int output_dim, std::vector<Field> fields, Output output,
                   OutputJacobian output_jacobian)
        : state_dim_(state_dim),
          output_dim_(output_dim),
          fields_(std::move(fields)),
          output_(std::move(output)),
          output_jacobian_(std::move(output_jacobian)) {
        if (state_dim_ < 1) throw std::invalid_argument("switched system: state dimension < 1");
        if (output_dim_ < 1) throw std::invalid_argument("switched system: output dimension < 1");
        if (fields_.size() < 2)
            throw std::invalid_argument("switched system: at least two modes required");
        if (!output_ || !output_jacobian_)
            throw std::invalid_argument("switched system: output map and Jacobian required");
        for (const auto& f : fields_) {
            if (!f) throw std::invalid_argument("switched system: null field");
        }
    }

    int state_dim() const { return state_dim_; }
    int output_dim() const { return output_dim_; }
    int mode_count() const { return static_cast<int>(fields_.size()); }

    /// Installs a closed-form output rate used instead of (dh/dxi) f_x.
    void set_output_rate(OutputRate rate) { output_rate_ = std::move(rate); }

    Vector field(ModeId mode, const Vector& xi) const {
        check_mode(mode);
        return fields_[static_cast<std::size_t>(mode)](xi);
    }

    Vector output(const Vector& xi) const { return output_(xi); }

    Matrix output_jacobian(const Vector& xi) const { return output_jacobian_(xi); }

    /// d/dt of the output along the flow of `mode`, evaluated at xi.
    Vector output_rate(ModeId mode, const Vector& xi) const {
        check_mode(mode);
        if (output_rate_) return output_rate_(mode, xi);
        return output_jacobian_(xi) * fields_[static_cast<std::size_t>(mode)](xi);
    }

private:
    void check_mode(ModeId mode) const {
        if (mode < 0 || mode >= mode_count())
            throw std::out_of_range("mode " + std::to_string(mode) + " outside 0.." +
                                    std::to_string(mode_count() - 1));
    }

    int state_dim_;
    int output_dim_;
    std::vector<Field> fields_;
    Output output_;
    OutputJacobian output_jacobian_;
    OutputRate output_rate_;
};

/// Discrete/continuous state pair (x, xi).
struct HybridState {
    ModeId mode = 0;
    Vector state;
};

}  // namespace swtrack
