#include <catch2/catch_amalgamated.hpp>

#include "swtrack/flow.hpp"
#include "swtrack/motor.hpp"
#include "swtrack/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace swtrack;

namespace {

/// Identity-output system whose modes move the output at fixed rates: the
/// constant-derivative setting where the linear boundary-time formula is
/// exact.
SwitchedSystem constant_rate_system(const std::vector<Vector>& rates) {
    const int n = static_cast<int>(rates.front().size());
    std::vector<SwitchedSystem::Field> fields;
    for (const Vector& r : rates) fields.push_back([r](const Vector&) { return r; });
    auto h = [](const Vector& x) { return x; };
    auto dh = [n](const Vector&) { return Matrix(Matrix::Identity(n, n)); };
    return SwitchedSystem(n, n, fields, h, dh);
}

Vector vec1(double a) {
    Vector v(1);
    v << a;
    return v;
}

Vector vec2(double a, double b) {
    Vector v(2);
    v << a, b;
    return v;
}

bool contains(const std::vector<ModeId>& set, ModeId x) {
    return std::find(set.begin(), set.end(), x) != set.end();
}

}  // namespace

TEST_CASE("errors inside every band admit the full mode set") {
    const SwitchedSystem sys = constant_rate_system({vec2(5, 5), vec2(-5, 5), vec2(0, -1)});
    const TrackingSpec spec(vec2(0, 0), vec2(1, 1));
    const auto modes = admissible_modes(sys, spec, vec2(0.5, -0.9));
    CHECK(modes == std::vector<ModeId>{0, 1, 2});
}

TEST_CASE("outside the band only error-decreasing modes are admissible") {
    const SwitchedSystem sys = constant_rate_system({vec1(-5), vec1(5)});
    const TrackingSpec spec(vec1(0), vec1(0.1));
    // error +0.2: only the mode pushing the output down qualifies
    CHECK(admissible_modes(sys, spec, vec1(0.2)) == std::vector<ModeId>{0});
    // exactly on the band edge counts as outside
    CHECK(admissible_modes(sys, spec, vec1(0.1)) == std::vector<ModeId>{0});
    CHECK(admissible_modes(sys, spec, vec1(-0.1)) == std::vector<ModeId>{1});
    // a zero rate does not count as decreasing
    const SwitchedSystem frozen = constant_rate_system({vec1(0), vec1(-1)});
    CHECK(admissible_modes(frozen, spec, vec1(0.2)) == std::vector<ModeId>{1});
}

TEST_CASE("admissible modes match a short-horizon flow oracle on the motor") {
    const motor::Model model(motor::Params::profile());
    const SwitchedSystem sys = model.switched_system();
    const TrackingSpec spec(vec2(50, 2), vec2(0.1, 0.01));

    // Start from the nominal state and scale the quadrature rotor flux so the
    // torque sits above its band while the flux output stays inside.
    motor::State state = motor::initial_state_for_targets(model.params(), 50.0, 2.0);
    state.lambda[3] *= 1.1;
    const Vector xi = state.to_state_vector();
    REQUIRE(std::abs(model.outputs(xi)[0] - 50.0) > 0.1);
    REQUIRE(std::abs(model.outputs(xi)[1] - 2.0) < 0.01);

    const auto modes = admissible_modes(sys, spec, xi);
    REQUIRE(!modes.empty());
    for (ModeId x = 0; x < sys.mode_count(); ++x) {
        const double before = std::abs(model.outputs(xi)[0] - 50.0);
        const double after = std::abs(model.outputs(flow(sys, x, xi, 1e-6))[0] - 50.0);
        CHECK(contains(modes, x) == (after < before));
    }
}

TEST_CASE("linear boundary time follows the constant-rate formula") {
    const TrackingSpec spec(vec1(0), vec1(0.1));

    SECTION("static output never reaches the boundary") {
        const SwitchedSystem sys = constant_rate_system({vec1(0), vec1(1)});
        CHECK(std::isinf(time_to_boundary_linear(sys, spec, 0, vec1(0.2))));
    }
    SECTION("crossing the whole band from above") {
        const SwitchedSystem sys = constant_rate_system({vec1(-100), vec1(1)});
        CHECK(time_to_boundary_linear(sys, spec, 0, vec1(0.2)) == Catch::Approx(0.003));
    }
    SECTION("minimum over components") {
        const SwitchedSystem sys = constant_rate_system({vec2(-100, 300), vec2(1, 1)});
        const TrackingSpec spec2(vec2(0, 0), vec2(0.1, 0.1));
        // component 0: (0.2+0.1)/100 = 3 ms, component 1: (0.1-0.0)/300 = 1/3 ms
        CHECK(time_to_boundary_linear(sys, spec2, 0, vec2(0.2, 0.0)) ==
              Catch::Approx(0.1 / 300.0));
    }
    SECTION("moving away past the edge clamps to zero") {
        const SwitchedSystem sys = constant_rate_system({vec1(5), vec1(-5)});
        CHECK(time_to_boundary_linear(sys, spec, 0, vec1(0.2)) == 0.0);
    }
}

TEST_CASE("exact and linear boundary times agree for constant rates") {
    const SwitchedSystem sys = constant_rate_system({vec1(-100), vec1(50)});
    const TrackingSpec spec(vec1(0), vec1(0.1));
    const double step = 1e-4;

    const double linear = time_to_boundary_linear(sys, spec, 0, vec1(0.2));
    const double exact = time_to_boundary_exact(sys, spec, 0, vec1(0.2), 1.0, step);
    CHECK(std::abs(exact - linear) <= step / 64.0);

    SECTION("inadmissible mode exits immediately") {
        CHECK(time_to_boundary_exact(sys, spec, 1, vec1(0.2), 1.0, step) == 0.0);
    }
    SECTION("never exceeds the horizon") {
        const SwitchedSystem still = constant_rate_system({vec1(0), vec1(1)});
        CHECK(time_to_boundary_exact(still, spec, 0, vec1(0.0), 0.5, step) == 0.5);
    }
    SECTION("argument validation") {
        CHECK_THROWS_AS(time_to_boundary_exact(sys, spec, 0, vec1(0.2), 0.0, step),
                        std::invalid_argument);
        CHECK_THROWS_AS(time_to_boundary_exact(sys, spec, 0, vec1(0.2), 1.0, 0.0),
                        std::invalid_argument);
    }
}

TEST_CASE("mode selection keeps an admissible current mode") {
    const SwitchedSystem sys = constant_rate_system({vec1(-5), vec1(-1), vec1(5)});
    const TrackingSpec spec(vec1(0), vec1(0.1));
    CHECK(select_next_mode(sys, spec, 1, vec1(0.2)) == 1);
    CHECK(select_next_mode(sys, spec, 2, vec1(0.05)) == 2);
}

TEST_CASE("mode selection maximizes the boundary time") {
    // error +0.2, candidates drive it down at 150 (theta = 2 ms) and 60
    // (theta = 5 ms); the slower one wins
    const SwitchedSystem sys = constant_rate_system({vec1(5), vec1(-150), vec1(-60)});
    const TrackingSpec spec(vec1(0), vec1(0.1));
    CHECK(select_next_mode(sys, spec, 0, vec1(0.2)) == 2);
}

TEST_CASE("theta ties break toward the lowest mode id") {
    const SwitchedSystem sys = constant_rate_system({vec1(5), vec1(-60), vec1(-60)});
    const TrackingSpec spec(vec1(0), vec1(0.1));
    CHECK(select_next_mode(sys, spec, 0, vec1(0.2)) == 1);
}

TEST_CASE("an empty admissible set raises a solvability failure") {
    const SwitchedSystem sys = constant_rate_system({vec1(1), vec1(2)});
    const TrackingSpec spec(vec1(0), vec1(0.1));
    try {
        select_next_mode(sys, spec, 0, vec1(0.2));
        FAIL("expected SolvabilityFailure");
    } catch (const SolvabilityFailure& e) {
        CHECK(e.state()[0] == 0.2);
        CHECK(std::string(e.what()).find("mode 1") != std::string::npos);
    }
}

TEST_CASE("selection invariants over random constant-rate systems") {
    std::mt19937_64 rng(42);
    auto uniform = [&](double lo, double hi) {
        return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
    };
    for (int trial = 0; trial < 200; ++trial) {
        const int mode_count = 2 + static_cast<int>(rng() % 5);
        std::vector<Vector> rates;
        for (int m = 0; m < mode_count; ++m)
            rates.push_back(vec2(uniform(-10, 10), uniform(-10, 10)));
        const SwitchedSystem sys = constant_rate_system(rates);
        const TrackingSpec spec(vec2(0, 0), vec2(uniform(0.01, 1), uniform(0.01, 1)));
        const Vector xi = vec2(uniform(-2, 2), uniform(-2, 2));
        const ModeId current = static_cast<ModeId>(rng() % mode_count);

        const auto adm = admissible_modes(sys, spec, xi);
        if (adm.empty()) {
            CHECK_THROWS_AS(select_next_mode(sys, spec, current, xi), SolvabilityFailure);
            continue;
        }
        const ModeId chosen = select_next_mode(sys, spec, current, xi);
        CHECK(contains(adm, chosen));
        if (!contains(adm, current)) CHECK(chosen != current);
    }
}
