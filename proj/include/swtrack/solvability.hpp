#pragma once

#include "swtrack/core.hpp"
#include "swtrack/tracking.hpp"

#include <map>
#include <vector>

namespace swtrack {

/// Result of the sign-pattern actuation check at one state: whether every one
/// of the 2^m output-rate sign patterns is produced by some mode, with a
/// witness mode per covered pattern. Pattern bit i is set when component i is
/// positive. A zero rate component matches neither sign.
struct SignCoverage {
    bool covered = false;
    int output_dim = 0;
    std::map<unsigned, ModeId> witness;
    std::vector<unsigned> missing;

    std::string pattern_string(unsigned pattern) const {
        std::string s;
        for (int i = 0; i < output_dim; ++i) s += (pattern >> i) & 1u ? '+' : '-';
        return s;
    }
};

inline SignCoverage check_sign_coverage(const SwitchedSystem& sys, const Vector& xi) {
    const int m = sys.output_dim();
    if (m > 20) throw std::invalid_argument("check_sign_coverage: too many output components");
    SignCoverage result;
    result.output_dim = m;
    for (ModeId x = 0; x < sys.mode_count(); ++x) {
        const Vector rate = sys.output_rate(x, xi);
        unsigned pattern = 0;
        bool defined = true;
        for (int i = 0; i < m; ++i) {
            if (rate[i] == 0.0) {
                defined = false;
                break;
            }
            if (rate[i] > 0.0) pattern |= 1u << i;
        }
        if (defined) result.witness.try_emplace(pattern, x);
    }
    const unsigned total = 1u << m;
    for (unsigned p = 0; p < total; ++p) {
        if (!result.witness.count(p)) result.missing.push_back(p);
    }
    result.covered = result.missing.empty();
    return result;
}

/// Generator of the n-th sample state of a scan region.
using StateSampler = std::function<Vector(long)>;

/// Outcome of a sampled solvability check. This is evidence over the drawn
/// samples, not a proof over the region.
struct ScanReport {
    long total = 0;
    long failures = 0;
    std::vector<Vector> failing_states;  // capped at kMaxRecordedFailures

    static constexpr std::size_t kMaxRecordedFailures = 32;

    bool all_passed() const { return failures == 0; }
};

/// Draws `count` states from the sampler and evaluates, at each, either the
/// admissible-set condition (spec given: some mode keeps the tracking
/// condition) or the target-independent sign-coverage condition (spec null).
inline ScanReport solvability_scan(const SwitchedSystem& sys, const TrackingSpec* spec,
                                   const StateSampler& sampler, long count) {
    if (count < 1) throw std::invalid_argument("solvability_scan: sample count must be >= 1");
    ScanReport report;
    for (long n = 0; n < count; ++n) {
        const Vector xi = sampler(n);
        const bool ok = spec ? !admissible_modes(sys, *spec, xi).empty()
                             : check_sign_coverage(sys, xi).covered;
        ++report.total;
        if (!ok) {
            ++report.failures;
            if (report.failing_states.size() < ScanReport::kMaxRecordedFailures)
                report.failing_states.push_back(xi);
        }
    }
    return report;
}

}  // namespace swtrack
