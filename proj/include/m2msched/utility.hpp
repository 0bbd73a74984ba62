// Closed-form utility mathematics: PU step utility, failure-run penalty and
// the normalised sigmoidal ED utility with its inverse.
#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "core.hpp"

namespace m2m {

enum class Outcome : std::uint8_t { success, failure };

/// Resolution outcomes of one PU class, in resolution order.
using OutcomeSequence = std::vector<Outcome>;

/// 1 below the deadline, 0 at or past it.
inline double pu_step_utility(TimeMs latency, TimeMs deadline) { return latency < deadline ? 1.0 : 0.0; }

/// Extra (non-positive) utility charged for a run of `run_length` consecutive failures:
/// r - r^gamma.
inline double pu_run_penalty(int run_length, double gamma) {
    if (run_length < 1) throw std::invalid_argument("pu_run_penalty: run_length must be >= 1");
    if (run_length == 1 || gamma == 1.0) return 0.0;
    const double r = run_length;
    return r - std::pow(r, gamma);
}

/// Lengths of maximal failure blocks in order of occurrence. A run still open at the
/// end of the sequence counts.
inline std::vector<int> extract_failure_runs(std::span<const Outcome> seq) {
    std::vector<int> runs;
    int current = 0;
    for (Outcome o : seq) {
        if (o == Outcome::failure) {
            ++current;
        } else if (current > 0) {
            runs.push_back(current);
            current = 0;
        }
    }
    if (current > 0) runs.push_back(current);
    return runs;
}

/// Sigmoidal ED utility 1 - c (1/(1+e^{-a(l-b)}) - d) with c = (1+e^{ab})/e^{ab},
/// d = 1/(1+e^{ab}).
///
/// Algebraically this equals (e^{-a(l-b)} + e^{-al}) / (1 + e^{-a(l-b)}). We evaluate
/// that form, divided through by e^{-a(l-b)} when l < b, so no exponential ever has a
/// positive argument. Exactly 1 at l = 0 for every (a, b).
inline double ed_sigmoid_utility(TimeMs latency, double a, TimeMs b) {
    const double x = a * (latency - b);
    if (x >= 0.0) {
        const double ex = std::exp(-x);
        return (ex + std::exp(-a * latency)) / (1.0 + ex);
    }
    const double eab = std::exp(-a * b);
    return (1.0 + eab) / (1.0 + std::exp(x));
}

/// Latency at which the ED utility equals `target`. Solving the closed form gives
/// l = (ab + ln(1-u) + log1p(e^{-ab}/(1-u)) - ln u) / a.
inline TimeMs ed_inverse_utility(double target, double a, TimeMs b) {
    if (!(target > 0.0 && target < 1.0)) throw std::invalid_argument("ed_inverse_utility: target must lie in (0, 1)");
    const double miss = 1.0 - target;
    const double l = (a * b + std::log(miss) + std::log1p(std::exp(-a * b) / miss) - std::log(target)) / a;
    return l > 0.0 ? l : 0.0;
}

}  // namespace m2m
