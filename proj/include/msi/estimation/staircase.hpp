#pragma once

// Ascending ("reversed") staircase: the level starts near zero and climbs by
// a fixed step until the observer confirms detection on `confirm`
// consecutive trials at the same level.

#include <cmath>
#include <vector>

#include "msi/core/model.hpp"

namespace msi::estimation {

enum class Detection { Detected, NotDetected };
enum class StaircasePhase { Running, AwaitConfirm, Done };

struct StaircaseTrial {
    double level = 0.0;
    Detection response = Detection::NotDetected;
    friend bool operator==(const StaircaseTrial&, const StaircaseTrial&) = default;
};

struct AscendingStaircase {
    double start = 0.02;
    double step = 0.02;
    int confirm_needed = 2;
    int max_trials = 0;  ///< 0 = derived from start/step (ceiling plus slack)

    int steps_taken = 0;
    std::vector<StaircaseTrial> history;
    int reversals = 0;
    StaircasePhase phase = StaircasePhase::Running;
    int confirm_count = 0;
    bool hit_ceiling = false;

    /// Current level; computed from the step count so it never accumulates
    /// rounding error.
    double level() const { return std::min(1.0, start + steps_taken * step); }
    bool done() const { return phase == StaircasePhase::Done; }
    /// Terminal estimate: the level at which detection was confirmed.
    double threshold() const {
        if (!done()) throw InvalidArgument("staircase not finished");
        return level();
    }
    int trial_limit() const {
        if (max_trials > 0) return max_trials;
        return static_cast<int>(std::ceil((1.0 - start) / step)) + confirm_needed + 20;
    }

    friend bool operator==(const AscendingStaircase&, const AscendingStaircase&) = default;
};

inline AscendingStaircase make_ascending_staircase(double start, double step, int confirm = 2) {
    if (!(start >= 0 && start <= 1)) throw InvalidArgument("staircase start out of [0,1]");
    if (!(step > 0)) throw InvalidArgument("staircase step must be positive");
    if (confirm < 1) throw InvalidArgument("confirm count must be >= 1");
    AscendingStaircase s;
    s.start = start;
    s.step = step;
    s.confirm_needed = confirm;
    return s;
}

/// NotDetected raises the level by one step; Detected holds the level and
/// waits for confirmation. `confirm_needed` consecutive detections end the
/// run with the current level as threshold.
inline AscendingStaircase staircase_step(AscendingStaircase s, Detection response) {
    if (s.done()) throw InvalidArgument("staircase_step on a finished staircase");
    if (!s.history.empty() && s.history.back().response != response) ++s.reversals;
    s.history.push_back({s.level(), response});

    if (response == Detection::Detected) {
        ++s.confirm_count;
        s.phase = s.confirm_count >= s.confirm_needed ? StaircasePhase::Done : StaircasePhase::AwaitConfirm;
        return s;
    }
    s.confirm_count = 0;
    s.phase = StaircasePhase::Running;
    if (s.level() >= 1.0) {
        s.hit_ceiling = true;
    } else {
        ++s.steps_taken;
    }
    if (static_cast<int>(s.history.size()) >= s.trial_limit()) {
        // The observer never confirmed: report the ceiling.
        s.steps_taken = static_cast<int>(std::ceil((1.0 - s.start) / s.step));
        s.hit_ceiling = true;
        s.phase = StaircasePhase::Done;
    }
    return s;
}

}  // namespace msi::estimation
