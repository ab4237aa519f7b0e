#pragma once

// Four interleaved simultaneity-judgment staircases. Two run on sound-first
// SOAs (<= 0) and two on flash-first SOAs (>= 0). A "simultaneous" answer
// pushes the SOA away from zero, "not simultaneous" pulls it back, so each
// staircase hovers around the 50% simultaneity crossing on its side.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "msi/core/model.hpp"
#include "msi/core/random.hpp"

namespace msi::estimation {

enum class SjResponse { Simultaneous, NotSimultaneous };
enum class SjSide { SoundFirst, FlashFirst };

struct SjRules {
    int initial_step_ms = 30;
    int floor_step_ms = 10;
    int max_reversals = 8;
    int max_trials = 40;
    int max_abs_soa_ms = kMaxAbsSoaMs;
    friend bool operator==(const SjRules&, const SjRules&) = default;
};

struct SjStaircase {
    SjSide side = SjSide::FlashFirst;
    int level_ms = 0;
    int step_ms = 30;
    /// +1 = last move away from zero, -1 = toward zero, 0 = no move yet.
    int last_move = 0;
    int reversals = 0;
    int trials = 0;
    std::optional<int> last_decision_ms;
    bool done = false;
    std::vector<std::pair<int, SjResponse>> history;
    friend bool operator==(const SjStaircase&, const SjStaircase&) = default;
};

struct SjStaircaseBank {
    std::array<SjStaircase, 4> staircases;  // [sound-first x2, flash-first x2]
    SjRules rules;
    std::uint64_t seed = 0;
    int selections = 0;

    bool done() const {
        for (const auto& s : staircases)
            if (!s.done) return false;
        return true;
    }
    friend bool operator==(const SjStaircaseBank&, const SjStaircaseBank&) = default;
};

inline SjStaircaseBank make_sj_bank(std::array<int, 2> sound_first_starts, std::array<int, 2> flash_first_starts,
                                    SjRules rules, std::uint64_t seed) {
    if (rules.floor_step_ms <= 0 || rules.initial_step_ms < rules.floor_step_ms)
        throw InvalidArgument("SJ staircase steps must satisfy initial >= floor > 0");
    SjStaircaseBank bank;
    bank.rules = rules;
    bank.seed = seed;
    for (int i = 0; i < 4; ++i) {
        auto& s = bank.staircases[i];
        s.side = i < 2 ? SjSide::SoundFirst : SjSide::FlashFirst;
        s.level_ms = i < 2 ? sound_first_starts[i] : flash_first_starts[i - 2];
        if ((s.side == SjSide::SoundFirst && s.level_ms > 0) || (s.side == SjSide::FlashFirst && s.level_ms < 0))
            throw InvalidArgument("SJ staircase start on the wrong side of zero");
        s.step_ms = rules.initial_step_ms;
    }
    return bank;
}

inline SjStaircaseBank make_sj_bank(SjRules rules, std::uint64_t seed) {
    return make_sj_bank({-250, 0}, {0, 250}, rules, seed);
}

/// Picks which unfinished staircase runs the next trial, uniformly at random.
inline int sj_next_staircase(const SjStaircaseBank& bank) {
    std::vector<int> open;
    for (int i = 0; i < 4; ++i)
        if (!bank.staircases[i].done) open.push_back(i);
    if (open.empty()) throw InvalidArgument("all SJ staircases are finished");
    Rng rng(bank.seed, "sj-select", static_cast<std::uint64_t>(bank.selections));
    return open[rng.index(open.size())];
}

inline SjStaircaseBank sj_staircase_update(SjStaircaseBank bank, int staircase_id, SjResponse response) {
    if (staircase_id < 0 || staircase_id >= 4) throw InvalidArgument("unknown SJ staircase id");
    auto& s = bank.staircases[staircase_id];
    if (s.done) throw InvalidArgument("SJ staircase already finished");
    const auto& r = bank.rules;

    s.history.emplace_back(s.level_ms, response);
    s.last_decision_ms = s.level_ms;
    ++s.trials;
    ++bank.selections;

    const int move = response == SjResponse::Simultaneous ? +1 : -1;
    if (s.last_move != 0 && move != s.last_move) {
        ++s.reversals;
        s.step_ms = std::max(r.floor_step_ms, s.step_ms / 2);
    }
    s.last_move = move;

    const int outward = s.side == SjSide::SoundFirst ? -1 : +1;
    int next = s.level_ms + outward * move * s.step_ms;
    if (s.side == SjSide::SoundFirst)
        next = std::clamp(next, -r.max_abs_soa_ms, 0);
    else
        next = std::clamp(next, 0, r.max_abs_soa_ms);
    s.level_ms = next;

    if (s.reversals >= r.max_reversals || s.trials >= r.max_trials) s.done = true;
    return bank;
}

struct SjThresholds {
    SoaMs te_sound_first;
    SoaMs te_flash_first;
};

/// Each side's threshold is the mean of the final tested SOA of its two
/// staircases (rounded to whole ms, halves away from zero).
inline SjThresholds sj_thresholds(const SjStaircaseBank& bank) {
    if (!bank.done()) throw InvalidArgument("SJ staircases unfinished");
    auto mean = [&](int a, int b) {
        double m = (*bank.staircases[a].last_decision_ms + *bank.staircases[b].last_decision_ms) / 2.0;
        return SoaMs{static_cast<int>(std::lround(m))};
    };
    return {mean(0, 1), mean(2, 3)};
}

inline int tbw_width(SoaMs te_sound_first, SoaMs te_flash_first) {
    if (te_sound_first.value > te_flash_first.value)
        throw InvalidArgument("inverted simultaneity thresholds");
    return te_flash_first.value - te_sound_first.value;
}

}  // namespace msi::estimation
