#pragma once

// In-session threshold calibration. Each task's calibration is a sequence
// of segments (practice, staircases, verification, QUEST); trials are
// generated one at a time from the owned estimator state, so the next trial
// depends on every response so far.

#include <algorithm>
#include <array>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "msi/core/config.hpp"
#include "msi/core/random.hpp"
#include "msi/estimation/quest.hpp"
#include "msi/estimation/sj_staircase.hpp"
#include "msi/estimation/staircase.hpp"
#include "msi/sequencing/builders.hpp"
#include "msi/task/scoring.hpp"

namespace msi::task {

using sequencing::BlockKind;
using sequencing::Phase;
using sequencing::constrained_shuffle;

/// What the machine needs to know about the segment it is running.
struct SegmentInfo {
    Phase phase = Phase::Experimental;
    BlockKind kind = BlockKind::Mixed;
    std::string name;
    std::optional<std::string> prompt;
    double difficulty = 100.0;
    int rest_after_ms = 0;
};

namespace detail {

inline int cal_iti(const SessionConfig& cfg, std::string_view stream, int counter) {
    Rng rng(cfg.seed, stream, static_cast<std::uint64_t>(counter));
    return rng.uniform_int(cfg.timing.gng_iti_min_ms, cfg.timing.gng_iti_max_ms);
}

inline int cj_cal_pre_change(const SessionConfig& cfg, int counter) {
    Rng rng(cfg.seed, "cj-cal-pre-change", static_cast<std::uint64_t>(counter));
    return rng.uniform_int(cfg.timing.cj_pre_change_min_ms, cfg.timing.cj_pre_change_max_ms);
}

/// First trial of a segment waits the block onset delay after the prompt.
inline TrialSpec place(TrialSpec t, const SessionConfig& cfg, int serial, int index) {
    t.block_index = serial;
    t.trial_index = index;
    t.timeline.lead_in_ms = index == 0 ? cfg.timing.block_onset_delay_ms : 0;
    return t;
}

inline std::array<std::pair<Modality, Direction>, 6> cj_combos() {
    return {{{Modality::Visual, Direction::Increase},
             {Modality::Visual, Direction::Decrease},
             {Modality::Auditory, Direction::Increase},
             {Modality::Auditory, Direction::Decrease},
             {Modality::Tactile, Direction::Increase},
             {Modality::Tactile, Direction::Decrease}}};
}

inline std::string combo_name(Modality m, Direction d) { return to_string(m) + "_" + to_string(d); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Go/NoGo: practice, then per battery parameter an ascending staircase
// followed by a verification block with catch trials.

struct GngCalibration {
    enum class Stage { Practice, Staircase, Verify, Finished };
    Stage stage = Stage::Practice;
    std::vector<TrialSpec> fixed;  ///< practice or verification trials
    int pos = 0;                   ///< trials done in the current segment
    std::size_t param_index = 0;
    int round = 0;
    estimation::AscendingStaircase staircase;
    std::vector<Classification> verify_results;
    int trials_done = 0;  ///< across the whole calibration, for ITI streams
    ThresholdProfile thresholds;
    friend bool operator==(const GngCalibration&, const GngCalibration&) = default;
};

inline GngCalibration make_gng_calibration(const SessionConfig& cfg) {
    GngCalibration c;
    const Intensity salient(cfg.thresholding.practice_intensity);
    const auto& types = sequencing::gng_cue_types();
    Rng rng(cfg.seed, "gng-practice");
    for (int i = 0; i < cfg.blocks.practice_trials; ++i) {
        const auto role = i % 2 == 0 ? GngRole::Go : GngRole::NoGo;
        const auto cue = sequencing::with_role(types[rng.index(types.size())], role);
        std::map<Modality, Intensity> levels;
        for (Modality m : kModalities) levels[m] = m == Modality::Tactile && role == GngRole::Go ? Intensity(0.0) : salient;
        c.fixed.push_back(sequencing::make_gng_trial(cue, levels, cfg, detail::cal_iti(cfg, "gng-cal-iti", i), 0));
    }
    if (c.fixed.empty()) c.stage = GngCalibration::Stage::Staircase;
    const auto& a = cfg.thresholding.ascending;
    c.staircase = estimation::make_ascending_staircase(a.start, a.step, a.confirm);
    if (cfg.thresholding.gng_battery.empty() && c.stage == GngCalibration::Stage::Staircase)
        c.stage = GngCalibration::Stage::Finished;
    return c;
}

inline std::optional<SegmentInfo> cal_segment(const GngCalibration& c, const SessionConfig& cfg) {
    using S = GngCalibration::Stage;
    switch (c.stage) {
    case S::Practice:
        return SegmentInfo{Phase::Practice, BlockKind::Practice, "practice",
                           "Practice: press X for Go, withhold for NoGo", 100.0, 0};
    case S::Staircase: {
        const auto p = cfg.thresholding.gng_battery[c.param_index];
        return SegmentInfo{Phase::Thresholding, BlockKind::Calibration, "staircase:" + to_string(p),
                           "Calibration (" + to_string(p) + "): press X whenever you perceive the stimulus", 100.0, 0};
    }
    case S::Verify: {
        const auto p = cfg.thresholding.gng_battery[c.param_index];
        return SegmentInfo{Phase::Verification, BlockKind::Verification, "verify:" + to_string(p),
                           "Check (" + to_string(p) + "): press X whenever you perceive the stimulus",
                           cfg.thresholding.verification.percent, 0};
    }
    case S::Finished: return std::nullopt;
    }
    return std::nullopt;
}

inline std::optional<TrialSpec> cal_next_trial(const GngCalibration& c, const SessionConfig& cfg, int serial) {
    using S = GngCalibration::Stage;
    switch (c.stage) {
    case S::Practice:
    case S::Verify:
        if (c.pos >= static_cast<int>(c.fixed.size())) return std::nullopt;
        return detail::place(c.fixed[c.pos], cfg, serial, c.pos);
    case S::Staircase: {
        if (c.staircase.done()) return std::nullopt;
        const auto p = cfg.thresholding.gng_battery[c.param_index];
        auto t = sequencing::make_gng_detection_trial(p, Intensity::clamped(c.staircase.level()), true, cfg,
                                                      detail::cal_iti(cfg, "gng-cal-iti", c.trials_done));
        return detail::place(t, cfg, serial, c.pos);
    }
    case S::Finished: break;
    }
    return std::nullopt;
}

inline GngCalibration cal_record(GngCalibration c, const SessionConfig&, const TrialSpec&, Classification cls) {
    using S = GngCalibration::Stage;
    if (c.stage == S::Staircase)
        c.staircase = estimation::staircase_step(c.staircase, cls == Classification::Hit
                                                                  ? estimation::Detection::Detected
                                                                  : estimation::Detection::NotDetected);
    if (c.stage == S::Verify) c.verify_results.push_back(cls);
    ++c.pos;
    ++c.trials_done;
    return c;
}

namespace detail {
inline std::vector<TrialSpec> gng_verification_trials(const GngCalibration& c, const SessionConfig& cfg) {
    const auto& v = cfg.thresholding.verification;
    const auto p = cfg.thresholding.gng_battery[c.param_index];
    const Intensity level = scale_intensity(Intensity::clamped(c.staircase.threshold()), v.percent);
    std::vector<int> present(v.trials, 0);
    for (int i = 0; i < v.trials - v.trials / 2; ++i) present[i] = 1;
    present = constrained_shuffle(std::move(present),
                                  derive_seed(cfg.seed, "gng-verify", c.param_index * 1000 + c.round));
    std::vector<TrialSpec> out;
    for (int i = 0; i < v.trials; ++i)
        out.push_back(sequencing::make_gng_detection_trial(p, level, present[i] != 0, cfg,
                                                           cal_iti(cfg, "gng-cal-iti", c.trials_done + i)));
    return out;
}
}  // namespace detail

inline GngCalibration cal_advance(GngCalibration c, const SessionConfig& cfg) {
    using S = GngCalibration::Stage;
    const auto& a = cfg.thresholding.ascending;
    const auto& v = cfg.thresholding.verification;
    auto next_param = [&] {
        ++c.param_index;
        c.round = 0;
        if (c.param_index >= cfg.thresholding.gng_battery.size()) {
            c.stage = S::Finished;
        } else {
            c.stage = S::Staircase;
            c.staircase = estimation::make_ascending_staircase(a.start, a.step, a.confirm);
        }
    };
    c.pos = 0;
    switch (c.stage) {
    case S::Practice:
        c.fixed.clear();
        c.param_index = 0;
        c.stage = cfg.thresholding.gng_battery.empty() ? S::Finished : S::Staircase;
        c.staircase = estimation::make_ascending_staircase(a.start, a.step, a.confirm);
        break;
    case S::Staircase:
        c.fixed = detail::gng_verification_trials(c, cfg);
        c.verify_results.clear();
        c.stage = v.trials > 0 ? S::Verify : S::Staircase;
        if (v.trials == 0) {
            gng_threshold(c.thresholds.gng, cfg.thresholding.gng_battery[c.param_index]) =
                Intensity::clamped(c.staircase.threshold());
            next_param();
        }
        break;
    case S::Verify: {
        const auto gate = verification_gate(c.verify_results, v.pass_fraction);
        c.fixed.clear();
        if (gate == Gate::Pass || c.round + 1 >= v.max_rounds) {
            gng_threshold(c.thresholds.gng, cfg.thresholding.gng_battery[c.param_index]) =
                Intensity::clamped(c.staircase.threshold());
            next_param();
        } else {
            ++c.round;
            c.stage = S::Staircase;
            c.staircase = estimation::make_ascending_staircase(a.start, a.step, a.confirm);
        }
        break;
    }
    case S::Finished: break;
    }
    return c;
}

inline ThresholdProfile cal_result(const GngCalibration& c) { return c.thresholds; }

// ---------------------------------------------------------------------------
// Congruency: practice, six ascending change-detection staircases, a
// direction check per modality (raising thresholds on failure), then QUEST
// refinement on interleaved direction-judgment trials.

struct CjCalibration {
    enum class Stage { Practice, Staircase, Verify, Quest, Finished };
    Stage stage = Stage::Practice;
    std::vector<TrialSpec> fixed;
    int pos = 0;
    int combo = 0;     ///< staircase index into cj_combos()
    int modality = 0;  ///< verification index into kModalities
    int round = 0;
    estimation::AscendingStaircase staircase;
    std::vector<Classification> verify_results;
    std::vector<estimation::QuestState> quests;  ///< aligned with cj_combos()
    std::vector<int> quest_order;                ///< combo index per QUEST trial
    int trials_done = 0;
    ThresholdProfile thresholds;
    friend bool operator==(const CjCalibration&, const CjCalibration&) = default;
};

namespace detail {
inline estimation::AscendingStaircase fresh_staircase(const SessionConfig& cfg) {
    const auto& a = cfg.thresholding.ascending;
    return estimation::make_ascending_staircase(a.start, a.step, a.confirm);
}
}  // namespace detail

inline CjCalibration make_cj_calibration(const SessionConfig& cfg) {
    CjCalibration c;
    const Intensity salient(cfg.thresholding.practice_intensity);
    auto combos = detail::cj_combos();
    std::vector<int> order{0, 1, 2, 3, 4, 5};
    order = constrained_shuffle(std::move(order), derive_seed(cfg.seed, "cj-practice"));
    for (int i = 0; i < cfg.blocks.practice_trials; ++i) {
        auto [m, d] = combos[order[i % 6]];
        c.fixed.push_back(sequencing::make_cj_change_trial(m, d, salient, ResponseMode::DirectionJudgment, cfg,
                                                           detail::cj_cal_pre_change(cfg, i)));
    }
    c.staircase = detail::fresh_staircase(cfg);
    if (c.fixed.empty()) c.stage = CjCalibration::Stage::Staircase;
    return c;
}

inline std::optional<SegmentInfo> cal_segment(const CjCalibration& c, const SessionConfig& cfg) {
    using S = CjCalibration::Stage;
    switch (c.stage) {
    case S::Practice:
        return SegmentInfo{Phase::Practice, BlockKind::Practice, "practice",
                           "Practice: did the stimulus increase (R2) or decrease (L2)?", 100.0, 0};
    case S::Staircase: {
        auto [m, d] = detail::cj_combos()[c.combo];
        return SegmentInfo{Phase::Thresholding, BlockKind::Calibration, "staircase:" + detail::combo_name(m, d),
                           "Calibration (" + to_string(m) + "): press R2 as soon as you notice the change", 100.0, 0};
    }
    case S::Verify: {
        const Modality m = kModalities[c.modality];
        return SegmentInfo{Phase::Verification, BlockKind::Verification, "verify:" + to_string(m),
                           "Check (" + to_string(m) + "): did the stimulus increase (R2) or decrease (L2)?", 100.0, 0};
    }
    case S::Quest:
        return SegmentInfo{Phase::Thresholding, BlockKind::Calibration, "quest",
                           "Calibration: did the stimulus increase (R2) or decrease (L2)?", 100.0, 0};
    case S::Finished: return std::nullopt;
    }
    (void)cfg;
    return std::nullopt;
}

namespace detail {
inline double quest_level(const estimation::QuestState& q) {
    const double x = estimation::quest_query(q).next_level;
    return std::clamp(x, q.grid.front(), q.grid.back());
}
}  // namespace detail

inline std::optional<TrialSpec> cal_next_trial(const CjCalibration& c, const SessionConfig& cfg, int serial) {
    using S = CjCalibration::Stage;
    switch (c.stage) {
    case S::Practice:
    case S::Verify:
        if (c.pos >= static_cast<int>(c.fixed.size())) return std::nullopt;
        return detail::place(c.fixed[c.pos], cfg, serial, c.pos);
    case S::Staircase: {
        if (c.staircase.done()) return std::nullopt;
        auto [m, d] = detail::cj_combos()[c.combo];
        auto t = sequencing::make_cj_change_trial(m, d, Intensity::clamped(c.staircase.level()),
                                                  ResponseMode::Detection, cfg,
                                                  detail::cj_cal_pre_change(cfg, c.trials_done + 100000));
        return detail::place(t, cfg, serial, c.pos);
    }
    case S::Quest: {
        if (c.pos >= static_cast<int>(c.quest_order.size())) return std::nullopt;
        const int k = c.quest_order[c.pos];
        auto [m, d] = detail::cj_combos()[k];
        auto t = sequencing::make_cj_change_trial(m, d, Intensity::clamped(detail::quest_level(c.quests[k])),
                                                  ResponseMode::DirectionJudgment, cfg,
                                                  detail::cj_cal_pre_change(cfg, c.trials_done + 100000));
        return detail::place(t, cfg, serial, c.pos);
    }
    case S::Finished: break;
    }
    return std::nullopt;
}

inline CjCalibration cal_record(CjCalibration c, const SessionConfig&, const TrialSpec& trial, Classification cls) {
    using S = CjCalibration::Stage;
    using estimation::Detection;
    if (c.stage == S::Staircase)
        c.staircase = estimation::staircase_step(c.staircase,
                                                 cls == Classification::Hit ? Detection::Detected : Detection::NotDetected);
    if (c.stage == S::Verify) c.verify_results.push_back(cls);
    if (c.stage == S::Quest) {
        const int k = c.quest_order[c.pos];
        const double level = trial.stimuli.at(0).change->magnitude.value();
        c.quests[k] = estimation::quest_update(c.quests[k], level,
                                               cls == Classification::Correct ? Detection::Detected : Detection::NotDetected);
    }
    ++c.pos;
    ++c.trials_done;
    return c;
}

namespace detail {
inline std::vector<TrialSpec> cj_verification_trials(const CjCalibration& c, const SessionConfig& cfg) {
    const auto& v = cfg.thresholding.verification;
    const Modality m = kModalities[c.modality];
    std::vector<Direction> dirs(v.trials, Direction::Decrease);
    for (int i = 0; i < v.trials - v.trials / 2; ++i) dirs[i] = Direction::Increase;
    dirs = constrained_shuffle(std::move(dirs), derive_seed(cfg.seed, "cj-verify", c.modality * 1000 + c.round));
    std::vector<TrialSpec> out;
    for (int i = 0; i < v.trials; ++i)
        out.push_back(sequencing::make_cj_change_trial(m, dirs[i], c.thresholds.cj.at({m, dirs[i]}),
                                                       ResponseMode::DirectionJudgment, cfg,
                                                       cj_cal_pre_change(cfg, c.trials_done + i)));
    return out;
}

inline void start_quest(CjCalibration& c, const SessionConfig& cfg) {
    const auto& q = cfg.thresholding.quest;
    c.quests.clear();
    std::vector<int> order;
    const auto combos = cj_combos();
    for (int k = 0; k < 6; ++k) {
        auto [m, d] = combos[k];
        const double center = std::clamp(c.thresholds.cj.at({m, d}).value(), q.grid_min, q.grid_max);
        c.quests.push_back(estimation::make_quest(center, q.prior_sd_octaves, {q.beta, q.gamma, q.delta}, q.grid_min,
                                                  q.grid_max, q.grid_points, q.trials_per_direction));
        order.insert(order.end(), q.trials_per_direction, k);
    }
    c.quest_order = constrained_shuffle(std::move(order), derive_seed(cfg.seed, "cj-quest-order"));
    c.stage = c.quest_order.empty() ? CjCalibration::Stage::Finished : CjCalibration::Stage::Quest;
}
}  // namespace detail

inline CjCalibration cal_advance(CjCalibration c, const SessionConfig& cfg) {
    using S = CjCalibration::Stage;
    const auto& v = cfg.thresholding.verification;
    auto start_verify = [&] {
        c.fixed = detail::cj_verification_trials(c, cfg);
        c.verify_results.clear();
        c.stage = S::Verify;
    };
    c.pos = 0;
    switch (c.stage) {
    case S::Practice:
        c.fixed.clear();
        c.stage = S::Staircase;
        c.combo = 0;
        c.staircase = detail::fresh_staircase(cfg);
        break;
    case S::Staircase: {
        auto [m, d] = detail::cj_combos()[c.combo];
        c.thresholds.cj[{m, d}] = Intensity::clamped(c.staircase.threshold());
        if (++c.combo < 6) {
            c.staircase = detail::fresh_staircase(cfg);
        } else {
            c.modality = 0;
            c.round = 0;
            if (v.trials > 0)
                start_verify();
            else
                detail::start_quest(c, cfg);
        }
        break;
    }
    case S::Verify: {
        const auto gate = verification_gate(c.verify_results, v.pass_fraction);
        const Modality m = kModalities[c.modality];
        if (gate == Gate::Repeat && c.round + 1 < v.max_rounds) {
            for (Direction d : kDirections)
                c.thresholds.cj[{m, d}] = Intensity::clamped(c.thresholds.cj.at({m, d}).value() * v.raise_factor);
            ++c.round;
            start_verify();
        } else if (++c.modality < 3) {
            c.round = 0;
            start_verify();
        } else {
            c.fixed.clear();
            detail::start_quest(c, cfg);
        }
        break;
    }
    case S::Quest: {
        const auto combos = detail::cj_combos();
        for (int k = 0; k < 6; ++k)
            c.thresholds.cj[combos[k]] = Intensity::clamped(estimation::quest_query(c.quests[k]).estimate);
        c.stage = S::Finished;
        break;
    }
    case S::Finished: break;
    }
    return c;
}

inline ThresholdProfile cal_result(const CjCalibration& c) { return c.thresholds; }

// ---------------------------------------------------------------------------
// Perceptual judgment: SJ practice, then the four interleaved staircases.

struct PjCalibration {
    enum class Stage { Practice, Staircase, Finished };
    Stage stage = Stage::Practice;
    std::vector<TrialSpec> fixed;
    int pos = 0;
    estimation::SjStaircaseBank bank;
    int trials_done = 0;
    ThresholdProfile thresholds;
    friend bool operator==(const PjCalibration&, const PjCalibration&) = default;
};

namespace detail {
inline int pj_cal_warning(const SessionConfig& cfg, int counter) {
    Rng rng(cfg.seed, "pj-cal-warning-delay", static_cast<std::uint64_t>(counter));
    return rng.uniform_int(cfg.timing.pj_warning_delay_min_ms, cfg.timing.pj_warning_delay_max_ms);
}
}  // namespace detail

inline PjCalibration make_pj_calibration(const SessionConfig& cfg) {
    PjCalibration c;
    for (int i = 0; i < cfg.blocks.practice_trials; ++i)
        c.fixed.push_back(sequencing::make_pj_trial(TrialTask::SJ, SoaMs{sequencing::kPjPracticeSoas[i % 4]}, cfg,
                                                    detail::pj_cal_warning(cfg, i), 0));
    const auto& sj = cfg.thresholding.sj;
    estimation::SjRules rules{sj.initial_step_ms, sj.floor_step_ms, sj.max_reversals, sj.max_trials,
                              cfg.timing.max_abs_soa_ms};
    c.bank = estimation::make_sj_bank({sj.sound_first_starts.at(0), sj.sound_first_starts.at(1)},
                                      {sj.flash_first_starts.at(0), sj.flash_first_starts.at(1)}, rules,
                                      derive_seed(cfg.seed, "sj-bank"));
    if (c.fixed.empty()) c.stage = PjCalibration::Stage::Staircase;
    return c;
}

inline std::optional<SegmentInfo> cal_segment(const PjCalibration& c, const SessionConfig&) {
    using S = PjCalibration::Stage;
    switch (c.stage) {
    case S::Practice:
        return SegmentInfo{Phase::Practice, BlockKind::Practice, "practice",
                           "Practice: were the stimuli simultaneous? (R2 yes / L2 no)", 1.0, 0};
    case S::Staircase:
        return SegmentInfo{Phase::Thresholding, BlockKind::Calibration, "sj-staircases",
                           "Calibration: were the stimuli simultaneous? (R2 yes / L2 no)", 1.0, 0};
    case S::Finished: return std::nullopt;
    }
    return std::nullopt;
}

inline std::optional<TrialSpec> cal_next_trial(const PjCalibration& c, const SessionConfig& cfg, int serial) {
    using S = PjCalibration::Stage;
    switch (c.stage) {
    case S::Practice:
        if (c.pos >= static_cast<int>(c.fixed.size())) return std::nullopt;
        return detail::place(c.fixed[c.pos], cfg, serial, c.pos);
    case S::Staircase: {
        if (c.bank.done()) return std::nullopt;
        const int id = estimation::sj_next_staircase(c.bank);
        auto t = sequencing::make_pj_trial(TrialTask::SJ, SoaMs{c.bank.staircases[id].level_ms}, cfg,
                                           detail::pj_cal_warning(cfg, c.trials_done), 0);
        return detail::place(t, cfg, serial, c.pos);
    }
    case S::Finished: break;
    }
    return std::nullopt;
}

/// A trial without a simultaneity judgment leaves the staircases as they
/// were; the same staircase runs again.
inline PjCalibration cal_record(PjCalibration c, const SessionConfig&, const TrialSpec&, Classification cls) {
    if (c.stage == PjCalibration::Stage::Staircase &&
        (cls == Classification::Simultaneous || cls == Classification::NotSimultaneous)) {
        const int id = estimation::sj_next_staircase(c.bank);
        c.bank = estimation::sj_staircase_update(c.bank, id,
                                                 cls == Classification::Simultaneous
                                                     ? estimation::SjResponse::Simultaneous
                                                     : estimation::SjResponse::NotSimultaneous);
    }
    ++c.pos;
    ++c.trials_done;
    return c;
}

/// Thresholds keep at least the floor step away from zero and leave room for
/// the doubled SOA under the cap.
inline PjCalibration cal_advance(PjCalibration c, const SessionConfig& cfg) {
    using S = PjCalibration::Stage;
    c.pos = 0;
    if (c.stage == S::Practice) {
        c.fixed.clear();
        c.stage = S::Staircase;
    } else if (c.stage == S::Staircase) {
        auto t = estimation::sj_thresholds(c.bank);
        const int floor = cfg.thresholding.sj.floor_step_ms;
        const int cap = cfg.timing.max_abs_soa_ms / 2;
        c.thresholds.pj.te_sound_first = SoaMs{std::clamp(t.te_sound_first.value, -cap, -floor)};
        c.thresholds.pj.te_flash_first = SoaMs{std::clamp(t.te_flash_first.value, floor, cap)};
        c.stage = S::Finished;
    }
    return c;
}

inline ThresholdProfile cal_result(const PjCalibration& c) { return c.thresholds; }

using Calibration = std::variant<GngCalibration, PjCalibration, CjCalibration>;

inline Calibration make_calibration(const SessionConfig& cfg) {
    switch (cfg.task) {
    case Task::GNG: return make_gng_calibration(cfg);
    case Task::PJ: return make_pj_calibration(cfg);
    case Task::CJ: return make_cj_calibration(cfg);
    }
    throw InvalidArgument("bad task");
}

}  // namespace msi::task
