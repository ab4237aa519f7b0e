#pragma once

// Session plan construction for the three tasks. Every random choice comes
// from a named stream derived from the session seed, so a plan is a pure
// function of (config, thresholds, seed).

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "msi/core/config.hpp"
#include "msi/core/model.hpp"
#include "msi/core/random.hpp"
#include "msi/sequencing/plan.hpp"
#include "msi/sequencing/shuffle.hpp"

namespace msi::sequencing {

enum class ScheduleKind { GngAdaptive, CjAdaptive, PjN };

inline std::vector<double> percent_schedule(ScheduleKind kind) {
    switch (kind) {
    case ScheduleKind::GngAdaptive:
    case ScheduleKind::CjAdaptive: return {138, 126, 114, 102, 90};
    // 0.15 steps from 1.925 over six block pairs end at 1.175; a stated
    // endpoint of 1.1 is not reachable on that grid.
    case ScheduleKind::PjN: return {1.925, 1.775, 1.625, 1.475, 1.325, 1.175};
    }
    return {};
}

/// Baseline carrier level of the congruency-task stimuli; changes move the
/// level up or down from here.
inline constexpr double kCjBaseline = 0.5;

/// Salient SOAs used in simultaneity/order practice trials.
inline constexpr std::array<int, 4> kPjPracticeSoas{-300, 0, 0, 300};

inline const std::array<GngCue, 7>& gng_cue_types() {
    static const std::array<GngCue, 7> types = [] {
        using M = Modality;
        std::array<std::vector<M>, 7> sets{{{M::Visual},
                                            {M::Auditory},
                                            {M::Tactile},
                                            {M::Visual, M::Auditory},
                                            {M::Auditory, M::Tactile},
                                            {M::Visual, M::Tactile},
                                            {M::Visual, M::Auditory, M::Tactile}}};
        std::array<GngCue, 7> out;
        for (std::size_t i = 0; i < 7; ++i)
            for (M m : sets[i]) out[i].roles[m] = GngRole::Go;
        return out;
    }();
    return types;
}

inline GngCue with_role(GngCue cue, GngRole role) {
    for (auto& [m, r] : cue.roles) r = role;
    return cue;
}

// ---------------------------------------------------------------------------
// Trial factories

inline Intensity gng_level(const ThresholdProfile& th, Modality m, GngRole role, double percent) {
    switch (m) {
    case Modality::Visual:
        return scale_intensity(role == GngRole::Go ? th.gng.visual_go_opacity : th.gng.visual_nogo_opacity, percent);
    case Modality::Auditory:
        return scale_intensity(role == GngRole::Go ? th.gng.auditory_go_volume : th.gng.auditory_nogo_volume, percent);
    case Modality::Tactile:
        return role == GngRole::Go ? Intensity(0.0) : scale_intensity(th.gng.tactile_nogo_drive, percent);
    }
    throw InvalidArgument("bad modality");
}

/// One Go/NoGo trial. A cue's roles map to stimuli; the tactile Go role has
/// no stimulus, so a unimodal tactile Go trial presents nothing.
inline TrialSpec make_gng_trial(const GngCue& cue, const std::map<Modality, Intensity>& levels,
                                const SessionConfig& cfg, int iti_ms, int lead_in_ms) {
    TrialSpec t;
    t.task = TrialTask::GNG;
    t.mode = ResponseMode::GoNoGo;
    t.truth = GngTruth{cue};
    const int dur = cfg.timing.gng_stimulus_ms;
    for (auto& [m, role] : cue.roles) {
        if (auto s = gng_stimulus(m, role, levels.at(m), dur)) {
            t.stimuli.push_back(*s);
            t.timeline.onsets_ms.push_back(0);
            t.timeline.offsets_ms.push_back(dur);
        }
    }
    t.timeline.lead_in_ms = lead_in_ms;
    t.timeline.response_open_ms = 0;
    t.timeline.response_close_ms = cfg.timing.gng_response_window_ms;
    t.timeline.iti_ms = iti_ms;
    return t;
}

inline TrialSpec make_pj_trial(TrialTask task, SoaMs soa, const SessionConfig& cfg, int warning_delay_ms,
                               int lead_in_ms) {
    if (task != TrialTask::SJ && task != TrialTask::TOJ) throw InvalidArgument("PJ trial must be SJ or TOJ");
    if (std::abs(soa.value) > cfg.timing.max_abs_soa_ms) throw InvalidArgument("SOA exceeds the configured cap");
    TrialSpec t;
    t.task = task;
    t.mode = task == TrialTask::SJ ? ResponseMode::Simultaneity : ResponseMode::TemporalOrder;
    t.truth = SoaTruth{soa};
    const int trailing = cfg.timing.pj_trailing_ms;
    const int lag = std::abs(soa.value);
    // soa > 0: the flash leads and the tone starts `soa` ms later.
    const int flash_on = warning_delay_ms + (soa.value < 0 ? lag : 0);
    const int tone_on = warning_delay_ms + (soa.value > 0 ? lag : 0);
    const int offset = warning_delay_ms + lag + trailing;

    StimulusSpec flash{Modality::Visual, StimulusParam::Opacity, StimulusShape::FadedCircle, Intensity(1.0),
                       offset - flash_on, std::nullopt};
    StimulusSpec tone{Modality::Auditory, StimulusParam::Volume, StimulusShape::Tone500Hz, Intensity(1.0),
                      offset - tone_on, std::nullopt};
    t.stimuli = {flash, tone};
    t.timeline.lead_in_ms = lead_in_ms;
    t.timeline.warning_onset_ms = 0;
    t.timeline.onsets_ms = {flash_on, tone_on};
    t.timeline.offsets_ms = {offset, offset};
    t.timeline.response_open_ms = offset;
    t.timeline.response_close_ms = offset + cfg.timing.pj_response_window_ms;
    t.timeline.iti_ms = cfg.timing.pj_iti_ms;
    return t;
}

/// Trimodal congruency trial: all three carriers run for the full
/// stimulation period and change together after `pre_change_ms`.
inline TrialSpec make_cj_trial(Focus focus, const std::map<Modality, Direction>& dirs,
                               const std::map<Modality, Intensity>& magnitudes, const SessionConfig& cfg,
                               int pre_change_ms, int lead_in_ms) {
    const auto& tm = cfg.timing;
    TrialSpec t;
    t.task = TrialTask::CJ;
    t.mode = ResponseMode::Congruency;
    t.truth = CjTruth{focus, dirs};
    for (Modality m : kModalities) {
        StimulusSpec s = cj_carrier(m);
        s.intensity = Intensity(kCjBaseline);
        s.duration_ms = tm.cj_total_ms;
        s.change = StimulusChange{dirs.at(m), magnitudes.at(m), tm.cj_ramp};
        t.stimuli.push_back(s);
        t.timeline.onsets_ms.push_back(0);
        t.timeline.offsets_ms.push_back(tm.cj_total_ms);
    }
    t.timeline.lead_in_ms = lead_in_ms;
    t.timeline.change_start_ms = pre_change_ms;
    t.timeline.change_end_ms = pre_change_ms + tm.cj_ramp.total();
    t.timeline.response_open_ms = tm.cj_total_ms;
    t.timeline.response_close_ms = tm.cj_total_ms + tm.cj_response_window_ms;
    t.timeline.iti_ms = tm.cj_iti_ms;
    return t;
}

/// Unimodal change trial used by congruency-task calibration.
inline TrialSpec make_cj_change_trial(Modality m, Direction d, Intensity magnitude, ResponseMode mode,
                                      const SessionConfig& cfg, int pre_change_ms) {
    const auto& tm = cfg.timing;
    TrialSpec t;
    t.task = TrialTask::CJ;
    t.mode = mode;
    t.truth = CalibrationTruth{true, d};
    StimulusSpec s = cj_carrier(m);
    s.intensity = Intensity(kCjBaseline);
    s.duration_ms = tm.cj_total_ms;
    s.change = StimulusChange{d, magnitude, tm.cj_ramp};
    t.stimuli = {s};
    t.timeline.onsets_ms = {0};
    t.timeline.offsets_ms = {tm.cj_total_ms};
    t.timeline.change_start_ms = pre_change_ms;
    t.timeline.change_end_ms = pre_change_ms + tm.cj_ramp.total();
    t.timeline.response_open_ms = tm.cj_total_ms;
    t.timeline.response_close_ms = tm.cj_total_ms + tm.cj_response_window_ms;
    t.timeline.iti_ms = tm.cj_iti_ms;
    return t;
}

/// Single-stimulus detection trial for Go/NoGo calibration. `present` false
/// gives a catch trial with no stimulus.
inline TrialSpec make_gng_detection_trial(GngParam p, Intensity level, bool present, const SessionConfig& cfg,
                                          int iti_ms) {
    TrialSpec t;
    t.task = TrialTask::GNG;
    t.mode = ResponseMode::Detection;
    t.truth = CalibrationTruth{present, std::nullopt};
    const int dur = cfg.timing.gng_stimulus_ms;
    if (present) {
        if (auto s = gng_stimulus(gng_param_modality(p), gng_param_role(p), level, dur)) {
            t.stimuli.push_back(*s);
            t.timeline.onsets_ms.push_back(0);
            t.timeline.offsets_ms.push_back(dur);
        }
    }
    t.timeline.response_close_ms = cfg.timing.gng_response_window_ms;
    t.timeline.iti_ms = iti_ms;
    return t;
}

// ---------------------------------------------------------------------------
// Timeline checks

/// Empty string when the timeline satisfies its invariants, otherwise the
/// first violation.
inline std::string timeline_violation(const TrialSpec& t, const SessionConfig& cfg) {
    const auto& tl = t.timeline;
    if (tl.lead_in_ms < 0 || tl.iti_ms < 0) return "negative lead-in or ITI";
    if (tl.onsets_ms.size() != t.stimuli.size() || tl.offsets_ms.size() != t.stimuli.size())
        return "onsets/offsets not aligned with stimuli";
    for (std::size_t i = 0; i < t.stimuli.size(); ++i) {
        if (tl.onsets_ms[i] < 0 || tl.offsets_ms[i] < tl.onsets_ms[i]) return "stimulus onset/offset out of order";
        if (tl.offsets_ms[i] - tl.onsets_ms[i] != t.stimuli[i].duration_ms) return "stimulus duration mismatch";
    }
    if (tl.warning_onset_ms && (*tl.warning_onset_ms < 0 || *tl.warning_onset_ms > tl.anchor_ms()))
        return "warning after stimulus onset";
    if (tl.response_open_ms < 0 || tl.response_close_ms <= tl.response_open_ms) return "bad response window";
    if (t.task == TrialTask::GNG && tl.stimulation_end_ms() > 500) return "GNG stimulus longer than 500 ms";
    if (t.task == TrialTask::CJ) {
        if (tl.stimulation_end_ms() != cfg.timing.cj_total_ms) return "CJ stimulation not equal to the configured total";
        if (!tl.change_start_ms || !tl.change_end_ms) return "CJ trial without change window";
        if (*tl.change_start_ms < 0 || *tl.change_end_ms > tl.stimulation_end_ms() ||
            *tl.change_end_ms - *tl.change_start_ms != cfg.timing.cj_ramp.total())
            return "CJ change window out of range";
        if (tl.response_open_ms < tl.stimulation_end_ms()) return "CJ response opens before stimulation ends";
    }
    if (t.task == TrialTask::SJ || t.task == TrialTask::TOJ) {
        if (tl.offsets_ms.size() != 2 || tl.offsets_ms[0] != tl.offsets_ms[1]) return "PJ stimuli must end together";
        const int soa = std::get<SoaTruth>(t.truth).soa.value;
        if (tl.onsets_ms[1] - tl.onsets_ms[0] != soa) return "PJ onsets disagree with SOA";
    }
    return {};
}

// ---------------------------------------------------------------------------
// Go/NoGo

namespace detail {

inline int gng_iti(const SessionConfig& cfg, std::uint64_t seed, std::uint64_t index) {
    Rng rng(seed, "gng-iti", index);
    return rng.uniform_int(cfg.timing.gng_iti_min_ms, cfg.timing.gng_iti_max_ms);
}

inline std::map<Modality, Intensity> gng_levels(const ThresholdProfile& th, GngRole role, double percent) {
    std::map<Modality, Intensity> out;
    for (Modality m : kModalities) out[m] = gng_level(th, m, role, percent);
    return out;
}

inline void finish_block(BlockPlan& b, int block_index, int lead_in_ms) {
    for (std::size_t i = 0; i < b.trials.size(); ++i) {
        b.trials[i].block_index = block_index;
        b.trials[i].trial_index = static_cast<int>(i);
        b.trials[i].timeline.lead_in_ms = i == 0 ? lead_in_ms : 0;
    }
}

}  // namespace detail

inline void check_gng_composition(const SessionConfig& cfg) {
    if (cfg.blocks.gng_block_size <= 0 || cfg.blocks.gng_block_size % 5 != 0)
        throw InvalidArgument("GNG block size " + std::to_string(cfg.blocks.gng_block_size) +
                              ": composition not exact (20/80 needs a multiple of 5)");
    if (cfg.blocks.gng_mixed_block_size <= 0 || cfg.blocks.gng_mixed_block_size % 35 != 0)
        throw InvalidArgument("GNG mixed block size " + std::to_string(cfg.blocks.gng_mixed_block_size) +
                              ": composition not exact (7 cue types x 20/80 needs a multiple of 35)");
}

inline BlockPlan build_gng_mixed_block(const SessionConfig& cfg, const ThresholdProfile& th, double percent,
                                       std::uint64_t seed, int block_index, std::uint64_t& iti_counter) {
    const int n = cfg.blocks.gng_mixed_block_size;
    const int go_per_type = n / 35, nogo_per_type = 4 * n / 35;
    const auto go_levels = detail::gng_levels(th, GngRole::Go, percent);
    const auto nogo_levels = detail::gng_levels(th, GngRole::NoGo, percent);
    std::vector<GngCue> cues;
    for (const auto& type : gng_cue_types()) {
        for (int i = 0; i < go_per_type; ++i) cues.push_back(with_role(type, GngRole::Go));
        for (int i = 0; i < nogo_per_type; ++i) cues.push_back(with_role(type, GngRole::NoGo));
    }
    cues = constrained_shuffle(std::move(cues), derive_seed(seed, "gng-block", block_index));
    BlockPlan b;
    b.kind = BlockKind::Mixed;
    b.name = "mixed";
    b.difficulty = percent;
    b.cue_prompt = "Mixed block: press X for Go, withhold for NoGo";
    for (const auto& cue : cues) {
        const bool go = gng_trial_label(cue) == GngLabel::Go;
        b.trials.push_back(make_gng_trial(cue, go ? go_levels : nogo_levels, cfg,
                                          detail::gng_iti(cfg, seed, iti_counter++), 0));
    }
    b.rest_after_ms = cfg.blocks.gng_rest_ms;
    return b;
}

/// Experimental phase: the seven cue-type blocks in seeded order, then one
/// mixed block, all at the experimental percent. Adaptive phase: mixed
/// blocks following the declining percent schedule.
inline SessionPlan build_gng_session(const SessionConfig& cfg, const ThresholdProfile& th, std::uint64_t seed) {
    check_gng_composition(cfg);
    const double percent = cfg.thresholding.experimental_percent;
    const int n = cfg.blocks.gng_block_size;
    const int go = n / 5, nogo = n - go;
    const int lead = cfg.timing.block_onset_delay_ms;
    std::uint64_t iti_counter = 0;

    SessionPlan plan;
    plan.task = Task::GNG;
    plan.seed = seed;
    PhasePlan exp{Phase::Experimental, {}};

    std::vector<int> order{0, 1, 2, 3, 4, 5, 6};
    order = constrained_shuffle(std::move(order), derive_seed(seed, "gng-block-order"));
    const auto go_levels = detail::gng_levels(th, GngRole::Go, percent);
    const auto nogo_levels = detail::gng_levels(th, GngRole::NoGo, percent);
    int block_index = 0;
    for (int type_index : order) {
        const auto& type = gng_cue_types()[type_index];
        std::vector<GngCue> cues(go, with_role(type, GngRole::Go));
        cues.insert(cues.end(), nogo, with_role(type, GngRole::NoGo));
        cues = constrained_shuffle(std::move(cues), derive_seed(seed, "gng-block", block_index));
        BlockPlan b;
        b.kind = BlockKind::CueType;
        b.name = cue_type_name(type);
        b.difficulty = percent;
        b.cue_prompt = "Block " + b.name + ": press X for Go, withhold for NoGo";
        for (const auto& cue : cues) {
            const bool is_go = gng_trial_label(cue) == GngLabel::Go;
            b.trials.push_back(make_gng_trial(cue, is_go ? go_levels : nogo_levels, cfg,
                                              detail::gng_iti(cfg, seed, iti_counter++), 0));
        }
        b.rest_after_ms = cfg.blocks.gng_rest_ms;
        detail::finish_block(b, block_index, lead);
        exp.blocks.push_back(std::move(b));
        ++block_index;
    }
    {
        auto b = build_gng_mixed_block(cfg, th, percent, seed, block_index, iti_counter);
        detail::finish_block(b, block_index, lead);
        exp.blocks.push_back(std::move(b));
        ++block_index;
    }
    plan.phases.push_back(std::move(exp));

    PhasePlan adaptive{Phase::Adaptive, {}};
    const auto schedule = percent_schedule(ScheduleKind::GngAdaptive);
    for (int i = 0; i < cfg.blocks.gng_adaptive_blocks; ++i) {
        const double pct = schedule[std::min<std::size_t>(i, schedule.size() - 1)];
        auto b = build_gng_mixed_block(cfg, th, pct, seed, block_index, iti_counter);
        detail::finish_block(b, block_index, lead);
        adaptive.blocks.push_back(std::move(b));
        ++block_index;
    }
    adaptive.blocks.back().rest_after_ms = 0;
    plan.phases.push_back(std::move(adaptive));
    return plan;
}

// ---------------------------------------------------------------------------
// Perceptual judgment (SJ / TOJ)

inline int round_half_away(double x) { return static_cast<int>(std::lround(x)); }

/// The six S-T SOA values: half, equal and double each threshold.
inline std::array<SoaMs, 6> pj_soa_set(SoaMs te_sf, SoaMs te_ff) {
    return {SoaMs{round_half_away(te_sf.value / 2.0)}, te_sf, SoaMs{2 * te_sf.value},
            SoaMs{round_half_away(te_ff.value / 2.0)}, te_ff, SoaMs{2 * te_ff.value}};
}

/// The four adaptive SOA values for factor n: n*TE and TE/n on each side.
inline std::array<SoaMs, 4> pj_adaptive_soas(SoaMs te_sf, SoaMs te_ff, double n) {
    return {SoaMs{round_half_away(n * te_sf.value)}, SoaMs{round_half_away(te_sf.value / n)},
            SoaMs{round_half_away(n * te_ff.value)}, SoaMs{round_half_away(te_ff.value / n)}};
}

inline std::string pj_cue_text(TrialTask task) {
    return task == TrialTask::SJ ? "Next block: were the stimuli simultaneous? (R2 yes / L2 no)"
                                 : "Next block: which came first? (R2 visual / L2 auditory)";
}

namespace detail {
inline int pj_warning_delay(const SessionConfig& cfg, std::uint64_t seed, std::uint64_t index) {
    Rng rng(seed, "pj-warning-delay", index);
    return rng.uniform_int(cfg.timing.pj_warning_delay_min_ms, cfg.timing.pj_warning_delay_max_ms);
}

inline BlockPlan pj_block(TrialTask task, const std::vector<SoaMs>& soas, double difficulty, const SessionConfig& cfg,
                          std::uint64_t seed, int block_index, std::uint64_t& delay_counter) {
    BlockPlan b;
    b.kind = task == TrialTask::SJ ? BlockKind::SJ : BlockKind::TOJ;
    b.name = to_string(task);
    b.difficulty = difficulty;
    b.cue_prompt = pj_cue_text(task);
    for (SoaMs s : soas)
        b.trials.push_back(make_pj_trial(task, s, cfg, pj_warning_delay(cfg, seed, delay_counter++), 0));
    b.rest_after_ms = cfg.blocks.pj_rest_ms;
    finish_block(b, block_index, cfg.timing.block_onset_delay_ms);
    return b;
}
}  // namespace detail

/// S-T phase: SJ and TOJ blocks in seeded order; each task's trials use the
/// six SOA values equally often. Adaptive phase: pairs of SJ/TOJ blocks
/// whose SOAs approach the thresholds following the n schedule.
inline SessionPlan build_pj_session(const SessionConfig& cfg, SoaMs te_sf, SoaMs te_ff, std::uint64_t seed) {
    if (te_sf.value > 0 || te_ff.value < 0) throw InvalidArgument("PJ thresholds must satisfy te_sf <= 0 <= te_ff");
    if (te_sf.value == 0 && te_ff.value == 0) throw InvalidArgument("degenerate PJ thresholds (both zero)");
    if (2 * std::max(-te_sf.value, te_ff.value) > cfg.timing.max_abs_soa_ms)
        throw InvalidArgument("doubled PJ threshold exceeds the SOA cap");
    const int per_block = cfg.blocks.pj_block_size;
    const int blocks_per_task = cfg.blocks.pj_blocks_per_task;
    const int per_task = per_block * blocks_per_task;
    if (per_task % 6 != 0) throw InvalidArgument("PJ trials per task must be a multiple of 6");

    SessionPlan plan;
    plan.task = Task::PJ;
    plan.seed = seed;
    std::uint64_t delay_counter = 0;

    const auto soa_set = pj_soa_set(te_sf, te_ff);
    std::map<TrialTask, std::vector<SoaMs>> pool;
    for (TrialTask task : {TrialTask::SJ, TrialTask::TOJ}) {
        std::vector<SoaMs> soas;
        for (SoaMs s : soa_set) soas.insert(soas.end(), per_task / 6, s);
        pool[task] = constrained_shuffle(std::move(soas), derive_seed(seed, "pj-soas", static_cast<int>(task)));
    }
    std::vector<TrialTask> order(blocks_per_task, TrialTask::SJ);
    order.insert(order.end(), blocks_per_task, TrialTask::TOJ);
    order = constrained_shuffle(std::move(order), derive_seed(seed, "pj-block-order"));

    PhasePlan st{Phase::Experimental, {}};
    std::map<TrialTask, int> used;
    int block_index = 0;
    for (TrialTask task : order) {
        const auto& p = pool[task];
        std::vector<SoaMs> soas(p.begin() + used[task], p.begin() + used[task] + per_block);
        used[task] += per_block;
        st.blocks.push_back(detail::pj_block(task, soas, 1.0, cfg, seed, block_index++, delay_counter));
    }
    plan.phases.push_back(std::move(st));

    PhasePlan adaptive{Phase::Adaptive, {}};
    const auto ns = percent_schedule(ScheduleKind::PjN);
    for (std::size_t k = 0; k < ns.size(); ++k) {
        std::vector<TrialTask> pair{TrialTask::SJ, TrialTask::TOJ};
        pair = constrained_shuffle(std::move(pair), derive_seed(seed, "pj-adaptive-pair", k));
        const auto four = pj_adaptive_soas(te_sf, te_ff, ns[k]);
        for (TrialTask task : pair) {
            const auto idx = static_cast<std::uint64_t>(block_index);
            std::vector<SoaMs> soas(four.begin(), four.end());
            std::vector<SoaMs> extra = constrained_shuffle(std::vector<SoaMs>(four.begin(), four.end()),
                                                           derive_seed(seed, "pj-adaptive-extra", idx));
            for (int i = 0; i < per_block - 4; ++i) soas.push_back(extra[static_cast<std::size_t>(i) % 4]);
            soas = constrained_shuffle(std::move(soas), derive_seed(seed, "pj-adaptive-order", idx));
            adaptive.blocks.push_back(detail::pj_block(task, soas, ns[k], cfg, seed, block_index++, delay_counter));
        }
    }
    adaptive.blocks.back().rest_after_ms = 0;
    plan.phases.push_back(std::move(adaptive));
    return plan;
}

// ---------------------------------------------------------------------------
// Congruency judgment

/// The eight direction triples, ordered V, A, T with Increase first.
inline const std::array<std::map<Modality, Direction>, 8>& cj_direction_triples() {
    static const std::array<std::map<Modality, Direction>, 8> triples = [] {
        std::array<std::map<Modality, Direction>, 8> out;
        for (int i = 0; i < 8; ++i) {
            out[i][Modality::Visual] = (i & 4) ? Direction::Decrease : Direction::Increase;
            out[i][Modality::Auditory] = (i & 2) ? Direction::Decrease : Direction::Increase;
            out[i][Modality::Tactile] = (i & 1) ? Direction::Decrease : Direction::Increase;
        }
        return out;
    }();
    return triples;
}

/// Congruence pattern of a triple: "congruent" when all three agree,
/// otherwise "deviant-<modality>" naming the odd one out.
inline std::string cj_pattern(const std::map<Modality, Direction>& dirs) {
    const auto v = dirs.at(Modality::Visual), a = dirs.at(Modality::Auditory), t = dirs.at(Modality::Tactile);
    if (v == a && a == t) return "congruent";
    if (a == t) return "deviant-V";
    if (v == t) return "deviant-A";
    return "deviant-T";
}

inline std::string cj_cue_text(Focus f) {
    return "Attend " + to_string(f) + ": same direction? (R2 congruent / L2 incongruent)";
}

namespace detail {
inline int cj_pre_change(const SessionConfig& cfg, std::uint64_t seed, std::uint64_t index) {
    Rng rng(seed, "cj-pre-change", index);
    return rng.uniform_int(cfg.timing.cj_pre_change_min_ms, cfg.timing.cj_pre_change_max_ms);
}

inline BlockPlan cj_block(Focus focus, const ThresholdProfile& th, double percent, const SessionConfig& cfg,
                          std::uint64_t seed, int block_index, std::uint64_t& counter) {
    const int reps = cfg.blocks.cj_block_size / 8;
    std::vector<int> configs;
    for (int c = 0; c < 8; ++c) configs.insert(configs.end(), reps, c);
    configs = constrained_shuffle(std::move(configs), derive_seed(seed, "cj-block", block_index));
    BlockPlan b;
    b.kind = BlockKind::CjFocus;
    b.name = to_string(focus);
    b.difficulty = percent;
    b.cue_prompt = cj_cue_text(focus);
    for (int c : configs) {
        const auto& dirs = cj_direction_triples()[c];
        std::map<Modality, Intensity> mags;
        for (Modality m : kModalities) mags[m] = scale_intensity(th.cj.at({m, dirs.at(m)}), percent);
        b.trials.push_back(make_cj_trial(focus, dirs, mags, cfg, cj_pre_change(cfg, seed, counter++), 0));
    }
    b.rest_after_ms = cfg.blocks.cj_rest_ms;
    finish_block(b, block_index, cfg.timing.block_onset_delay_ms);
    return b;
}
}  // namespace detail

/// Experimental phase: a seeded order of the three foci, repeated; each
/// block holds every direction triple equally often. Adaptive phase: groups
/// of three blocks (one per focus, seeded order) stepping down the percent
/// schedule.
inline SessionPlan build_cj_session(const SessionConfig& cfg, const ThresholdProfile& th, std::uint64_t seed) {
    for (Modality m : kModalities)
        for (Direction d : kDirections)
            if (!th.cj.contains({m, d}))
                throw InvalidArgument("missing CJ threshold for " + to_string(m) + "_" + to_string(d));
    if (cfg.blocks.cj_block_size <= 0 || cfg.blocks.cj_block_size % 8 != 0)
        throw InvalidArgument("CJ block size " + std::to_string(cfg.blocks.cj_block_size) +
                              ": composition impossible (8 direction configurations)");

    SessionPlan plan;
    plan.task = Task::CJ;
    plan.seed = seed;
    std::uint64_t counter = 0;
    int block_index = 0;

    std::vector<Focus> foci(kFoci.begin(), kFoci.end());
    foci = constrained_shuffle(std::move(foci), derive_seed(seed, "cj-focus-order"));
    PhasePlan exp{Phase::Experimental, {}};
    for (int r = 0; r < cfg.blocks.cj_repeats_per_focus; ++r)
        for (Focus f : foci)
            exp.blocks.push_back(detail::cj_block(f, th, cfg.thresholding.experimental_percent, cfg, seed,
                                                  block_index++, counter));
    plan.phases.push_back(std::move(exp));

    PhasePlan adaptive{Phase::Adaptive, {}};
    const auto schedule = percent_schedule(ScheduleKind::CjAdaptive);
    for (int g = 0; g < cfg.blocks.cj_adaptive_blocks_per_focus; ++g) {
        const double pct = schedule[std::min<std::size_t>(g, schedule.size() - 1)];
        std::vector<Focus> group(kFoci.begin(), kFoci.end());
        group = constrained_shuffle(std::move(group), derive_seed(seed, "cj-adaptive-group", g));
        for (Focus f : group)
            adaptive.blocks.push_back(detail::cj_block(f, th, pct, cfg, seed, block_index++, counter));
    }
    adaptive.blocks.back().rest_after_ms = 0;
    plan.phases.push_back(std::move(adaptive));
    return plan;
}

inline SessionPlan build_session(const SessionConfig& cfg, const ThresholdProfile& th) {
    switch (cfg.task) {
    case Task::GNG: return build_gng_session(cfg, th, cfg.seed);
    case Task::PJ: return build_pj_session(cfg, th.pj.te_sound_first, th.pj.te_flash_first, cfg.seed);
    case Task::CJ: return build_cj_session(cfg, th, cfg.seed);
    }
    throw InvalidArgument("bad task");
}

/// Summed durations of every block in a phase: cue prompt, trial slots and
/// rests.
inline long long phase_duration_ms(const PhasePlan& phase, const SessionConfig& cfg) {
    long long total = 0;
    for (const auto& b : phase.blocks) {
        if (b.cue_prompt) total += cfg.blocks.cue_prompt_ms;
        for (const auto& t : b.trials) total += t.timeline.slot_ms();
        total += b.rest_after_ms;
    }
    return total;
}

}  // namespace msi::sequencing
