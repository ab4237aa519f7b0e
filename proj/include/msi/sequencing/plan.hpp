#pragma once

// Resolved session schedules: trials, blocks and phases with every stimulus
// envelope fixed. Plans serialize to a canonical JSON document.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "msi/core/model.hpp"

namespace msi::sequencing {

/// How a response to the trial is interpreted.
enum class ResponseMode {
    GoNoGo,             ///< press the go button on Go, withhold on NoGo
    Simultaneity,       ///< yes = simultaneous
    TemporalOrder,      ///< yes = visual first
    Congruency,         ///< yes = congruent
    Detection,          ///< any press = detected
    DirectionJudgment,  ///< yes = increase
};

struct GngTruth {
    GngCue cue;
    friend bool operator==(const GngTruth&, const GngTruth&) = default;
};
struct SoaTruth {
    SoaMs soa;
    friend bool operator==(const SoaTruth&, const SoaTruth&) = default;
};
struct CjTruth {
    Focus focus = Focus::AV;
    std::map<Modality, Direction> directions;
    friend bool operator==(const CjTruth&, const CjTruth&) = default;
};
/// Ground truth of a calibration trial: whether a stimulus (or change) was
/// presented, and its direction for change stimuli.
struct CalibrationTruth {
    bool present = true;
    std::optional<Direction> direction;
    friend bool operator==(const CalibrationTruth&, const CalibrationTruth&) = default;
};
using TrialTruth = std::variant<GngTruth, SoaTruth, CjTruth, CalibrationTruth>;

/// Offsets in ms relative to the trial origin (the first timeline event).
/// `lead_in_ms` is the wait between the command and the origin.
struct TrialTimeline {
    int lead_in_ms = 0;
    std::optional<int> warning_onset_ms;
    std::vector<int> onsets_ms;   ///< per stimulus, aligned with TrialSpec::stimuli
    std::vector<int> offsets_ms;  ///< per stimulus
    std::optional<int> change_start_ms;
    std::optional<int> change_end_ms;
    int response_open_ms = 0;
    int response_close_ms = 0;
    int iti_ms = 0;

    /// Origin of reaction times: the earliest stimulus onset (0 when the
    /// trial presents nothing, e.g. a tactile Go trial).
    int anchor_ms() const {
        if (onsets_ms.empty()) return 0;
        return *std::min_element(onsets_ms.begin(), onsets_ms.end());
    }
    int stimulation_end_ms() const {
        if (offsets_ms.empty()) return 0;
        return *std::max_element(offsets_ms.begin(), offsets_ms.end());
    }
    /// Time from the command to the end of the trial slot.
    int slot_ms() const { return lead_in_ms + std::max(response_close_ms, stimulation_end_ms()) + iti_ms; }

    friend bool operator==(const TrialTimeline&, const TrialTimeline&) = default;
};

struct TrialSpec {
    TrialTask task = TrialTask::GNG;
    ResponseMode mode = ResponseMode::GoNoGo;
    std::vector<StimulusSpec> stimuli;
    TrialTruth truth;
    TrialTimeline timeline;
    int block_index = 0;
    int trial_index = 0;
    friend bool operator==(const TrialSpec&, const TrialSpec&) = default;
};

enum class BlockKind { CueType, Mixed, SJ, TOJ, CjFocus, Practice, Calibration, Verification };

struct BlockPlan {
    BlockKind kind = BlockKind::Mixed;
    std::string name;  ///< cue type ("VA"), "mixed", "sj", "toj", focus ("AV"), ...
    std::vector<TrialSpec> trials;
    double difficulty = 100.0;  ///< percent of threshold, or the PJ n-factor
    std::optional<std::string> cue_prompt;
    int rest_after_ms = 0;
    friend bool operator==(const BlockPlan&, const BlockPlan&) = default;
};

enum class Phase { Practice, Thresholding, Verification, Experimental, Adaptive };

struct PhasePlan {
    Phase phase = Phase::Experimental;
    std::vector<BlockPlan> blocks;
    friend bool operator==(const PhasePlan&, const PhasePlan&) = default;
};

struct SessionPlan {
    Task task = Task::GNG;
    std::uint64_t seed = 0;
    std::vector<PhasePlan> phases;

    const PhasePlan* find(Phase p) const {
        for (const auto& ph : phases)
            if (ph.phase == p) return &ph;
        return nullptr;
    }
    std::size_t trial_count(Phase p) const {
        std::size_t n = 0;
        if (auto* ph = find(p))
            for (const auto& b : ph->blocks) n += b.trials.size();
        return n;
    }
    friend bool operator==(const SessionPlan&, const SessionPlan&) = default;
};

inline constexpr msi::detail::NameTable<Phase, 5> kPhaseNames{{{{Phase::Practice, "practice"},
                                                           {Phase::Thresholding, "thresholding"},
                                                           {Phase::Verification, "verification"},
                                                           {Phase::Experimental, "experimental"},
                                                           {Phase::Adaptive, "adaptive"}}}};
inline constexpr msi::detail::NameTable<BlockKind, 8> kBlockKindNames{{{{BlockKind::CueType, "cue-type"},
                                                                  {BlockKind::Mixed, "mixed"},
                                                                  {BlockKind::SJ, "sj"},
                                                                  {BlockKind::TOJ, "toj"},
                                                                  {BlockKind::CjFocus, "cj-focus"},
                                                                  {BlockKind::Practice, "practice"},
                                                                  {BlockKind::Calibration, "calibration"},
                                                                  {BlockKind::Verification, "verification"}}}};
inline constexpr msi::detail::NameTable<ResponseMode, 6> kResponseModeNames{
    {{{ResponseMode::GoNoGo, "go-nogo"},
      {ResponseMode::Simultaneity, "simultaneity"},
      {ResponseMode::TemporalOrder, "temporal-order"},
      {ResponseMode::Congruency, "congruency"},
      {ResponseMode::Detection, "detection"},
      {ResponseMode::DirectionJudgment, "direction"}}}};

inline std::string to_string(Phase p) { return std::string(kPhaseNames.name(p)); }

// ---------------------------------------------------------------------------
// Canonical JSON (keys sorted by nlohmann's default object map).

using nlohmann::json;

inline json stimulus_to_json(const StimulusSpec& s) {
    json j = {{"modality", to_string(s.modality)},
              {"param", std::string(kParamNames.name(s.param))},
              {"shape", std::string(kShapeNames.name(s.shape))},
              {"intensity", s.intensity.value()},
              {"duration_ms", s.duration_ms}};
    if (s.change)
        j["change"] = {{"direction", to_string(s.change->direction)},
                       {"magnitude", s.change->magnitude.value()},
                       {"ramp_ms", {s.change->ramp.up_ms, s.change->ramp.hold_ms, s.change->ramp.down_ms}}};
    return j;
}

inline StimulusSpec stimulus_from_json(const json& j) {
    StimulusSpec s;
    s.modality = kModalityNames.parse(j.at("modality").get<std::string>(), "modality");
    s.param = kParamNames.parse(j.at("param").get<std::string>(), "param");
    s.shape = kShapeNames.parse(j.at("shape").get<std::string>(), "shape");
    s.intensity = Intensity(j.at("intensity").get<double>());
    s.duration_ms = j.at("duration_ms").get<int>();
    if (j.contains("change")) {
        const auto& c = j.at("change");
        auto r = c.at("ramp_ms").get<std::vector<int>>();
        s.change = StimulusChange{kDirectionNames.parse(c.at("direction").get<std::string>(), "direction"),
                                  Intensity(c.at("magnitude").get<double>()), Ramp{r.at(0), r.at(1), r.at(2)}};
    }
    return s;
}

inline json cue_to_json(const GngCue& cue) {
    json j = json::object();
    for (auto& [m, r] : cue.roles) j[to_string(m)] = std::string(kRoleNames.name(r));
    return j;
}

inline GngCue cue_from_json(const json& j) {
    GngCue c;
    for (auto& [k, v] : j.items())
        c.roles[kModalityNames.parse(k, "modality")] = kRoleNames.parse(v.get<std::string>(), "role");
    return c;
}

inline json directions_to_json(const std::map<Modality, Direction>& d) {
    json j = json::object();
    for (auto& [m, dir] : d) j[to_string(m)] = to_string(dir);
    return j;
}

inline std::map<Modality, Direction> directions_from_json(const json& j) {
    std::map<Modality, Direction> d;
    for (auto& [k, v] : j.items())
        d[kModalityNames.parse(k, "modality")] = kDirectionNames.parse(v.get<std::string>(), "direction");
    return d;
}

inline json truth_to_json(const TrialTruth& t) {
    return std::visit(
        [](const auto& v) -> json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, GngTruth>) {
                return {{"type", "gng"}, {"cue", cue_to_json(v.cue)}};
            } else if constexpr (std::is_same_v<T, SoaTruth>) {
                return {{"type", "soa"}, {"soa_ms", v.soa.value}};
            } else if constexpr (std::is_same_v<T, CjTruth>) {
                return {{"type", "cj"}, {"focus", to_string(v.focus)}, {"directions", directions_to_json(v.directions)}};
            } else {
                json j = {{"type", "calibration"}, {"present", v.present}};
                if (v.direction) j["direction"] = to_string(*v.direction);
                return j;
            }
        },
        t);
}

inline TrialTruth truth_from_json(const json& j) {
    auto type = j.at("type").get<std::string>();
    if (type == "gng") return GngTruth{cue_from_json(j.at("cue"))};
    if (type == "soa") return SoaTruth{SoaMs{j.at("soa_ms").get<int>()}};
    if (type == "cj")
        return CjTruth{kFocusNames.parse(j.at("focus").get<std::string>(), "focus"), directions_from_json(j.at("directions"))};
    if (type == "calibration") {
        CalibrationTruth c{j.at("present").get<bool>(), std::nullopt};
        if (j.contains("direction")) c.direction = kDirectionNames.parse(j.at("direction").get<std::string>(), "direction");
        return c;
    }
    throw InvalidArgument("unknown truth type: " + type);
}

inline json timeline_to_json(const TrialTimeline& t) {
    json j = {{"lead_in_ms", t.lead_in_ms},         {"onsets_ms", t.onsets_ms},
              {"offsets_ms", t.offsets_ms},         {"response_open_ms", t.response_open_ms},
              {"response_close_ms", t.response_close_ms}, {"iti_ms", t.iti_ms}};
    if (t.warning_onset_ms) j["warning_onset_ms"] = *t.warning_onset_ms;
    if (t.change_start_ms) j["change_start_ms"] = *t.change_start_ms;
    if (t.change_end_ms) j["change_end_ms"] = *t.change_end_ms;
    return j;
}

inline TrialTimeline timeline_from_json(const json& j) {
    TrialTimeline t;
    t.lead_in_ms = j.at("lead_in_ms").get<int>();
    t.onsets_ms = j.at("onsets_ms").get<std::vector<int>>();
    t.offsets_ms = j.at("offsets_ms").get<std::vector<int>>();
    t.response_open_ms = j.at("response_open_ms").get<int>();
    t.response_close_ms = j.at("response_close_ms").get<int>();
    t.iti_ms = j.at("iti_ms").get<int>();
    if (j.contains("warning_onset_ms")) t.warning_onset_ms = j.at("warning_onset_ms").get<int>();
    if (j.contains("change_start_ms")) t.change_start_ms = j.at("change_start_ms").get<int>();
    if (j.contains("change_end_ms")) t.change_end_ms = j.at("change_end_ms").get<int>();
    return t;
}

inline json trial_to_json(const TrialSpec& t) {
    json stim = json::array();
    for (const auto& s : t.stimuli) stim.push_back(stimulus_to_json(s));
    return {{"task", to_string(t.task)},
            {"mode", std::string(kResponseModeNames.name(t.mode))},
            {"stimuli", stim},
            {"truth", truth_to_json(t.truth)},
            {"timeline", timeline_to_json(t.timeline)},
            {"block_index", t.block_index},
            {"trial_index", t.trial_index}};
}

inline TrialSpec trial_from_json(const json& j) {
    TrialSpec t;
    t.task = kTrialTaskNames.parse(j.at("task").get<std::string>(), "trial task");
    t.mode = kResponseModeNames.parse(j.at("mode").get<std::string>(), "response mode");
    for (const auto& s : j.at("stimuli")) t.stimuli.push_back(stimulus_from_json(s));
    t.truth = truth_from_json(j.at("truth"));
    t.timeline = timeline_from_json(j.at("timeline"));
    t.block_index = j.at("block_index").get<int>();
    t.trial_index = j.at("trial_index").get<int>();
    return t;
}

inline json block_to_json(const BlockPlan& b) {
    json trials = json::array();
    for (const auto& t : b.trials) trials.push_back(trial_to_json(t));
    json j = {{"kind", std::string(kBlockKindNames.name(b.kind))},
              {"name", b.name},
              {"trials", trials},
              {"difficulty", b.difficulty},
              {"rest_after_ms", b.rest_after_ms}};
    if (b.cue_prompt) j["cue_prompt"] = *b.cue_prompt;
    return j;
}

inline BlockPlan block_from_json(const json& j) {
    BlockPlan b;
    b.kind = kBlockKindNames.parse(j.at("kind").get<std::string>(), "block kind");
    b.name = j.at("name").get<std::string>();
    for (const auto& t : j.at("trials")) b.trials.push_back(trial_from_json(t));
    b.difficulty = j.at("difficulty").get<double>();
    b.rest_after_ms = j.at("rest_after_ms").get<int>();
    if (j.contains("cue_prompt")) b.cue_prompt = j.at("cue_prompt").get<std::string>();
    return b;
}

inline json plan_to_json(const SessionPlan& p) {
    json phases = json::array();
    for (const auto& ph : p.phases) {
        json blocks = json::array();
        for (const auto& b : ph.blocks) blocks.push_back(block_to_json(b));
        phases.push_back({{"phase", to_string(ph.phase)}, {"blocks", blocks}});
    }
    return {{"task", to_string(p.task)}, {"seed", p.seed}, {"phases", phases}};
}

inline SessionPlan plan_from_json(const json& j) {
    SessionPlan p;
    p.task = kTaskNames.parse(j.at("task").get<std::string>(), "task");
    p.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& ph : j.at("phases")) {
        PhasePlan pp;
        pp.phase = kPhaseNames.parse(ph.at("phase").get<std::string>(), "phase");
        for (const auto& b : ph.at("blocks")) pp.blocks.push_back(block_from_json(b));
        p.phases.push_back(std::move(pp));
    }
    return p;
}

}  // namespace msi::sequencing
