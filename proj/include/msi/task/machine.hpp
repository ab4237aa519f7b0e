#pragma once

// Event-sourced task machine. A TaskSession is a value; the only way to
// change it is task_submit_event. The pending action is a function of the
// state, so replaying a session's events reproduces it exactly.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "msi/core/config.hpp"
#include "msi/sequencing/builders.hpp"
#include "msi/task/calibration.hpp"
#include "msi/task/events.hpp"
#include "msi/task/scoring.hpp"

namespace msi::task {

/// Raised for an event the machine cannot accept in its current state. The
/// caller logs a protocol-violation event in its place.
class ProtocolViolation : public Error {
public:
    using Error::Error;
};

enum class Status { Idle, AwaitingPresentation, AwaitingResponse, Resting, Done };

inline constexpr msi::detail::NameTable<Status, 5> kStatusNames{{{{Status::Idle, "idle"},
                                                                 {Status::AwaitingPresentation, "awaiting-presentation"},
                                                                 {Status::AwaitingResponse, "awaiting-response"},
                                                                 {Status::Resting, "resting"},
                                                                 {Status::Done, "done"}}}};
inline std::string to_string(Status s) { return std::string(kStatusNames.name(s)); }

enum class ActionKind { PhaseEnter, Prompt, Present, Rest, QuestionnaireRequest, Done };

inline constexpr msi::detail::NameTable<ActionKind, 6> kActionNames{{{{ActionKind::PhaseEnter, "phase-enter"},
                                                                     {ActionKind::Prompt, "prompt"},
                                                                     {ActionKind::Present, "present"},
                                                                     {ActionKind::Rest, "rest"},
                                                                     {ActionKind::QuestionnaireRequest, "questionnaire"},
                                                                     {ActionKind::Done, "done"}}}};
inline std::string to_string(ActionKind k) { return std::string(kActionNames.name(k)); }

struct Action {
    ActionKind kind = ActionKind::Done;
    Phase phase = Phase::Practice;        ///< PhaseEnter, and the phase of Present
    std::string text;                     ///< Prompt text, questionnaire kind
    std::vector<ButtonId> buttons;        ///< Prompt: buttons in use for the block
    int duration_ms = 0;                  ///< Prompt display time, Rest length
    std::optional<TrialSpec> trial;       ///< Present
    friend bool operator==(const Action&, const Action&) = default;
};

struct TrialOutcome {
    Phase phase = Phase::Experimental;
    std::string block_name;
    double difficulty = 100.0;
    TrialSpec trial;
    std::optional<ButtonId> button;
    std::optional<std::int64_t> t_response_mono_ns;
    std::optional<double> rt_ms;
    std::int64_t onset_latency_ns = 0;
    Classification classification = Classification::NoResponse;
    friend bool operator==(const TrialOutcome&, const TrialOutcome&) = default;
};

struct QuestionnaireRecord {
    std::string kind;
    std::vector<double> items;
    friend bool operator==(const QuestionnaireRecord&, const QuestionnaireRecord&) = default;
};

inline const std::vector<std::string>& questionnaire_kinds() {
    static const std::vector<std::string> kinds{"nasa-tlx", "presence"};
    return kinds;
}

/// Cursor over the fixed part of a session (experimental and adaptive).
struct PlanCursor {
    std::size_t phase = 0;
    std::size_t block = 0;
    std::size_t trial = 0;
    friend bool operator==(const PlanCursor&, const PlanCursor&) = default;
};

enum class Stage { Calibration, Main, Questionnaires, Done };

/// What the pending action is waiting for.
enum class Step { PhaseEnter, PromptShow, PromptClear, Present, Rest, Questionnaire, Done };

struct InFlight {
    bool commanded = false;
    bool shown = false;
    std::int64_t onset_server_ns = 0;
    std::optional<std::int64_t> onset_client_ns;
    std::int64_t latency_ns = 0;
    friend bool operator==(const InFlight&, const InFlight&) = default;
};

struct TaskSession {
    SessionConfig config;
    Stage stage = Stage::Calibration;
    std::optional<Calibration> calibration;
    ThresholdProfile thresholds;
    sequencing::SessionPlan plan;
    PlanCursor cursor;

    std::optional<Phase> announced_phase;
    bool prompted = false;
    bool rested = false;
    int segment_serial = 0;
    std::size_t questionnaire_index = 0;

    Step step = Step::PhaseEnter;
    Action pending;
    InFlight inflight;

    std::vector<TrialOutcome> outcomes;
    std::vector<QuestionnaireRecord> questionnaires;
    /// Outcome that timed out and may still receive a late press.
    std::optional<std::size_t> late_candidate;

    std::int64_t last_seq = 0;
    int events_accepted = 0;
    int violations = 0;
    int ignored_responses = 0;
    int frame_batches = 0;
    int resumes = 0;

    friend bool operator==(const TaskSession&, const TaskSession&) = default;
};

namespace detail {

inline std::vector<ButtonId> block_buttons(const SessionConfig& cfg, Phase phase, const SegmentInfo& seg,
                                           Task task) {
    if (task == Task::GNG) return {cfg.buttons.go};
    (void)phase;
    (void)seg;
    return {cfg.buttons.yes, cfg.buttons.no};
}

inline std::optional<SegmentInfo> current_segment(const TaskSession& s) {
    if (s.stage == Stage::Calibration)
        return std::visit([&](const auto& c) { return cal_segment(c, s.config); }, *s.calibration);
    if (s.stage == Stage::Main) {
        if (s.cursor.phase >= s.plan.phases.size()) return std::nullopt;
        const auto& ph = s.plan.phases[s.cursor.phase];
        const auto& b = ph.blocks[s.cursor.block];
        return SegmentInfo{ph.phase, b.kind, b.name, b.cue_prompt, b.difficulty, b.rest_after_ms};
    }
    return std::nullopt;
}

inline std::optional<TrialSpec> current_trial(const TaskSession& s) {
    if (s.stage == Stage::Calibration)
        return std::visit([&](const auto& c) { return cal_next_trial(c, s.config, s.segment_serial); }, *s.calibration);
    const auto& b = s.plan.phases[s.cursor.phase].blocks[s.cursor.block];
    if (s.cursor.trial >= b.trials.size()) return std::nullopt;
    return b.trials[s.cursor.trial];
}

inline void advance_segment(TaskSession& s) {
    if (s.stage == Stage::Calibration) {
        s.calibration = std::visit([&](const auto& c) -> Calibration { return cal_advance(c, s.config); },
                                   *s.calibration);
    } else {
        s.cursor.trial = 0;
        if (++s.cursor.block >= s.plan.phases[s.cursor.phase].blocks.size()) {
            s.cursor.block = 0;
            ++s.cursor.phase;
        }
    }
    ++s.segment_serial;
    s.prompted = false;
    s.rested = false;
}

inline void enter_main(TaskSession& s, const ThresholdProfile& th) {
    s.thresholds = th;
    s.plan = sequencing::build_session(s.config, th);
    s.stage = Stage::Main;
    s.cursor = {};
    s.prompted = false;
    s.rested = false;
}

inline Action make_action(ActionKind k, Phase p = Phase::Practice) {
    Action a;
    a.kind = k;
    a.phase = p;
    return a;
}

/// Moves past finished segments and stages until an action is pending.
inline void settle(TaskSession& s) {
    for (;;) {
        if (s.stage == Stage::Done) {
            s.step = Step::Done;
            s.pending = make_action(ActionKind::Done);
            return;
        }
        if (s.stage == Stage::Questionnaires) {
            if (s.questionnaire_index < questionnaire_kinds().size()) {
                s.step = Step::Questionnaire;
                s.pending = make_action(ActionKind::QuestionnaireRequest);
                s.pending.text = questionnaire_kinds()[s.questionnaire_index];
                return;
            }
            s.stage = Stage::Done;
            continue;
        }
        auto seg = current_segment(s);
        if (!seg) {
            if (s.stage == Stage::Calibration) {
                auto th = std::visit([](const auto& c) { return cal_result(c); }, *s.calibration);
                enter_main(s, th);
            } else {
                s.stage = Stage::Questionnaires;
            }
            continue;
        }
        if (s.announced_phase != seg->phase) {
            s.step = Step::PhaseEnter;
            s.pending = make_action(ActionKind::PhaseEnter, seg->phase);
            return;
        }
        if (seg->prompt && !s.prompted) {
            s.step = Step::PromptShow;
            s.pending = make_action(ActionKind::Prompt, seg->phase);
            s.pending.text = *seg->prompt;
            s.pending.buttons = block_buttons(s.config, seg->phase, *seg, s.config.task);
            s.pending.duration_ms = s.config.blocks.cue_prompt_ms;
            return;
        }
        if (auto trial = current_trial(s)) {
            s.step = Step::Present;
            s.pending = make_action(ActionKind::Present, seg->phase);
            s.pending.trial = std::move(trial);
            return;
        }
        if (seg->rest_after_ms > 0 && !s.rested) {
            s.step = Step::Rest;
            s.pending = make_action(ActionKind::Rest, seg->phase);
            s.pending.duration_ms = seg->rest_after_ms;
            return;
        }
        advance_segment(s);
    }
}

inline std::int64_t response_clock(const TaskSession& s, const EventRecord& e) {
    if (s.inflight.onset_client_ns && e.t_client_mono_ns) return *e.t_client_mono_ns;
    return e.t_server_mono_ns;
}

inline std::int64_t onset_clock(const TaskSession& s, const EventRecord& e) {
    if (s.inflight.onset_client_ns && e.t_client_mono_ns) return *s.inflight.onset_client_ns;
    return s.inflight.onset_server_ns;
}

inline void resolve(TaskSession& s, std::optional<ButtonId> button, std::optional<std::int64_t> t_press,
                    std::optional<double> rt_ms) {
    const auto seg = current_segment(s);
    const TrialSpec& trial = *s.pending.trial;
    TrialOutcome o;
    o.phase = seg->phase;
    o.block_name = seg->name;
    o.difficulty = seg->difficulty;
    o.trial = trial;
    o.button = button;
    o.t_response_mono_ns = t_press;
    o.rt_ms = rt_ms;
    o.onset_latency_ns = s.inflight.latency_ns;
    o.classification = score_trial(trial, button, s.config.buttons);
    if (s.stage == Stage::Calibration)
        s.calibration = std::visit(
            [&](const auto& c) -> Calibration { return cal_record(c, s.config, trial, o.classification); },
            *s.calibration);
    else
        ++s.cursor.trial;
    s.outcomes.push_back(std::move(o));
    s.inflight = {};
    settle(s);
}

inline void check_range(const std::vector<double>& items, std::size_t n, double lo, double hi, const std::string& what) {
    if (items.size() != n) throw ProtocolViolation(what + ": expected " + std::to_string(n) + " items");
    for (double v : items)
        if (!(v >= lo && v <= hi)) throw ProtocolViolation(what + ": item out of range");
}

inline void apply(TaskSession& s, const EventRecord& e) {
    auto violation = [&](const std::string& why) {
        throw ProtocolViolation(to_string(e.kind) + " while " + to_string(s.pending.kind) + " pending: " + why);
    };
    switch (e.kind) {
    case EventKind::ProtocolViolation: ++s.violations; return;
    case EventKind::FrameInterval: ++s.frame_batches; return;
    case EventKind::Marker: {
        if (e.payload.value("label", "") == "resume") {
            ++s.resumes;
            if (s.step == Step::Present) s.inflight = {};
            if (s.step == Step::PromptClear) s.step = Step::PromptShow;
        }
        return;
    }
    case EventKind::PhaseTransition: {
        if (s.step != Step::PhaseEnter) violation("no phase change pending");
        const auto p = sequencing::kPhaseNames.parse(e.payload.value("phase", ""), "phase");
        if (p != s.pending.phase) violation("wrong phase");
        s.announced_phase = p;
        s.late_candidate.reset();
        settle(s);
        return;
    }
    case EventKind::PromptShown:
        if (s.step != Step::PromptShow) violation("no prompt pending");
        s.step = Step::PromptClear;
        s.late_candidate.reset();
        return;
    case EventKind::PromptCleared:
        if (s.step != Step::PromptClear) violation("prompt not shown");
        s.prompted = true;
        settle(s);
        return;
    case EventKind::PresentCommanded: {
        if (s.step != Step::Present || s.inflight.commanded) violation("no presentation pending");
        const auto& t = *s.pending.trial;
        if (e.payload.value("block", -1) != t.block_index || e.payload.value("trial", -1) != t.trial_index)
            violation("trial mismatch");
        s.inflight.commanded = true;
        s.late_candidate.reset();
        return;
    }
    case EventKind::StimulusShown:
        if (s.step != Step::Present || !s.inflight.commanded || s.inflight.shown) violation("no presentation commanded");
        s.inflight.shown = true;
        s.inflight.onset_server_ns = e.t_server_mono_ns;
        s.inflight.onset_client_ns = e.t_client_mono_ns;
        s.inflight.latency_ns = e.payload.value("latency_ns", std::int64_t{0});
        return;
    case EventKind::Response: {
        const ButtonId b = kButtonNames.parse(e.payload.value("button", ""), "button");
        if (s.step == Step::Present && s.inflight.shown) {
            const auto& t = *s.pending.trial;
            if (!button_counts(t.mode, b, s.config.buttons)) {
                ++s.ignored_responses;
                return;
            }
            const std::int64_t onset = onset_clock(s, e);
            const std::int64_t press = response_clock(s, e);
            // Window bounds are relative to the trial origin, which sits
            // anchor_ms before the actual onset.
            const double since_origin_ms = static_cast<double>(press - onset) / 1e6 + t.timeline.anchor_ms();
            if (since_origin_ms < t.timeline.response_open_ms) {
                ++s.ignored_responses;
                return;
            }
            if (since_origin_ms <= t.timeline.response_close_ms) {
                resolve(s, canonical_button(b), press, static_cast<double>(press - onset) / 1e6);
                return;
            }
            // Past the window without a timeout: close the trial, then treat
            // the press as late.
            resolve(s, std::nullopt, std::nullopt, std::nullopt);
            s.late_candidate = s.outcomes.size() - 1;
        }
        if (s.late_candidate) {
            auto& o = s.outcomes[*s.late_candidate];
            if (button_counts(o.trial.mode, b, s.config.buttons)) {
                o.classification = Classification::Late;
                o.button = canonical_button(b);
                o.t_response_mono_ns = e.t_client_mono_ns.value_or(e.t_server_mono_ns);
                s.late_candidate.reset();
                return;
            }
        }
        ++s.ignored_responses;
        return;
    }
    case EventKind::Timeout: {
        const std::string what = e.payload.value("what", "");
        if (what == "response") {
            if (s.step != Step::Present || !s.inflight.shown) violation("no response window open");
            resolve(s, std::nullopt, std::nullopt, std::nullopt);
            s.late_candidate = s.outcomes.size() - 1;
            return;
        }
        if (what == "rest") {
            if (s.step != Step::Rest) violation("not resting");
            s.rested = true;
            settle(s);
            return;
        }
        violation("unknown timeout '" + what + "'");
        return;
    }
    case EventKind::Questionnaire: {
        if (s.step != Step::Questionnaire) violation("no questionnaire requested");
        const std::string kind = e.payload.value("kind", "");
        if (kind != s.pending.text) violation("expected " + s.pending.text);
        std::vector<double> items = e.payload.value("items", std::vector<double>{});
        if (kind == "nasa-tlx") check_range(items, 6, 0, 100, kind);
        if (kind == "presence") check_range(items, 3, 1, 7, kind);
        s.questionnaires.push_back({kind, std::move(items)});
        ++s.questionnaire_index;
        settle(s);
        return;
    }
    }
}

}  // namespace detail

/// Fresh session. With fixed thresholds the calibration is skipped.
inline TaskSession make_task_session(const SessionConfig& cfg) {
    TaskSession s;
    s.config = cfg;
    if (!cfg.thresholding.run) {
        if (!cfg.thresholding.fixed) throw InvalidArgument("fixed thresholding without thresholds");
        detail::enter_main(s, *cfg.thresholding.fixed);
    } else {
        s.calibration = make_calibration(cfg);
    }
    detail::settle(s);
    return s;
}

inline Status task_status(const TaskSession& s) {
    switch (s.step) {
    case Step::Done: return Status::Done;
    case Step::Rest: return Status::Resting;
    case Step::Present: return s.inflight.shown ? Status::AwaitingResponse : Status::AwaitingPresentation;
    case Step::PromptShow:
    case Step::PromptClear: return Status::AwaitingPresentation;
    case Step::PhaseEnter:
    case Step::Questionnaire: return Status::Idle;
    }
    return Status::Idle;
}

inline Action task_next_action(const TaskSession& s) {
    if (s.step == Step::Done) throw InvalidArgument("session is done");
    return s.pending;
}

/// Applies one event in place. Throws ProtocolViolation, leaving the state
/// untouched, when the event does not fit the current state.
inline void task_apply_event(TaskSession& s, const EventRecord& e) {
    if (e.seq != 0 && e.seq <= s.last_seq)
        throw ProtocolViolation("event seq " + std::to_string(e.seq) + " not after " + std::to_string(s.last_seq));
    if (s.step == Step::Done && e.kind != EventKind::FrameInterval && e.kind != EventKind::Marker &&
        e.kind != EventKind::ProtocolViolation && e.kind != EventKind::Response)
        throw ProtocolViolation(to_string(e.kind) + " after the session is done");
    if (e.kind == EventKind::Response && !kButtonNames.contains(e.payload.value("button", "")))
        throw ProtocolViolation("response with unknown button");
    detail::apply(s, e);
    if (e.seq != 0) s.last_seq = e.seq;
    ++s.events_accepted;
}

inline TaskSession task_submit_event(TaskSession s, const EventRecord& e) {
    task_apply_event(s, e);
    return s;
}

/// Feeds a recorded event list through a fresh session. A recorded event
/// the machine rejects means the log does not belong to this config.
inline TaskSession replay_events(const SessionConfig& cfg, const std::vector<EventRecord>& events) {
    TaskSession s = make_task_session(cfg);
    for (const auto& e : events) {
        try {
            task_apply_event(s, e);
        } catch (const ProtocolViolation& v) {
            throw Error("replay diverged at seq " + std::to_string(e.seq) + ": " + v.what());
        }
    }
    return s;
}

/// Outcomes of one phase.
inline std::vector<const TrialOutcome*> outcomes_in(const TaskSession& s, Phase p) {
    std::vector<const TrialOutcome*> out;
    for (const auto& o : s.outcomes)
        if (o.phase == p) out.push_back(&o);
    return out;
}

}  // namespace msi::task
