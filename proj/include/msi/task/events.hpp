#pragma once

// Timestamped session events. A session's log is the ordered list of these;
// feeding them through the task machine reproduces its state.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "msi/core/model.hpp"
#include "msi/sequencing/plan.hpp"

namespace msi::task {

using nlohmann::json;

enum class EventKind {
    PresentCommanded,
    StimulusShown,
    Response,
    FrameInterval,
    PromptShown,
    PromptCleared,
    PhaseTransition,
    Questionnaire,
    ProtocolViolation,
    Marker,
    Timeout,
};

inline constexpr msi::detail::NameTable<EventKind, 11> kEventKindNames{{{
    {EventKind::PresentCommanded, "present-commanded"},
    {EventKind::StimulusShown, "stimulus-shown"},
    {EventKind::Response, "response"},
    {EventKind::FrameInterval, "frame-interval"},
    {EventKind::PromptShown, "prompt-shown"},
    {EventKind::PromptCleared, "prompt-cleared"},
    {EventKind::PhaseTransition, "phase-transition"},
    {EventKind::Questionnaire, "questionnaire"},
    {EventKind::ProtocolViolation, "protocol-violation"},
    {EventKind::Marker, "marker"},
    {EventKind::Timeout, "timeout"},
}}};

inline std::string to_string(EventKind k) { return std::string(kEventKindNames.name(k)); }

/// Payload fields by kind:
///   stimulus-shown      latency_ns (actual minus commanded onset)
///   response            button
///   frame-interval      intervals_ms (array, one batch per trial)
///   phase-transition    phase
///   questionnaire       kind, items (array)
///   protocol-violation  reason
///   marker              label ("resume", "trial-window", ...)
///   timeout             what ("response" or "rest")
/// t_client_mono_ns is the client's own clock; for stimulus-shown it is the
/// actual onset, for response the press time.
struct EventRecord {
    std::int64_t seq = 0;
    std::int64_t t_server_mono_ns = 0;
    std::optional<std::int64_t> t_client_mono_ns;
    EventKind kind = EventKind::Marker;
    json payload = json::object();
    friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

inline json event_to_json(const EventRecord& e) {
    json j{{"seq", e.seq}, {"t_server_mono_ns", e.t_server_mono_ns}, {"kind", to_string(e.kind)}, {"payload", e.payload}};
    if (e.t_client_mono_ns) j["t_client_mono_ns"] = *e.t_client_mono_ns;
    return j;
}

inline EventRecord event_from_json(const json& j) {
    EventRecord e;
    e.seq = j.at("seq").get<std::int64_t>();
    e.t_server_mono_ns = j.at("t_server_mono_ns").get<std::int64_t>();
    if (j.contains("t_client_mono_ns")) e.t_client_mono_ns = j.at("t_client_mono_ns").get<std::int64_t>();
    e.kind = kEventKindNames.parse(j.at("kind").get<std::string>(), "event kind");
    e.payload = j.value("payload", json::object());
    return e;
}

// Constructors for the common events. seq and server time are filled by
// whoever appends the event to the log.

inline EventRecord make_event(EventKind kind, json payload = json::object(),
                              std::optional<std::int64_t> t_client = std::nullopt) {
    EventRecord e;
    e.kind = kind;
    e.payload = std::move(payload);
    e.t_client_mono_ns = t_client;
    return e;
}

inline EventRecord ev_present_commanded(int block_index, int trial_index) {
    return make_event(EventKind::PresentCommanded, {{"block", block_index}, {"trial", trial_index}});
}
inline EventRecord ev_stimulus_shown(std::int64_t onset_client_ns, std::int64_t latency_ns) {
    return make_event(EventKind::StimulusShown, {{"latency_ns", latency_ns}}, onset_client_ns);
}
inline EventRecord ev_response(ButtonId b, std::int64_t press_client_ns) {
    return make_event(EventKind::Response, {{"button", to_string(b)}}, press_client_ns);
}
inline EventRecord ev_frame_intervals(const std::vector<double>& intervals_ms) {
    return make_event(EventKind::FrameInterval, {{"intervals_ms", intervals_ms}});
}
inline EventRecord ev_prompt_shown() { return make_event(EventKind::PromptShown); }
inline EventRecord ev_prompt_cleared() { return make_event(EventKind::PromptCleared); }
inline EventRecord ev_phase_transition(sequencing::Phase p) {
    return make_event(EventKind::PhaseTransition, {{"phase", sequencing::to_string(p)}});
}
inline EventRecord ev_questionnaire(const std::string& kind, const std::vector<double>& items) {
    return make_event(EventKind::Questionnaire, {{"kind", kind}, {"items", items}});
}
inline EventRecord ev_violation(const std::string& reason) {
    return make_event(EventKind::ProtocolViolation, {{"reason", reason}});
}
inline EventRecord ev_marker(const std::string& label) { return make_event(EventKind::Marker, {{"label", label}}); }
inline EventRecord ev_timeout(const std::string& what) { return make_event(EventKind::Timeout, {{"what", what}}); }

}  // namespace msi::task
