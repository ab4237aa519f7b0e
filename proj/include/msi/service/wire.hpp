#pragma once

// Wire protocol between the session server and a runner client. Every
// WebSocket text frame holds one JSON object: {"type", "seq", "payload"}.
// Compact JSON escapes control characters, so frames never contain a
// newline and a transcript is simply one frame per line.

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "msi/core/model.hpp"
#include "msi/task/events.hpp"
#include "msi/task/machine.hpp"

namespace msi::service {

using nlohmann::json;

/// Bumped whenever a message schema changes incompatibly. Carried in
/// HELLO and CONFIG.
inline constexpr int kWireVersion = 1;

class WireError : public Error {
public:
    using Error::Error;
};

enum class MessageType {
    Hello,   ///< client → server: protocol_version, client name, resume flag
    Config,  ///< server → client: accepted; config, seed, resumed
    Refuse,  ///< server → client: reason; connection then closes
    Ping,    ///< server → client: t0
    Pong,    ///< client → server: t0, t1 (receipt), t2 (reply)
    Action,  ///< server → client: the next thing to present or request
    Event,   ///< client → server: one runner event
    Done,    ///< server → client: session finished
    Error,   ///< either way: fatal protocol error, then close
};

inline constexpr msi::detail::NameTable<MessageType, 9> kMessageTypeNames{{{
    {MessageType::Hello, "hello"},
    {MessageType::Config, "config"},
    {MessageType::Refuse, "refuse"},
    {MessageType::Ping, "ping"},
    {MessageType::Pong, "pong"},
    {MessageType::Action, "action"},
    {MessageType::Event, "event"},
    {MessageType::Done, "done"},
    {MessageType::Error, "error"},
}}};

inline std::string to_string(MessageType t) { return std::string(kMessageTypeNames.name(t)); }

struct WireMessage {
    MessageType type = MessageType::Hello;
    std::int64_t seq = 0;  ///< per-sender counter, starting at 1
    json payload = json::object();
    friend bool operator==(const WireMessage&, const WireMessage&) = default;
};

/// Canonical text: keys in a fixed order, compact separators.
inline std::string encode_message(const WireMessage& m) {
    return json{{"type", to_string(m.type)}, {"seq", m.seq}, {"payload", m.payload}}.dump();
}

inline WireMessage decode_message(const std::string& frame) {
    json j;
    try {
        j = json::parse(frame);
    } catch (const json::parse_error& e) {
        throw WireError("malformed frame at byte " + std::to_string(e.byte) + ": " + e.what());
    }
    if (!j.is_object()) throw WireError("malformed frame at byte 1: not an object");
    for (const auto& [k, v] : j.items())
        if (k != "type" && k != "seq" && k != "payload") throw WireError("unexpected field '" + k + "'");
    if (!j.contains("type") || !j["type"].is_string()) throw WireError("missing type tag");
    const auto type = kMessageTypeNames.find(j["type"].get<std::string>());
    if (!type) throw WireError("unknown message type '" + j["type"].get<std::string>() + "'");
    if (!j.contains("seq") || !j["seq"].is_number_integer() || j["seq"].get<std::int64_t>() < 0)
        throw WireError("missing or negative seq");
    WireMessage m;
    m.type = *type;
    m.seq = j["seq"].get<std::int64_t>();
    if (j.contains("payload")) {
        if (!j["payload"].is_object()) throw WireError("payload is not an object");
        m.payload = j["payload"];
    }
    return m;
}

/// Numbers outgoing messages.
class MessageCounter {
public:
    WireMessage make(MessageType t, json payload = json::object()) { return {t, ++seq_, std::move(payload)}; }
    std::int64_t last() const { return seq_; }

private:
    std::int64_t seq_ = 0;
};

// Action payloads --------------------------------------------------------

inline json action_to_json(const task::Action& a) {
    json j{{"kind", task::to_string(a.kind)}};
    switch (a.kind) {
    case task::ActionKind::PhaseEnter: j["phase"] = sequencing::to_string(a.phase); break;
    case task::ActionKind::Prompt: {
        j["text"] = a.text;
        j["duration_ms"] = a.duration_ms;
        json b = json::array();
        for (ButtonId x : a.buttons) b.push_back(to_string(x));
        j["buttons"] = b;
        break;
    }
    case task::ActionKind::Rest: j["duration_ms"] = a.duration_ms; break;
    case task::ActionKind::QuestionnaireRequest: j["text"] = a.text; break;
    case task::ActionKind::Present:
        j["phase"] = sequencing::to_string(a.phase);
        j["trial"] = sequencing::trial_to_json(*a.trial);
        break;
    case task::ActionKind::Done: break;
    }
    return j;
}

inline task::Action action_from_json(const json& j) {
    task::Action a;
    a.kind = task::kActionNames.parse(j.at("kind").get<std::string>(), "action kind");
    if (j.contains("phase")) a.phase = sequencing::kPhaseNames.parse(j.at("phase").get<std::string>(), "phase");
    a.text = j.value("text", "");
    a.duration_ms = j.value("duration_ms", 0);
    if (j.contains("buttons"))
        for (const auto& b : j.at("buttons")) a.buttons.push_back(kButtonNames.parse(b.get<std::string>(), "button"));
    if (j.contains("trial")) a.trial = sequencing::trial_from_json(j.at("trial"));
    return a;
}

// Event payloads: the runner sends kind, optional client time and the
// kind-specific payload; seq and server time are assigned on receipt.

inline json event_message_payload(const task::EventRecord& e) {
    json j{{"kind", task::to_string(e.kind)}, {"payload", e.payload}};
    if (e.t_client_mono_ns) j["t_client_mono_ns"] = *e.t_client_mono_ns;
    return j;
}

inline task::EventRecord event_from_message_payload(const json& j) {
    task::EventRecord e;
    if (!j.contains("kind") || !j["kind"].is_string()) throw WireError("event without kind");
    const auto kind = task::kEventKindNames.find(j["kind"].get<std::string>());
    if (!kind) throw WireError("unknown event kind '" + j["kind"].get<std::string>() + "'");
    e.kind = *kind;
    if (j.contains("t_client_mono_ns")) {
        if (!j["t_client_mono_ns"].is_number_integer()) throw WireError("t_client_mono_ns is not an integer");
        e.t_client_mono_ns = j["t_client_mono_ns"].get<std::int64_t>();
    }
    e.payload = j.value("payload", json::object());
    if (!e.payload.is_object()) throw WireError("event payload is not an object");
    return e;
}

/// Event kinds a runner may report. The rest are written by the server.
inline bool client_event_kind(task::EventKind k) {
    using task::EventKind;
    return k == EventKind::StimulusShown || k == EventKind::Response || k == EventKind::FrameInterval ||
           k == EventKind::PromptShown || k == EventKind::PromptCleared || k == EventKind::Questionnaire;
}

// Clock offset ----------------------------------------------------------

/// One ping exchange: server send t0, client receipt t1, client reply t2,
/// server receipt t3. Server times on the server clock, client times on the
/// client clock.
struct PingSample {
    std::int64_t t0 = 0, t1 = 0, t2 = 0, t3 = 0;
};

/// Client clock minus server clock: median over pings of
/// ((t1 − t0) + (t2 − t3)) / 2. The median ignores a single bad ping.
inline std::int64_t clock_offset(const std::vector<PingSample>& pings) {
    if (pings.size() < 3) throw InvalidArgument("clock offset needs at least 3 pings, got " + std::to_string(pings.size()));
    std::vector<double> est;
    for (const auto& p : pings)
        est.push_back((static_cast<double>(p.t1 - p.t0) + static_cast<double>(p.t2 - p.t3)) / 2.0);
    std::sort(est.begin(), est.end());
    const std::size_t n = est.size();
    const double m = n % 2 ? est[n / 2] : (est[n / 2 - 1] + est[n / 2]) / 2.0;
    return static_cast<std::int64_t>(std::llround(m));
}

}  // namespace msi::service
