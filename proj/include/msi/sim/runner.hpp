#pragma once

// A simulated runner that speaks the wire protocol: it answers the
// server's actions with the events a browser runner would send, using a
// simulated observer for the responses. Its clock is virtual and runs on
// its own epoch.

#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "msi/service/live.hpp"
#include "msi/sim/run.hpp"

namespace msi::sim {

using service::MessageType;
using service::WireMessage;

class SimRunner {
public:
    SimRunner(SimObserver o, std::uint64_t seed)
        : o_(std::move(o)), decide_(seed, "sim-observer"), display_(seed, "sim-display") {
        check_observer(o_);
    }

    /// Called for every action; returning true makes the runner drop the
    /// connection instead of answering it.
    std::function<bool(const task::Action&)> drop_before;

    WireMessage hello(int protocol_version = service::kWireVersion) {
        out_ = service::MessageCounter{};
        dropped_ = false;
        return out_.make(MessageType::Hello, {{"protocol_version", protocol_version}, {"client", "sim-runner"}});
    }

    std::vector<WireMessage> receive(const WireMessage& m) {
        std::vector<WireMessage> reply;
        switch (m.type) {
        case MessageType::Config: {
            auto v = validate_config(m.payload.at("config"));
            if (!v.ok()) throw Error("server sent an invalid config: " + v.violations.front());
            cfg_ = *v.config;
            resumed_ = m.payload.value("resumed", false);
            break;
        }
        case MessageType::Ping:
            reply.push_back(out_.make(MessageType::Pong, {{"t0", m.payload.at("t0")}, {"t1", now_}, {"t2", now_}}));
            break;
        case MessageType::Action: {
            const auto a = service::action_from_json(m.payload);
            if (drop_before && drop_before(a)) {
                dropped_ = true;
                break;
            }
            respond(a, reply);
            break;
        }
        case MessageType::Done: done_ = true; break;
        case MessageType::Refuse: refusal_ = m.payload.value("reason", ""); break;
        case MessageType::Error: error_ = m.payload.value("reason", ""); break;
        default: throw Error("runner got a client message type: " + to_string(m.type));
        }
        return reply;
    }

    bool done() const { return done_; }
    bool dropped() const { return dropped_; }
    bool resumed() const { return resumed_; }
    const std::optional<std::string>& refusal() const { return refusal_; }
    const std::optional<std::string>& error() const { return error_; }
    std::int64_t now() const { return now_; }

private:
    void event(std::vector<WireMessage>& reply, const task::EventRecord& e) {
        reply.push_back(out_.make(MessageType::Event, service::event_message_payload(e)));
    }

    void respond(const task::Action& a, std::vector<WireMessage>& reply) {
        using task::ActionKind;
        switch (a.kind) {
        case ActionKind::PhaseEnter:
        case ActionKind::Done: return;
        case ActionKind::Prompt:
            event(reply, task::ev_prompt_shown());
            now_ += ms_to_ns(a.duration_ms);
            event(reply, task::ev_prompt_cleared());
            return;
        case ActionKind::Rest: now_ += ms_to_ns(a.duration_ms); return;
        case ActionKind::QuestionnaireRequest:
            event(reply, task::ev_questionnaire(a.text, a.text == "nasa-tlx" ? o_.tlx : o_.presence));
            return;
        case ActionKind::Present: break;
        }
        const auto& t = *a.trial;
        const auto& tl = t.timeline;
        const std::int64_t start = now_;
        const std::int64_t slot_end = start + ms_to_ns(tl.slot_ms());
        const std::int64_t latency = ms_to_ns(display_.uniform() * o_.max_onset_latency_ms);
        const std::int64_t origin = start + ms_to_ns(tl.lead_in_ms) + latency;
        const std::int64_t onset = origin + ms_to_ns(tl.anchor_ms());
        event(reply, task::ev_stimulus_shown(onset, latency));
        const SimResponse r = sim_respond(o_, t, decide_, cfg_.buttons);
        if (r.button) {
            const std::int64_t press = origin + ms_to_ns(r.press_ms);
            if (press < slot_end) event(reply, task::ev_response(*r.button, press));
        }
        const double stim_ms = std::max(tl.stimulation_end_ms() - tl.anchor_ms(), 1);
        event(reply, task::ev_frame_intervals(sim_frame_intervals(o_, cfg_.timing.refresh_hz, stim_ms, display_)));
        now_ = slot_end;
    }

    SimObserver o_;
    Rng decide_, display_;
    SessionConfig cfg_;
    service::MessageCounter out_;
    std::int64_t now_ = kSimClientSkewNs;
    bool done_ = false, dropped_ = false, resumed_ = false;
    std::optional<std::string> refusal_, error_;
};

struct PumpOptions {
    /// Reconnect after the runner drops the connection.
    bool reconnect = true;
    std::size_t max_messages = 10'000'000;
};

/// Runs a live session against a simulated runner in one process, on a
/// virtual server clock starting at `now`. Every frame goes through
/// encode/decode. Appends "C <frame>" and "S <frame>" lines to `transcript`
/// when given. Returns the final server time.
inline std::int64_t pump(service::LiveSession& server, SimRunner& runner, std::int64_t now,
                         std::vector<std::string>* transcript = nullptr, PumpOptions opt = {}) {
    std::deque<std::pair<bool, std::string>> wire;  // (to server, frame)
    std::size_t count = 0;
    auto post = [&](bool to_server, const WireMessage& m) { wire.emplace_back(to_server, service::encode_message(m)); };
    auto post_out = [&](const service::Outbox& o) {
        for (const auto& m : o.send) post(false, m);
        return o.close;
    };
    bool open = true;
    server.connect();
    post(true, runner.hello());
    for (;;) {
        while (!wire.empty()) {
            auto [to_server, frame] = std::move(wire.front());
            wire.pop_front();
            if (++count > opt.max_messages) throw Error("loopback exceeded its message budget");
            if (transcript) transcript->push_back((to_server ? "C " : "S ") + frame);
            const auto m = service::decode_message(frame);
            if (to_server) {
                if (open && post_out(server.receive(m, now))) open = false;
            } else {
                for (const auto& r : runner.receive(m)) post(true, r);
                if (runner.dropped()) {
                    wire.clear();
                    server.disconnect(now);
                    if (!opt.reconnect) return now;
                    server.connect();
                    post(true, runner.hello());
                    break;
                }
            }
        }
        if (!wire.empty()) continue;
        if (server.finished() || !open) return now;
        const auto due = server.deadline();
        if (!due) throw Error("loopback stalled: no message in flight and no timer");
        now = std::max(now, *due);
        post_out(server.tick(now));
    }
}

}  // namespace msi::sim
