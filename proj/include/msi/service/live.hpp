#pragma once

// The live-session loop, independent of the transport: it consumes client
// messages and timer expiries, drives the task machine through a
// SessionRecorder, and returns the messages to send. All times are server
// monotonic nanoseconds supplied by the caller, so the same loop runs on a
// real clock behind a socket or on a virtual clock in tests.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "msi/service/log.hpp"
#include "msi/service/wire.hpp"

namespace msi::service {

struct ServeOptions {
    int ping_count = 5;
    /// Added to the response window before the server declares a timeout,
    /// so a press made just inside the window survives network delay.
    double response_grace_ms = 100.0;
};

/// Process exit codes of a served session.
enum class SessionResult { Complete = 0, Suspended = 2, ProtocolError = 3 };

struct Outbox {
    std::vector<WireMessage> send;
    bool close = false;
};

class LiveSession {
public:
    LiveSession(SessionRecorder rec, ServeOptions opt = {}) : rec_(std::move(rec)), opt_(opt) {
        resumable_ = !rec_.log().events.empty();
    }

    bool connected() const { return wait_ != Wait::Disconnected; }
    bool finished() const { return wait_ == Wait::Finished || failed_; }
    std::optional<SessionResult> result() const {
        if (failed_) return SessionResult::ProtocolError;
        if (wait_ == Wait::Finished) return SessionResult::Complete;
        return std::nullopt;
    }
    /// Next timer expiry the caller must deliver through tick().
    std::optional<std::int64_t> deadline() const { return timer_; }
    const SessionRecorder& recorder() const { return rec_; }
    SessionRecorder& recorder() { return rec_; }
    std::int64_t offset_ns() const { return offset_; }

    /// A client connection was accepted; HELLO is expected next.
    void connect() {
        if (connected()) throw Error("session already has a client");
        wait_ = Wait::Hello;
    }

    /// The client went away. The session is suspended until the next HELLO.
    void disconnect(std::int64_t now) {
        if (!connected() || finished()) return;
        rec_.emit(task::ev_marker("disconnect"), now);
        wait_ = Wait::Disconnected;
        timer_.reset();
        resumable_ = true;
    }

    Outbox receive(const WireMessage& m, std::int64_t now) {
        Outbox out;
        if (finished()) return out;
        switch (m.type) {
        case MessageType::Hello: on_hello(m, now, out); break;
        case MessageType::Pong: on_pong(m, now, out); break;
        case MessageType::Event: on_event(m, now, out); break;
        case MessageType::Error:
            fail(out, "client reported: " + m.payload.value("reason", std::string("unspecified")), false);
            break;
        default: fail(out, "unexpected " + to_string(m.type) + " from client"); break;
        }
        return out;
    }

    /// Delivers the timer if it is due at `now`.
    Outbox tick(std::int64_t now) {
        Outbox out;
        if (!timer_ || now < *timer_ || finished()) return out;
        timer_.reset();
        switch (wait_) {
        case Wait::Response:
            // Still open: the trial times out. A press that arrives later is
            // scored late by the task machine.
            if (!trial_resolved()) rec_.emit(task::ev_timeout("response"), now);
            wait_slot(now, out);
            break;
        case Wait::SlotEnd: drive(now, out); break;
        case Wait::Rest:
            rec_.emit(task::ev_timeout("rest"), now);
            drive(now, out);
            break;
        default: break;
        }
        return out;
    }

    /// A frame from the client that did not decode: fatal.
    Outbox reject_frame(const std::string& reason, std::int64_t now) {
        Outbox out;
        last_now_ = now;
        if (!finished()) fail(out, reason);
        return out;
    }

    /// Refusal for a connection that cannot be served (busy, bad version).
    static WireMessage refusal(const std::string& reason) {
        return {MessageType::Refuse, 1, {{"reason", reason}, {"protocol_version", kWireVersion}}};
    }

private:
    enum class Wait { Disconnected, Hello, Pong, Prompt, Questionnaire, Shown, Response, SlotEnd, Rest, Finished };

    const task::TaskSession& session() const { return rec_.session(); }

    void fail(Outbox& out, const std::string& reason, bool tell_client = true) {
        rec_.emit(task::ev_marker("protocol-error"), last_now_);
        if (tell_client) out.send.push_back(out_.make(MessageType::Error, {{"reason", reason}}));
        out.close = true;
        failed_ = true;
        timer_.reset();
    }

    void on_hello(const WireMessage& m, std::int64_t now, Outbox& out) {
        last_now_ = now;
        if (wait_ != Wait::Hello) return fail(out, "unexpected hello");
        const int v = m.payload.value("protocol_version", -1);
        if (v != kWireVersion) {
            out.send.push_back(refusal("protocol version " + std::to_string(v) + " not supported; server speaks " +
                                       std::to_string(kWireVersion)));
            out.close = true;
            wait_ = Wait::Disconnected;
            return;
        }
        const bool resumed = resumable_;
        if (resumed) rec_.emit(task::ev_marker("resume"), now);
        out_ = MessageCounter{};
        const auto& cfg = session().config;
        out.send.push_back(out_.make(MessageType::Config, {{"protocol_version", kWireVersion},
                                                           {"config", to_json_doc(cfg)},
                                                           {"seed", cfg.seed},
                                                           {"resumed", resumed},
                                                           {"outcomes", session().outcomes.size()}}));
        pings_.clear();
        send_ping(now, out);
    }

    void send_ping(std::int64_t now, Outbox& out) {
        wait_ = Wait::Pong;
        out.send.push_back(out_.make(MessageType::Ping, {{"t0", now}}));
    }

    void on_pong(const WireMessage& m, std::int64_t now, Outbox& out) {
        last_now_ = now;
        if (wait_ != Wait::Pong) return fail(out, "unexpected pong");
        PingSample p;
        try {
            p = {m.payload.at("t0").get<std::int64_t>(), m.payload.at("t1").get<std::int64_t>(),
                 m.payload.at("t2").get<std::int64_t>(), now};
        } catch (const std::exception&) {
            return fail(out, "pong needs integer t0, t1, t2");
        }
        pings_.push_back(p);
        if (static_cast<int>(pings_.size()) < opt_.ping_count) return send_ping(now, out);
        offset_ = clock_offset(pings_);
        auto mark = task::ev_marker("clock-offset");
        mark.payload["offset_ns"] = offset_;
        mark.payload["pings"] = pings_.size();
        rec_.emit(mark, now);
        next_present_ = now;
        drive(now, out);
    }

    void on_event(const WireMessage& m, std::int64_t now, Outbox& out) {
        last_now_ = now;
        if (wait_ == Wait::Hello || wait_ == Wait::Pong || wait_ == Wait::Disconnected)
            return fail(out, "event before the handshake finished");
        task::EventRecord e;
        try {
            e = event_from_message_payload(m.payload);
        } catch (const std::exception& ex) {
            return fail(out, ex.what());
        }
        if (!client_event_kind(e.kind)) {
            auto v = task::ev_violation(task::to_string(e.kind) + " is written by the server, not the client");
            v.payload["rejected_kind"] = task::to_string(e.kind);
            rec_.emit(v, now);
            return;
        }
        // Client times are stored on the server timeline.
        if (e.t_client_mono_ns) e.t_client_mono_ns = *e.t_client_mono_ns - offset_;
        const bool rejected = rec_.emit(e, now).has_value();
        if (rejected) return;

        switch (wait_) {
        case Wait::Prompt:
            if (e.kind == task::EventKind::PromptCleared) drive(now, out);
            break;
        case Wait::Questionnaire:
            if (e.kind == task::EventKind::Questionnaire) drive(now, out);
            break;
        case Wait::Shown:
            if (e.kind == task::EventKind::StimulusShown) {
                const auto& tl = present_trial_->timeline;
                wait_ = Wait::Response;
                timer_ = now + ms_to_ns(tl.response_close_ms - tl.anchor_ms() + opt_.response_grace_ms);
            }
            break;
        case Wait::Response:
            if (trial_resolved()) wait_slot(now, out);
            break;
        default: break;
        }
    }

    bool trial_resolved() const { return session().outcomes.size() > outcomes_at_present_; }

    void wait_slot(std::int64_t now, Outbox& out) {
        if (now >= next_present_) return drive(now, out);
        wait_ = Wait::SlotEnd;
        timer_ = next_present_;
    }

    static std::int64_t ms_to_ns(double ms) { return static_cast<std::int64_t>(std::llround(ms * 1e6)); }

    /// Issues actions until one needs the client or the clock.
    void drive(std::int64_t now, Outbox& out) {
        timer_.reset();
        for (;;) {
            if (task::task_status(session()) == task::Status::Done) {
                wait_ = Wait::Finished;
                out.send.push_back(out_.make(MessageType::Done, {{"status", "complete"},
                                                                 {"outcomes", session().outcomes.size()},
                                                                 {"violations", session().violations}}));
                out.close = true;
                return;
            }
            const task::Action a = task::task_next_action(session());
            using task::ActionKind;
            switch (a.kind) {
            case ActionKind::PhaseEnter:
                rec_.emit(task::ev_phase_transition(a.phase), now);
                out.send.push_back(out_.make(MessageType::Action, action_to_json(a)));
                continue;
            case ActionKind::Prompt:
                out.send.push_back(out_.make(MessageType::Action, action_to_json(a)));
                wait_ = Wait::Prompt;
                return;
            case ActionKind::QuestionnaireRequest:
                out.send.push_back(out_.make(MessageType::Action, action_to_json(a)));
                wait_ = Wait::Questionnaire;
                return;
            case ActionKind::Rest:
                out.send.push_back(out_.make(MessageType::Action, action_to_json(a)));
                wait_ = Wait::Rest;
                timer_ = now + ms_to_ns(a.duration_ms);
                return;
            case ActionKind::Present: {
                if (now < next_present_) {
                    wait_ = Wait::SlotEnd;
                    timer_ = next_present_;
                    return;
                }
                const auto& t = *a.trial;
                rec_.emit(task::ev_present_commanded(t.block_index, t.trial_index), now);
                auto j = action_to_json(a);
                const std::int64_t target = now + ms_to_ns(t.timeline.lead_in_ms);
                j["target_origin_server_ns"] = target;
                j["target_origin_client_ns"] = target + offset_;
                out.send.push_back(out_.make(MessageType::Action, j));
                present_trial_ = t;
                outcomes_at_present_ = session().outcomes.size();
                next_present_ = now + ms_to_ns(t.timeline.slot_ms());
                wait_ = Wait::Shown;
                return;
            }
            case ActionKind::Done: return;
            }
        }
    }

    SessionRecorder rec_;
    ServeOptions opt_;
    Wait wait_ = Wait::Disconnected;
    bool failed_ = false;
    bool resumable_ = false;
    MessageCounter out_;
    std::vector<PingSample> pings_;
    std::int64_t offset_ = 0;
    std::optional<std::int64_t> timer_;
    std::int64_t next_present_ = 0;
    std::int64_t last_now_ = 0;
    std::optional<sequencing::TrialSpec> present_trial_;
    std::size_t outcomes_at_present_ = 0;
};

/// Session for `cfg` with a fresh log, or continued from an existing log.
inline LiveSession new_live_session(const SessionConfig& cfg, const std::string& source, ServeOptions opt = {}) {
    return LiveSession(SessionRecorder(cfg, make_log_header(cfg, source)), opt);
}

inline LiveSession resume_live_session(SessionLog log, ServeOptions opt = {}) {
    auto state = replay_log(log);
    return LiveSession(SessionRecorder(std::move(state), std::move(log)), opt);
}

}  // namespace msi::service
