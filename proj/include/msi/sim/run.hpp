#pragma once

// Headless sessions on a virtual clock: the simulated observer answers
// every action the task machine issues, and time advances by the planned
// durations without any real waiting.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "msi/service/log.hpp"
#include "msi/sim/observer.hpp"
#include "msi/task/machine.hpp"

namespace msi::sim {

using service::SessionLog;

inline std::int64_t ms_to_ns(double ms) { return static_cast<std::int64_t>(std::llround(ms * 1e6)); }

/// Client clocks run on their own epoch; this fixed skew keeps client and
/// server timestamps visibly distinct in simulated logs.
inline constexpr std::int64_t kSimClientSkewNs = 7'000'000'000LL;

/// Frame intervals for a stimulation of `duration_ms`: one per refresh, a
/// dropped frame doubling its interval.
inline std::vector<double> sim_frame_intervals(const SimObserver& o, double refresh_hz, double duration_ms,
                                               Rng& rng) {
    const double period = 1000.0 / refresh_hz;
    const int frames = std::max(1, static_cast<int>(std::ceil(duration_ms / period)));
    std::vector<double> out;
    out.reserve(frames);
    for (int i = 0; i < frames; ++i) {
        const double jitter = (rng.uniform() - 0.5) * 0.2;
        out.push_back(rng.bernoulli(o.frame_drop_prob) ? 2.0 * period + jitter : period + jitter);
    }
    return out;
}

/// Drives one action of `rec`'s session at virtual time `now_ns`, returning
/// the time at which the next action starts.
inline std::int64_t sim_step(service::SessionRecorder& rec, const SimObserver& o, Rng& decide, Rng& display,
                             std::int64_t now_ns) {
    const auto& cfg = rec.session().config;
    const task::Action a = task::task_next_action(rec.session());
    using task::ActionKind;
    switch (a.kind) {
    case ActionKind::PhaseEnter:
        rec.emit(task::ev_phase_transition(a.phase), now_ns);
        return now_ns;
    case ActionKind::Prompt:
        rec.emit(task::ev_prompt_shown(), now_ns);
        now_ns += ms_to_ns(a.duration_ms);
        rec.emit(task::ev_prompt_cleared(), now_ns);
        return now_ns;
    case ActionKind::Rest:
        now_ns += ms_to_ns(a.duration_ms);
        rec.emit(task::ev_timeout("rest"), now_ns);
        return now_ns;
    case ActionKind::QuestionnaireRequest:
        rec.emit(task::ev_questionnaire(a.text, a.text == "nasa-tlx" ? o.tlx : o.presence), now_ns);
        return now_ns;
    case ActionKind::Done: return now_ns;
    case ActionKind::Present: break;
    }

    const auto& t = *a.trial;
    const auto& tl = t.timeline;
    const std::int64_t slot_end = now_ns + ms_to_ns(tl.slot_ms());
    rec.emit(task::ev_present_commanded(t.block_index, t.trial_index), now_ns);

    const std::int64_t latency = ms_to_ns(display.uniform() * o.max_onset_latency_ms);
    const std::int64_t origin = now_ns + ms_to_ns(tl.lead_in_ms) + latency;
    const std::int64_t onset = origin + ms_to_ns(tl.anchor_ms());
    rec.emit(task::ev_stimulus_shown(onset + kSimClientSkewNs, latency), onset);

    const SimResponse r = sim_respond(o, t, decide, cfg.buttons);
    const std::int64_t close = origin + ms_to_ns(tl.response_close_ms);
    std::int64_t last = onset;
    if (r.button) {
        const std::int64_t press = origin + ms_to_ns(r.press_ms);
        if (press <= close) {
            rec.emit(task::ev_response(*r.button, press + kSimClientSkewNs), press);
            last = press;
        } else {
            rec.emit(task::ev_timeout("response"), close);
            last = close;
            // A late press counts only while the slot lasts.
            if (press < slot_end) {
                rec.emit(task::ev_response(*r.button, press + kSimClientSkewNs), press);
                last = press;
            }
        }
    } else {
        rec.emit(task::ev_timeout("response"), close);
        last = close;
    }
    const double stim_ms = std::max(tl.stimulation_end_ms() - tl.anchor_ms(), 1);
    const std::int64_t frames_at = std::max(last, origin + ms_to_ns(tl.stimulation_end_ms()));
    rec.emit(task::ev_frame_intervals(sim_frame_intervals(o, cfg.timing.refresh_hz, stim_ms, display)), frames_at);
    return slot_end;
}

struct SimRun {
    SessionLog log;
    task::TaskSession final_state;
    std::int64_t end_time_ns = 0;
};

/// Runs a whole session for `cfg` with `seed` overriding the config seed.
inline SimRun run_simulated_session(SessionConfig cfg, const SimObserver& o, std::uint64_t seed) {
    check_observer(o);
    cfg.seed = seed;
    json header = service::make_log_header(cfg, "simulated");
    header["observer"] = observer_to_json(o);
    service::SessionRecorder rec(cfg, std::move(header));
    Rng decide(seed, "sim-observer");
    Rng display(seed, "sim-display");
    std::int64_t now = 0;
    // Every trial needs a bounded number of actions, so a stuck machine
    // shows up as an exhausted budget instead of a hang.
    std::size_t budget = 1'000'000;
    while (task::task_status(rec.session()) != task::Status::Done) {
        if (--budget == 0) throw Error("simulated session did not finish");
        now = sim_step(rec, o, decide, display, now);
    }
    SimRun run;
    run.final_state = rec.session();
    run.end_time_ns = now;
    run.log = rec.take_log();
    return run;
}

}  // namespace msi::sim
