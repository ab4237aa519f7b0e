#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include <gtest/gtest.h>

#include "msi/service/server.hpp"
#include "msi/sim/runner.hpp"

using namespace msi;
using namespace msi::service;
using sequencing::Phase;

namespace fs = std::filesystem;

namespace {

SessionConfig fixed_config(Task t, std::uint64_t seed = 42) {
    SessionConfig c;
    c.task = t;
    c.seed = seed;
    c.thresholding.run = false;
    ThresholdProfile th;
    th.gng = {Intensity(0.2), Intensity(0.2), Intensity(0.15), Intensity(0.15), Intensity(0.3)};
    for (Modality m : kModalities)
        for (Direction d : kDirections) th.cj[{m, d}] = Intensity(0.1);
    th.pj = {SoaMs{-60}, SoaMs{100}};
    c.thresholding.fixed = th;
    return c;
}

SessionConfig calibrated_config(Task t, std::uint64_t seed = 42) {
    SessionConfig c;
    c.task = t;
    c.seed = seed;
    return c;
}

fs::path temp_path(const std::string& name) {
    auto dir = fs::temp_directory_path() / "msi_service_tests";
    fs::create_directories(dir);
    return dir / name;
}

std::vector<WireMessage> sample_messages() {
    const auto s = task::make_task_session(fixed_config(Task::CJ));
    task::Action present;
    present.kind = task::ActionKind::Present;
    present.phase = Phase::Experimental;
    present.trial = s.plan.phases.front().blocks.front().trials.front();
    task::Action prompt{task::ActionKind::Prompt, Phase::Experimental, "Focus: AV", {ButtonId::R2, ButtonId::L2}, 3000, {}};
    return {
        {MessageType::Hello, 1, {{"protocol_version", 1}, {"client", "browser"}}},
        {MessageType::Config, 1, {{"protocol_version", 1}, {"config", to_json_doc(s.config)}, {"resumed", false}}},
        {MessageType::Refuse, 1, {{"reason", "busy"}}},
        {MessageType::Ping, 2, {{"t0", 123456789012345}}},
        {MessageType::Pong, 2, {{"t0", 1}, {"t1", 2}, {"t2", 3}}},
        {MessageType::Action, 9, action_to_json(present)},
        {MessageType::Action, 10, action_to_json(prompt)},
        {MessageType::Event, 4, event_message_payload(task::ev_response(ButtonId::X, 55))},
        {MessageType::Event, 5, event_message_payload(task::ev_questionnaire("presence", {1, 4.5, 7}))},
        {MessageType::Done, 77, {{"status", "complete"}}},
        {MessageType::Error, 3, {{"reason", "line\nbreak \"quoted\""}}},
    };
}

}  // namespace

// Wire format ------------------------------------------------------------

TEST(Wire, RoundTripEveryMessageType) {
    std::set<MessageType> seen;
    for (const auto& m : sample_messages()) {
        const std::string frame = encode_message(m);
        EXPECT_EQ(frame.find('\n'), std::string::npos);
        EXPECT_EQ(decode_message(frame), m);
        EXPECT_EQ(encode_message(decode_message(frame)), frame);
        seen.insert(m.type);
    }
    EXPECT_EQ(seen.size(), 9u);
}

TEST(Wire, ActionsAndEventsSurviveTheWire) {
    const auto ms = sample_messages();
    const auto present = action_from_json(decode_message(encode_message(ms[5])).payload);
    EXPECT_EQ(present.kind, task::ActionKind::Present);
    EXPECT_EQ(action_to_json(present), ms[5].payload);
    const auto prompt = action_from_json(ms[6].payload);
    EXPECT_EQ(prompt.buttons, (std::vector<ButtonId>{ButtonId::R2, ButtonId::L2}));
    const auto ev = event_from_message_payload(ms[7].payload);
    EXPECT_EQ(ev.kind, task::EventKind::Response);
    EXPECT_EQ(ev.t_client_mono_ns, 55);
}

TEST(Wire, TruncatedFrameNeverYieldsAMessage) {
    const std::string frame = encode_message(sample_messages()[5]);
    for (std::size_t cut = 0; cut < frame.size(); cut += 7) {
        try {
            decode_message(frame.substr(0, cut));
            ADD_FAILURE() << "prefix of length " << cut << " decoded";
        } catch (const WireError& e) {
            EXPECT_NE(std::string(e.what()).find("byte"), std::string::npos) << e.what();
        }
    }
}

TEST(Wire, RejectsUnknownTypeAndBadEnvelope) {
    EXPECT_THROW(decode_message(R"({"type":"shout","seq":1,"payload":{}})"), WireError);
    EXPECT_THROW(decode_message(R"({"seq":1,"payload":{}})"), WireError);
    EXPECT_THROW(decode_message(R"({"type":"ping","seq":-1,"payload":{}})"), WireError);
    EXPECT_THROW(decode_message(R"({"type":"ping","seq":1,"payload":[]})"), WireError);
    EXPECT_THROW(decode_message(R"({"type":"ping","seq":1,"payload":{},"x":1})"), WireError);
    EXPECT_THROW(decode_message(R"([1,2])"), WireError);
    EXPECT_THROW(event_from_message_payload({{"kind", "telepathy"}}), WireError);
    try {
        decode_message(R"({"type":"shout","seq":1})");
    } catch (const WireError& e) {
        EXPECT_NE(std::string(e.what()).find("shout"), std::string::npos);
    }
}

// Clock offset -----------------------------------------------------------

TEST(ClockOffset, FormulaAndEdgeCases) {
    EXPECT_EQ(clock_offset({{0, 50, 50, 100}, {200, 250, 260, 310}, {400, 430, 430, 460}}), 0);
    EXPECT_EQ(clock_offset({{100, 200, 210, 130}, {100, 200, 210, 130}, {100, 200, 210, 130}}), 90);
    EXPECT_THROW(clock_offset({{0, 1, 1, 2}, {0, 1, 1, 2}}), InvalidArgument);
}

TEST(ClockOffset, OneCorruptedPingAmongNine) {
    // Client clock 5 ms ahead, one-way delays between 1 and 3 ms.
    const std::int64_t skew = 5'000'000;
    std::vector<PingSample> pings;
    Rng rng(3, "pings");
    for (int i = 0; i < 9; ++i) {
        const std::int64_t t0 = i * 10'000'000;
        const std::int64_t up = 1'000'000 + rng.uniform_int(0, 2'000'000);
        const std::int64_t down = up;  // symmetric paths: the estimate is exact
        const std::int64_t t1 = t0 + up + skew;
        pings.push_back({t0, t1, t1 + 100'000, t0 + up + 100'000 + down});
    }
    EXPECT_EQ(clock_offset(pings), skew);
    pings[4].t3 += 900'000'000;  // a stalled reply
    EXPECT_EQ(clock_offset(pings), skew);
    double mean = 0;
    for (const auto& p : pings) mean += ((p.t1 - p.t0) + (p.t2 - p.t3)) / 2.0 / pings.size();
    EXPECT_GT(std::abs(mean - skew), 40e6);  // the mean is dragged far off
}

// Log ----------------------------------------------------------------------

TEST(Log, EmptyLogReplaysToIdleSession) {
    SessionLog log;
    log.header = make_log_header(fixed_config(Task::GNG), "test");
    const auto s = replay_log(parse_log(serialize_log(log)));
    EXPECT_EQ(task::task_status(s), task::Status::Idle);
    EXPECT_TRUE(s.outcomes.empty());
    EXPECT_THROW(parse_log(""), Error);
}

TEST(Log, GapIsReportedByPosition) {
    auto run = sim::run_simulated_session(fixed_config(Task::PJ), sim::default_observer(), 1);
    auto events = run.log.events;
    events.erase(events.begin() + 15);  // seq 16 missing
    run.log.events = events;
    try {
        parse_log(serialize_log(run.log));
        FAIL() << "gap not detected";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("gap before 17"), std::string::npos) << e.what();
    }
}

TEST(Log, EveryPrefixIsAValidShorterLog) {
    const auto run = sim::run_simulated_session(fixed_config(Task::PJ), sim::default_observer(), 5);
    const std::string text = serialize_log(run.log);
    Rng rng(8, "cuts");
    const std::size_t header_end = text.find('\n') + 1;
    for (int i = 0; i < 40; ++i) {
        const std::size_t cut = header_end + static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(text.size() - header_end)));
        const auto log = parse_log(text.substr(0, cut));
        const std::size_t whole_lines = std::count(text.begin(), text.begin() + cut, '\n');
        EXPECT_EQ(log.events.size(), whole_lines - 1);
        const auto state = replay_log(log);
        EXPECT_EQ(state.last_seq, static_cast<std::int64_t>(log.events.size()));
    }
}

TEST(Log, FileWriterMatchesSerializedLog) {
    const auto path = temp_path("writer.mslog");
    const auto run = sim::run_simulated_session(fixed_config(Task::PJ), sim::default_observer(), 2);
    {
        LogWriter w(path.string(), run.log.header);
        for (const auto& e : run.log.events) w.append(e);
    }
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    EXPECT_EQ(ss.str(), serialize_log(run.log));
    EXPECT_EQ(replay_log_file(path.string()), run.final_state);
}

// Live session on a virtual clock ----------------------------------------

TEST(LiveSession, LoopbackCompletesCalibratedGngSession) {
    auto live = new_live_session(calibrated_config(Task::GNG), "live");
    sim::SimRunner runner(sim::default_observer(), 42);
    sim::pump(live, runner, 0);
    ASSERT_EQ(live.result(), SessionResult::Complete);
    EXPECT_TRUE(runner.done());
    const auto& s = live.recorder().session();
    EXPECT_EQ(task::task_status(s), task::Status::Done);
    EXPECT_EQ(s.violations, 0);
    EXPECT_EQ(task::outcomes_in(s, Phase::Experimental).size(), s.plan.trial_count(Phase::Experimental));
    EXPECT_EQ(task::outcomes_in(s, Phase::Adaptive).size(), s.plan.trial_count(Phase::Adaptive));
    EXPECT_EQ(replay_log(live.recorder().log()), s);

    // Every present is resolved before the next is commanded, and every RT
    // is measured from the reported onset on the client timeline.
    std::size_t presents = 0;
    std::optional<std::int64_t> onset;
    std::size_t resolved = 0;
    for (const auto& e : live.recorder().log().events) {
        if (e.kind == task::EventKind::PresentCommanded) {
            EXPECT_EQ(presents, resolved) << "present before the previous trial resolved, seq " << e.seq;
            ++presents;
        }
        if (e.kind == task::EventKind::StimulusShown) onset = e.t_client_mono_ns;
        if (e.kind == task::EventKind::Response || e.kind == task::EventKind::Timeout) {
            const auto st = task::replay_events(s.config, {live.recorder().log().events.begin(),
                                                           live.recorder().log().events.begin() + e.seq});
            resolved = st.outcomes.size();
            if (e.kind == task::EventKind::Response && st.outcomes.back().rt_ms &&
                st.outcomes.back().t_response_mono_ns == e.t_client_mono_ns) {
                EXPECT_DOUBLE_EQ(*st.outcomes.back().rt_ms, (*e.t_client_mono_ns - *onset) / 1e6);
            }
        }
        if (presents > 40) break;  // replaying prefixes is quadratic; a few blocks suffice
    }
    for (const auto& o : s.outcomes) {
        EXPECT_GE(o.onset_latency_ns, 0);
        EXPECT_LE(o.onset_latency_ns, 3'000'000);
    }
}

TEST(LiveSession, MatchesInProcessSimulationOutcomes) {
    // Same observer streams, same actions: the wire adds nothing to the
    // scored outcomes.
    const auto cfg = calibrated_config(Task::CJ, 9);
    auto live = new_live_session(cfg, "live");
    sim::SimRunner runner(sim::default_observer(), 9);
    sim::pump(live, runner, 0);
    const auto direct = sim::run_simulated_session(cfg, sim::default_observer(), 9);
    const auto& a = live.recorder().session().outcomes;
    const auto& b = direct.final_state.outcomes;
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].trial, b[i].trial) << i;
        EXPECT_EQ(a[i].classification, b[i].classification) << i;
        ASSERT_EQ(a[i].rt_ms.has_value(), b[i].rt_ms.has_value()) << i;
        if (a[i].rt_ms) {
            EXPECT_NEAR(*a[i].rt_ms, *b[i].rt_ms, 1e-6) << i;
        }
    }
}

TEST(LiveSession, VersionMismatchIsRefusedCleanly) {
    auto live = new_live_session(fixed_config(Task::GNG), "live");
    live.connect();
    const auto out = live.receive({MessageType::Hello, 1, {{"protocol_version", 99}}}, 0);
    ASSERT_EQ(out.send.size(), 1u);
    EXPECT_EQ(out.send[0].type, MessageType::Refuse);
    EXPECT_NE(out.send[0].payload.at("reason").get<std::string>().find("version 99"), std::string::npos);
    EXPECT_TRUE(out.close);
    EXPECT_FALSE(live.finished());
    EXPECT_TRUE(live.recorder().log().events.empty());
    // A compatible client can still connect afterwards.
    live.connect();
    EXPECT_EQ(live.receive({MessageType::Hello, 1, {{"protocol_version", kWireVersion}}}, 0).send.front().type,
              MessageType::Config);
}

TEST(LiveSession, ProtocolErrorsAreFatal) {
    auto live = new_live_session(fixed_config(Task::GNG), "live");
    live.connect();
    const auto out = live.receive({MessageType::Event, 1, event_message_payload(task::ev_prompt_shown())}, 0);
    EXPECT_TRUE(out.close);
    EXPECT_EQ(live.result(), SessionResult::ProtocolError);
    EXPECT_EQ(out.send.back().type, MessageType::Error);

    auto live2 = new_live_session(fixed_config(Task::GNG), "live");
    live2.connect();
    EXPECT_EQ(live2.reject_frame("malformed frame at byte 3", 0).send.back().type, MessageType::Error);
    EXPECT_EQ(live2.result(), SessionResult::ProtocolError);
}

TEST(LiveSession, ServerOwnedEventsFromClientAreLoggedAsViolations) {
    auto live = new_live_session(fixed_config(Task::GNG), "live");
    sim::SimRunner runner(sim::default_observer(), 1);
    live.connect();
    std::int64_t now = 0;
    std::vector<WireMessage> to_server{runner.hello()};
    // Finish the handshake by hand.
    while (!to_server.empty()) {
        auto m = to_server.front();
        to_server.erase(to_server.begin());
        for (const auto& s : live.receive(m, now).send)
            for (const auto& r : runner.receive(s)) to_server.push_back(r);
        ++now;
    }
    const int before = live.recorder().session().violations;
    live.receive({MessageType::Event, 99, event_message_payload(task::ev_timeout("response"))}, now);
    EXPECT_EQ(live.recorder().session().violations, before + 1);
    EXPECT_EQ(live.recorder().log().events.back().payload.at("rejected_kind"), "timeout");
    EXPECT_FALSE(live.finished());
}

TEST(LiveSession, DisconnectAfterBlockTwoResumesAtBlockThree) {
    const auto cfg = fixed_config(Task::GNG, 17);
    auto live = new_live_session(cfg, "live");
    sim::SimRunner runner(sim::default_observer(), 17);
    int drops = 0;
    runner.drop_before = [&](const task::Action& a) {
        if (drops == 0 && a.kind == task::ActionKind::Present && a.phase == Phase::Experimental &&
            a.trial->block_index == 2 && a.trial->trial_index == 0) {
            ++drops;
            return true;
        }
        return false;
    };
    std::vector<std::string> transcript;
    sim::pump(live, runner, 0, &transcript);
    ASSERT_EQ(drops, 1);
    ASSERT_EQ(live.result(), SessionResult::Complete);
    EXPECT_TRUE(runner.resumed());
    const auto& s = live.recorder().session();
    EXPECT_EQ(s.resumes, 1);
    EXPECT_EQ(s.violations, 0);

    // The first present after the reconnect is block 3's first trial.
    bool after = false;
    for (const auto& line : transcript) {
        const auto m = decode_message(line.substr(2));
        if (m.type == MessageType::Config && m.payload.value("resumed", false)) after = true;
        if (after && m.type == MessageType::Action && m.payload.at("kind") == "present") {
            const auto a = action_from_json(m.payload);
            EXPECT_EQ(a.phase, Phase::Experimental);
            EXPECT_EQ(a.trial->block_index, 2);
            EXPECT_EQ(a.trial->trial_index, 0);
            break;
        }
    }
    EXPECT_TRUE(after);

    // Identical remaining plan: the same trials, in the same order, as an
    // uninterrupted session.
    auto plain = new_live_session(cfg, "live");
    sim::SimRunner runner2(sim::default_observer(), 17);
    sim::pump(plain, runner2, 0);
    const auto& u = plain.recorder().session();
    EXPECT_EQ(s.plan, u.plan);
    ASSERT_EQ(s.outcomes.size(), u.outcomes.size());
    for (std::size_t i = 0; i < s.outcomes.size(); ++i) EXPECT_EQ(s.outcomes[i].trial, u.outcomes[i].trial) << i;
    EXPECT_EQ(replay_log(parse_log(serialize_log(live.recorder().log()))), s);
}

TEST(LiveSession, SuspendedLogResumesInANewServer) {
    const auto cfg = fixed_config(Task::PJ, 4);
    auto live = new_live_session(cfg, "live");
    sim::SimRunner runner(sim::default_observer(), 4);
    int presents = 0;
    runner.drop_before = [&](const task::Action& a) { return a.kind == task::ActionKind::Present && ++presents == 30; };
    sim::pump(live, runner, 0, nullptr, {.reconnect = false});
    EXPECT_FALSE(live.finished());
    const std::size_t done_before = live.recorder().session().outcomes.size();
    EXPECT_EQ(done_before, 29u);

    // A new process: the log text is all that survives.
    auto resumed = resume_live_session(parse_log(serialize_log(live.recorder().log())));
    runner.drop_before = nullptr;
    sim::pump(resumed, runner, live.recorder().log().events.back().t_server_mono_ns + 1);
    ASSERT_EQ(resumed.result(), SessionResult::Complete);
    const auto& s = resumed.recorder().session();
    EXPECT_EQ(s.resumes, 1);
    EXPECT_EQ(task::outcomes_in(s, Phase::Experimental).size(), s.plan.trial_count(Phase::Experimental));
    EXPECT_EQ(replay_log(resumed.recorder().log()), s);
}

// Golden transcript ------------------------------------------------------

namespace {

std::vector<std::string> three_trial_transcript() {
    auto live = new_live_session(fixed_config(Task::GNG, 3), "golden");
    sim::SimRunner runner(sim::default_observer(), 3);
    int presents = 0;
    runner.drop_before = [&](const task::Action& a) { return a.kind == task::ActionKind::Present && ++presents == 4; };
    std::vector<std::string> t;
    sim::pump(live, runner, 1'000'000'000, &t, {.reconnect = false});
    return t;
}

}  // namespace

TEST(GoldenTranscript, ThreeTrialSessionDecodesToExpectedSequence) {
    const fs::path golden = fs::path(MSI_TEST_DATA_DIR) / "three_trials.transcript";
    const auto live = three_trial_transcript();
    if (std::getenv("MSI_UPDATE_GOLDEN")) {
        std::ofstream out(golden);
        for (const auto& l : live) out << l << "\n";
    }
    std::ifstream in(golden);
    ASSERT_TRUE(in) << golden;
    std::vector<std::string> lines;
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    EXPECT_EQ(lines, live);

    // Expected shape: handshake, ping burst, then three trials, each a
    // present answered by shown and frames (plus a response when pressed).
    std::vector<std::string> shape;
    int trials = 0;
    for (const auto& l : lines) {
        ASSERT_TRUE(l.rfind("C ", 0) == 0 || l.rfind("S ", 0) == 0) << l;
        const auto m = decode_message(l.substr(2));
        EXPECT_EQ(encode_message(m), l.substr(2));
        std::string tag = l.substr(0, 1) + ":" + to_string(m.type);
        if (m.type == MessageType::Action) tag += ":" + m.payload.at("kind").get<std::string>();
        if (m.type == MessageType::Event) tag += ":" + m.payload.at("kind").get<std::string>();
        if (tag == "S:action:present") ++trials;
        shape.push_back(tag);
    }
    ASSERT_GE(shape.size(), 12u);
    EXPECT_EQ(std::vector<std::string>(shape.begin(), shape.begin() + 12),
              (std::vector<std::string>{"C:hello", "S:config", "S:ping", "C:pong", "S:ping", "C:pong", "S:ping", "C:pong",
                                        "S:ping", "C:pong", "S:ping", "C:pong"}));
    EXPECT_EQ(trials, 4);  // the fourth is where the transcript stops
    EXPECT_EQ(std::count(shape.begin(), shape.end(), "C:event:stimulus-shown"), 3);
    EXPECT_EQ(std::count(shape.begin(), shape.end(), "C:event:frame-interval"), 3);
}

// WebSocket server ---------------------------------------------------------

namespace {

struct ServerThread {
    LiveSession live;
    std::unique_ptr<SessionServer> server;
    std::thread thread;
    SessionResult result = SessionResult::Suspended;

    ServerThread(LiveSession l, ServerOptions opt) : live(std::move(l)) {
        server = std::make_unique<SessionServer>(live, Endpoint{"127.0.0.1", 0}, opt);
        thread = std::thread([this] { result = server->run(); });
    }
    Endpoint endpoint() const { return {"127.0.0.1", server->port()}; }
    SessionResult join() {
        thread.join();
        return result;
    }
    ~ServerThread() {
        if (thread.joinable()) {
            server->stop();
            thread.join();
        }
    }
};

ServerOptions fast() {
    ServerOptions o;
    o.time_scale = 2e-4;
    o.reconnect_wait = std::chrono::milliseconds(3000);
    return o;
}

}  // namespace

TEST(SessionServer, EndpointParsing) {
    EXPECT_EQ(parse_endpoint("0.0.0.0:9000"), (Endpoint{"0.0.0.0", 9000}));
    EXPECT_EQ(parse_endpoint("ws://127.0.0.1:8765/session"), (Endpoint{"127.0.0.1", 8765}));
    EXPECT_EQ(parse_endpoint(":7000"), (Endpoint{"127.0.0.1", 7000}));
    EXPECT_THROW(parse_endpoint("localhost"), InvalidArgument);
    EXPECT_THROW(parse_endpoint("ws://h:1/other"), InvalidArgument);
    EXPECT_THROW(parse_endpoint("h:99999"), InvalidArgument);
    ::setenv(kBindEnv, "127.0.0.2:6000", 1);
    EXPECT_EQ(resolve_endpoint(std::nullopt), (Endpoint{"127.0.0.2", 6000}));
    EXPECT_EQ(resolve_endpoint(std::string("1.2.3.4:5")), (Endpoint{"1.2.3.4", 5}));
    ::unsetenv(kBindEnv);
    EXPECT_EQ(resolve_endpoint(std::nullopt), parse_endpoint(kDefaultBind));
}

TEST(SessionServer, LoopbackClientCompletesFullGngSession) {
    const auto path = temp_path("served_gng.mslog");
    auto live = new_live_session(calibrated_config(Task::GNG, 21), "served");
    LogWriter writer(path.string(), live.recorder().log().header);
    ServerThread st(std::move(live), fast());
    st.live.recorder().attach_writer(&writer);
    sim::SimRunner runner(sim::default_observer(), 21);
    EXPECT_EQ(run_ws_client(st.endpoint(), runner), ClientOutcome::Done);
    EXPECT_EQ(st.join(), SessionResult::Complete);
    const auto& s = st.live.recorder().session();
    EXPECT_EQ(task::task_status(s), task::Status::Done);
    EXPECT_EQ(task::outcomes_in(s, Phase::Experimental).size(), s.plan.trial_count(Phase::Experimental));
    EXPECT_EQ(replay_log_file(path.string()), s);
}

TEST(SessionServer, SecondClientIsRejectedAndWrongPathGets404) {
    ServerThread st(new_live_session(fixed_config(Task::GNG), "served"), fast());
    // First client: handshake only, then hold the connection.
    net::io_context ioc;
    websocket::stream<tcp::socket> first(ioc);
    net::connect(first.next_layer(), tcp::resolver(ioc).resolve("127.0.0.1", std::to_string(st.server->port())));
    first.handshake("127.0.0.1", kSessionPath);
    first.write(net::buffer(encode_message({MessageType::Hello, 1, {{"protocol_version", kWireVersion}}})));
    beast::flat_buffer b;
    first.read(b);
    EXPECT_EQ(decode_message(beast::buffers_to_string(b.data())).type, MessageType::Config);

    sim::SimRunner second(sim::default_observer(), 1);
    EXPECT_EQ(run_ws_client(st.endpoint(), second), ClientOutcome::Refused);
    EXPECT_NE(second.refusal()->find("already"), std::string::npos);

    // Plain HTTP to another path.
    tcp::socket sock(ioc);
    net::connect(sock, tcp::resolver(ioc).resolve("127.0.0.1", std::to_string(st.server->port())));
    http::request<http::empty_body> req{http::verb::get, "/other", 11};
    req.set(http::field::host, "127.0.0.1");
    http::write(sock, req);
    beast::flat_buffer hb;
    http::response<http::string_body> res;
    http::read(sock, hb, res);
    EXPECT_EQ(res.result(), http::status::not_found);
}

TEST(SessionServer, VersionMismatchRefusedOverTheSocket) {
    ServerThread st(new_live_session(fixed_config(Task::GNG), "served"), fast());
    sim::SimRunner old(sim::default_observer(), 1);
    EXPECT_EQ(run_ws_client(st.endpoint(), old, 0), ClientOutcome::Refused);
    EXPECT_NE(old.refusal()->find("version 0"), std::string::npos);
    // The session is still waiting for a proper client.
    sim::SimRunner good(sim::default_observer(), 1);
    EXPECT_EQ(run_ws_client(st.endpoint(), good), ClientOutcome::Done);
    EXPECT_EQ(st.join(), SessionResult::Complete);
}

TEST(SessionServer, MalformedFrameEndsWithProtocolError) {
    ServerThread st(new_live_session(fixed_config(Task::GNG), "served"), fast());
    net::io_context ioc;
    websocket::stream<tcp::socket> ws(ioc);
    net::connect(ws.next_layer(), tcp::resolver(ioc).resolve("127.0.0.1", std::to_string(st.server->port())));
    ws.handshake("127.0.0.1", kSessionPath);
    ws.write(net::buffer(std::string(R"({"type":"hello","seq":1,"payl)")));
    beast::flat_buffer b;
    ws.read(b);
    const auto m = decode_message(beast::buffers_to_string(b.data()));
    EXPECT_EQ(m.type, MessageType::Error);
    EXPECT_NE(m.payload.at("reason").get<std::string>().find("byte"), std::string::npos);
    EXPECT_EQ(st.join(), SessionResult::ProtocolError);
}

TEST(SessionServer, DisconnectSuspendsAndReconnectResumes) {
    const auto cfg = fixed_config(Task::GNG, 5);
    ServerThread st(new_live_session(cfg, "served"), fast());
    sim::SimRunner runner(sim::default_observer(), 5);
    int drops = 0;
    runner.drop_before = [&](const task::Action& a) {
        if (drops == 0 && a.kind == task::ActionKind::Present && a.phase == Phase::Experimental &&
            a.trial->block_index == 2 && a.trial->trial_index == 0) {
            ++drops;
            return true;
        }
        return false;
    };
    EXPECT_EQ(run_ws_client(st.endpoint(), runner), ClientOutcome::Dropped);
    EXPECT_EQ(run_ws_client(st.endpoint(), runner), ClientOutcome::Done);
    EXPECT_EQ(st.join(), SessionResult::Complete);
    const auto& s = st.live.recorder().session();
    EXPECT_EQ(s.resumes, 1);
    EXPECT_EQ(task::outcomes_in(s, Phase::Experimental).size(), s.plan.trial_count(Phase::Experimental));
    EXPECT_EQ(replay_log(st.live.recorder().log()), s);
}

TEST(SessionServer, NoReconnectMeansSuspended) {
    auto opt = fast();
    opt.reconnect_wait = std::chrono::milliseconds(50);
    ServerThread st(new_live_session(fixed_config(Task::PJ, 6), "served"), opt);
    sim::SimRunner runner(sim::default_observer(), 6);
    int presents = 0;
    runner.drop_before = [&](const task::Action& a) { return a.kind == task::ActionKind::Present && ++presents == 5; };
    EXPECT_EQ(run_ws_client(st.endpoint(), runner), ClientOutcome::Dropped);
    EXPECT_EQ(st.join(), SessionResult::Suspended);
    EXPECT_EQ(st.live.recorder().log().events.back().payload.value("label", ""), "disconnect");
}
