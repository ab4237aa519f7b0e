#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "msi/sequencing/builders.hpp"
#include "msi/sim/run.hpp"

using namespace msi;
using namespace msi::sim;
using sequencing::Phase;

namespace {

// Normal CDF through erfc, independent of the observer's boost-based one.
double phi(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

void expect_rate(int hits, int n, double p) {
    const double sd = std::sqrt(n * p * (1 - p));
    EXPECT_NEAR(hits, n * p, std::max(3 * sd, 1e-9)) << "p=" << p;
}

ThresholdProfile profile_from_observer(const SimObserver& o) {
    ThresholdProfile th;
    th.gng.visual_go_opacity = th.gng.visual_nogo_opacity =
        Intensity(detection_curve(o, Modality::Visual, StimulusParam::Opacity).threshold);
    th.gng.auditory_go_volume = th.gng.auditory_nogo_volume =
        Intensity(detection_curve(o, Modality::Auditory, StimulusParam::Volume).threshold);
    th.gng.tactile_nogo_drive = Intensity(detection_curve(o, Modality::Tactile, StimulusParam::VibrationDrive).threshold);
    for (Modality m : kModalities)
        for (Direction d : kDirections) th.cj[{m, d}] = Intensity(0.1);
    th.pj = {SoaMs{-60}, SoaMs{100}};
    return th;
}

}  // namespace

TEST(Psychometric, MidpointAndStepLimit) {
    Logistic l{0.3, 0.05, 0.1, 0.04};
    EXPECT_DOUBLE_EQ(psychometric_prob(l, 0.3), 0.1 + (1 - 0.1 - 0.04) / 2);
    Logistic step{0.3, 1e-9, 0.0, 0.02};
    EXPECT_NEAR(psychometric_prob(step, 1.0), 0.98, 1e-15);
    EXPECT_NEAR(psychometric_prob(step, 0.31), 0.98, 1e-15);
    EXPECT_NEAR(psychometric_prob(step, 0.29), 0.0, 1e-15);
    EXPECT_THROW(psychometric_prob(l, 1.5), InvalidArgument);
}

TEST(Psychometric, MatchesTanhFormOnGrid) {
    Logistic l{0.42, 0.07, 0.25, 0.03};
    for (int i = 0; i <= 100; ++i) {
        const double x = i / 100.0;
        const double expect = l.guess + (1 - l.guess - l.lapse) * 0.5 * (1 + std::tanh((x - l.threshold) / (2 * l.spread)));
        EXPECT_NEAR(psychometric_prob(l, x), expect, 1e-14);
    }
}

TEST(Observer, JsonRoundTripAndValidation) {
    auto o = default_observer();
    o.sj.center_ms = 11;
    o.rt.offsets_ms["VAT"] = -70;
    EXPECT_EQ(observer_from_json(observer_to_json(o)), o);
    auto bad = observer_to_json(o);
    bad["sj"]["width_ms"] = 0;
    EXPECT_THROW(observer_from_json(bad), InvalidArgument);
    bad = observer_to_json(o);
    bad["detection"][0]["lapse"] = 1.5;
    EXPECT_THROW(observer_from_json(bad), InvalidArgument);
}

TEST(SimRespond, SjPeakAndTojTwoJnd) {
    auto o = default_observer();
    o.sj = {0, 70, 0.1};
    EXPECT_DOUBLE_EQ(p_simultaneous(o, 0), 1 - 0.05);
    o.toj = {0, 50, 0.0};
    SessionConfig cfg;
    auto toj = sequencing::make_pj_trial(TrialTask::TOJ, SoaMs{100}, cfg, 500, 0);
    Rng rng(1, "toj");
    int correct = 0;
    for (int i = 0; i < 1000; ++i) correct += sim_respond(o, toj, rng).button == ButtonId::R2;
    expect_rate(correct, 1000, phi(2.0));
}

TEST(SimRespond, EmpiricalRatesHonorModel) {
    auto o = default_observer();
    o.sj = {20, 70, 0.04};
    o.toj = {10, 40, 0.06};
    SessionConfig cfg;
    const int n = 10000;

    auto sj = sequencing::make_pj_trial(TrialTask::SJ, SoaMs{-80}, cfg, 500, 0);
    auto toj = sequencing::make_pj_trial(TrialTask::TOJ, SoaMs{-30}, cfg, 500, 0);
    auto det = sequencing::make_gng_detection_trial(GngParam::VisualGoOpacity, Intensity(0.21), true, cfg, 1000);
    auto dir = sequencing::make_cj_change_trial(Modality::Tactile, Direction::Decrease, Intensity(0.3),
                                                sequencing::ResponseMode::DirectionJudgment, cfg, 800);
    Rng rng(9, "rates");
    int s = 0, v = 0, d = 0, c = 0;
    for (int i = 0; i < n; ++i) {
        s += sim_respond(o, sj, rng).button == ButtonId::R2;
        v += sim_respond(o, toj, rng).button == ButtonId::R2;
        d += sim_respond(o, det, rng).button.has_value();
        c += sim_respond(o, dir, rng).button == ButtonId::L2;
    }
    const double dsq = (-80.0 - 20) * (-80.0 - 20);
    expect_rate(s, n, 0.96 * std::exp(-dsq / (2 * 70.0 * 70.0)) + 0.02);
    expect_rate(v, n, 0.03 + 0.94 * phi((-30.0 - 10) / 40));
    expect_rate(d, n, 1 / (1 + std::exp(-(0.21 - 0.20) / 0.02)));
    const double pt = 1 / (1 + std::exp(-(0.3 - 0.30) / 0.02));
    expect_rate(c, n, pt + (1 - pt) / 2);
}

TEST(SimRespond, ZeroNoiseGngPressesExactlyOnGo) {
    auto o = default_observer();
    for (auto& [k, l] : o.detection) l = {l.threshold, 1e-9, 0.0, 0.0};
    SessionConfig cfg;
    const auto th = profile_from_observer(o);
    Rng rng(3, "zero-noise");
    for (const auto& cue : sequencing::gng_cue_types())
        for (GngRole role : {GngRole::Go, GngRole::NoGo}) {
            auto c = sequencing::with_role(cue, role);
            auto levels = sequencing::detail::gng_levels(th, role, 150);
            auto t = sequencing::make_gng_trial(c, levels, cfg, 1000, 0);
            const bool go = gng_trial_label(c) == GngLabel::Go;
            for (int i = 0; i < 20; ++i)
                EXPECT_EQ(sim_respond(o, t, rng).button.has_value(), go) << cue_type_name(c);
        }
}

TEST(SimRespond, PlantedRtShifts) {
    auto o = default_observer();
    o.rt = {std::log(400.0), 0.1, {{"V", 20}, {"VAT", -50}}};
    SessionConfig cfg;
    auto th = profile_from_observer(o);
    GngCue v{{{Modality::Visual, GngRole::Go}}};
    GngCue vat{{{Modality::Visual, GngRole::Go}, {Modality::Auditory, GngRole::Go}, {Modality::Tactile, GngRole::Go}}};
    auto tv = sequencing::make_gng_trial(v, sequencing::detail::gng_levels(th, GngRole::Go, 300), cfg, 1000, 0);
    auto tvat = sequencing::make_gng_trial(vat, sequencing::detail::gng_levels(th, GngRole::Go, 300), cfg, 1000, 0);
    Rng rng(5, "rt");
    double sv = 0, svat = 0;
    const int n = 4000;
    for (int i = 0; i < n; ++i) {
        sv += sim_respond(o, tv, rng).press_ms;
        svat += sim_respond(o, tvat, rng).press_ms;
    }
    const double lognormal_mean = 400.0 * std::exp(0.1 * 0.1 / 2);
    const double sem = 400.0 * 0.1 / std::sqrt(n);
    EXPECT_NEAR(sv / n, lognormal_mean + 20, 4 * sem);
    EXPECT_NEAR(svat / n, lognormal_mean - 50, 4 * sem);
}

class SimSession : public ::testing::TestWithParam<Task> {};

TEST_P(SimSession, CompletesAndReplays) {
    SessionConfig cfg;
    cfg.task = GetParam();
    const auto run = run_simulated_session(cfg, default_observer(), 42);
    const auto& s = run.final_state;
    ASSERT_EQ(task::task_status(s), task::Status::Done);
    EXPECT_EQ(s.violations, 0);

    // One outcome per planned trial, none with negative RT.
    EXPECT_EQ(task::outcomes_in(s, Phase::Experimental).size(), s.plan.trial_count(Phase::Experimental));
    EXPECT_EQ(task::outcomes_in(s, Phase::Adaptive).size(), s.plan.trial_count(Phase::Adaptive));
    for (const auto& o : s.outcomes) {
        if (o.rt_ms) {
            EXPECT_GE(*o.rt_ms, 0.0);
        }
        EXPECT_GE(o.onset_latency_ns, 0);
    }
    EXPECT_EQ(s.frame_batches, static_cast<int>(s.outcomes.size()));
    EXPECT_EQ(s.questionnaires.size(), 2u);

    // Event sourcing: replay equals live.
    EXPECT_EQ(task::replay_events(s.config, run.log.events), s);
    EXPECT_EQ(service::replay_log(service::parse_log(service::serialize_log(run.log))), s);

    // Determinism: same seed, same log apart from wall-clock header fields.
    auto again = run_simulated_session(cfg, default_observer(), 42);
    again.log.header["created_utc"] = run.log.header["created_utc"];
    EXPECT_EQ(service::serialize_log(again.log), service::serialize_log(run.log));
    auto other = run_simulated_session(cfg, default_observer(), 43);
    EXPECT_NE(other.log.events, run.log.events);
}

TEST_P(SimSession, VirtualClockMatchesPlannedDurations) {
    SessionConfig cfg;
    cfg.task = GetParam();
    const auto run = run_simulated_session(cfg, default_observer(), 7);
    const auto& s = run.final_state;
    std::map<std::string, std::int64_t> entered;
    std::int64_t first_questionnaire = -1;
    for (const auto& e : run.log.events) {
        if (e.kind == task::EventKind::PhaseTransition) entered[e.payload.at("phase")] = e.t_server_mono_ns;
        if (e.kind == task::EventKind::Questionnaire && first_questionnaire < 0) first_questionnaire = e.t_server_mono_ns;
    }
    const auto ms = 1'000'000LL;
    EXPECT_EQ(entered.at("adaptive") - entered.at("experimental"),
              sequencing::phase_duration_ms(*s.plan.find(Phase::Experimental), s.config) * ms);
    EXPECT_EQ(first_questionnaire - entered.at("adaptive"),
              sequencing::phase_duration_ms(*s.plan.find(Phase::Adaptive), s.config) * ms);
}

INSTANTIATE_TEST_SUITE_P(AllTasks, SimSession, ::testing::Values(Task::GNG, Task::PJ, Task::CJ),
                         [](const auto& info) { return to_string(info.param); });

TEST(SimSession, GngBlockStructure) {
    SessionConfig cfg;
    cfg.task = Task::GNG;
    const auto run = run_simulated_session(cfg, default_observer(), 42);
    std::vector<std::string> exp_blocks, adapt_blocks;
    std::string last;
    for (const auto* o : task::outcomes_in(run.final_state, Phase::Experimental)) exp_blocks.push_back(o->block_name);
    std::set<std::string> distinct(exp_blocks.begin(), exp_blocks.end());
    EXPECT_EQ(distinct.size(), 8u);  // seven cue types and the mixed block
    EXPECT_EQ(exp_blocks.size(), 8u * 70);
    std::set<double> difficulties;
    for (const auto* o : task::outcomes_in(run.final_state, Phase::Adaptive)) difficulties.insert(o->difficulty);
    EXPECT_EQ(difficulties, (std::set<double>{138, 126, 114, 102, 90}));
    EXPECT_EQ(task::outcomes_in(run.final_state, Phase::Adaptive).size(), 5u * 70);
}

TEST(SimSession, CjHas192ExperimentalOutcomes) {
    SessionConfig cfg;
    cfg.task = Task::CJ;
    const auto run = run_simulated_session(cfg, default_observer(), 42);
    EXPECT_EQ(task::outcomes_in(run.final_state, Phase::Experimental).size(), 192u);
}
