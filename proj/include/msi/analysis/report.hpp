#pragma once

// Per-condition summaries, PJ reports, psychometric tables and their CSV /
// JSON emission.

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "msi/analysis/psychometric.hpp"
#include "msi/analysis/stats.hpp"
#include "msi/estimation/sj_staircase.hpp"
#include "msi/service/log.hpp"
#include "msi/task/machine.hpp"

namespace msi::analysis {

using nlohmann::json;
using sequencing::Phase;
using task::TaskSession;
using task::TrialOutcome;

// ---------------------------------------------------------------------------
// Condition keys

struct ConditionKey {
    Task task = Task::GNG;
    std::string condition;
    Phase phase = Phase::Experimental;
    double difficulty = 100.0;
    friend auto operator<=>(const ConditionKey&, const ConditionKey&) = default;
};

/// Cue type ("VA"), focus ("AT"), SOA bucket ("sj:+150"), or for
/// calibration trials the probed modality and mode ("V-detection").
inline std::string condition_label(const sequencing::TrialSpec& t) {
    using namespace sequencing;
    if (auto* g = std::get_if<GngTruth>(&t.truth)) return cue_type_name(g->cue);
    if (auto* c = std::get_if<CjTruth>(&t.truth)) return to_string(c->focus);
    if (auto* s = std::get_if<SoaTruth>(&t.truth)) {
        const int v = s->soa.value;
        return to_string(t.task) + ":" + (v > 0 ? "+" : "") + std::to_string(v);
    }
    if (auto* c = std::get_if<CalibrationTruth>(&t.truth)) {
        const std::string mode(sequencing::kResponseModeNames.name(t.mode));
        if (!c->present || t.stimuli.empty()) return "catch-" + mode;
        return to_string(t.stimuli.front().modality) + "-" + mode;
    }
    throw Error("outcome with an unknown condition");
}

struct RtSummary {
    std::size_t trials = 0;      ///< scored trials in the condition
    std::size_t n = 0;           ///< in-window responses with an RT
    std::size_t n_excluded = 0;  ///< RTs removed by the outlier rule
    std::optional<double> mean_ms, median_ms, sd_ms;
    /// Fraction correct; absent for simultaneity judgments, which have no
    /// correct answer.
    std::optional<double> accuracy;
};

inline std::map<ConditionKey, RtSummary> condition_summary(const std::vector<TrialOutcome>& outcomes, Task task,
                                                           const OutlierRule& rule = {}) {
    std::map<ConditionKey, std::vector<const TrialOutcome*>> groups;
    for (const auto& o : outcomes) groups[{task, condition_label(o.trial), o.phase, o.difficulty}].push_back(&o);
    std::map<ConditionKey, RtSummary> out;
    for (const auto& [key, list] : groups) {
        RtSummary s;
        s.trials = list.size();
        // RTs stay measured from onset. Where the response window opens after
        // the stimulation (delayed judgments), the outlier rule is applied to
        // the time since the window opened, since its bounds are for speeded
        // responses.
        std::vector<double> rts, screened;
        std::size_t correct = 0;
        bool judged = false;
        for (const auto* o : list) {
            if (o->rt_ms) {
                const auto& tl = o->trial.timeline;
                rts.push_back(*o->rt_ms);
                screened.push_back(*o->rt_ms - std::max(0, tl.response_open_ms - tl.anchor_ms()));
            }
            correct += task::is_correct(o->classification);
            judged |= o->trial.mode != sequencing::ResponseMode::Simultaneity;
        }
        s.n = rts.size();
        const auto keep = outlier_keep_mask(screened, rule);
        std::vector<double> kept;
        for (std::size_t i = 0; i < rts.size(); ++i)
            if (keep[i]) kept.push_back(rts[i]);
        s.n_excluded = rts.size() - kept.size();
        if (!kept.empty()) {
            s.mean_ms = mean(kept);
            s.median_ms = median(kept);
            s.sd_ms = sample_sd(kept);
        }
        if (judged) s.accuracy = static_cast<double>(correct) / static_cast<double>(s.trials);
        out[key] = s;
    }
    return out;
}

inline std::map<ConditionKey, RtSummary> condition_summary(const TaskSession& s, const OutlierRule& rule = {}) {
    return condition_summary(s.outcomes, s.config.task, rule);
}

// ---------------------------------------------------------------------------
// PJ report

struct SoaRow {
    Phase phase = Phase::Experimental;
    TrialTask task = TrialTask::SJ;
    int soa_ms = 0;
    int n = 0;
    int responded = 0;
    /// "Simultaneous" answers for SJ, correct answers for TOJ.
    int positive = 0;
    double rate() const { return responded ? static_cast<double>(positive) / responded : 0.0; }
};

struct PjReport {
    SoaMs te_sound_first, te_flash_first;
    int tbw_ms = 0;
    std::vector<SoaRow> rows;
    const SoaRow* find(Phase p, TrialTask t, int soa) const {
        for (const auto& r : rows)
            if (r.phase == p && r.task == t && r.soa_ms == soa) return &r;
        return nullptr;
    }
};

inline PjReport pj_report(const TaskSession& s) {
    if (s.config.task != Task::PJ) throw InvalidArgument("PJ report of a non-PJ session");
    std::size_t planned_sj = 0, seen_sj = 0;
    if (const auto* ph = s.plan.find(Phase::Experimental))
        for (const auto& b : ph->blocks)
            for (const auto& t : b.trials) planned_sj += t.task == TrialTask::SJ;
    std::map<std::tuple<Phase, TrialTask, int>, SoaRow> rows;
    for (const auto& o : s.outcomes) {
        if (o.phase != Phase::Experimental && o.phase != Phase::Adaptive) continue;
        const int soa = std::get<sequencing::SoaTruth>(o.trial.truth).soa.value;
        auto& r = rows[{o.phase, o.trial.task, soa}];
        r.phase = o.phase;
        r.task = o.trial.task;
        r.soa_ms = soa;
        ++r.n;
        const bool in_window = o.classification != task::Classification::NoResponse &&
                               o.classification != task::Classification::Late;
        r.responded += in_window;
        r.positive += o.classification == task::Classification::Simultaneous ||
                      o.classification == task::Classification::Correct;
        if (o.phase == Phase::Experimental && o.trial.task == TrialTask::SJ) ++seen_sj;
    }
    if (planned_sj == 0 || seen_sj < planned_sj)
        throw Error("PJ report: simultaneity phase incomplete (" + std::to_string(seen_sj) + " of " +
                    std::to_string(planned_sj) + " trials)");
    PjReport r;
    r.te_sound_first = s.thresholds.pj.te_sound_first;
    r.te_flash_first = s.thresholds.pj.te_flash_first;
    r.tbw_ms = estimation::tbw_width(r.te_sound_first, r.te_flash_first);
    for (auto& [k, row] : rows) r.rows.push_back(row);
    return r;
}

// ---------------------------------------------------------------------------
// Psychometric tables from calibration trials

struct PsychometricTable {
    std::string series;  ///< e.g. "V/opacity/detection"
    std::vector<LevelCount> levels;
    PsychometricFit fit;
};

/// Detection and direction trials grouped by modality, parameter and mode.
/// Direction judgments are fitted with a 0.5 guess rate.
inline std::vector<PsychometricTable> psychometric_tables(const TaskSession& s) {
    std::map<std::string, std::pair<std::vector<double>, std::vector<bool>>> series;
    std::map<std::string, double> guess;
    for (const auto& o : s.outcomes) {
        const auto mode = o.trial.mode;
        if (mode != sequencing::ResponseMode::Detection && mode != sequencing::ResponseMode::DirectionJudgment) continue;
        if (o.trial.stimuli.empty()) continue;
        const auto& st = o.trial.stimuli.front();
        const double level = st.change ? st.change->magnitude.value() : st.intensity.value();
        const std::string name = to_string(st.modality) + "/" + std::string(kParamNames.name(st.param)) + "/" +
                                 std::string(sequencing::kResponseModeNames.name(mode));
        auto& [lv, rs] = series[name];
        lv.push_back(level);
        rs.push_back(task::is_correct(o.classification));
        guess[name] = mode == sequencing::ResponseMode::DirectionJudgment ? 0.5 : 0.0;
    }
    std::vector<PsychometricTable> out;
    for (auto& [name, d] : series) {
        PsychometricTable t;
        t.series = name;
        t.levels = tabulate(d.first, d.second);
        if (t.levels.size() >= 2) t.fit = fit_psychometric(d.first, d.second, guess[name]);
        else t.fit.degenerate = true;
        out.push_back(std::move(t));
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV (RFC 4180: CRLF records, fields quoted when they hold a comma, quote
// or line break, quotes doubled)

inline std::string csv_field(const std::string& f) {
    if (f.find_first_of(",\"\r\n") == std::string::npos) return f;
    std::string out = "\"";
    for (char c : f) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

using CsvRow = std::vector<std::string>;

inline std::string csv_text(const CsvRow& header, const std::vector<CsvRow>& rows) {
    std::string out;
    auto line = [&](const CsvRow& r) {
        for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + csv_field(r[i]);
        out += "\r\n";
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
}

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}
inline std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : ""; }

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + p.string());
    out << text;
}

// ---------------------------------------------------------------------------
// Whole-log analysis

struct LogAnalysis {
    std::string source;
    TaskSession session;
    std::map<ConditionKey, RtSummary> conditions;
    FrameDropReport frames;
    std::optional<QuestionnaireScores> questionnaires;
    std::optional<PjReport> pj;
    std::vector<PsychometricTable> psychometric;
    json summary;
};

inline LogAnalysis analyze_log(const service::SessionLog& log, const std::string& source,
                               const OutlierRule& rule = {}) {
    LogAnalysis a;
    a.source = source;
    a.session = service::replay_log(log);
    const auto& s = a.session;
    a.conditions = condition_summary(s, rule);

    std::vector<double> intervals;
    for (const auto& e : log.events)
        if (e.kind == task::EventKind::FrameInterval)
            for (double v : e.payload.value("intervals_ms", std::vector<double>{})) intervals.push_back(v);
    a.frames = frame_drop_report(intervals, 1000.0 / s.config.timing.refresh_hz);

    std::optional<std::vector<double>> tlx, presence;
    for (const auto& q : s.questionnaires) (q.kind == "nasa-tlx" ? tlx : presence) = q.items;
    if (tlx && presence) a.questionnaires = questionnaire_scores(*tlx, *presence);
    if (s.config.task == Task::PJ && task::task_status(s) == task::Status::Done) a.pj = pj_report(s);
    a.psychometric = psychometric_tables(s);

    json trials = json::object(), planned = json::object();
    for (Phase p : {Phase::Practice, Phase::Thresholding, Phase::Verification, Phase::Experimental, Phase::Adaptive})
        trials[sequencing::to_string(p)] = task::outcomes_in(s, p).size();
    bool reconciled = task::task_status(s) == task::Status::Done;
    for (Phase p : {Phase::Experimental, Phase::Adaptive}) {
        planned[sequencing::to_string(p)] = s.plan.trial_count(p);
        reconciled = reconciled && s.plan.trial_count(p) == task::outcomes_in(s, p).size();
    }
    json by_class = json::object();
    for (const auto& o : s.outcomes) by_class[task::to_string(o.classification)] = by_class.value(task::to_string(o.classification), 0) + 1;

    a.summary = {{"log", source},
                 {"task", to_string(s.config.task)},
                 {"seed", s.config.seed},
                 {"config_hash", log.header.value("config_hash", "")},
                 {"status", task::to_string(task::task_status(s))},
                 {"trials", trials},
                 {"planned", planned},
                 {"reconciled", reconciled},
                 {"classifications", by_class},
                 {"thresholds", to_json_doc(s.thresholds)},
                 {"events", log.events.size()},
                 {"protocol_violations", s.violations},
                 {"frame_drops", {{"intervals", a.frames.total}, {"dropped", a.frames.dropped.size()}, {"rate", a.frames.rate}}}};
    if (a.questionnaires)
        a.summary["questionnaires"] = {{"nasa_tlx", a.questionnaires->tlx}, {"presence", a.questionnaires->presence}};
    if (a.pj) a.summary["pj"] = {{"te_sound_first_ms", a.pj->te_sound_first.value},
                                 {"te_flash_first_ms", a.pj->te_flash_first.value},
                                 {"tbw_ms", a.pj->tbw_ms}};
    return a;
}

inline const CsvRow& condition_header() {
    static const CsvRow h{"log", "task", "phase", "condition", "difficulty", "trials", "n_rt", "n_excluded",
                          "mean_ms", "median_ms", "sd_ms", "accuracy"};
    return h;
}

inline std::vector<CsvRow> condition_rows(const LogAnalysis& a) {
    std::vector<CsvRow> rows;
    for (const auto& [k, s] : a.conditions)
        rows.push_back({a.source, to_string(k.task), sequencing::to_string(k.phase), k.condition, fmt(k.difficulty),
                        std::to_string(s.trials), std::to_string(s.n), std::to_string(s.n_excluded), fmt(s.mean_ms),
                        fmt(s.median_ms), fmt(s.sd_ms), fmt(s.accuracy)});
    return rows;
}

inline std::vector<CsvRow> pj_rows(const LogAnalysis& a) {
    std::vector<CsvRow> rows;
    if (!a.pj) return rows;
    for (const auto& r : a.pj->rows)
        rows.push_back({a.source, sequencing::to_string(r.phase), to_string(r.task), std::to_string(r.soa_ms),
                        std::to_string(r.n), std::to_string(r.responded), std::to_string(r.positive), fmt(r.rate())});
    return rows;
}

inline std::vector<CsvRow> psychometric_rows(const LogAnalysis& a) {
    std::vector<CsvRow> rows;
    for (const auto& t : a.psychometric) {
        const auto& p = t.fit.params;
        for (const auto& c : t.levels)
            rows.push_back({a.source, t.series, fmt(c.level), std::to_string(c.n), std::to_string(c.yes),
                            fmt(static_cast<double>(c.yes) / c.n), p ? fmt(p->threshold) : "", p ? fmt(p->spread) : "",
                            p ? fmt(p->lapse) : "", t.fit.degenerate ? "degenerate" : (t.fit.converged ? "converged" : "not-converged")});
    }
    return rows;
}

/// Writes conditions.csv, pj_soa.csv, psychometric.csv and summary.json for
/// a set of analyzed logs.
inline json write_analysis(const std::vector<LogAnalysis>& all, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::vector<CsvRow> cond, pj, psy;
    json logs = json::array();
    for (const auto& a : all) {
        for (auto& r : condition_rows(a)) cond.push_back(std::move(r));
        for (auto& r : pj_rows(a)) pj.push_back(std::move(r));
        for (auto& r : psychometric_rows(a)) psy.push_back(std::move(r));
        logs.push_back(a.summary);
    }
    write_text(out_dir / "conditions.csv", csv_text(condition_header(), cond));
    write_text(out_dir / "pj_soa.csv",
               csv_text({"log", "phase", "task", "soa_ms", "trials", "responded", "positive", "rate"}, pj));
    write_text(out_dir / "psychometric.csv",
               csv_text({"log", "series", "level", "n", "yes", "rate", "fit_threshold", "fit_spread", "fit_lapse", "fit"},
                        psy));
    json summary{{"logs", logs}};
    write_text(out_dir / "summary.json", summary.dump(2) + "\n");
    return summary;
}

}  // namespace msi::analysis
