#pragma once

// Parametric simulated participant: logistic detection per stimulus
// parameter, a Gaussian simultaneity window, a cumulative-Gaussian temporal
// order curve and lognormal reaction times.

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>

#include <boost/math/distributions/normal.hpp>
#include <nlohmann/json.hpp>

#include "msi/core/config.hpp"
#include "msi/core/model.hpp"
#include "msi/core/random.hpp"
#include "msi/sequencing/plan.hpp"

namespace msi::sim {

using nlohmann::json;
using sequencing::ResponseMode;
using sequencing::TrialSpec;

struct Logistic {
    double threshold = 0.3;
    double spread = 0.03;
    double guess = 0.0;
    double lapse = 0.0;
    friend bool operator==(const Logistic&, const Logistic&) = default;
};

struct SjWindow {
    double center_ms = 20.0;
    double width_ms = 70.0;
    double lapse = 0.02;
    friend bool operator==(const SjWindow&, const SjWindow&) = default;
};

struct TojCurve {
    double pss_ms = 0.0;
    double jnd_ms = 50.0;
    double lapse = 0.02;
    friend bool operator==(const TojCurve&, const TojCurve&) = default;
};

/// Lognormal decision time plus a shift per condition label (cue type such
/// as "VA", focus such as "AT", or "sj"/"toj").
struct RtModel {
    double mu_log = std::log(400.0);
    double sigma_log = 0.15;
    std::map<std::string, double> offsets_ms;
    friend bool operator==(const RtModel&, const RtModel&) = default;
};

struct SimObserver {
    std::map<std::pair<Modality, StimulusParam>, Logistic> detection;
    SjWindow sj;
    TojCurve toj;
    RtModel rt;
    std::vector<double> tlx{55, 45, 40, 50, 35, 30};
    std::vector<double> presence{5, 5, 4};
    /// Onset latency of the simulated display, uniform in [0, max].
    double max_onset_latency_ms = 3.0;
    /// Per-frame probability of a dropped frame.
    double frame_drop_prob = 0.01;
    friend bool operator==(const SimObserver&, const SimObserver&) = default;
};

/// Default observer: moderate thresholds on every parameter, no lapses in
/// detection, and multisensory speed-up in reaction time.
inline SimObserver default_observer() {
    SimObserver o;
    auto set = [&](Modality m, StimulusParam p, double th) { o.detection[{m, p}] = Logistic{th, 0.02, 0.0, 0.0}; };
    set(Modality::Visual, StimulusParam::Opacity, 0.20);
    set(Modality::Auditory, StimulusParam::Volume, 0.15);
    set(Modality::Tactile, StimulusParam::VibrationDrive, 0.30);
    set(Modality::Visual, StimulusParam::Contrast, 0.12);
    set(Modality::Auditory, StimulusParam::ToneAmplitude, 0.10);
    o.rt.offsets_ms = {{"V", 20}, {"A", 20}, {"T", 20}, {"VA", -15}, {"VT", -15}, {"AT", -15}, {"VAT", -50}};
    return o;
}

inline void check_observer(const SimObserver& o) {
    auto prob = [](double p, const char* what) {
        if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument(std::string("observer ") + what + " outside [0,1]");
    };
    for (const auto& [k, l] : o.detection) {
        if (!(l.spread > 0)) throw InvalidArgument("observer detection spread must be positive");
        prob(l.guess, "guess");
        prob(l.lapse, "lapse");
        if (l.guess + l.lapse > 1.0) throw InvalidArgument("observer guess + lapse exceeds 1");
    }
    if (!(o.sj.width_ms > 0)) throw InvalidArgument("observer SJ width must be positive");
    if (!(o.toj.jnd_ms > 0)) throw InvalidArgument("observer TOJ jnd must be positive");
    prob(o.sj.lapse, "SJ lapse");
    prob(o.toj.lapse, "TOJ lapse");
    prob(o.frame_drop_prob, "frame drop probability");
    if (!(o.rt.sigma_log >= 0)) throw InvalidArgument("observer RT sigma must be nonnegative");
    if (!(o.max_onset_latency_ms >= 0)) throw InvalidArgument("observer onset latency must be nonnegative");
}

inline json observer_to_json(const SimObserver& o) {
    json det = json::array();
    for (const auto& [k, l] : o.detection)
        det.push_back({{"modality", to_string(k.first)},
                       {"param", std::string(kParamNames.name(k.second))},
                       {"threshold", l.threshold},
                       {"spread", l.spread},
                       {"guess", l.guess},
                       {"lapse", l.lapse}});
    return {{"detection", det},
            {"sj", {{"center_ms", o.sj.center_ms}, {"width_ms", o.sj.width_ms}, {"lapse", o.sj.lapse}}},
            {"toj", {{"pss_ms", o.toj.pss_ms}, {"jnd_ms", o.toj.jnd_ms}, {"lapse", o.toj.lapse}}},
            {"rt", {{"mu_log", o.rt.mu_log}, {"sigma_log", o.rt.sigma_log}, {"offsets_ms", o.rt.offsets_ms}}},
            {"tlx", o.tlx},
            {"presence", o.presence},
            {"max_onset_latency_ms", o.max_onset_latency_ms},
            {"frame_drop_prob", o.frame_drop_prob}};
}

/// Missing keys keep the default observer's values.
inline SimObserver observer_from_json(const json& j) {
    SimObserver o = default_observer();
    if (j.contains("detection"))
        for (const auto& d : j.at("detection")) {
            const auto key = std::make_pair(kModalityNames.parse(d.at("modality").get<std::string>(), "modality"),
                                            kParamNames.parse(d.at("param").get<std::string>(), "param"));
            Logistic l = o.detection.contains(key) ? o.detection.at(key) : Logistic{};
            l.threshold = d.value("threshold", l.threshold);
            l.spread = d.value("spread", l.spread);
            l.guess = d.value("guess", l.guess);
            l.lapse = d.value("lapse", l.lapse);
            o.detection[key] = l;
        }
    if (j.contains("sj")) {
        const auto& s = j.at("sj");
        o.sj = {s.value("center_ms", o.sj.center_ms), s.value("width_ms", o.sj.width_ms), s.value("lapse", o.sj.lapse)};
    }
    if (j.contains("toj")) {
        const auto& t = j.at("toj");
        o.toj = {t.value("pss_ms", o.toj.pss_ms), t.value("jnd_ms", o.toj.jnd_ms), t.value("lapse", o.toj.lapse)};
    }
    if (j.contains("rt")) {
        const auto& r = j.at("rt");
        o.rt.mu_log = r.value("mu_log", o.rt.mu_log);
        o.rt.sigma_log = r.value("sigma_log", o.rt.sigma_log);
        if (r.contains("offsets_ms")) o.rt.offsets_ms = r.at("offsets_ms").get<std::map<std::string, double>>();
    }
    o.tlx = j.value("tlx", o.tlx);
    o.presence = j.value("presence", o.presence);
    o.max_onset_latency_ms = j.value("max_onset_latency_ms", o.max_onset_latency_ms);
    o.frame_drop_prob = j.value("frame_drop_prob", o.frame_drop_prob);
    check_observer(o);
    return o;
}

inline const Logistic& detection_curve(const SimObserver& o, Modality m, StimulusParam p) {
    auto it = o.detection.find({m, p});
    if (it == o.detection.end())
        throw InvalidArgument("observer has no detection curve for " + to_string(m) + "/" +
                              std::string(kParamNames.name(p)));
    return it->second;
}

inline double psychometric_prob(const Logistic& l, double intensity) {
    if (!(intensity >= 0.0 && intensity <= 1.0)) throw InvalidArgument("intensity out of [0,1]");
    const double z = (intensity - l.threshold) / l.spread;
    return l.guess + (1.0 - l.guess - l.lapse) / (1.0 + std::exp(-z));
}

inline double psychometric_prob(const SimObserver& o, Modality m, StimulusParam p, double intensity) {
    return psychometric_prob(detection_curve(o, m, p), intensity);
}

inline double p_simultaneous(const SimObserver& o, double soa_ms) {
    const double d = soa_ms - o.sj.center_ms;
    return (1.0 - o.sj.lapse) * std::exp(-d * d / (2.0 * o.sj.width_ms * o.sj.width_ms)) + o.sj.lapse / 2.0;
}

inline double p_visual_first(const SimObserver& o, double soa_ms) {
    const boost::math::normal_distribution<double> n(0.0, 1.0);
    return o.toj.lapse / 2.0 + (1.0 - o.toj.lapse) * boost::math::cdf(n, (soa_ms - o.toj.pss_ms) / o.toj.jnd_ms);
}

/// Probability that the direction of a change is perceived correctly:
/// detected changes are judged right, undetected ones are guessed.
inline double p_direction_correct(const SimObserver& o, const StimulusSpec& s) {
    const double p = psychometric_prob(o, s.modality, s.param, s.change->magnitude.value());
    return p + (1.0 - p) / 2.0;
}

struct SimResponse {
    std::optional<ButtonId> button;
    /// Press time relative to the trial origin, in ms.
    double press_ms = 0.0;
};

namespace detail {
inline std::string rt_condition(const TrialSpec& t) {
    using namespace sequencing;
    if (auto* g = std::get_if<GngTruth>(&t.truth)) return cue_type_name(g->cue);
    if (auto* c = std::get_if<CjTruth>(&t.truth)) return to_string(c->focus);
    return to_string(t.task);
}
}  // namespace detail

inline double sample_rt(const SimObserver& o, const TrialSpec& t, Rng& rng) {
    const auto& off = o.rt.offsets_ms;
    const auto it = off.find(detail::rt_condition(t));
    return rng.lognormal(o.rt.mu_log, o.rt.sigma_log) + (it == off.end() ? 0.0 : it->second);
}

/// Decision and press time for one trial.
inline SimResponse sim_respond(const SimObserver& o, const TrialSpec& t, Rng& rng, const ButtonConfig& buttons = {}) {
    using namespace sequencing;
    SimResponse r;
    auto press_from = [&](double start_ms, ButtonId b) {
        r.button = b;
        r.press_ms = start_ms + std::max(0.0, sample_rt(o, t, rng));
    };
    switch (t.mode) {
    case ResponseMode::GoNoGo: {
        const auto& cue = std::get<GngTruth>(t.truth).cue;
        bool go = false;
        // A Go tactile role has no vibration; the observer reads an unfelt
        // vibration as Go as well.
        if (cue.roles.contains(Modality::Tactile) && cue.roles.at(Modality::Tactile) == GngRole::Go) go = true;
        for (const auto& s : t.stimuli) {
            const bool seen = rng.bernoulli(psychometric_prob(o, s.modality, s.param, s.intensity.value()));
            const GngRole role = cue.roles.at(s.modality);
            if (role == GngRole::Go && seen) go = true;
            if (s.modality == Modality::Tactile && role == GngRole::NoGo && !seen) go = true;
        }
        if (go) press_from(t.timeline.anchor_ms(), buttons.go);
        return r;
    }
    case ResponseMode::Detection: {
        const auto& truth = std::get<CalibrationTruth>(t.truth);
        bool yes;
        if (truth.present && !t.stimuli.empty()) {
            const auto& s = t.stimuli.front();
            const double level = s.change ? s.change->magnitude.value() : s.intensity.value();
            yes = rng.bernoulli(psychometric_prob(o, s.modality, s.param, level));
        } else {
            // Catch trials present nothing; the observer does not guess.
            yes = false;
        }
        if (yes) press_from(std::max(t.timeline.response_open_ms, t.timeline.anchor_ms()), buttons.go);
        return r;
    }
    case ResponseMode::Simultaneity: {
        const double soa = std::get<SoaTruth>(t.truth).soa.value;
        press_from(t.timeline.response_open_ms, rng.bernoulli(p_simultaneous(o, soa)) ? buttons.yes : buttons.no);
        return r;
    }
    case ResponseMode::TemporalOrder: {
        const double soa = std::get<SoaTruth>(t.truth).soa.value;
        press_from(t.timeline.response_open_ms, rng.bernoulli(p_visual_first(o, soa)) ? buttons.yes : buttons.no);
        return r;
    }
    case ResponseMode::Congruency: {
        const auto& truth = std::get<CjTruth>(t.truth);
        std::map<Modality, Direction> seen;
        for (const auto& s : t.stimuli) {
            const Direction d = s.change->direction;
            const Direction other = d == Direction::Increase ? Direction::Decrease : Direction::Increase;
            seen[s.modality] = rng.bernoulli(p_direction_correct(o, s)) ? d : other;
        }
        const auto [a, b] = attended(truth.focus);
        press_from(t.timeline.response_open_ms, seen.at(a) == seen.at(b) ? buttons.yes : buttons.no);
        return r;
    }
    case ResponseMode::DirectionJudgment: {
        const auto& s = t.stimuli.front();
        const Direction d = s.change->direction;
        const bool right = rng.bernoulli(p_direction_correct(o, s));
        const bool up = (d == Direction::Increase) == right;
        press_from(t.timeline.response_open_ms, up ? buttons.yes : buttons.no);
        return r;
    }
    }
    return r;
}

}  // namespace msi::sim
