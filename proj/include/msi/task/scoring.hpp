#pragma once

// Trial scoring and the verification pass rule.

#include <optional>
#include <string>
#include <vector>

#include "msi/core/config.hpp"
#include "msi/core/model.hpp"
#include "msi/sequencing/plan.hpp"

namespace msi::task {

using sequencing::ResponseMode;
using sequencing::TrialSpec;

/// Simultaneous / NotSimultaneous record SJ judgments, which have no
/// correct answer.
enum class Classification {
    Hit,
    Miss,
    FalseAlarm,
    CorrectRejection,
    Correct,
    Incorrect,
    NoResponse,
    Late,
    Simultaneous,
    NotSimultaneous,
};

inline constexpr msi::detail::NameTable<Classification, 10> kClassificationNames{{{
    {Classification::Hit, "hit"},
    {Classification::Miss, "miss"},
    {Classification::FalseAlarm, "false-alarm"},
    {Classification::CorrectRejection, "correct-rejection"},
    {Classification::Correct, "correct"},
    {Classification::Incorrect, "incorrect"},
    {Classification::NoResponse, "no-response"},
    {Classification::Late, "late"},
    {Classification::Simultaneous, "simultaneous"},
    {Classification::NotSimultaneous, "not-simultaneous"},
}}};

inline std::string to_string(Classification c) { return std::string(kClassificationNames.name(c)); }

inline bool is_correct(Classification c) {
    return c == Classification::Hit || c == Classification::CorrectRejection || c == Classification::Correct;
}

/// Keyboard fallback keys map onto the controller buttons.
inline ButtonId canonical_button(ButtonId b) {
    switch (b) {
    case ButtonId::Space: return ButtonId::X;
    case ButtonId::RightShift: return ButtonId::R2;
    case ButtonId::LeftShift: return ButtonId::L2;
    default: return b;
    }
}

/// The buttons that count as a response for a trial mode.
inline bool button_counts(ResponseMode mode, ButtonId b, const ButtonConfig& buttons) {
    b = canonical_button(b);
    if (mode == ResponseMode::GoNoGo) return b == buttons.go;
    if (mode == ResponseMode::Detection) return b == buttons.go || b == buttons.yes;
    return b == buttons.yes || b == buttons.no;
}

/// `response` is the in-window button, if any.
inline Classification score_trial(const TrialSpec& trial, std::optional<ButtonId> response,
                                  const ButtonConfig& buttons = {}) {
    using sequencing::CalibrationTruth;
    using sequencing::CjTruth;
    using sequencing::GngTruth;
    using sequencing::SoaTruth;
    if (response) response = canonical_button(*response);
    const bool yes = response && *response == buttons.yes;
    switch (trial.mode) {
    case ResponseMode::GoNoGo: {
        const bool go = gng_trial_label(std::get<GngTruth>(trial.truth).cue) == GngLabel::Go;
        if (go) return response ? Classification::Hit : Classification::Miss;
        return response ? Classification::FalseAlarm : Classification::CorrectRejection;
    }
    case ResponseMode::Detection: {
        const bool present = std::get<CalibrationTruth>(trial.truth).present;
        if (present) return response ? Classification::Hit : Classification::Miss;
        return response ? Classification::FalseAlarm : Classification::CorrectRejection;
    }
    default: break;
    }
    if (!response) return Classification::NoResponse;
    switch (trial.mode) {
    case ResponseMode::Simultaneity: return yes ? Classification::Simultaneous : Classification::NotSimultaneous;
    case ResponseMode::TemporalOrder: {
        const int soa = std::get<SoaTruth>(trial.truth).soa.value;
        // Positive SOA: the flash leads, so "visual first" is right.
        if (soa == 0) return Classification::Incorrect;
        return yes == (soa > 0) ? Classification::Correct : Classification::Incorrect;
    }
    case ResponseMode::Congruency: {
        const auto& t = std::get<CjTruth>(trial.truth);
        const bool congruent = cj_correct_answer(t.focus, t.directions) == CjAnswer::Congruent;
        return yes == congruent ? Classification::Correct : Classification::Incorrect;
    }
    case ResponseMode::DirectionJudgment: {
        const auto d = std::get<CalibrationTruth>(trial.truth).direction;
        if (!d) throw InvalidArgument("direction trial without a direction");
        return yes == (*d == Direction::Increase) ? Classification::Correct : Classification::Incorrect;
    }
    default: break;
    }
    throw InvalidArgument("unscorable trial mode");
}

enum class Gate { Pass, Repeat };

inline Gate verification_gate(const std::vector<Classification>& results, double pass_fraction = 0.8) {
    if (results.empty()) throw InvalidArgument("verification without results");
    int correct = 0;
    for (auto c : results) correct += is_correct(c);
    // Compare in integers where possible so 8/10 against 0.8 is exact.
    const double need = pass_fraction * static_cast<double>(results.size());
    return correct + 1e-9 >= need ? Gate::Pass : Gate::Repeat;
}

}  // namespace msi::task
