#include <gtest/gtest.h>

#include "msi/core/model.hpp"

using namespace msi;

namespace {

GngCue cue(std::initializer_list<std::pair<Modality, GngRole>> roles) {
    GngCue c;
    for (auto& [m, r] : roles) c.roles[m] = r;
    return c;
}

/// Every nonempty role assignment: 3 bits pick the presented modalities,
/// 3 more bits pick Go/NoGo for each.
std::vector<GngCue> all_cues() {
    std::vector<GngCue> out;
    for (int subset = 1; subset < 8; ++subset)
        for (int roles = 0; roles < 8; ++roles) {
            bool canonical = true;
            GngCue c;
            for (int i = 0; i < 3; ++i) {
                const bool present = subset & (1 << i);
                const bool go = roles & (1 << i);
                if (!present && go) canonical = false;  // role bits only matter for presented modalities
                if (present) c.roles[kModalities[i]] = go ? GngRole::Go : GngRole::NoGo;
            }
            if (canonical) out.push_back(c);
        }
    return out;
}

}  // namespace

TEST(GngTrialLabel, AnyGoRoleMakesGo) {
    EXPECT_EQ(gng_trial_label(cue({{Modality::Visual, GngRole::Go},
                                   {Modality::Auditory, GngRole::NoGo},
                                   {Modality::Tactile, GngRole::NoGo}})),
              GngLabel::Go);
    EXPECT_EQ(gng_trial_label(cue({{Modality::Auditory, GngRole::NoGo}})), GngLabel::NoGo);
}

TEST(GngTrialLabel, EmptyCueThrows) { EXPECT_THROW(gng_trial_label(GngCue{}), InvalidArgument); }

TEST(GngTrialLabel, ExhaustiveEnumerationHas19GoOf26) {
    auto cues = all_cues();
    ASSERT_EQ(cues.size(), 26u);
    int go = 0;
    for (const auto& c : cues) go += gng_trial_label(c) == GngLabel::Go;
    EXPECT_EQ(go, 19);
}

TEST(GngTrialLabel, AddingGoModalityNeverTurnsGoIntoNoGo) {
    for (const auto& c : all_cues()) {
        for (Modality m : kModalities) {
            GngCue bigger = c;
            bigger.roles[m] = GngRole::Go;
            if (gng_trial_label(c) == GngLabel::Go) EXPECT_EQ(gng_trial_label(bigger), GngLabel::Go);
            EXPECT_EQ(gng_trial_label(bigger), GngLabel::Go);
        }
    }
}

TEST(CjCorrectAnswer, Examples) {
    using D = Direction;
    using M = Modality;
    EXPECT_EQ(cj_correct_answer(Focus::VT, {{M::Visual, D::Increase}, {M::Tactile, D::Increase}, {M::Auditory, D::Decrease}}),
              CjAnswer::Congruent);
    EXPECT_EQ(cj_correct_answer(Focus::VT, {{M::Visual, D::Increase}, {M::Tactile, D::Decrease}, {M::Auditory, D::Increase}}),
              CjAnswer::Incongruent);
    for (Focus f : kFoci)
        EXPECT_EQ(cj_correct_answer(f, {{M::Visual, D::Increase}, {M::Tactile, D::Increase}, {M::Auditory, D::Increase}}),
                  CjAnswer::Congruent);
}

TEST(CjCorrectAnswer, MissingModalityThrows) {
    EXPECT_THROW(cj_correct_answer(Focus::AV, {{Modality::Visual, Direction::Increase}}), InvalidArgument);
}

TEST(CjCorrectAnswer, MatchesTruthTableForAll24Cases) {
    // Rows: focus, V, A, T ('+' increase, '-' decrease), expected ('=' congruent).
    struct Row {
        Focus focus;
        const char* vat;
        char expected;
    };
    const Row table[] = {
        {Focus::AV, "+++", '='}, {Focus::AV, "++-", '='}, {Focus::AV, "+-+", '!'}, {Focus::AV, "+--", '!'},
        {Focus::AV, "-++", '!'}, {Focus::AV, "-+-", '!'}, {Focus::AV, "--+", '='}, {Focus::AV, "---", '='},
        {Focus::VT, "+++", '='}, {Focus::VT, "++-", '!'}, {Focus::VT, "+-+", '='}, {Focus::VT, "+--", '!'},
        {Focus::VT, "-++", '!'}, {Focus::VT, "-+-", '='}, {Focus::VT, "--+", '!'}, {Focus::VT, "---", '='},
        {Focus::AT, "+++", '='}, {Focus::AT, "++-", '!'}, {Focus::AT, "+-+", '!'}, {Focus::AT, "+--", '='},
        {Focus::AT, "-++", '='}, {Focus::AT, "-+-", '!'}, {Focus::AT, "--+", '!'}, {Focus::AT, "---", '='},
    };
    for (const auto& row : table) {
        std::map<Modality, Direction> dirs;
        const Modality order[] = {Modality::Visual, Modality::Auditory, Modality::Tactile};
        for (int i = 0; i < 3; ++i) dirs[order[i]] = row.vat[i] == '+' ? Direction::Increase : Direction::Decrease;
        const auto expected = row.expected == '=' ? CjAnswer::Congruent : CjAnswer::Incongruent;
        EXPECT_EQ(cj_correct_answer(row.focus, dirs), expected) << to_string(row.focus) << " " << row.vat;

        // Flipping the unattended modality never changes the answer.
        auto [a, b] = attended(row.focus);
        for (Modality m : kModalities) {
            if (m == a || m == b) continue;
            auto flipped = dirs;
            flipped[m] = flipped[m] == Direction::Increase ? Direction::Decrease : Direction::Increase;
            EXPECT_EQ(cj_correct_answer(row.focus, flipped), expected);
        }
    }
}

TEST(ScaleIntensity, Examples) {
    EXPECT_DOUBLE_EQ(scale_intensity(Intensity(0.5), 150).value(), 0.75);
    EXPECT_DOUBLE_EQ(scale_intensity(Intensity(0.8), 150).value(), 1.0);
    EXPECT_DOUBLE_EQ(scale_intensity(Intensity(0.5), 90).value(), 0.45);
}

TEST(ScaleIntensity, RejectsNonpositivePercent) {
    EXPECT_THROW(scale_intensity(Intensity(0.5), 0), InvalidArgument);
    EXPECT_THROW(scale_intensity(Intensity(0.5), -10), InvalidArgument);
}

TEST(ScaleIntensity, MonotoneAndIdempotentAtClamp) {
    double prev_t = -1;
    for (int i = 0; i <= 100; ++i) {
        const double t = i / 100.0;
        double prev_p = -1;
        for (double pct : {1.0, 50.0, 90.0, 100.0, 138.0, 150.0, 400.0}) {
            const double v = scale_intensity(Intensity(t), pct).value();
            EXPECT_GE(v, prev_p);
            prev_p = v;
        }
        const double v150 = scale_intensity(Intensity(t), 150).value();
        EXPECT_GE(v150, prev_t);
        prev_t = v150;
    }
    EXPECT_DOUBLE_EQ(scale_intensity(scale_intensity(Intensity(0.9), 150), 150).value(), 1.0);
    EXPECT_DOUBLE_EQ(scale_intensity(Intensity(0.0), 150).value(), 0.0);
}

TEST(Intensity, RangeChecked) {
    EXPECT_THROW(Intensity(1.01), InvalidArgument);
    EXPECT_THROW(Intensity(-0.01), InvalidArgument);
    EXPECT_NO_THROW(Intensity(0.0));
    EXPECT_NO_THROW(Intensity(1.0));
}

TEST(GngStimulus, TactileGoHasNoVibration) {
    EXPECT_FALSE(gng_stimulus(Modality::Tactile, GngRole::Go, Intensity(0.5), 500).has_value());
    auto nogo = gng_stimulus(Modality::Tactile, GngRole::NoGo, Intensity(0.5), 500);
    ASSERT_TRUE(nogo);
    EXPECT_EQ(nogo->param, StimulusParam::VibrationDrive);
    EXPECT_EQ(gng_stimulus(Modality::Visual, GngRole::Go, Intensity(0.5), 500)->shape, StimulusShape::GreenCheckmark);
    EXPECT_EQ(gng_stimulus(Modality::Visual, GngRole::NoGo, Intensity(0.5), 500)->shape, StimulusShape::RedCross);
}
