#pragma once

// Domain vocabulary shared by every module: modalities, stimulus
// descriptions, cue semantics and intensity scaling.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace msi {

/// Base class for every error raised by the engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thrown when an operation's precondition is violated by its arguments.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

enum class Modality { Visual, Auditory, Tactile };
inline constexpr std::array<Modality, 3> kModalities{Modality::Visual, Modality::Auditory,
                                                     Modality::Tactile};

enum class Direction { Increase, Decrease };
inline constexpr std::array<Direction, 2> kDirections{Direction::Increase, Direction::Decrease};

enum class StimulusParam { Opacity, Volume, VibrationDrive, Contrast, ToneAmplitude };

enum class StimulusShape {
    GreenCheckmark,
    RedCross,
    CircularGrating,
    FadedCircle,
    Tone500Hz,
    ToneGo,
    ToneNoGo,
    Vibration,
    WarningSquares,
};

enum class GngRole { Go, NoGo };
enum class GngLabel { Go, NoGo };

/// The attended modality pair in the congruency task.
enum class Focus { AV, VT, AT };
inline constexpr std::array<Focus, 3> kFoci{Focus::AV, Focus::VT, Focus::AT};

enum class CjAnswer { Congruent, Incongruent };

enum class ButtonId { X, R2, L2, Space, RightShift, LeftShift };

enum class Task { GNG, PJ, CJ };
/// Trial-level task; PJ trials are either SJ or TOJ.
enum class TrialTask { GNG, SJ, TOJ, CJ };

/// Dimensionless stimulus drive in [0, 1].
class Intensity {
public:
    constexpr Intensity() = default;
    explicit Intensity(double v) : value_(v) {
        if (!(v >= 0.0 && v <= 1.0))
            throw InvalidArgument("intensity out of [0,1]: " + std::to_string(v));
    }
    static Intensity clamped(double v) { return Intensity(std::clamp(v, 0.0, 1.0)); }
    constexpr double value() const { return value_; }
    friend constexpr auto operator<=>(const Intensity&, const Intensity&) = default;

private:
    double value_ = 0.0;
};

/// Signed onset asynchrony: the delay of the sound onset relative to the
/// flash. Negative values mean the sound leads.
struct SoaMs {
    int value = 0;
    friend constexpr auto operator<=>(const SoaMs&, const SoaMs&) = default;
};

inline constexpr int kMaxAbsSoaMs = 1000;

struct Ramp {
    int up_ms = 100;
    int hold_ms = 100;
    int down_ms = 100;
    int total() const { return up_ms + hold_ms + down_ms; }
    friend bool operator==(const Ramp&, const Ramp&) = default;
};

struct StimulusChange {
    Direction direction = Direction::Increase;
    Intensity magnitude;
    Ramp ramp;
    friend bool operator==(const StimulusChange&, const StimulusChange&) = default;
};

struct StimulusSpec {
    Modality modality = Modality::Visual;
    StimulusParam param = StimulusParam::Opacity;
    StimulusShape shape = StimulusShape::GreenCheckmark;
    Intensity intensity;
    int duration_ms = 0;
    std::optional<StimulusChange> change;
    friend bool operator==(const StimulusSpec&, const StimulusSpec&) = default;
};

/// Roles of the modalities presented on one Go/NoGo trial.
struct GngCue {
    std::map<Modality, GngRole> roles;
    friend bool operator==(const GngCue&, const GngCue&) = default;
};

/// Go iff at least one presented modality carries a Go role.
inline GngLabel gng_trial_label(const GngCue& cue) {
    if (cue.roles.empty()) throw InvalidArgument("empty GNG cue");
    for (const auto& [m, role] : cue.roles)
        if (role == GngRole::Go) return GngLabel::Go;
    return GngLabel::NoGo;
}

inline std::pair<Modality, Modality> attended(Focus f) {
    switch (f) {
    case Focus::AV: return {Modality::Auditory, Modality::Visual};
    case Focus::VT: return {Modality::Visual, Modality::Tactile};
    case Focus::AT: return {Modality::Auditory, Modality::Tactile};
    }
    throw InvalidArgument("bad focus");
}

/// Congruent iff the attended pair changes in the same direction.
inline CjAnswer cj_correct_answer(Focus focus, const std::map<Modality, Direction>& dirs) {
    for (Modality m : kModalities)
        if (!dirs.contains(m)) throw InvalidArgument("missing modality direction");
    auto [a, b] = attended(focus);
    return dirs.at(a) == dirs.at(b) ? CjAnswer::Congruent : CjAnswer::Incongruent;
}

inline Intensity scale_intensity(Intensity threshold, double percent) {
    if (!(percent > 0.0)) throw InvalidArgument("percent must be positive");
    return Intensity::clamped(threshold.value() * percent / 100.0);
}

/// Per-parameter perceptual thresholds that feed stimulus scaling.
struct ThresholdProfile {
    struct Gng {
        Intensity visual_go_opacity;
        Intensity visual_nogo_opacity;
        Intensity auditory_go_volume;
        Intensity auditory_nogo_volume;
        Intensity tactile_nogo_drive;
        friend bool operator==(const Gng&, const Gng&) = default;
    };
    struct Pj {
        SoaMs te_sound_first;
        SoaMs te_flash_first;
        friend bool operator==(const Pj&, const Pj&) = default;
    };
    Gng gng;
    std::map<std::pair<Modality, Direction>, Intensity> cj;
    Pj pj;
    friend bool operator==(const ThresholdProfile&, const ThresholdProfile&) = default;
};

/// The five calibrated parameters of the Go/NoGo task.
enum class GngParam { VisualGoOpacity, VisualNoGoOpacity, AuditoryGoVolume, AuditoryNoGoVolume, TactileNoGoDrive };
inline constexpr std::array<GngParam, 5> kGngParams{
    GngParam::VisualGoOpacity, GngParam::VisualNoGoOpacity, GngParam::AuditoryGoVolume,
    GngParam::AuditoryNoGoVolume, GngParam::TactileNoGoDrive};

inline Intensity& gng_threshold(ThresholdProfile::Gng& g, GngParam p) {
    switch (p) {
    case GngParam::VisualGoOpacity: return g.visual_go_opacity;
    case GngParam::VisualNoGoOpacity: return g.visual_nogo_opacity;
    case GngParam::AuditoryGoVolume: return g.auditory_go_volume;
    case GngParam::AuditoryNoGoVolume: return g.auditory_nogo_volume;
    case GngParam::TactileNoGoDrive: return g.tactile_nogo_drive;
    }
    throw InvalidArgument("bad GNG parameter");
}
inline Intensity gng_threshold(const ThresholdProfile::Gng& g, GngParam p) {
    return gng_threshold(const_cast<ThresholdProfile::Gng&>(g), p);
}

inline Modality gng_param_modality(GngParam p) {
    switch (p) {
    case GngParam::VisualGoOpacity:
    case GngParam::VisualNoGoOpacity: return Modality::Visual;
    case GngParam::AuditoryGoVolume:
    case GngParam::AuditoryNoGoVolume: return Modality::Auditory;
    case GngParam::TactileNoGoDrive: return Modality::Tactile;
    }
    throw InvalidArgument("bad GNG parameter");
}

inline GngRole gng_param_role(GngParam p) {
    switch (p) {
    case GngParam::VisualGoOpacity:
    case GngParam::AuditoryGoVolume: return GngRole::Go;
    default: return GngRole::NoGo;
    }
}

/// Stimulus for one modality/role of the Go/NoGo task. Tactile Go has no
/// stimulus (no vibration), so it returns nullopt.
inline std::optional<StimulusSpec> gng_stimulus(Modality m, GngRole role, Intensity level, int duration_ms) {
    StimulusSpec s;
    s.modality = m;
    s.intensity = level;
    s.duration_ms = duration_ms;
    switch (m) {
    case Modality::Visual:
        s.param = StimulusParam::Opacity;
        s.shape = role == GngRole::Go ? StimulusShape::GreenCheckmark : StimulusShape::RedCross;
        break;
    case Modality::Auditory:
        s.param = StimulusParam::Volume;
        s.shape = role == GngRole::Go ? StimulusShape::ToneGo : StimulusShape::ToneNoGo;
        break;
    case Modality::Tactile:
        if (role == GngRole::Go) return std::nullopt;
        s.param = StimulusParam::VibrationDrive;
        s.shape = StimulusShape::Vibration;
        break;
    }
    return s;
}

/// Parameter and shape used for a modality in the congruency task.
inline StimulusSpec cj_carrier(Modality m) {
    StimulusSpec s;
    s.modality = m;
    switch (m) {
    case Modality::Visual:
        s.param = StimulusParam::Contrast;
        s.shape = StimulusShape::CircularGrating;
        break;
    case Modality::Auditory:
        s.param = StimulusParam::ToneAmplitude;
        s.shape = StimulusShape::Tone500Hz;
        break;
    case Modality::Tactile:
        s.param = StimulusParam::VibrationDrive;
        s.shape = StimulusShape::Vibration;
        break;
    }
    return s;
}

// ---------------------------------------------------------------------------
// Names used in documents, logs and reports.

namespace detail {
template <class E, std::size_t N>
struct NameTable {
    std::array<std::pair<E, std::string_view>, N> entries;
    std::string_view name(E e) const {
        for (auto& [k, v] : entries)
            if (k == e) return v;
        throw InvalidArgument("unnamed enum value");
    }
    bool contains(std::string_view s) const {
        for (auto& [k, v] : entries)
            if (v == s) return true;
        return false;
    }
    std::optional<E> find(std::string_view s) const {
        for (auto& [k, v] : entries)
            if (v == s) return k;
        return std::nullopt;
    }
    E parse(std::string_view s, std::string_view what) const {
        for (auto& [k, v] : entries)
            if (v == s) return k;
        throw InvalidArgument("unknown " + std::string(what) + ": " + std::string(s));
    }
};
}  // namespace detail

inline constexpr detail::NameTable<Modality, 3> kModalityNames{
    {{{Modality::Visual, "V"}, {Modality::Auditory, "A"}, {Modality::Tactile, "T"}}}};
inline constexpr detail::NameTable<Direction, 2> kDirectionNames{
    {{{Direction::Increase, "up"}, {Direction::Decrease, "down"}}}};
inline constexpr detail::NameTable<Focus, 3> kFocusNames{
    {{{Focus::AV, "AV"}, {Focus::VT, "VT"}, {Focus::AT, "AT"}}}};
inline constexpr detail::NameTable<GngRole, 2> kRoleNames{{{{GngRole::Go, "go"}, {GngRole::NoGo, "nogo"}}}};
inline constexpr detail::NameTable<ButtonId, 6> kButtonNames{
    {{{ButtonId::X, "X"},
      {ButtonId::R2, "R2"},
      {ButtonId::L2, "L2"},
      {ButtonId::Space, "Space"},
      {ButtonId::RightShift, "RightShift"},
      {ButtonId::LeftShift, "LeftShift"}}}};
inline constexpr detail::NameTable<Task, 3> kTaskNames{{{{Task::GNG, "gng"}, {Task::PJ, "pj"}, {Task::CJ, "cj"}}}};
inline constexpr detail::NameTable<TrialTask, 4> kTrialTaskNames{
    {{{TrialTask::GNG, "gng"}, {TrialTask::SJ, "sj"}, {TrialTask::TOJ, "toj"}, {TrialTask::CJ, "cj"}}}};
inline constexpr detail::NameTable<StimulusParam, 5> kParamNames{
    {{{StimulusParam::Opacity, "opacity"},
      {StimulusParam::Volume, "volume"},
      {StimulusParam::VibrationDrive, "vibration-drive"},
      {StimulusParam::Contrast, "contrast"},
      {StimulusParam::ToneAmplitude, "tone-amplitude"}}}};
inline constexpr detail::NameTable<StimulusShape, 9> kShapeNames{
    {{{StimulusShape::GreenCheckmark, "green-checkmark"},
      {StimulusShape::RedCross, "red-cross"},
      {StimulusShape::CircularGrating, "circular-grating"},
      {StimulusShape::FadedCircle, "faded-circle"},
      {StimulusShape::Tone500Hz, "tone-500Hz"},
      {StimulusShape::ToneGo, "tone-go"},
      {StimulusShape::ToneNoGo, "tone-nogo"},
      {StimulusShape::Vibration, "vibration"},
      {StimulusShape::WarningSquares, "warning-squares"}}}};
inline constexpr detail::NameTable<GngParam, 5> kGngParamNames{
    {{{GngParam::VisualGoOpacity, "visual_go_opacity"},
      {GngParam::VisualNoGoOpacity, "visual_nogo_opacity"},
      {GngParam::AuditoryGoVolume, "auditory_go_volume"},
      {GngParam::AuditoryNoGoVolume, "auditory_nogo_volume"},
      {GngParam::TactileNoGoDrive, "tactile_nogo_drive"}}}};

inline std::string to_string(Modality m) { return std::string(kModalityNames.name(m)); }
inline std::string to_string(Direction d) { return std::string(kDirectionNames.name(d)); }
inline std::string to_string(Focus f) { return std::string(kFocusNames.name(f)); }
inline std::string to_string(ButtonId b) { return std::string(kButtonNames.name(b)); }
inline std::string to_string(Task t) { return std::string(kTaskNames.name(t)); }
inline std::string to_string(TrialTask t) { return std::string(kTrialTaskNames.name(t)); }
inline std::string to_string(GngParam p) { return std::string(kGngParamNames.name(p)); }

/// Cue-type name of a set of presented modalities, e.g. "V", "AV", "VAT".
inline std::string cue_type_name(const GngCue& cue) {
    std::string s;
    for (Modality m : kModalities)
        if (cue.roles.contains(m)) s += to_string(m);
    return s;
}

}  // namespace msi
