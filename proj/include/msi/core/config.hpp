#pragma once

// Session configuration document (JSON) and its validation.
//
// Top-level sections: task, seed, blocks, timing, buttons, thresholding.
// Every key is optional except `task` and `seed`; missing keys take the
// defaults below. Unknown keys are reported as violations so typos do not
// silently fall back to defaults.

#include <cmath>
#include <cstdio>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "msi/core/model.hpp"
#include "msi/core/random.hpp"

namespace msi {

struct BlockConfig {
    int gng_block_size = 70;
    int gng_mixed_block_size = 70;
    double go_fraction = 0.2;
    int gng_adaptive_blocks = 5;
    int gng_rest_ms = 5000;
    int pj_block_size = 6;
    int pj_blocks_per_task = 6;
    int pj_rest_ms = 7000;
    int cj_block_size = 32;
    int cj_repeats_per_focus = 2;
    int cj_adaptive_blocks_per_focus = 5;
    int cj_rest_ms = 5000;
    int cue_prompt_ms = 2000;
    int practice_trials = 4;
    friend bool operator==(const BlockConfig&, const BlockConfig&) = default;
};

struct TimingConfig {
    int gng_stimulus_ms = 500;
    int gng_response_window_ms = 1000;
    int gng_iti_min_ms = 1000;
    int gng_iti_max_ms = 1500;
    int pj_warning_delay_min_ms = 500;
    int pj_warning_delay_max_ms = 1000;
    int pj_trailing_ms = 150;
    int pj_response_window_ms = 3000;
    int pj_iti_ms = 500;
    int block_onset_delay_ms = 100;
    int cj_pre_change_min_ms = 700;
    int cj_pre_change_max_ms = 1000;
    Ramp cj_ramp{100, 100, 100};
    int cj_total_ms = 2000;
    int cj_response_window_ms = 3000;
    int cj_iti_ms = 500;
    int max_abs_soa_ms = kMaxAbsSoaMs;
    double refresh_hz = 60.0;
    /// Multiplier on the live server's real waits; 1 in production.
    double time_scale = 1.0;
    friend bool operator==(const TimingConfig&, const TimingConfig&) = default;
};

struct ButtonConfig {
    ButtonId go = ButtonId::X;
    ButtonId yes = ButtonId::R2;  // simultaneous / visual-first / congruent / increase / detected
    ButtonId no = ButtonId::L2;
    friend bool operator==(const ButtonConfig&, const ButtonConfig&) = default;
};

struct AscendingConfig {
    double start = 0.02;
    double step = 0.02;
    int confirm = 2;
    friend bool operator==(const AscendingConfig&, const AscendingConfig&) = default;
};

struct SjStaircaseConfig {
    std::vector<int> sound_first_starts{-250, 0};
    std::vector<int> flash_first_starts{0, 250};
    int initial_step_ms = 30;
    int floor_step_ms = 10;
    int max_reversals = 8;
    int max_trials = 40;
    friend bool operator==(const SjStaircaseConfig&, const SjStaircaseConfig&) = default;
};

struct QuestConfig {
    double beta = 3.5;
    double gamma = 0.5;
    double delta = 0.02;
    double grid_min = 0.005;
    double grid_max = 1.0;
    int grid_points = 200;
    double prior_sd_octaves = 1.0;
    int trials_per_direction = 30;
    friend bool operator==(const QuestConfig&, const QuestConfig&) = default;
};

struct VerificationConfig {
    int trials = 10;
    double pass_fraction = 0.8;
    double percent = 150.0;
    double raise_factor = 1.25;
    int max_rounds = 5;
    friend bool operator==(const VerificationConfig&, const VerificationConfig&) = default;
};

struct ThresholdingConfig {
    /// "run" calibrates in-session; "fixed" starts at the experimental phase
    /// with the thresholds given in `fixed`.
    bool run = true;
    std::optional<ThresholdProfile> fixed;
    std::vector<GngParam> gng_battery{kGngParams.begin(), kGngParams.end()};
    double practice_intensity = 0.9;
    double experimental_percent = 150.0;
    AscendingConfig ascending;
    SjStaircaseConfig sj;
    QuestConfig quest;
    VerificationConfig verification;
    friend bool operator==(const ThresholdingConfig&, const ThresholdingConfig&) = default;
};

struct SessionConfig {
    Task task = Task::GNG;
    std::uint64_t seed = 42;
    BlockConfig blocks;
    TimingConfig timing;
    ButtonConfig buttons;
    ThresholdingConfig thresholding;
    friend bool operator==(const SessionConfig&, const SessionConfig&) = default;
};

/// Result of validation: a normalized config or the list of violations.
struct ValidatedConfig {
    std::optional<SessionConfig> config;
    std::vector<std::string> violations;
    bool ok() const { return config.has_value(); }
};

// ---------------------------------------------------------------------------
// JSON mapping

inline nlohmann::json to_json_doc(const ThresholdProfile& t) {
    nlohmann::json cj = nlohmann::json::object();
    for (auto& [k, v] : t.cj) cj[to_string(k.first) + "_" + to_string(k.second)] = v.value();
    return {{"gng",
             {{"visual_go_opacity", t.gng.visual_go_opacity.value()},
              {"visual_nogo_opacity", t.gng.visual_nogo_opacity.value()},
              {"auditory_go_volume", t.gng.auditory_go_volume.value()},
              {"auditory_nogo_volume", t.gng.auditory_nogo_volume.value()},
              {"tactile_nogo_drive", t.gng.tactile_nogo_drive.value()}}},
            {"cj", cj},
            {"pj", {{"te_sound_first", t.pj.te_sound_first.value}, {"te_flash_first", t.pj.te_flash_first.value}}}};
}

inline ThresholdProfile threshold_profile_from_json(const nlohmann::json& j) {
    ThresholdProfile t;
    if (j.contains("gng")) {
        const auto& g = j.at("gng");
        for (GngParam p : kGngParams) {
            auto key = to_string(p);
            if (g.contains(key)) gng_threshold(t.gng, p) = Intensity(g.at(key).get<double>());
        }
    }
    if (j.contains("cj")) {
        for (auto& [key, v] : j.at("cj").items()) {
            auto us = key.find('_');
            if (us == std::string::npos) throw InvalidArgument("bad cj threshold key: " + key);
            Modality m = kModalityNames.parse(key.substr(0, us), "modality");
            Direction d = kDirectionNames.parse(key.substr(us + 1), "direction");
            t.cj[{m, d}] = Intensity(v.get<double>());
        }
    }
    if (j.contains("pj")) {
        t.pj.te_sound_first = SoaMs{j.at("pj").value("te_sound_first", 0)};
        t.pj.te_flash_first = SoaMs{j.at("pj").value("te_flash_first", 0)};
    }
    return t;
}

inline nlohmann::json to_json_doc(const SessionConfig& c) {
    using nlohmann::json;
    const auto& b = c.blocks;
    const auto& tm = c.timing;
    const auto& th = c.thresholding;
    json battery = json::array();
    for (auto p : th.gng_battery) battery.push_back(to_string(p));
    json doc = {
        {"task", to_string(c.task)},
        {"seed", c.seed},
        {"blocks",
         {{"gng_block_size", b.gng_block_size},
          {"gng_mixed_block_size", b.gng_mixed_block_size},
          {"go_fraction", b.go_fraction},
          {"gng_adaptive_blocks", b.gng_adaptive_blocks},
          {"gng_rest_ms", b.gng_rest_ms},
          {"pj_block_size", b.pj_block_size},
          {"pj_blocks_per_task", b.pj_blocks_per_task},
          {"pj_rest_ms", b.pj_rest_ms},
          {"cj_block_size", b.cj_block_size},
          {"cj_repeats_per_focus", b.cj_repeats_per_focus},
          {"cj_adaptive_blocks_per_focus", b.cj_adaptive_blocks_per_focus},
          {"cj_rest_ms", b.cj_rest_ms},
          {"cue_prompt_ms", b.cue_prompt_ms},
          {"practice_trials", b.practice_trials}}},
        {"timing",
         {{"gng_stimulus_ms", tm.gng_stimulus_ms},
          {"gng_response_window_ms", tm.gng_response_window_ms},
          {"gng_iti_min_ms", tm.gng_iti_min_ms},
          {"gng_iti_max_ms", tm.gng_iti_max_ms},
          {"pj_warning_delay_min_ms", tm.pj_warning_delay_min_ms},
          {"pj_warning_delay_max_ms", tm.pj_warning_delay_max_ms},
          {"pj_trailing_ms", tm.pj_trailing_ms},
          {"pj_response_window_ms", tm.pj_response_window_ms},
          {"pj_iti_ms", tm.pj_iti_ms},
          {"block_onset_delay_ms", tm.block_onset_delay_ms},
          {"cj_pre_change_min_ms", tm.cj_pre_change_min_ms},
          {"cj_pre_change_max_ms", tm.cj_pre_change_max_ms},
          {"cj_ramp_ms", {tm.cj_ramp.up_ms, tm.cj_ramp.hold_ms, tm.cj_ramp.down_ms}},
          {"cj_total_ms", tm.cj_total_ms},
          {"cj_response_window_ms", tm.cj_response_window_ms},
          {"cj_iti_ms", tm.cj_iti_ms},
          {"max_abs_soa_ms", tm.max_abs_soa_ms},
          {"refresh_hz", tm.refresh_hz},
          {"time_scale", tm.time_scale}}},
        {"buttons", {{"go", to_string(c.buttons.go)}, {"yes", to_string(c.buttons.yes)}, {"no", to_string(c.buttons.no)}}},
        {"thresholding",
         {{"mode", th.run ? "run" : "fixed"},
          {"gng_battery", battery},
          {"practice_intensity", th.practice_intensity},
          {"experimental_percent", th.experimental_percent},
          {"ascending", {{"start", th.ascending.start}, {"step", th.ascending.step}, {"confirm", th.ascending.confirm}}},
          {"sj",
           {{"sound_first_starts", th.sj.sound_first_starts},
            {"flash_first_starts", th.sj.flash_first_starts},
            {"initial_step_ms", th.sj.initial_step_ms},
            {"floor_step_ms", th.sj.floor_step_ms},
            {"max_reversals", th.sj.max_reversals},
            {"max_trials", th.sj.max_trials}}},
          {"quest",
           {{"beta", th.quest.beta},
            {"gamma", th.quest.gamma},
            {"delta", th.quest.delta},
            {"grid_min", th.quest.grid_min},
            {"grid_max", th.quest.grid_max},
            {"grid_points", th.quest.grid_points},
            {"prior_sd_octaves", th.quest.prior_sd_octaves},
            {"trials_per_direction", th.quest.trials_per_direction}}},
          {"verification",
           {{"trials", th.verification.trials},
            {"pass_fraction", th.verification.pass_fraction},
            {"percent", th.verification.percent},
            {"raise_factor", th.verification.raise_factor},
            {"max_rounds", th.verification.max_rounds}}}}},
    };
    if (th.fixed) doc["thresholding"]["fixed"] = to_json_doc(*th.fixed);
    return doc;
}

namespace detail {

class ConfigReader {
public:
    explicit ConfigReader(std::vector<std::string>& v) : violations_(v) {}

    template <class T>
    void read(const nlohmann::json& obj, const std::string& section, const char* key, T& out) {
        if (!obj.contains(key)) return;
        try {
            out = obj.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            violations_.push_back(section + "." + key + ": wrong type");
        }
    }

    void unknown_keys(const nlohmann::json& obj, const std::string& section,
                      std::initializer_list<const char*> known) {
        for (auto& [k, v] : obj.items()) {
            bool found = false;
            for (const char* kk : known) found = found || k == kk;
            if (!found) violations_.push_back(section + "." + k + ": unknown key");
        }
    }

    std::vector<std::string>& violations_;
};

inline void check(std::vector<std::string>& v, bool ok, std::string message) {
    if (!ok) v.push_back(std::move(message));
}

}  // namespace detail

/// Parses and validates a config document. Never throws on bad content;
/// every problem found is listed in `violations`.
inline ValidatedConfig validate_config(const nlohmann::json& doc) {
    ValidatedConfig out;
    auto& v = out.violations;
    if (!doc.is_object()) {
        v.push_back("config must be a JSON object");
        return out;
    }
    SessionConfig c;
    detail::ConfigReader r(v);
    r.unknown_keys(doc, "config", {"task", "seed", "blocks", "timing", "buttons", "thresholding"});

    if (!doc.contains("task")) {
        v.push_back("task: missing");
    } else {
        try {
            c.task = kTaskNames.parse(doc.at("task").get<std::string>(), "task");
        } catch (const std::exception& e) {
            v.push_back(std::string("task: ") + e.what());
        }
    }
    if (!doc.contains("seed") || doc.at("seed").is_null()) {
        v.push_back("seed: missing (every session must be seeded)");
    } else if (!doc.at("seed").is_number_integer()) {
        v.push_back("seed: must be a nonnegative integer");
    } else {
        c.seed = doc.at("seed").get<std::uint64_t>();
    }

    auto section = [&](const char* name) -> nlohmann::json {
        if (!doc.contains(name)) return nlohmann::json::object();
        if (!doc.at(name).is_object()) {
            v.push_back(std::string(name) + ": must be an object");
            return nlohmann::json::object();
        }
        return doc.at(name);
    };

    {
        auto s = section("blocks");
        auto& b = c.blocks;
        r.unknown_keys(s, "blocks",
                       {"gng_block_size", "gng_mixed_block_size", "go_fraction", "gng_adaptive_blocks", "gng_rest_ms",
                        "pj_block_size", "pj_blocks_per_task", "pj_rest_ms", "cj_block_size", "cj_repeats_per_focus",
                        "cj_adaptive_blocks_per_focus", "cj_rest_ms", "cue_prompt_ms", "practice_trials"});
        r.read(s, "blocks", "gng_block_size", b.gng_block_size);
        r.read(s, "blocks", "gng_mixed_block_size", b.gng_mixed_block_size);
        r.read(s, "blocks", "go_fraction", b.go_fraction);
        r.read(s, "blocks", "gng_adaptive_blocks", b.gng_adaptive_blocks);
        r.read(s, "blocks", "gng_rest_ms", b.gng_rest_ms);
        r.read(s, "blocks", "pj_block_size", b.pj_block_size);
        r.read(s, "blocks", "pj_blocks_per_task", b.pj_blocks_per_task);
        r.read(s, "blocks", "pj_rest_ms", b.pj_rest_ms);
        r.read(s, "blocks", "cj_block_size", b.cj_block_size);
        r.read(s, "blocks", "cj_repeats_per_focus", b.cj_repeats_per_focus);
        r.read(s, "blocks", "cj_adaptive_blocks_per_focus", b.cj_adaptive_blocks_per_focus);
        r.read(s, "blocks", "cj_rest_ms", b.cj_rest_ms);
        r.read(s, "blocks", "cue_prompt_ms", b.cue_prompt_ms);
        r.read(s, "blocks", "practice_trials", b.practice_trials);
    }
    {
        auto s = section("timing");
        auto& t = c.timing;
        r.unknown_keys(s, "timing",
                       {"gng_stimulus_ms", "gng_response_window_ms", "gng_iti_min_ms", "gng_iti_max_ms",
                        "pj_warning_delay_min_ms", "pj_warning_delay_max_ms", "pj_trailing_ms",
                        "pj_response_window_ms", "pj_iti_ms", "block_onset_delay_ms", "cj_pre_change_min_ms",
                        "cj_pre_change_max_ms", "cj_ramp_ms", "cj_total_ms", "cj_response_window_ms", "cj_iti_ms",
                        "max_abs_soa_ms", "refresh_hz", "time_scale"});
        r.read(s, "timing", "gng_stimulus_ms", t.gng_stimulus_ms);
        r.read(s, "timing", "gng_response_window_ms", t.gng_response_window_ms);
        r.read(s, "timing", "gng_iti_min_ms", t.gng_iti_min_ms);
        r.read(s, "timing", "gng_iti_max_ms", t.gng_iti_max_ms);
        r.read(s, "timing", "pj_warning_delay_min_ms", t.pj_warning_delay_min_ms);
        r.read(s, "timing", "pj_warning_delay_max_ms", t.pj_warning_delay_max_ms);
        r.read(s, "timing", "pj_trailing_ms", t.pj_trailing_ms);
        r.read(s, "timing", "pj_response_window_ms", t.pj_response_window_ms);
        r.read(s, "timing", "pj_iti_ms", t.pj_iti_ms);
        r.read(s, "timing", "block_onset_delay_ms", t.block_onset_delay_ms);
        r.read(s, "timing", "cj_pre_change_min_ms", t.cj_pre_change_min_ms);
        r.read(s, "timing", "cj_pre_change_max_ms", t.cj_pre_change_max_ms);
        if (s.contains("cj_ramp_ms")) {
            std::vector<int> ramp;
            r.read(s, "timing", "cj_ramp_ms", ramp);
            if (ramp.size() == 3)
                t.cj_ramp = Ramp{ramp[0], ramp[1], ramp[2]};
            else
                v.push_back("timing.cj_ramp_ms: expected [up, hold, down]");
        }
        r.read(s, "timing", "cj_total_ms", t.cj_total_ms);
        r.read(s, "timing", "cj_response_window_ms", t.cj_response_window_ms);
        r.read(s, "timing", "cj_iti_ms", t.cj_iti_ms);
        r.read(s, "timing", "max_abs_soa_ms", t.max_abs_soa_ms);
        r.read(s, "timing", "refresh_hz", t.refresh_hz);
        r.read(s, "timing", "time_scale", t.time_scale);
    }
    {
        auto s = section("buttons");
        r.unknown_keys(s, "buttons", {"go", "yes", "no"});
        auto button = [&](const char* key, ButtonId& out) {
            if (!s.contains(key)) return;
            try {
                out = kButtonNames.parse(s.at(key).get<std::string>(), "button");
            } catch (const std::exception& e) {
                v.push_back(std::string("buttons.") + key + ": " + e.what());
            }
        };
        button("go", c.buttons.go);
        button("yes", c.buttons.yes);
        button("no", c.buttons.no);
        detail::check(v, c.buttons.yes != c.buttons.no, "buttons: yes and no must differ");
    }
    {
        auto s = section("thresholding");
        auto& th = c.thresholding;
        r.unknown_keys(s, "thresholding",
                       {"mode", "fixed", "gng_battery", "practice_intensity", "experimental_percent", "ascending", "sj",
                        "quest", "verification"});
        if (s.contains("mode")) {
            auto mode = s.at("mode").is_string() ? s.at("mode").get<std::string>() : std::string();
            if (mode == "run")
                th.run = true;
            else if (mode == "fixed")
                th.run = false;
            else
                v.push_back("thresholding.mode: expected \"run\" or \"fixed\"");
        }
        if (s.contains("fixed")) {
            try {
                th.fixed = threshold_profile_from_json(s.at("fixed"));
            } catch (const std::exception& e) {
                v.push_back(std::string("thresholding.fixed: ") + e.what());
            }
        }
        if (s.contains("gng_battery")) {
            th.gng_battery.clear();
            try {
                for (auto& p : s.at("gng_battery")) th.gng_battery.push_back(kGngParamNames.parse(p.get<std::string>(), "parameter"));
            } catch (const std::exception& e) {
                v.push_back(std::string("thresholding.gng_battery: ") + e.what());
            }
        }
        r.read(s, "thresholding", "practice_intensity", th.practice_intensity);
        r.read(s, "thresholding", "experimental_percent", th.experimental_percent);
        auto sub = [&](const char* name) {
            return s.contains(name) && s.at(name).is_object() ? s.at(name) : nlohmann::json::object();
        };
        auto a = sub("ascending");
        r.unknown_keys(a, "thresholding.ascending", {"start", "step", "confirm"});
        r.read(a, "thresholding.ascending", "start", th.ascending.start);
        r.read(a, "thresholding.ascending", "step", th.ascending.step);
        r.read(a, "thresholding.ascending", "confirm", th.ascending.confirm);
        auto sj = sub("sj");
        r.unknown_keys(sj, "thresholding.sj",
                       {"sound_first_starts", "flash_first_starts", "initial_step_ms", "floor_step_ms", "max_reversals", "max_trials"});
        r.read(sj, "thresholding.sj", "sound_first_starts", th.sj.sound_first_starts);
        r.read(sj, "thresholding.sj", "flash_first_starts", th.sj.flash_first_starts);
        r.read(sj, "thresholding.sj", "initial_step_ms", th.sj.initial_step_ms);
        r.read(sj, "thresholding.sj", "floor_step_ms", th.sj.floor_step_ms);
        r.read(sj, "thresholding.sj", "max_reversals", th.sj.max_reversals);
        r.read(sj, "thresholding.sj", "max_trials", th.sj.max_trials);
        auto q = sub("quest");
        r.unknown_keys(q, "thresholding.quest",
                       {"beta", "gamma", "delta", "grid_min", "grid_max", "grid_points", "prior_sd_octaves", "trials_per_direction"});
        r.read(q, "thresholding.quest", "beta", th.quest.beta);
        r.read(q, "thresholding.quest", "gamma", th.quest.gamma);
        r.read(q, "thresholding.quest", "delta", th.quest.delta);
        r.read(q, "thresholding.quest", "grid_min", th.quest.grid_min);
        r.read(q, "thresholding.quest", "grid_max", th.quest.grid_max);
        r.read(q, "thresholding.quest", "grid_points", th.quest.grid_points);
        r.read(q, "thresholding.quest", "prior_sd_octaves", th.quest.prior_sd_octaves);
        r.read(q, "thresholding.quest", "trials_per_direction", th.quest.trials_per_direction);
        auto ver = sub("verification");
        r.unknown_keys(ver, "thresholding.verification", {"trials", "pass_fraction", "percent", "raise_factor", "max_rounds"});
        r.read(ver, "thresholding.verification", "trials", th.verification.trials);
        r.read(ver, "thresholding.verification", "pass_fraction", th.verification.pass_fraction);
        r.read(ver, "thresholding.verification", "percent", th.verification.percent);
        r.read(ver, "thresholding.verification", "raise_factor", th.verification.raise_factor);
        r.read(ver, "thresholding.verification", "max_rounds", th.verification.max_rounds);
    }

    using detail::check;
    const auto& b = c.blocks;
    const auto& t = c.timing;
    const auto& th = c.thresholding;

    check(v, b.go_fraction == 0.2, "blocks.go_fraction: must be 0.2 (20/80 rule: 20% Go / 80% NoGo)");
    check(v, b.gng_block_size > 0 && b.gng_block_size % 5 == 0,
          "blocks.gng_block_size: composition not exact (20/80 split needs a multiple of 5, got " +
              std::to_string(b.gng_block_size) + ")");
    check(v, b.gng_mixed_block_size > 0 && b.gng_mixed_block_size % 35 == 0,
          "blocks.gng_mixed_block_size: composition not exact (7 cue types x 20/80 needs a multiple of 35, got " +
              std::to_string(b.gng_mixed_block_size) + ")");
    check(v, b.gng_adaptive_blocks >= 1, "blocks.gng_adaptive_blocks: must be >= 1");
    check(v, b.cj_block_size > 0 && b.cj_block_size % 8 == 0,
          "blocks.cj_block_size: composition not exact (8 direction configurations, got " +
              std::to_string(b.cj_block_size) + ")");
    check(v, b.cj_repeats_per_focus >= 1, "blocks.cj_repeats_per_focus: must be >= 1");
    check(v, b.cj_adaptive_blocks_per_focus >= 1, "blocks.cj_adaptive_blocks_per_focus: must be >= 1");
    check(v, b.pj_blocks_per_task >= 1, "blocks.pj_blocks_per_task: must be >= 1");
    check(v, b.pj_block_size >= 4, "blocks.pj_block_size: must be >= 4");
    check(v, (b.pj_block_size * b.pj_blocks_per_task) % 6 == 0,
          "blocks.pj_block_size: trials per task must be a multiple of the 6 SOA values");
    for (auto [name, val] : {std::pair{"gng_rest_ms", b.gng_rest_ms}, {"pj_rest_ms", b.pj_rest_ms},
                             {"cj_rest_ms", b.cj_rest_ms}, {"cue_prompt_ms", b.cue_prompt_ms},
                             {"practice_trials", b.practice_trials}})
        check(v, val >= 0, std::string("blocks.") + name + ": must be >= 0");

    check(v, t.gng_stimulus_ms > 0 && t.gng_stimulus_ms <= 500, "timing.gng_stimulus_ms: must be in (0, 500]");
    check(v, t.gng_response_window_ms >= t.gng_stimulus_ms, "timing.gng_response_window_ms: shorter than the stimulus");
    check(v, 0 <= t.gng_iti_min_ms && t.gng_iti_min_ms <= t.gng_iti_max_ms, "timing.gng_iti: need 0 <= min <= max");
    check(v, 0 <= t.pj_warning_delay_min_ms && t.pj_warning_delay_min_ms <= t.pj_warning_delay_max_ms,
          "timing.pj_warning_delay: need 0 <= min <= max");
    check(v, t.pj_trailing_ms > 0, "timing.pj_trailing_ms: must be > 0");
    check(v, t.pj_response_window_ms > 0, "timing.pj_response_window_ms: must be > 0");
    check(v, t.cj_response_window_ms > 0, "timing.cj_response_window_ms: must be > 0");
    check(v, t.block_onset_delay_ms >= 0, "timing.block_onset_delay_ms: must be >= 0");
    check(v, t.pj_iti_ms >= 0 && t.cj_iti_ms >= 0, "timing: inter-trial intervals must be >= 0");
    check(v, t.cj_ramp.up_ms >= 0 && t.cj_ramp.hold_ms >= 0 && t.cj_ramp.down_ms >= 0, "timing.cj_ramp_ms: negative");
    check(v, 0 <= t.cj_pre_change_min_ms && t.cj_pre_change_min_ms <= t.cj_pre_change_max_ms,
          "timing.cj_pre_change: need 0 <= min <= max");
    check(v, t.cj_pre_change_max_ms + t.cj_ramp.total() <= t.cj_total_ms,
          "timing.cj_total_ms: too short for the longest pre-change interval plus the change");
    check(v, t.max_abs_soa_ms > 0 && t.max_abs_soa_ms <= kMaxAbsSoaMs, "timing.max_abs_soa_ms: must be in (0, 1000]");
    check(v, t.refresh_hz > 0, "timing.refresh_hz: must be > 0");
    check(v, t.time_scale > 0 && t.time_scale <= 1.0, "timing.time_scale: must be in (0, 1]");

    auto unit = [](double x) { return x >= 0.0 && x <= 1.0; };
    check(v, unit(th.practice_intensity), "thresholding.practice_intensity: intensity out of [0,1]");
    check(v, th.experimental_percent > 0, "thresholding.experimental_percent: must be > 0");
    check(v, unit(th.ascending.start), "thresholding.ascending.start: intensity out of [0,1]");
    check(v, th.ascending.step > 0 && th.ascending.step <= 1, "thresholding.ascending.step: must be in (0, 1]");
    check(v, th.ascending.confirm >= 1, "thresholding.ascending.confirm: must be >= 1");
    check(v, th.sj.sound_first_starts.size() == 2 && th.sj.flash_first_starts.size() == 2,
          "thresholding.sj: exactly two sound-first and two flash-first staircases");
    for (int s : th.sj.sound_first_starts)
        check(v, s <= 0 && -s <= t.max_abs_soa_ms, "thresholding.sj.sound_first_starts: must be in [-max_abs_soa, 0]");
    for (int s : th.sj.flash_first_starts)
        check(v, s >= 0 && s <= t.max_abs_soa_ms, "thresholding.sj.flash_first_starts: must be in [0, max_abs_soa]");
    check(v, th.sj.floor_step_ms > 0 && th.sj.initial_step_ms >= th.sj.floor_step_ms,
          "thresholding.sj: need initial_step_ms >= floor_step_ms > 0");
    check(v, th.sj.max_reversals >= 1 && th.sj.max_trials >= 1, "thresholding.sj: stop rules must be >= 1");
    check(v, th.quest.beta > 0, "thresholding.quest.beta: must be > 0");
    check(v, th.quest.gamma >= 0 && th.quest.delta >= 0 && th.quest.gamma + th.quest.delta < 1,
          "thresholding.quest: need gamma, delta >= 0 and gamma + delta < 1");
    check(v, 0 < th.quest.grid_min && th.quest.grid_min < th.quest.grid_max && th.quest.grid_max <= 1,
          "thresholding.quest: grid bounds must satisfy 0 < min < max <= 1");
    check(v, th.quest.grid_points >= 3, "thresholding.quest.grid_points: must be >= 3");
    check(v, th.quest.prior_sd_octaves > 0, "thresholding.quest.prior_sd_octaves: must be > 0");
    check(v, th.quest.trials_per_direction >= 1, "thresholding.quest.trials_per_direction: must be >= 1");
    check(v, th.verification.trials >= 1, "thresholding.verification.trials: must be >= 1");
    check(v, th.verification.pass_fraction > 0 && th.verification.pass_fraction <= 1,
          "thresholding.verification.pass_fraction: must be in (0, 1]");
    check(v, th.verification.percent > 0, "thresholding.verification.percent: must be > 0");
    check(v, th.verification.raise_factor > 1, "thresholding.verification.raise_factor: must be > 1");
    check(v, th.verification.max_rounds >= 1, "thresholding.verification.max_rounds: must be >= 1");
    if (c.task == Task::GNG) check(v, !th.gng_battery.empty(), "thresholding.gng_battery: must not be empty");

    if (!th.run) {
        if (!th.fixed) {
            v.push_back("thresholding.fixed: required when mode is \"fixed\"");
        } else if (c.task == Task::CJ) {
            for (Modality m : kModalities)
                for (Direction d : kDirections)
                    check(v, th.fixed->cj.contains({m, d}),
                          "thresholding.fixed.cj: missing " + to_string(m) + "_" + to_string(d));
        } else if (c.task == Task::PJ) {
            const auto& pj = th.fixed->pj;
            check(v, pj.te_sound_first.value <= 0 && pj.te_flash_first.value >= 0,
                  "thresholding.fixed.pj: need te_sound_first <= 0 <= te_flash_first");
            check(v, pj.te_sound_first.value != 0 || pj.te_flash_first.value != 0,
                  "thresholding.fixed.pj: degenerate thresholds (both zero)");
            check(v, -pj.te_sound_first.value * 2 <= t.max_abs_soa_ms && pj.te_flash_first.value * 2 <= t.max_abs_soa_ms,
                  "thresholding.fixed.pj: doubled thresholds exceed max_abs_soa_ms");
        }
    }

    if (v.empty()) out.config = c;
    return out;
}

inline ValidatedConfig validate_config_text(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        ValidatedConfig out;
        out.violations.push_back(std::string("config is not valid JSON: ") + e.what());
        return out;
    }
    return validate_config(doc);
}

/// Hash of the canonical config document, stored in log headers.
inline std::string config_hash(const SessionConfig& c) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(to_json_doc(c).dump())));
    return buf;
}

}  // namespace msi
