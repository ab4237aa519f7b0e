#pragma once

// Operator commands: validate, simulate, serve, analyze, report. Kept in a
// header so tests can run them in-process; tools/msi.cpp only forwards argv.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "msi/analysis/report.hpp"
#include "msi/service/server.hpp"
#include "msi/sim/runner.hpp"

namespace msi::cli {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr const char* kLogDirEnv = "MSI_LOG_DIR";

/// Raised for a user-facing failure; the message is printed and the
/// command exits 1.
class CommandError : public Error {
public:
    using Error::Error;
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CommandError("cannot read " + path + ": no such file or not readable");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline fs::path default_out_dir() {
    if (const char* d = std::getenv(kLogDirEnv); d && *d) return d;
    return ".";
}

/// --out names a file when it ends in `ext`, otherwise a directory that
/// receives `default_name`.
inline fs::path output_file(const std::optional<std::string>& out, const std::string& ext,
                            const std::string& default_name) {
    fs::path p = out ? fs::path(*out) : default_out_dir();
    if (p.extension() != ext) p /= default_name;
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    return p;
}

struct ConfigArgs {
    std::optional<std::string> config_path;
    std::optional<std::string> task;
    std::optional<std::uint64_t> seed;
};

/// Config from --config (defaults otherwise), with --task and --seed applied
/// on top. Any violation is fatal.
inline SessionConfig load_config(const ConfigArgs& a) {
    json doc = json::object();
    if (a.config_path) {
        const auto text = read_file(*a.config_path);
        doc = json::parse(text, nullptr, false);
        if (doc.is_discarded()) throw CommandError(*a.config_path + ": not valid JSON");
    }
    if (a.task) doc["task"] = *a.task;
    if (a.seed) doc["seed"] = *a.seed;
    auto v = validate_config(doc);
    if (!v.ok()) {
        std::string msg = (a.config_path ? *a.config_path : std::string("config")) + ": invalid";
        for (const auto& x : v.violations) msg += "\n  - " + x;
        throw CommandError(msg);
    }
    return *v.config;
}

inline sim::SimObserver load_observer(const std::optional<std::string>& path) {
    if (!path) return sim::default_observer();
    const auto doc = json::parse(read_file(*path), nullptr, false);
    if (doc.is_discarded()) throw CommandError(*path + ": not valid JSON");
    try {
        return sim::observer_from_json(doc);
    } catch (const std::exception& e) {
        throw CommandError(*path + ": " + e.what());
    }
}

inline service::SessionLog load_log(const std::string& path) {
    if (!fs::exists(path)) throw CommandError("cannot read " + path + ": no such file");
    try {
        return service::read_log(path);
    } catch (const std::exception& e) {
        throw CommandError(path + ": " + e.what());
    }
}

// Commands ---------------------------------------------------------------

inline int cmd_validate(const std::string& path, std::ostream& out) {
    const auto v = validate_config_text(read_file(path));
    if (!v.ok()) {
        out << "invalid: " << path << "\n";
        for (const auto& x : v.violations) out << "  - " << x << "\n";
        return 1;
    }
    out << "ok: " << path << " (task " << to_string(v.config->task) << ", seed " << v.config->seed << ", hash "
        << config_hash(*v.config) << ")\n";
    return 0;
}

struct SimulateArgs {
    ConfigArgs config;
    std::optional<std::string> observer;
    std::optional<std::string> out;
    std::optional<std::string> endpoint;
};

inline int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
    const SessionConfig cfg = load_config(a.config);
    const auto observer = load_observer(a.observer);
    if (a.endpoint) {
        // Act as the runner of a live session.
        sim::SimRunner runner(observer, cfg.seed);
        const auto ep = service::parse_endpoint(*a.endpoint);
        const auto r = service::run_ws_client(ep, runner);
        switch (r) {
        case service::ClientOutcome::Done: out << "session complete\n"; return 0;
        case service::ClientOutcome::Refused: throw CommandError("refused: " + runner.refusal().value_or(""));
        case service::ClientOutcome::Failed:
            out << "session failed: " << runner.error().value_or("connection lost") << "\n";
            return static_cast<int>(service::SessionResult::ProtocolError);
        case service::ClientOutcome::Dropped: return static_cast<int>(service::SessionResult::Suspended);
        }
    }
    const auto run = sim::run_simulated_session(cfg, observer, cfg.seed);
    const auto path =
        output_file(a.out, ".mslog", to_string(cfg.task) + "_seed" + std::to_string(cfg.seed) + ".mslog");
    service::write_log(run.log, path.string());
    out << path.string() << ": " << run.log.events.size() << " events, " << run.final_state.outcomes.size()
        << " trials, status " << task::to_string(task::task_status(run.final_state)) << "\n";
    return 0;
}

struct ServeArgs {
    ConfigArgs config;
    std::optional<std::string> endpoint;
    std::optional<std::string> out;
    std::optional<std::string> resume;
    double time_scale = 1.0;
    double reconnect_wait_s = 300;
};

inline int cmd_serve(const ServeArgs& a, std::ostream& out) {
    std::optional<service::LiveSession> live;
    fs::path path;
    if (a.resume) {
        auto log = load_log(*a.resume);
        path = *a.resume;
        // Rewrite first so a torn final line does not precede new events.
        service::write_log(log, path.string());
        live.emplace(service::resume_live_session(std::move(log)));
    } else {
        const SessionConfig cfg = load_config(a.config);
        path = output_file(a.out, ".mslog",
                           to_string(cfg.task) + "_seed" + std::to_string(cfg.seed) + "_live.mslog");
        if (fs::exists(path)) throw CommandError(path.string() + " exists; pass --resume to continue it");
        live.emplace(service::new_live_session(cfg, "live"));
    }
    service::LogWriter writer(path.string(), live->recorder().log().header, a.resume.has_value());
    live->recorder().attach_writer(&writer);

    service::ServerOptions opt;
    opt.time_scale = a.time_scale;
    opt.reconnect_wait = std::chrono::milliseconds(static_cast<std::int64_t>(a.reconnect_wait_s * 1000));
    opt.handle_signals = true;
    const auto ep = service::resolve_endpoint(a.endpoint);
    service::SessionServer server(*live, ep, opt);
    out << "listening on ws://" << ep.host << ":" << server.port() << service::kSessionPath << "\n"
        << "log: " << path.string() << "\n"
        << std::flush;
    const auto r = server.run();
    switch (r) {
    case service::SessionResult::Complete: out << "session complete\n"; break;
    case service::SessionResult::Suspended: out << "session suspended; resume with --resume " << path.string() << "\n"; break;
    case service::SessionResult::ProtocolError: out << "session ended on a protocol error\n"; break;
    }
    return static_cast<int>(r);
}

/// Analyses are independent, so logs are read and replayed in parallel;
/// results keep the input order.
inline std::vector<analysis::LogAnalysis> analyze_logs(const std::vector<std::string>& paths) {
    for (const auto& p : paths)
        if (!fs::exists(p)) throw CommandError("cannot read " + p + ": no such file");
    std::vector<std::future<analysis::LogAnalysis>> jobs;
    for (const auto& p : paths)
        jobs.push_back(std::async(std::launch::async, [p] {
            const auto log = load_log(p);
            try {
                return analysis::analyze_log(log, p);
            } catch (const CommandError&) {
                throw;
            } catch (const std::exception& e) {
                throw CommandError(p + ": " + e.what());
            }
        }));
    std::vector<analysis::LogAnalysis> all;
    for (auto& j : jobs) all.push_back(j.get());
    return all;
}

inline int cmd_analyze(const std::vector<std::string>& logs, const std::optional<std::string>& out_dir,
                       std::ostream& out) {
    const auto all = analyze_logs(logs);
    const fs::path dir = out_dir ? fs::path(*out_dir) : default_out_dir();
    analysis::write_analysis(all, dir);
    for (const auto& a : all) {
        const auto& s = a.summary;
        out << a.source << ": " << s["task"].get<std::string>() << ", " << s["status"].get<std::string>()
            << ", experimental " << s["trials"]["experimental"] << "/" << s["planned"]["experimental"]
            << ", adaptive " << s["trials"]["adaptive"] << "/" << s["planned"]["adaptive"]
            << (s["reconciled"].get<bool>() ? ", reconciled" : ", NOT reconciled") << "\n";
    }
    out << "wrote conditions.csv, pj_soa.csv, psychometric.csv, summary.json to " << dir.string() << "\n";
    return 0;
}

/// Plot-ready tables for one log, named after it.
inline int cmd_report(const std::string& log_path, const std::optional<std::string>& out_dir, std::ostream& out) {
    const auto a = analyze_logs({log_path}).front();
    const fs::path dir = out_dir ? fs::path(*out_dir) : default_out_dir();
    fs::create_directories(dir);
    const std::string stem = fs::path(log_path).stem().string();
    const auto cond = dir / (stem + "_conditions.csv");
    const auto psy = dir / (stem + "_psychometric.csv");
    analysis::write_text(cond, analysis::csv_text(analysis::condition_header(), analysis::condition_rows(a)));
    analysis::write_text(psy, analysis::csv_text({"log", "series", "level", "n", "yes", "rate", "fit_threshold",
                                                  "fit_spread", "fit_lapse", "fit"},
                                                 analysis::psychometric_rows(a)));
    out << cond.string() << "\n" << psy.string() << "\n";
    if (a.pj) {
        const auto pj = dir / (stem + "_pj_soa.csv");
        analysis::write_text(pj, analysis::csv_text({"log", "phase", "task", "soa_ms", "trials", "responded", "positive", "rate"},
                                                    analysis::pj_rows(a)));
        out << pj.string() << "\n";
    }
    return 0;
}

// Dispatcher -------------------------------------------------------------

inline int run_command(int argc, const char* const* argv, std::ostream& out = std::cout,
                       std::ostream& err = std::cerr) {
    CLI::App app{"Multisensory integration experiment engine"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    ConfigArgs cfg;
    auto add_config = [&](CLI::App* sub) {
        sub->add_option("--config", cfg.config_path, "Session config JSON");
        sub->add_option("--task", cfg.task, "Task: gng, pj or cj")->check(CLI::IsMember({"gng", "pj", "cj"}));
        sub->add_option("--seed", cfg.seed, "Seed (overrides the config)");
    };

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "Check a config; exit 1 and list violations if invalid");
    validate->add_option("config", validate_path, "Config JSON")->required();

    SimulateArgs sim_args;
    auto* simulate = app.add_subcommand("simulate", "Run a session with a simulated observer");
    add_config(simulate);
    simulate->add_option("--observer", sim_args.observer, "Observer model JSON");
    simulate->add_option("--out", sim_args.out, "Output .mslog file or directory");
    simulate->add_option("--endpoint", sim_args.endpoint, "Join a live session at ws://host:port/session instead");

    ServeArgs serve_args;
    auto* serve = app.add_subcommand("serve", "Serve one live session over WebSocket at /session");
    add_config(serve);
    serve->add_option("--endpoint", serve_args.endpoint,
                      std::string("Bind address host:port (default $") + service::kBindEnv + " or " +
                          service::kDefaultBind + ")");
    serve->add_option("--out", serve_args.out, "Output .mslog file or directory");
    serve->add_option("--resume", serve_args.resume, "Continue a suspended session from its log");
    serve->add_option("--time-scale", serve_args.time_scale, "Wall seconds per session second")
        ->check(CLI::PositiveNumber);
    serve->add_option("--reconnect-wait", serve_args.reconnect_wait_s, "Seconds to wait for a lost client")
        ->check(CLI::NonNegativeNumber);

    std::vector<std::string> analyze_logs_in;
    std::optional<std::string> analyze_out;
    auto* analyze = app.add_subcommand("analyze", "Tables and summary for one or more logs");
    analyze->add_option("logs", analyze_logs_in, "Session logs (.mslog)")->required();
    analyze->add_option("--out", analyze_out, "Output directory (default $MSI_LOG_DIR or .)");

    std::string report_log;
    std::optional<std::string> report_out;
    auto* report = app.add_subcommand("report", "Plot-ready CSV for one log");
    report->add_option("log", report_log, "Session log (.mslog)")->required();
    report->add_option("--out", report_out, "Output directory (default $MSI_LOG_DIR or .)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*validate) return cmd_validate(validate_path, out);
        if (*simulate) {
            sim_args.config = cfg;
            return cmd_simulate(sim_args, out);
        }
        if (*serve) {
            serve_args.config = cfg;
            return cmd_serve(serve_args, out);
        }
        if (*analyze) return cmd_analyze(analyze_logs_in, analyze_out, out);
        if (*report) return cmd_report(report_log, report_out, out);
    } catch (const CommandError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace msi::cli
