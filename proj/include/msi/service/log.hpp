#pragma once

// `.mslog` session logs: one JSON document per line. The first line is a
// header (config, config hash, seed); every further line is one event.

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "msi/core/config.hpp"
#include "msi/task/events.hpp"
#include "msi/task/machine.hpp"

namespace msi::service {

using nlohmann::json;
using task::EventRecord;

inline constexpr int kLogFormatVersion = 1;

/// Header fields that depend on when the log was written; excluded when
/// comparing logs for determinism.
inline const std::vector<std::string>& wall_clock_fields() {
    static const std::vector<std::string> f{"created_utc"};
    return f;
}

struct SessionLog {
    json header = json::object();
    std::vector<EventRecord> events;
};

inline std::string utc_now_iso() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline json make_log_header(const SessionConfig& cfg, const std::string& source) {
    return {{"type", "header"},
            {"format", "mslog"},
            {"version", kLogFormatVersion},
            {"task", to_string(cfg.task)},
            {"seed", cfg.seed},
            {"config", to_json_doc(cfg)},
            {"config_hash", config_hash(cfg)},
            {"source", source},
            {"created_utc", utc_now_iso()}};
}

inline json header_without_wall_clock(json h) {
    for (const auto& f : wall_clock_fields()) h.erase(f);
    return h;
}

inline std::string log_line(const EventRecord& e) { return task::event_to_json(e).dump(); }

inline std::string serialize_log(const SessionLog& log) {
    std::string out = log.header.dump() + "\n";
    for (const auto& e : log.events) out += log_line(e) + "\n";
    return out;
}

/// Parses log text. A final line without its newline is a write cut short
/// and is dropped; any other unparsable line is corruption.
inline SessionLog parse_log(const std::string& text) {
    SessionLog log;
    std::vector<std::string> lines;
    std::size_t start = 0;
    bool trailing_partial = false;
    while (start < text.size()) {
        const auto nl = text.find('\n', start);
        if (nl == std::string::npos) {
            lines.push_back(text.substr(start));
            trailing_partial = true;
            break;
        }
        lines.push_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    if (trailing_partial && !json::accept(lines.back())) lines.pop_back();
    if (lines.empty()) throw Error("log is empty (no header)");
    auto header = json::parse(lines[0], nullptr, false);
    if (header.is_discarded() || header.value("type", "") != "header")
        throw Error("log line 1: not a header");
    if (header.value("version", 0) != kLogFormatVersion)
        throw Error("log format version " + std::to_string(header.value("version", 0)) + " not supported");
    log.header = std::move(header);
    std::int64_t expect = 1;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        auto j = json::parse(lines[i], nullptr, false);
        if (j.is_discarded()) throw Error("log line " + std::to_string(i + 1) + ": not valid JSON");
        EventRecord e;
        try {
            e = task::event_from_json(j);
        } catch (const std::exception& ex) {
            throw Error("log line " + std::to_string(i + 1) + ": " + ex.what());
        }
        if (e.seq != expect) throw Error("log corrupted: gap before " + std::to_string(e.seq));
        ++expect;
        log.events.push_back(std::move(e));
    }
    return log;
}

inline SessionLog read_log(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open log: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_log(ss.str());
}

inline void write_log(const SessionLog& log, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write log: " + path);
    out << serialize_log(log);
    if (!out) throw Error("write failed: " + path);
}

/// Appends events to an open log file, one flushed line per event.
class LogWriter {
public:
    LogWriter() = default;
    LogWriter(const std::string& path, const json& header, bool append_existing = false) : path_(path) {
        out_.open(path, std::ios::binary | (append_existing ? std::ios::app : std::ios::trunc));
        if (!out_) throw Error("cannot open log for writing: " + path);
        if (!append_existing) write_line(header.dump());
    }
    bool is_open() const { return out_.is_open(); }
    void append(const EventRecord& e) { write_line(log_line(e)); }

private:
    void write_line(const std::string& line) {
        const std::string buf = line + "\n";
        out_.write(buf.data(), static_cast<std::streamsize>(buf.size()));
        out_.flush();
        if (!out_) throw Error("log append failed: " + path_);
    }
    std::string path_;
    std::ofstream out_;
};

inline SessionConfig log_config(const SessionLog& log) {
    auto v = validate_config(log.header.at("config"));
    if (!v.ok()) throw Error("log header config invalid: " + v.violations.front());
    if (log.header.contains("config_hash") && log.header.at("config_hash") != config_hash(*v.config))
        throw Error("log header config hash does not match its config");
    return *v.config;
}

inline task::TaskSession replay_log(const SessionLog& log) {
    return task::replay_events(log_config(log), log.events);
}

inline task::TaskSession replay_log_file(const std::string& path) { return replay_log(read_log(path)); }

/// Owns a session and its log: assigns seq numbers and server times, and
/// records a protocol-violation event in place of any event the machine
/// rejects.
class SessionRecorder {
public:
    SessionRecorder(const SessionConfig& cfg, json header)
        : session_(task::make_task_session(cfg)) {
        log_.header = std::move(header);
    }
    SessionRecorder(task::TaskSession session, SessionLog log) : session_(std::move(session)), log_(std::move(log)) {
        if (!log_.events.empty()) seq_ = log_.events.back().seq;
    }

    /// Returns the violation reason when the event was rejected.
    std::optional<std::string> emit(EventRecord e, std::int64_t t_server_ns) {
        e.seq = seq_ + 1;
        e.t_server_mono_ns = t_server_ns;
        try {
            task::task_apply_event(session_, e);
        } catch (const task::ProtocolViolation& v) {
            auto viol = task::ev_violation(v.what());
            viol.payload["rejected_kind"] = task::to_string(e.kind);
            viol.seq = seq_ + 1;
            viol.t_server_mono_ns = t_server_ns;
            task::task_apply_event(session_, viol);
            push(viol);
            return std::string(v.what());
        }
        push(e);
        return std::nullopt;
    }

    const task::TaskSession& session() const { return session_; }
    const SessionLog& log() const { return log_; }
    SessionLog take_log() { return std::move(log_); }
    void attach_writer(LogWriter* w) { writer_ = w; }

private:
    void push(const EventRecord& e) {
        seq_ = e.seq;
        if (writer_) writer_->append(e);
        log_.events.push_back(e);
    }
    task::TaskSession session_;
    SessionLog log_;
    std::int64_t seq_ = 0;
    LogWriter* writer_ = nullptr;
};

}  // namespace msi::service
