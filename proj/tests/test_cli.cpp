#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <gtest/gtest.h>

#include "msi/cli/commands.hpp"

using namespace msi;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "msi");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run_command(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir = fs::temp_directory_path() /
              ("msi_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }
    std::string p(const std::string& name) const { return (dir / name).string(); }
    fs::path dir;
};

std::vector<std::string> lines_without_header(const std::string& path) {
    std::ifstream in(path);
    std::vector<std::string> v;
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) v.push_back(line);
    return v;
}

SessionConfig gng_config() {
    SessionConfig c;
    c.task = Task::GNG;
    return c;
}

}  // namespace

TEST_F(Cli, SimulateIsDeterministicPerSeed) {
    const auto a = run({"simulate", "--task", "cj", "--seed", "7", "--out", p("a.mslog")});
    const auto b = run({"simulate", "--task", "cj", "--seed", "7", "--out", p("b.mslog")});
    ASSERT_EQ(a.code, 0) << a.err;
    ASSERT_EQ(b.code, 0) << b.err;
    const auto la = service::read_log(p("a.mslog"));
    const auto lb = service::read_log(p("b.mslog"));
    EXPECT_EQ(service::header_without_wall_clock(la.header), service::header_without_wall_clock(lb.header));
    EXPECT_EQ(lines_without_header(p("a.mslog")), lines_without_header(p("b.mslog")));

    const auto c = run({"simulate", "--task", "cj", "--seed", "8", "--out", p("c.mslog")});
    ASSERT_EQ(c.code, 0);
    EXPECT_NE(lines_without_header(p("a.mslog")), lines_without_header(p("c.mslog")));
}

TEST_F(Cli, SimulateNamesOutputAfterTaskAndSeed) {
    const auto r = run({"simulate", "--task", "gng", "--seed", "3", "--out", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(dir / "gng_seed3.mslog"));
    EXPECT_NE(r.out.find("status done"), std::string::npos) << r.out;
}

TEST_F(Cli, AnalyzeWritesSummaryWithFullTrialCount) {
    ASSERT_EQ(run({"simulate", "--task", "cj", "--seed", "7", "--out", p("cj.mslog")}).code, 0);
    const auto r = run({"analyze", p("cj.mslog"), "--out", p("out")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("reconciled"), std::string::npos);
    EXPECT_EQ(r.out.find("NOT reconciled"), std::string::npos) << r.out;
    std::ifstream in(p("out/summary.json"));
    const json s = json::parse(in);
    ASSERT_EQ(s["logs"].size(), 1u);
    EXPECT_EQ(s["logs"][0]["trials"]["experimental"], 192);
    EXPECT_EQ(s["logs"][0]["planned"]["experimental"], 192);
    for (const char* f : {"conditions.csv", "pj_soa.csv", "psychometric.csv"}) EXPECT_TRUE(fs::exists(dir / "out" / f)) << f;
}

TEST_F(Cli, AnalyzeSeveralLogsKeepsInputOrder) {
    ASSERT_EQ(run({"simulate", "--task", "gng", "--seed", "1", "--out", p("x.mslog")}).code, 0);
    ASSERT_EQ(run({"simulate", "--task", "pj", "--seed", "2", "--out", p("y.mslog")}).code, 0);
    const auto r = run({"analyze", p("y.mslog"), p("x.mslog"), "--out", p("out")});
    ASSERT_EQ(r.code, 0) << r.err;
    std::ifstream in(p("out/summary.json"));
    const json s = json::parse(in);
    ASSERT_EQ(s["logs"].size(), 2u);
    EXPECT_EQ(s["logs"][0]["task"], "pj");
    EXPECT_EQ(s["logs"][1]["task"], "gng");
}

TEST_F(Cli, ValidateRejectsWrongGoFraction) {
    json doc = to_json_doc(gng_config());
    doc["blocks"]["go_fraction"] = 0.3;
    std::ofstream(p("bad.json")) << doc.dump(2);
    const auto r = run({"validate", p("bad.json")});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("invalid: " + p("bad.json")), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("20/80"), std::string::npos) << r.out;

    doc["blocks"]["go_fraction"] = 0.2;
    std::ofstream(p("good.json")) << doc.dump(2);
    const auto ok = run({"validate", p("good.json")});
    EXPECT_EQ(ok.code, 0) << ok.out;
    EXPECT_EQ(ok.out.rfind("ok: ", 0), 0u);
}

TEST_F(Cli, ShippedConfigsValidate) {
    for (const auto& e : fs::directory_iterator(MSI_CONFIG_DIR)) {
        if (e.path().extension() != ".json" || e.path().filename() == "observer.json") continue;
        const auto r = run({"validate", e.path().string()});
        EXPECT_EQ(r.code, 0) << r.out;
    }
}

TEST_F(Cli, MissingFilesExitOneAndNameThePath) {
    const auto v = run({"validate", p("nope.json")});
    EXPECT_EQ(v.code, 1);
    EXPECT_NE(v.err.find(p("nope.json")), std::string::npos) << v.err;
    const auto a = run({"analyze", p("nope.mslog")});
    EXPECT_EQ(a.code, 1);
    EXPECT_NE(a.err.find(p("nope.mslog")), std::string::npos) << a.err;
}

TEST_F(Cli, BadArgumentsExitOneAndHelpExitsZero) {
    EXPECT_EQ(run({"simulate", "--task", "xyz"}).code, 1);
    EXPECT_EQ(run({"frobnicate"}).code, 1);
    EXPECT_EQ(run({"--help"}).code, 0);
}

TEST_F(Cli, ReportWritesTablesNamedAfterLog) {
    ASSERT_EQ(run({"simulate", "--task", "pj", "--seed", "4", "--out", p("pj4.mslog")}).code, 0);
    const auto r = run({"report", p("pj4.mslog"), "--out", p("rep")});
    ASSERT_EQ(r.code, 0) << r.err;
    for (const char* f : {"pj4_conditions.csv", "pj4_psychometric.csv", "pj4_pj_soa.csv"}) {
        EXPECT_TRUE(fs::exists(dir / "rep" / f)) << f;
        EXPECT_GT(fs::file_size(dir / "rep" / f), 0u) << f;
    }
}

TEST_F(Cli, ServeRefusesToOverwriteExistingLog) {
    ASSERT_EQ(run({"simulate", "--task", "gng", "--seed", "5", "--out", p("s.mslog")}).code, 0);
    const auto r = run({"serve", "--task", "gng", "--seed", "5", "--out", p("s.mslog"), "--endpoint", "127.0.0.1:0"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("--resume"), std::string::npos) << r.err;
}

TEST_F(Cli, SimulateJoinsLiveSessionOverEndpoint) {
    auto cfg = gng_config();
    cfg.seed = 11;
    service::LiveSession live = service::new_live_session(cfg, "live");
    service::ServerOptions opt;
    opt.time_scale = 2e-4;
    opt.reconnect_wait = std::chrono::milliseconds(2000);
    service::SessionServer server(live, {"127.0.0.1", 0}, opt);
    service::SessionResult result = service::SessionResult::Suspended;
    std::thread t([&] { result = server.run(); });
    const std::string ep = "ws://127.0.0.1:" + std::to_string(server.port()) + "/session";
    const auto r = run({"simulate", "--task", "gng", "--seed", "11", "--endpoint", ep});
    t.join();
    EXPECT_EQ(r.code, 0) << r.out << r.err;
    EXPECT_EQ(result, service::SessionResult::Complete);
    EXPECT_EQ(task::task_status(live.recorder().session()), task::Status::Done);
}
