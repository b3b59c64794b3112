#include "json.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
    int status{0};
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path workdir() {
    static const fs::path dir = [] {
        const auto d = fs::temp_directory_path() / ("nudgexai_cli_" + std::to_string(::getpid()));
        fs::remove_all(d);
        fs::create_directories(d);
        const json cfg = {{"policy", {{"episodes", 3000}}},
                          {"user_model", {{"epochs", 10}, {"exploration_episodes", 1}}},
                          {"paths",
                           {{"artifacts", (d / "artifacts").string()},
                            {"logs", (d / "logs").string()},
                            {"output", (d / "report").string()}}}};
        std::ofstream(d / "config.json") << cfg.dump(2);
        return d;
    }();
    return dir;
}

Run run_cli(const std::string& args) {
    const auto out = workdir() / "stdout.txt";
    const auto err = workdir() / "stderr.txt";
    const std::string cmd = std::string(NUDGEXAI_CLI) + " " + args + " >" + out.string() + " 2>" + err.string();
    const int raw = std::system(cmd.c_str());
    Run r;
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

std::string config_arg() { return "-c " + (workdir() / "config.json").string(); }

} // namespace

TEST(Cli, UnknownFlagIsUsageError) {
    const auto r = run_cli("simulate --frobnicate");
    EXPECT_EQ(r.status, 2);
    const auto err = json::parse(r.err);
    EXPECT_EQ(err["error"]["code"], "usage_error");
}

TEST(Cli, MissingSubcommand) {
    const auto r = run_cli("");
    EXPECT_NE(r.status, 0);
    EXPECT_TRUE(json::accept(r.err)) << r.err;
}

TEST(Cli, UnknownConfigKeyRejected) {
    const auto path = workdir() / "bad.toml";
    std::ofstream(path) << "[episode]\nnum_dayz = 3\n";
    const auto r = run_cli("analyze -c " + path.string());
    EXPECT_EQ(r.status, 1);
    const auto err = json::parse(r.err);
    EXPECT_EQ(err["error"]["code"], "config_error");
    EXPECT_NE(err["error"]["message"].get<std::string>().find("episode.num_dayz"), std::string::npos);
}

TEST(Cli, MissingArtifactsReported) {
    const auto path = workdir() / "empty_artifacts.json";
    std::ofstream(path) << json{{"paths", {{"artifacts", (workdir() / "nothing").string()}}}}.dump();
    const auto r = run_cli("simulate -c " + path.string() + " --out " + (workdir() / "none").string());
    EXPECT_EQ(r.status, 1);
    const auto err = json::parse(r.err);
    EXPECT_EQ(err["error"]["code"], "missing_artifacts");
    EXPECT_EQ(err["error"]["missing"].size(), 2u);
}

TEST(Cli, TrainSimulateAnalyze) {
    auto r = run_cli("train-policy " + config_arg());
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_TRUE(fs::exists(workdir() / "artifacts" / "policy.json"));
    r = run_cli("train-usermodel " + config_arg());
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_TRUE(fs::exists(workdir() / "artifacts" / "user_model.json"));

    r = run_cli("simulate " + config_arg());
    ASSERT_EQ(r.status, 0) << r.err;
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(workdir() / "logs")) {
        files += entry.path().extension() == ".jsonl" ? 1 : 0;
    }
    EXPECT_EQ(files, 51u);

    r = run_cli("analyze " + config_arg());
    ASSERT_EQ(r.status, 0) << r.err;
    const auto out = json::parse(r.out);
    EXPECT_EQ(out["sessions"], 51);
    EXPECT_EQ(out["clusters"].size(), 4u);
    EXPECT_TRUE(fs::exists(workdir() / "report" / "report.json"));
}

TEST(Cli, ServePrintsPort) {
    const std::string cmd = "sh -c 'echo $$; exec " + std::string(NUDGEXAI_CLI) + " serve --port 0 " +
                            config_arg() + "' 2>&1";
    FILE* pipe = ::popen(cmd.c_str(), "r");
    ASSERT_NE(pipe, nullptr);
    char buf[512];
    ASSERT_NE(std::fgets(buf, sizeof buf, pipe), nullptr);
    const pid_t pid = static_cast<pid_t>(std::stol(buf));
    ASSERT_NE(std::fgets(buf, sizeof buf, pipe), nullptr);
    const auto doc = json::parse(buf);
    EXPECT_GT(doc["port"].get<int>(), 0);
    ::kill(pid, SIGTERM);
    const int raw = ::pclose(pipe);
    EXPECT_TRUE(WIFEXITED(raw));
    EXPECT_EQ(WEXITSTATUS(raw), 0);
}

namespace {

class CleanupWorkdir : public ::testing::Environment {
public:
    void TearDown() override { fs::remove_all(fs::temp_directory_path() / ("nudgexai_cli_" + std::to_string(::getpid()))); }
};

const auto* const cleanup = ::testing::AddGlobalTestEnvironment(new CleanupWorkdir);

} // namespace
