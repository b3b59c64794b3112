#include "nudge/config.hpp"
#include "nudge/errors.hpp"
#include "nudge/experiment.hpp"
#include "nudge/http_api.hpp"
#include "nudge/service.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace nudge;

namespace {

void print_error(const std::string& code, const std::string& message) {
    std::cerr << json{{"error", {{"code", code}, {"message", message}}}}.dump() << std::endl;
}

ExperimentConfig read_config(const std::string& path) {
    ExperimentConfig cfg = path.empty() ? ExperimentConfig{} : load_config(path);
    apply_environment(cfg);
    cfg.validate();
    return cfg;
}

engine::Selection selection_or(const std::string& text, engine::Selection fallback) {
    if (text.empty()) {
        return fallback;
    }
    const auto s = engine::parse_selection(text);
    if (!s) {
        throw ValidationError("--selection: expected 'optimize', 'random' or 'none'");
    }
    return *s;
}

std::vector<InteractionRecord> read_logs(const fs::path& path) {
    if (fs::is_directory(path)) {
        std::vector<InteractionRecord> all;
        for (auto& s : load_jsonl_dir(path)) {
            all.insert(all.end(), s.begin(), s.end());
        }
        return all;
    }
    return load_jsonl(path);
}

void print_json(const json& doc) {
    std::cout << doc.dump(2) << std::endl;
}

std::atomic<bool> g_stop_requested{false};

void handle_signal(int) {
    g_stop_requested = true;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Nudge-XAI trading workbench"};
    app.require_subcommand(1);

    std::string config_path;
    auto add_config = [&](CLI::App* cmd) {
        cmd->add_option("-c,--config", config_path, "TOML or JSON config file")->check(CLI::ExistingFile);
    };

    auto* simulate = app.add_subcommand("simulate", "Run the archetype cohort on the evaluation series");
    add_config(simulate);
    std::string sim_selection;
    std::string sim_out;
    simulate->add_option("--selection", sim_selection, "optimize | random | none");
    simulate->add_option("--out", sim_out, "Directory for session logs (default: paths.logs)");

    auto* train_pol = app.add_subcommand("train-policy", "Train the Q-learning policy");
    add_config(train_pol);

    auto* train_um = app.add_subcommand("train-usermodel", "Train the user model");
    add_config(train_um);
    std::string um_logs;
    train_um->add_option("--logs", um_logs,
                         "JSONL file or directory; default collects exploration logs with the cohort");

    auto* run = app.add_subcommand("run-experiment", "Train, simulate the nudged cohort and analyze");
    add_config(run);

    auto* analyze = app.add_subcommand("analyze", "Cluster session logs");
    add_config(analyze);
    std::string an_logs;
    std::string an_out;
    analyze->add_option("--logs", an_logs, "Directory of session JSONL files (default: paths.logs)");
    analyze->add_option("--out", an_out, "Report directory (default: paths.output)");

    auto* serve = app.add_subcommand("serve", "Serve the HTTP API");
    add_config(serve);
    service::HttpOptions http;
    std::string log_dir;
    std::string static_dir;
    serve->add_option("--host", http.host, "Bind address");
    serve->add_option("--port", http.port, "Port; 0 picks a free one");
    serve->add_option("--cors-origin", http.cors_origin, "Allowed CORS origin");
    serve->add_option("--static", static_dir, "Directory with the web UI bundle");
    serve->add_option("--log-dir", log_dir, "Session log directory (default: paths.logs)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error("usage_error", e.what());
        return 2;
    }

    try {
        const ExperimentConfig cfg = read_config(config_path);

        if (*simulate) {
            const auto selection = selection_or(sim_selection, cfg.nudge.selection);
            auto c = cfg;
            c.nudge.selection = selection;
            const auto artifacts = experiment::load_artifacts(c);
            const auto sessions = experiment::simulate_cohort(
                c, artifacts, selection, experiment::evaluation_series(c), "agent");
            const fs::path out = sim_out.empty() ? fs::path(c.paths.logs) : fs::path(sim_out);
            experiment::save_sessions(out, sessions);
            print_json({{"sessions", sessions.size()}, {"logs", out.string()}});
        } else if (*train_pol) {
            const auto result = experiment::train_policy(cfg);
            const fs::path dir(cfg.paths.artifacts);
            fs::create_directories(dir);
            policy::save_qtable(dir / experiment::kPolicyFile, result.table);
            {
                std::ofstream csv(dir / "policy_training.csv");
                csv << "episode,return\n";
                for (std::size_t i = 0; i < result.episode_returns.size(); ++i) {
                    csv << i << ',' << result.episode_returns[i] << '\n';
                }
            }
            print_json({{"policy", (dir / experiment::kPolicyFile).string()},
                        {"states", result.table.num_states()},
                        {"mean_return_first_decile", result.mean_return_first_decile},
                        {"mean_return_last_decile", result.mean_return_last_decile}});
        } else if (*train_um) {
            std::vector<InteractionRecord> logs;
            if (!um_logs.empty()) {
                logs = read_logs(um_logs);
            } else {
                auto c = cfg;
                c.nudge.selection = engine::Selection::Random;
                logs = experiment::exploration_logs(c, experiment::load_artifacts(c));
            }
            const auto report = experiment::train_user_model(cfg, logs);
            const fs::path dir(cfg.paths.artifacts);
            fs::create_directories(dir);
            usermodel::save_params(dir / experiment::kUserModelFile, report.params);
            {
                std::ofstream csv(dir / "user_model_training.csv");
                usermodel::write_training_csv(csv, report);
            }
            json val = nullptr;
            if (std::isfinite(report.final_val_loss())) {
                val = report.final_val_loss();
            }
            print_json({{"user_model", (dir / experiment::kUserModelFile).string()},
                        {"examples", logs.size()},
                        {"train_loss", report.final_train_loss()},
                        {"val_loss", val}});
        } else if (*run) {
            const auto result = experiment::run_experiment(cfg, true);
            json clusters = json::array();
            for (const auto& c : result.report.clusters) {
                clusters.push_back({{"name", c.name},
                                    {"size", c.size},
                                    {"mean_abs_error", c.mean_abs_error},
                                    {"mean_final_assets", c.mean_final_assets}});
            }
            json ari = nullptr;
            if (result.report.adjusted_rand) {
                ari = *result.report.adjusted_rand;
            }
            print_json({{"sessions", result.sessions.size()},
                        {"clusters", clusters},
                        {"adjusted_rand", ari},
                        {"report", cfg.paths.output}});
        } else if (*analyze) {
            const fs::path logs = an_logs.empty() ? fs::path(cfg.paths.logs) : fs::path(an_logs);
            const fs::path out = an_out.empty() ? fs::path(cfg.paths.output) : fs::path(an_out);
            const auto sessions = load_jsonl_dir(logs);
            const auto report = analysis::analyze(sessions, cfg.analysis);
            analysis::write_report(out, report);
            json names = json::array();
            for (const auto& c : report.clusters) {
                names.push_back(c.name);
            }
            print_json({{"sessions", sessions.size()}, {"clusters", names}, {"report", out.string()}});
        } else if (*serve) {
            if (!static_dir.empty()) {
                http.static_dir = static_dir;
            }
            const fs::path logs = log_dir.empty() ? fs::path(cfg.paths.logs) : fs::path(log_dir);
            service::SessionManager sessions(cfg, logs);
            service::HttpApi api(sessions, http);
            std::signal(SIGINT, handle_signal);
            std::signal(SIGTERM, handle_signal);
            const int port = api.bind();
            std::cout << json{{"host", http.host}, {"port", port}}.dump() << std::endl;
            // stop() is a no-op until listen() is running, so keep asking.
            std::atomic<bool> done{false};
            std::thread watcher([&] {
                while (!done) {
                    if (g_stop_requested) {
                        api.stop();
                    }
                    std::this_thread::sleep_for(std::chrono::milliseconds(50));
                }
            });
            api.listen();
            done = true;
            watcher.join();
        }
    } catch (const MissingArtifactError& e) {
        std::cerr << json{{"error", {{"code", e.code()}, {"message", e.what()}, {"missing", e.missing()}}}}.dump()
                  << std::endl;
        return 1;
    } catch (const Error& e) {
        print_error(e.code(), e.what());
        return 1;
    } catch (const std::exception& e) {
        print_error("internal_error", e.what());
        return 1;
    }
    return 0;
}
