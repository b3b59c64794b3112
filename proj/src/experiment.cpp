#include "nudge/experiment.hpp"

#include "nudge/errors.hpp"
#include "nudge/random.hpp"

#include <fstream>

namespace nudge::experiment {

namespace fs = std::filesystem;

explain::ExplanationPool load_configured_pool(const ExperimentConfig& config) {
    if (config.paths.pool.empty()) {
        return explain::ExplanationPool::default_pool();
    }
    return explain::load_pool(config.paths.pool);
}

Artifacts load_artifacts(const ExperimentConfig& config) {
    const fs::path dir(config.paths.artifacts);
    const bool needs_model = config.nudge.selection == engine::Selection::Optimize;
    std::vector<std::string> missing;
    if (!fs::exists(dir / kPolicyFile)) {
        missing.emplace_back(kPolicyFile);
    }
    if (needs_model && !fs::exists(dir / kUserModelFile)) {
        missing.emplace_back(kUserModelFile);
    }
    if (!missing.empty()) {
        std::string names;
        for (const auto& m : missing) {
            names += (names.empty() ? "" : ", ") + m;
        }
        throw MissingArtifactError("missing artifacts in " + dir.string() + ": " + names,
                                   std::move(missing));
    }
    Artifacts a;
    a.pool = load_configured_pool(config);
    auto table = policy::load_qtable(dir / kPolicyFile);
    if (table.num_actions() != config.episode.grid.size()) {
        throw ValidationError("policy.json: action count " + std::to_string(table.num_actions()) +
                              " does not match the grid size " +
                              std::to_string(config.episode.grid.size()));
    }
    a.policy = std::make_shared<const policy::QTable>(std::move(table));
    if (needs_model) {
        a.user_model =
            std::make_shared<const usermodel::Params>(usermodel::load_params(dir / kUserModelFile));
    }
    return a;
}

market::PriceSeries series_for_seed(const ExperimentConfig& config, std::uint64_t seed) {
    auto params = config.market;
    params.length = config.episode.num_days + 1;
    return market::generate_series(seed, params);
}

market::PriceSeries evaluation_series(const ExperimentConfig& config) {
    return series_for_seed(config, config.eval_seed);
}

policy::TrainingResult train_policy(const ExperimentConfig& config) {
    policy::TrainingSetup setup{config.episode, config.market, config.forecaster};
    return policy::train_policy(setup, config.policy.episodes, config.policy.hyper,
                                config.policy.seed);
}

std::shared_ptr<const engine::Nudger> make_nudger(const ExperimentConfig& config,
                                                  const Artifacts& artifacts,
                                                  engine::Selection selection) {
    return std::make_shared<const engine::Nudger>(artifacts.pool, config.nudge.mode, selection,
                                                  artifacts.user_model, config.nudge.search);
}

sim::EpisodeSetup episode_setup(const ExperimentConfig& config, const Artifacts& artifacts,
                                std::string session_id, market::PriceSeries series,
                                std::shared_ptr<const engine::Nudger> nudger) {
    sim::EpisodeSetup s;
    s.session_id = std::move(session_id);
    s.episode = config.episode;
    s.series = std::move(series);
    s.forecaster = config.forecaster;
    s.policy = artifacts.policy;
    s.temperature = config.policy.temperature;
    s.nudger = std::move(nudger);
    s.pool = artifacts.pool;
    return s;
}

std::vector<std::vector<InteractionRecord>> simulate_cohort(const ExperimentConfig& config,
                                                            const Artifacts& artifacts,
                                                            engine::Selection selection,
                                                            const market::PriceSeries& series,
                                                            const std::string& prefix) {
    const auto nudger = make_nudger(config, artifacts, selection);
    std::vector<std::vector<InteractionRecord>> out;
    for (const auto& member : archetype::generate_cohort(config.cohort)) {
        auto setup = episode_setup(config, artifacts, prefix + "-" + std::to_string(member.index),
                                   series, nudger);
        sim::ArchetypeAgent agent(member.params, member.seed);
        out.push_back(sim::run_episode(std::move(setup), agent));
    }
    return out;
}

std::vector<InteractionRecord> exploration_logs(const ExperimentConfig& config,
                                                const Artifacts& artifacts) {
    const auto nudger = make_nudger(config, artifacts, engine::Selection::Random);
    const auto cohort = archetype::generate_cohort(config.cohort);
    std::vector<InteractionRecord> logs;
    for (std::size_t e = 0; e < config.user_model.exploration_episodes; ++e) {
        const auto series =
            series_for_seed(config, derive_seed(config.eval_seed, streams::kExplore, e + 1));
        for (const auto& member : cohort) {
            auto setup = episode_setup(
                config, artifacts,
                "explore-" + std::to_string(e) + "-" + std::to_string(member.index), series,
                nudger);
            setup.episode.rng_seed = derive_seed(config.episode.rng_seed, streams::kExplore, e + 1);
            sim::ArchetypeAgent agent(member.params, derive_seed(member.seed, streams::kExplore, e));
            auto records = sim::run_episode(std::move(setup), agent);
            logs.insert(logs.end(), records.begin(), records.end());
        }
    }
    return logs;
}

usermodel::TrainingReport train_user_model(const ExperimentConfig& config,
                                           const std::vector<InteractionRecord>& logs) {
    return usermodel::train_user_model(logs, load_configured_pool(config), config.user_model.hyper,
                                       config.user_model.seed);
}

void save_sessions(const fs::path& dir, const std::vector<std::vector<InteractionRecord>>& sessions) {
    fs::create_directories(dir);
    for (const auto& s : sessions) {
        if (s.empty()) {
            continue;
        }
        save_jsonl(dir / (s.front().session_id + ".jsonl"), s);
    }
}

RunResult run_experiment(const ExperimentConfig& config, bool write_outputs) {
    RunResult result;
    result.policy = train_policy(config);

    Artifacts artifacts;
    artifacts.pool = load_configured_pool(config);
    artifacts.policy = std::make_shared<const policy::QTable>(result.policy.table);

    const auto logs = exploration_logs(config, artifacts);
    result.user_model = train_user_model(config, logs);
    artifacts.user_model = std::make_shared<const usermodel::Params>(result.user_model.params);

    result.sessions = simulate_cohort(config, artifacts, config.nudge.selection,
                                      evaluation_series(config), "agent");
    auto options = config.analysis;
    result.report = analysis::analyze(result.sessions, options);

    if (write_outputs) {
        const fs::path art(config.paths.artifacts);
        fs::create_directories(art);
        policy::save_qtable(art / kPolicyFile, result.policy.table);
        usermodel::save_params(art / kUserModelFile, result.user_model.params);
        {
            std::ofstream csv(art / "user_model_training.csv");
            usermodel::write_training_csv(csv, result.user_model);
        }
        save_jsonl(art / "exploration.jsonl", logs);
        save_sessions(config.paths.logs, result.sessions);
        analysis::write_report(config.paths.output, result.report);
    }
    return result;
}

} // namespace nudge::experiment
