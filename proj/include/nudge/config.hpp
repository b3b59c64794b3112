#pragma once

#include "nudge/analysis.hpp"
#include "nudge/archetypes.hpp"
#include "nudge/explanation_pool.hpp"
#include "nudge/forecaster.hpp"
#include "nudge/market_sim.hpp"
#include "nudge/nudge_engine.hpp"
#include "nudge/policy.hpp"
#include "nudge/user_model.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace nudge {

struct ExperimentConfig {
    market::EpisodeConfig episode{};
    market::SeriesParams market{.drift = 0.002};
    // Seed of the shared evaluation series every cohort member and live session plays.
    std::uint64_t eval_seed{206};
    forecast::ForecastParams forecaster{};

    struct Policy {
        std::size_t episodes{200000};
        policy::Hyper hyper{.alpha_min = 1e-4};
        double temperature{0.002};
        std::uint64_t seed{11};
    } policy;

    struct UserModel {
        usermodel::Hyper hyper{};
        std::uint64_t seed{13};
        std::size_t exploration_episodes{4};
    } user_model;

    struct Nudge {
        explain::BiasingMode mode{};
        engine::Selection selection{engine::Selection::Optimize};
        engine::SearchOptions search{};
    } nudge;

    archetype::CohortSpec cohort{};
    analysis::ReportOptions analysis{};

    struct Paths {
        std::string artifacts{"artifacts"};
        std::string logs{"logs"};
        std::string output{"report"};
        std::string pool{}; // empty: built-in explanation pool
    } paths;

    // Cross-field checks; throws ValidationError naming the field.
    void validate() const;
};

// Unknown sections or keys are rejected with ConfigError; missing ones keep defaults.
ExperimentConfig parse_experiment_config(const nlohmann::json& doc);
nlohmann::json to_json(const ExperimentConfig& config);

// .toml uses the TOML subset reader, anything else is parsed as JSON. Relative
// paths inside the file are left as written.
ExperimentConfig load_config(const std::filesystem::path& path);

// Applies the NUDGEXAI_ARTIFACTS environment variable, if set.
void apply_environment(ExperimentConfig& config);

} // namespace nudge
