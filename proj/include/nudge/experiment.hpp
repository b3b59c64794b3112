#pragma once

#include "nudge/analysis.hpp"
#include "nudge/config.hpp"
#include "nudge/episode.hpp"
#include "nudge/policy.hpp"
#include "nudge/record.hpp"
#include "nudge/user_model.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace nudge::experiment {

inline constexpr const char* kPolicyFile = "policy.json";
inline constexpr const char* kUserModelFile = "user_model.json";

struct Artifacts {
    std::shared_ptr<const policy::QTable> policy;
    std::shared_ptr<const usermodel::Params> user_model; // null when not required
    explain::ExplanationPool pool{explain::ExplanationPool::default_pool()};
};

// The explanation pool named by the config, or the built-in one.
explain::ExplanationPool load_configured_pool(const ExperimentConfig& config);

// Loads policy.json (and user_model.json when the selection is Optimize) from
// config.paths.artifacts. Throws MissingArtifactError listing every missing file.
Artifacts load_artifacts(const ExperimentConfig& config);

market::PriceSeries evaluation_series(const ExperimentConfig& config);
market::PriceSeries series_for_seed(const ExperimentConfig& config, std::uint64_t seed);

policy::TrainingResult train_policy(const ExperimentConfig& config);

std::shared_ptr<const engine::Nudger> make_nudger(const ExperimentConfig& config,
                                                  const Artifacts& artifacts,
                                                  engine::Selection selection);

sim::EpisodeSetup episode_setup(const ExperimentConfig& config, const Artifacts& artifacts,
                                std::string session_id, market::PriceSeries series,
                                std::shared_ptr<const engine::Nudger> nudger);

// Every cohort member plays the same series and forecast stream. Session ids are
// <prefix>-<index>. One log per member, in cohort order.
std::vector<std::vector<InteractionRecord>> simulate_cohort(const ExperimentConfig& config,
                                                            const Artifacts& artifacts,
                                                            engine::Selection selection,
                                                            const market::PriceSeries& series,
                                                            const std::string& prefix);

// Exploration episodes with uniformly random configs over fresh series; the
// training data for the user model.
std::vector<InteractionRecord> exploration_logs(const ExperimentConfig& config,
                                                const Artifacts& artifacts);

usermodel::TrainingReport train_user_model(const ExperimentConfig& config,
                                           const std::vector<InteractionRecord>& logs);

struct RunResult {
    policy::TrainingResult policy;
    usermodel::TrainingReport user_model;
    std::vector<std::vector<InteractionRecord>> sessions;
    analysis::ClusterReport report;
};

// Train policy, collect exploration logs, train the user model, simulate the
// cohort with the configured selection and analyze it. Writes artifacts, logs
// and the report under the configured paths when write_outputs is set.
RunResult run_experiment(const ExperimentConfig& config, bool write_outputs);

void save_sessions(const std::filesystem::path& dir,
                   const std::vector<std::vector<InteractionRecord>>& sessions);

} // namespace nudge::experiment
