#pragma once

#include "nudge/forecaster.hpp"
#include "nudge/market_sim.hpp"

#include <compare>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace nudge::policy {

inline constexpr std::size_t kConfidenceTerciles = 3;
inline constexpr std::size_t kDayBuckets = 3;

// The slice of context c that the policy conditions on.
struct StateKey {
    forecast::Label label{forecast::Label::Neutral};
    std::size_t confidence{0}; // tercile of the top forecast probability over [1/3, 1]
    std::size_t position{0};   // grid index of the position currently held
    std::size_t days_bucket{0};

    auto operator<=>(const StateKey&) const = default;

    [[nodiscard]] std::string to_string() const;
    static StateKey parse(const std::string& text);
};

std::size_t confidence_tercile(const forecast::ForecastDistribution& f);
std::size_t days_bucket(std::size_t day, std::size_t num_days);
StateKey make_state_key(const forecast::ForecastDistribution& f, std::size_t position_index,
                        std::size_t day, std::size_t num_days);

class QTable {
public:
    QTable() = default;
    explicit QTable(std::size_t num_actions) : num_actions_(num_actions) {}

    [[nodiscard]] std::size_t num_actions() const noexcept { return num_actions_; }
    [[nodiscard]] std::size_t num_states() const noexcept { return values_.size(); }
    [[nodiscard]] const std::vector<double>* find(const StateKey& key) const;
    std::vector<double>& row(const StateKey& key);
    [[nodiscard]] const std::map<StateKey, std::vector<double>>& rows() const noexcept {
        return values_;
    }

    bool operator==(const QTable&) const = default;

private:
    std::size_t num_actions_{0};
    std::map<StateKey, std::vector<double>> values_;
};

struct Hyper {
    double gamma{0.5};
    // Learning rate. With visit_decay the per-pair rate is max(alpha_min, 1 / visits).
    double alpha{0.1};
    bool visit_decay{true};
    double alpha_min{0.02};
    // Epsilon decays linearly from epsilon_start to epsilon_end over the first
    // epsilon_decay_fraction of episodes.
    double epsilon_start{1.0};
    double epsilon_end{0.1};
    double epsilon_decay_fraction{0.8};

    void validate() const;
};

struct TrainingSetup {
    market::EpisodeConfig episode{};
    market::SeriesParams market{};
    forecast::ForecastParams forecaster{};
};

// Episode index -> price series with at least num_days + 1 opens.
using SeriesProvider = std::function<market::PriceSeries(std::size_t)>;

struct TrainingResult {
    QTable table;
    std::vector<double> episode_returns; // final assets / initial cash - 1, per episode
    double mean_return_first_decile{0.0};
    double mean_return_last_decile{0.0};
};

// Tabular Q-learning. Reward is the per-day change in total assets divided by
// initial cash. Deterministic for a fixed seed. Throws TrainingError on a
// non-finite Q value.
TrainingResult train_policy(const TrainingSetup& setup, std::size_t episodes, const Hyper& hyper,
                            std::uint64_t seed);
TrainingResult train_policy(const TrainingSetup& setup, const SeriesProvider& series,
                            std::size_t episodes, const Hyper& hyper, std::uint64_t seed);

struct PolicyDistribution {
    std::vector<double> probs;
    bool unseen_state{false};
};

// Boltzmann weights over the state's Q row. temperature == 0 is the greedy
// limit (one-hot, lowest index on ties); negative temperature is a ContractError.
// Unseen states yield the uniform distribution with unseen_state set.
PolicyDistribution policy_distribution(const QTable& table, const StateKey& state,
                                       double temperature);
std::vector<double> boltzmann(std::span<const double> values, double temperature);

// Argmax with lowest-index tie-break.
std::size_t argmax_index(std::span<const double> dist);
PositionTarget suggested_decision(const PositionGrid& grid, std::span<const double> dist);

std::string to_json(const QTable& table);
QTable qtable_from_json(const std::string& text);
void save_qtable(const std::filesystem::path& path, const QTable& table);
QTable load_qtable(const std::filesystem::path& path);

} // namespace nudge::policy
