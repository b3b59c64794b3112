#include "nudge/policy.hpp"

#include "nudge/errors.hpp"
#include "nudge/random.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace nudge::policy {

using nlohmann::json;

std::string StateKey::to_string() const {
    std::ostringstream out;
    out << forecast::to_string(label) << ':' << confidence << ':' << position << ':'
        << days_bucket;
    return out.str();
}

StateKey StateKey::parse(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream in(text);
    std::string part;
    while (std::getline(in, part, ':')) {
        parts.push_back(part);
    }
    if (parts.size() != 4) {
        throw DataError("policy state key: malformed '" + text + "'");
    }
    const auto label = forecast::parse_label(parts[0]);
    if (!label) {
        throw DataError("policy state key: unknown label in '" + text + "'");
    }
    try {
        return {*label, std::stoul(parts[1]), std::stoul(parts[2]), std::stoul(parts[3])};
    } catch (const std::exception&) {
        throw DataError("policy state key: malformed '" + text + "'");
    }
}

std::size_t confidence_tercile(const forecast::ForecastDistribution& f) {
    const double top = f.prob(f.argmax());
    const double scaled = (top - 1.0 / 3.0) / (2.0 / 9.0);
    if (scaled <= 0.0) {
        return 0;
    }
    return std::min<std::size_t>(kConfidenceTerciles - 1, static_cast<std::size_t>(scaled));
}

std::size_t days_bucket(std::size_t day, std::size_t num_days) {
    if (num_days == 0) {
        return 0;
    }
    return std::min(kDayBuckets - 1, day * kDayBuckets / num_days);
}

StateKey make_state_key(const forecast::ForecastDistribution& f, std::size_t position_index,
                        std::size_t day, std::size_t num_days) {
    return {f.argmax(), confidence_tercile(f), position_index, days_bucket(day, num_days)};
}

const std::vector<double>* QTable::find(const StateKey& key) const {
    const auto it = values_.find(key);
    return it == values_.end() ? nullptr : &it->second;
}

std::vector<double>& QTable::row(const StateKey& key) {
    auto [it, inserted] = values_.try_emplace(key);
    if (inserted) {
        it->second.assign(num_actions_, 0.0);
    }
    return it->second;
}

void Hyper::validate() const {
    if (!(gamma >= 0.0 && gamma < 1.0)) {
        throw ValidationError("policy.gamma: must lie in [0, 1)");
    }
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw ValidationError("policy.alpha: must lie in (0, 1]");
    }
    if (!(alpha_min > 0.0 && alpha_min <= 1.0)) {
        throw ValidationError("policy.alpha_min: must lie in (0, 1]");
    }
    if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0 && epsilon_end >= 0.0 &&
          epsilon_end <= 1.0)) {
        throw ValidationError("policy.epsilon: must lie in [0, 1]");
    }
    if (!(epsilon_decay_fraction > 0.0 && epsilon_decay_fraction <= 1.0)) {
        throw ValidationError("policy.epsilon_decay_fraction: must lie in (0, 1]");
    }
}

namespace {

double mean_of(std::span<const double> xs) {
    if (xs.empty()) {
        return 0.0;
    }
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

std::size_t greedy(const std::vector<double>& row) {
    return argmax_index(row);
}

} // namespace

TrainingResult train_policy(const TrainingSetup& setup, std::size_t episodes, const Hyper& hyper,
                            std::uint64_t seed) {
    market::SeriesParams params = setup.market;
    params.length = std::max(params.length, setup.episode.num_days + 1);
    SeriesProvider provider = [params, seed](std::size_t episode) {
        return market::generate_series(derive_seed(seed, streams::kSeries, episode), params);
    };
    return train_policy(setup, provider, episodes, hyper, seed);
}

TrainingResult train_policy(const TrainingSetup& setup, const SeriesProvider& series_for,
                            std::size_t episodes, const Hyper& hyper, std::uint64_t seed) {
    setup.episode.validate();
    setup.forecaster.validate();
    hyper.validate();

    const auto& grid = setup.episode.grid;
    const std::size_t num_days = setup.episode.num_days;
    const std::size_t actions = grid.size();

    TrainingResult result{QTable(actions), {}, 0.0, 0.0};
    QTable& q = result.table;
    std::map<StateKey, std::vector<std::uint32_t>> visits;

    const auto decay_episodes = std::max<double>(
        1.0, hyper.epsilon_decay_fraction * static_cast<double>(episodes));

    for (std::size_t ep = 0; ep < episodes; ++ep) {
        const market::PriceSeries series = series_for(ep);
        if (series.size() < num_days + 1) {
            throw TrainingError("train_policy: series for episode " + std::to_string(ep) +
                                " shorter than num_days + 1");
        }
        Rng forecast_rng(derive_seed(seed, streams::kForecast, ep));
        Rng explore_rng(derive_seed(seed, streams::kExplore, ep));

        const double progress = std::min(1.0, static_cast<double>(ep) / decay_episodes);
        const double epsilon =
            hyper.epsilon_start + (hyper.epsilon_end - hyper.epsilon_start) * progress;

        market::PortfolioState state{setup.episode.initial_cash, 0.0, 0};
        std::size_t held = 0;
        auto fc = forecast::forecast(series, 0, setup.forecaster, forecast_rng);
        StateKey key = make_state_key(fc, held, 0, num_days);

        for (std::size_t day = 0; day < num_days; ++day) {
            std::vector<double>& row = q.row(key);
            // Both draws every step keeps the stream aligned regardless of epsilon.
            const double u = uniform01(explore_rng);
            const std::size_t random_action = uniform_index(explore_rng, actions);
            const std::size_t action = u < epsilon ? random_action : greedy(row);

            const double price = series.open(day);
            const double before = market::total_assets(state, price);
            state = market::apply_target_position(state, PositionTarget::at(grid, action), price);
            const double after = market::total_assets(state, series.open(day + 1));
            const double reward = (after - before) / setup.episode.initial_cash;
            state.day = day + 1;
            held = action;

            double target = reward;
            StateKey next_key = key;
            if (day + 1 < num_days) {
                fc = forecast::forecast(series, day + 1, setup.forecaster, forecast_rng);
                next_key = make_state_key(fc, held, day + 1, num_days);
                const std::vector<double>& next_row = q.row(next_key);
                target += hyper.gamma * *std::max_element(next_row.begin(), next_row.end());
            }

            auto& n = visits.try_emplace(key, actions, 0u).first->second;
            n[action] += 1;
            const double alpha =
                hyper.visit_decay ? std::max(hyper.alpha_min, 1.0 / static_cast<double>(n[action]))
                                  : hyper.alpha;
            // q.row(next_key) may have inserted; re-fetch the current row.
            std::vector<double>& current = q.row(key);
            current[action] += alpha * (target - current[action]);
            if (!std::isfinite(current[action])) {
                throw TrainingError("train_policy: non-finite Q at episode " + std::to_string(ep) +
                                    ", day " + std::to_string(day) + ", state " +
                                    key.to_string() + ", action " + std::to_string(action) +
                                    " (reward " + std::to_string(reward) + ")");
            }
            key = next_key;
        }
        result.episode_returns.push_back(
            market::total_assets(state, series.open(num_days)) / setup.episode.initial_cash - 1.0);
    }

    const std::size_t decile = std::max<std::size_t>(1, episodes / 10);
    if (episodes > 0) {
        const std::span<const double> all(result.episode_returns);
        result.mean_return_first_decile = mean_of(all.first(std::min(decile, episodes)));
        result.mean_return_last_decile = mean_of(all.last(std::min(decile, episodes)));
    }
    return result;
}

std::vector<double> boltzmann(std::span<const double> values, double temperature) {
    if (!(temperature >= 0.0)) {
        throw ContractError("policy_distribution: temperature must be positive");
    }
    std::vector<double> out(values.size(), 0.0);
    if (values.empty()) {
        return out;
    }
    if (temperature == 0.0) {
        out[argmax_index(values)] = 1.0;
        return out;
    }
    const double top = *std::max_element(values.begin(), values.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        out[i] = std::exp((values[i] - top) / temperature);
        sum += out[i];
    }
    for (double& p : out) {
        p /= sum;
    }
    return out;
}

PolicyDistribution policy_distribution(const QTable& table, const StateKey& state,
                                       double temperature) {
    if (!(temperature >= 0.0)) {
        throw ContractError("policy_distribution: temperature must be positive");
    }
    const std::vector<double>* row = table.find(state);
    if (row == nullptr) {
        const std::size_t n = table.num_actions();
        return {std::vector<double>(n, 1.0 / static_cast<double>(n)), true};
    }
    return {boltzmann(*row, temperature), false};
}

std::size_t argmax_index(std::span<const double> dist) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < dist.size(); ++i) {
        if (dist[i] > dist[best]) {
            best = i;
        }
    }
    return best;
}

PositionTarget suggested_decision(const PositionGrid& grid, std::span<const double> dist) {
    if (dist.size() != grid.size()) {
        throw ContractError("suggested_decision: distribution size does not match grid");
    }
    return PositionTarget::at(grid, argmax_index(dist));
}

std::string to_json(const QTable& table) {
    json states = json::object();
    for (const auto& [key, row] : table.rows()) {
        states[key.to_string()] = row;
    }
    json doc = {{"format", "nudgexai.qtable"},
                {"version", 1},
                {"num_actions", table.num_actions()},
                {"states", std::move(states)}};
    return doc.dump(1) + "\n";
}

QTable qtable_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("qtable: invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) {
        throw DataError("qtable: expected a JSON object");
    }
    try {
        if (doc.value("format", "") != "nudgexai.qtable" || doc.value("version", 0) != 1) {
            throw DataError("qtable: unsupported format or version");
        }
        QTable table(doc.at("num_actions").get<std::size_t>());
        for (const auto& [name, values] : doc.at("states").items()) {
            auto row = values.get<std::vector<double>>();
            if (row.size() != table.num_actions()) {
                throw DataError("qtable: row '" + name + "' has wrong length");
            }
            for (double v : row) {
                if (!std::isfinite(v)) {
                    throw DataError("qtable: non-finite value in row '" + name + "'");
                }
            }
            table.row(StateKey::parse(name)) = std::move(row);
        }
        return table;
    } catch (const json::exception& e) {
        throw DataError(std::string("qtable: malformed document: ") + e.what());
    }
}

void save_qtable(const std::filesystem::path& path, const QTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    out << to_json(table);
}

QTable load_qtable(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot read " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return qtable_from_json(buf.str());
}

} // namespace nudge::policy
