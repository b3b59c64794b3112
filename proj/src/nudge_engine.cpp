#include "nudge/nudge_engine.hpp"

#include "nudge/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace nudge::engine {

double expected_distance(std::span<const double> user_dist, std::span<const double> policy_dist) {
    if (user_dist.size() != policy_dist.size()) {
        throw ContractError("expected_distance: distributions over different grids (" +
                            std::to_string(user_dist.size()) + " vs " +
                            std::to_string(policy_dist.size()) + ")");
    }
    double total = 0.0;
    for (std::size_t d = 0; d < user_dist.size(); ++d) {
        total += std::abs(user_dist[d] - policy_dist[d]);
    }
    return total;
}

UserPredictor model_predictor(const usermodel::Params& params, const ContextFeatures& context,
                              const explain::ExplanationPool& pool, double nudge_strength) {
    return [&params, context, &pool, nudge_strength](const explain::ExplanationConfig& config) {
        return usermodel::predict(params, context, config, pool, nudge_strength);
    };
}

NudgeDecision select_config(const UserPredictor& predictor, std::span<const double> policy_dist,
                            const std::vector<explain::ExplanationConfig>& configs) {
    if (configs.empty()) {
        throw ContractError("select_config: empty candidate list");
    }
    NudgeDecision decision;
    decision.scored.reserve(configs.size());
    std::size_t best = 0;
    for (std::size_t i = 0; i < configs.size(); ++i) {
        const double d = expected_distance(predictor(configs[i]), policy_dist);
        decision.scored.push_back({configs[i], d});
        if (d < decision.scored[best].distance) {
            best = i;
        }
    }
    decision.chosen = decision.scored[best].config;
    decision.distance = decision.scored[best].distance;
    decision.exhaustive = true;
    return decision;
}

NudgeDecision select_config(const usermodel::Params& params, std::span<const double> policy_dist,
                            const ContextFeatures& context, const explain::ExplanationPool& pool,
                            const std::vector<explain::ExplanationConfig>& configs,
                            double nudge_strength) {
    return select_config(model_predictor(params, context, pool, nudge_strength), policy_dist,
                         configs);
}

namespace {

bool better(const ScoredConfig& a, const ScoredConfig& b) {
    if (a.distance != b.distance) {
        return a.distance < b.distance;
    }
    return explain::compare(a.config, b.config) < 0;
}

NudgeDecision beam_search(const UserPredictor& predictor, std::span<const double> policy_dist,
                          const explain::ExplanationPool& pool, const explain::BiasingMode& mode,
                          std::size_t width) {
    NudgeDecision decision;
    decision.exhaustive = false;
    std::map<std::string, double> seen;

    auto score = [&](const explain::ExplanationConfig& c) -> std::optional<ScoredConfig> {
        const std::string code = c.code();
        if (seen.count(code)) {
            return std::nullopt;
        }
        const double d = expected_distance(predictor(c), policy_dist);
        seen.emplace(code, d);
        decision.scored.push_back({c, d});
        return ScoredConfig{c, d};
    };

    std::vector<ScoredConfig> beam{*score(explain::default_config(pool, mode))};
    ScoredConfig best = beam.front();
    while (true) {
        std::vector<ScoredConfig> pool_next = beam;
        for (const auto& member : beam) {
            for (const auto& n : explain::neighbors(pool, mode, member.config)) {
                if (auto s = score(n)) {
                    pool_next.push_back(std::move(*s));
                }
            }
        }
        std::sort(pool_next.begin(), pool_next.end(), better);
        if (pool_next.size() > width) {
            pool_next.resize(width);
        }
        if (!better(pool_next.front(), best)) {
            break;
        }
        best = pool_next.front();
        beam = std::move(pool_next);
    }
    decision.chosen = best.config;
    decision.distance = best.distance;
    return decision;
}

} // namespace

NudgeDecision search_configs(const UserPredictor& predictor, std::span<const double> policy_dist,
                             const explain::ExplanationPool& pool, const explain::BiasingMode& mode,
                             const SearchOptions& options) {
    if (explain::config_count(pool, mode) <= options.exhaustive_limit) {
        return select_config(predictor, policy_dist, explain::enumerate_configs(pool, mode));
    }
    if (options.beam_width == 0) {
        throw ContractError("search_configs: beam width must be positive");
    }
    return beam_search(predictor, policy_dist, pool, mode, options.beam_width);
}

std::string_view to_string(Selection selection) {
    switch (selection) {
    case Selection::Optimize: return "optimize";
    case Selection::Random: return "random";
    case Selection::Default: return "none";
    }
    return "unknown";
}

std::optional<Selection> parse_selection(std::string_view text) {
    for (Selection s : {Selection::Optimize, Selection::Random, Selection::Default}) {
        if (to_string(s) == text) {
            return s;
        }
    }
    return std::nullopt;
}

Nudger::Nudger(explain::ExplanationPool pool, explain::BiasingMode mode, Selection selection,
               std::shared_ptr<const usermodel::Params> user_model, SearchOptions options)
    : pool_(std::move(pool)),
      mode_(mode),
      selection_(selection),
      user_model_(std::move(user_model)),
      options_(options) {
    if (selection_ == Selection::Optimize && !user_model_) {
        throw ConfigError("nudge: optimize selection needs a trained user model (user_model.json)");
    }
    if (explain::config_count(pool_, mode_) <= options_.exhaustive_limit) {
        enumerated_ = explain::enumerate_configs(pool_, mode_);
    } else if (selection_ == Selection::Random) {
        throw ConfigError("nudge: random selection needs an enumerable config space");
    }
}

NudgeDecision Nudger::nudge_step(const ContextFeatures& context,
                                 std::span<const double> policy_dist, Rng& rng) const {
    switch (selection_) {
    case Selection::Optimize: {
        const auto predictor =
            model_predictor(*user_model_, context, pool_, options_.nudge_strength);
        if (!enumerated_.empty()) {
            return select_config(predictor, policy_dist, enumerated_);
        }
        return search_configs(predictor, policy_dist, pool_, mode_, options_);
    }
    case Selection::Random: {
        NudgeDecision d;
        d.chosen = enumerated_[uniform_index(rng, enumerated_.size())];
        d.exhaustive = false;
        return d;
    }
    case Selection::Default:
        break;
    }
    NudgeDecision d;
    d.chosen = explain::default_config(pool_, mode_);
    d.exhaustive = false;
    return d;
}

} // namespace nudge::engine
