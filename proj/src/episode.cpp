#include "nudge/episode.hpp"

#include "nudge/errors.hpp"

#include <algorithm>
#include <chrono>

namespace nudge::sim {

Clock logical_clock() {
    return [](std::size_t day) { return static_cast<std::int64_t>(day); };
}

Clock wall_clock() {
    return [](std::size_t) {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::system_clock::now().time_since_epoch())
            .count();
    };
}

Episode::Episode(EpisodeSetup setup)
    : setup_(std::move(setup)),
      forecast_rng_(derive_seed(setup_.episode.rng_seed, streams::kForecast)),
      nudge_rng_(derive_seed(setup_.episode.rng_seed, streams::kExplore)) {
    setup_.episode.validate();
    setup_.forecaster.validate();
    if (setup_.series.size() < setup_.episode.num_days + setup_.forecaster.horizon) {
        throw ValidationError("episode: price series needs at least num_days + horizon opens");
    }
    if (!setup_.policy) {
        throw ConfigError("episode: no policy loaded (policy.json)");
    }
    if (setup_.policy->num_actions() != setup_.episode.grid.size()) {
        throw ValidationError("episode: policy action count does not match the position grid");
    }
    if (!setup_.clock) {
        setup_.clock = logical_clock();
    }
    state_ = {setup_.episode.initial_cash, 0.0, 0};
    prepare_day();
}

const DayState& Episode::current() const {
    if (finished()) {
        throw StateError("episode finished");
    }
    return current_;
}

double Episode::assets_now() const {
    return market::total_assets(state_, setup_.series.open(day_));
}

void Episode::prepare_day() {
    const auto& series = setup_.series;
    const auto& grid = setup_.episode.grid;
    const std::size_t t = day_;

    DayState d;
    d.day = t;
    d.open_price = series.open(t);
    const std::size_t first = t >= 5 ? t - 5 : 0;
    for (std::size_t i = first; i < t; ++i) {
        d.trailing_prices.push_back(series.open(i));
    }
    d.forecast = forecast::forecast(series, t, setup_.forecaster, forecast_rng_);

    const double assets = market::total_assets(state_, d.open_price);
    const double trailing_return = d.open_price / series.open(first) - 1.0;
    d.context.forecast = d.forecast;
    d.context.position_index =
        grid.nearest_index(market::position_fraction(state_, d.open_price));
    d.context.last_decision_index = held_;
    d.context.grid_size = grid.size();
    d.context.day_fraction =
        static_cast<double>(t) / static_cast<double>(setup_.episode.num_days);
    d.context.trailing_return = trailing_return;
    d.context.assets_ratio = assets / setup_.episode.initial_cash;

    const auto key = policy::make_state_key(d.forecast, held_, t, setup_.episode.num_days);
    auto dist = policy::policy_distribution(*setup_.policy, key, setup_.temperature);
    d.policy.suggested_index = policy::argmax_index(dist.probs);
    d.policy.suggested_fraction = grid.fraction(d.policy.suggested_index);
    d.policy.unseen_state = dist.unseen_state;
    d.policy.distribution = std::move(dist.probs);

    if (setup_.nudger) {
        d.nudge = setup_.nudger->nudge_step(d.context, d.policy.distribution, nudge_rng_);
    } else {
        d.nudge.chosen =
            explain::default_config(setup_.pool, {explain::Mode::DynEmph, setup_.pool.size()});
        d.nudge.exhaustive = false;
    }

    const explain::TemplateGenerator generator;
    const auto shown_pool =
        explain::instantiate(setup_.pool, generator, d.forecast, {d.open_price, trailing_return});
    d.payload = explain::render(shown_pool, d.nudge.chosen);
    current_ = std::move(d);
}

const InteractionRecord& Episode::submit(double fraction) {
    if (finished()) {
        throw StateError("episode finished");
    }
    const auto& grid = setup_.episode.grid;
    const auto index = grid.index_of(fraction);
    if (!index) {
        throw ProtocolError("order fraction " + std::to_string(fraction) +
                            " is not on the position grid");
    }
    const DayState& d = current_;
    state_ = market::apply_target_position(state_, PositionTarget::at(grid, *index), d.open_price);
    state_.day = d.day + 1;

    InteractionRecord r;
    r.session_id = setup_.session_id;
    r.agent_kind = setup_.agent_kind;
    r.day = d.day;
    r.num_days = setup_.episode.num_days;
    r.open_price = d.open_price;
    r.trailing_prices = d.trailing_prices;
    r.forecast = d.forecast;
    r.context = d.context;
    r.config = d.nudge.chosen;
    r.payload = d.payload;
    for (const auto& s : d.nudge.scored) {
        r.audit.push_back({s.config.code(), s.distance});
    }
    r.nudge_distance = d.nudge.distance;
    r.policy = d.policy;
    r.decision_index = *index;
    r.decision = grid.fraction(*index);
    r.state_after = state_;
    r.total_assets = market::total_assets(state_, d.open_price);
    r.assets_next_open = market::total_assets(state_, setup_.series.open(d.day + 1));
    r.timestamp_ms = setup_.clock(d.day);
    records_.push_back(std::move(r));

    held_ = *index;
    ++day_;
    if (!finished()) {
        prepare_day();
    }
    return records_.back();
}

double PolicyFollower::decide(const DayState& day, const PositionGrid&) {
    return day.policy.suggested_fraction;
}

double ArchetypeAgent::decide(const DayState& day, const PositionGrid& grid) {
    const std::size_t index =
        agent_.decide(day.day, day.policy.suggested_index, day.forecast, day.payload, grid);
    return grid.fraction(index);
}

std::vector<InteractionRecord> run_episode(EpisodeSetup setup, DecisionSource& agent) {
    if (setup.agent_kind == "human") {
        setup.agent_kind = agent.kind();
    }
    Episode episode(std::move(setup));
    const auto& grid = episode.setup().episode.grid;
    while (!episode.finished()) {
        episode.submit(agent.decide(episode.current(), grid));
    }
    return episode.records();
}

std::vector<InteractionRecord> replay(EpisodeSetup setup,
                                      const std::vector<InteractionRecord>& log) {
    if (!log.empty()) {
        setup.agent_kind = log.front().agent_kind;
    }
    Episode episode(std::move(setup));
    for (const auto& r : log) {
        if (episode.finished()) {
            throw ProtocolError("replay: log longer than the episode");
        }
        if (r.day != episode.day()) {
            throw ProtocolError("replay: log day " + std::to_string(r.day) + " out of sequence");
        }
        episode.submit(r.decision);
    }
    return episode.records();
}

} // namespace nudge::sim
