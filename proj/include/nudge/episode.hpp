#pragma once

#include "nudge/archetypes.hpp"
#include "nudge/explanation_pool.hpp"
#include "nudge/forecaster.hpp"
#include "nudge/market_sim.hpp"
#include "nudge/nudge_engine.hpp"
#include "nudge/policy.hpp"
#include "nudge/record.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace nudge::sim {

// Milliseconds for a record; batch runs use a logical clock so logs are
// byte-reproducible, live sessions use wall time.
using Clock = std::function<std::int64_t(std::size_t day)>;
Clock logical_clock();
Clock wall_clock();

struct EpisodeSetup {
    std::string session_id{"session"};
    std::string agent_kind{"human"};
    market::EpisodeConfig episode{};
    market::PriceSeries series{};
    forecast::ForecastParams forecaster{};
    std::shared_ptr<const policy::QTable> policy{};
    double temperature{0.002};
    // Null means no biasing: every explanation shown, none emphasized.
    std::shared_ptr<const engine::Nudger> nudger{};
    explain::ExplanationPool pool{explain::ExplanationPool::default_pool()};
    Clock clock{logical_clock()};
};

// What the system has prepared for the current day, before the order.
struct DayState {
    std::size_t day{0};
    double open_price{0.0};
    std::vector<double> trailing_prices;
    forecast::ForecastDistribution forecast{};
    ContextFeatures context{};
    PolicySnapshot policy{};
    engine::NudgeDecision nudge{};
    std::vector<explain::DisplayItem> payload;
};

// Day-stepped episode. Forecasts and nudges for day t are produced when day t
// starts; submit() applies the order at the day's open and advances.
class Episode {
public:
    // Throws ValidationError when the series is shorter than num_days + 1 or
    // the policy is missing or sized for another grid.
    explicit Episode(EpisodeSetup setup);

    [[nodiscard]] bool finished() const noexcept { return day_ >= setup_.episode.num_days; }
    [[nodiscard]] std::size_t day() const noexcept { return day_; }
    // Throws StateError when finished.
    [[nodiscard]] const DayState& current() const;
    [[nodiscard]] const market::PortfolioState& portfolio() const noexcept { return state_; }
    [[nodiscard]] double assets_now() const;
    [[nodiscard]] const std::vector<InteractionRecord>& records() const noexcept { return records_; }
    [[nodiscard]] const EpisodeSetup& setup() const noexcept { return setup_; }

    // Throws ProtocolError for an off-grid fraction, StateError when finished.
    const InteractionRecord& submit(double fraction);

private:
    void prepare_day();

    EpisodeSetup setup_;
    Rng forecast_rng_;
    Rng nudge_rng_;
    market::PortfolioState state_{};
    std::size_t held_{0};
    std::size_t day_{0};
    DayState current_{};
    std::vector<InteractionRecord> records_;
};

// Something that picks the day's position.
class DecisionSource {
public:
    virtual ~DecisionSource() = default;
    // Returns a position fraction; it must be a grid element.
    virtual double decide(const DayState& day, const PositionGrid& grid) = 0;
    [[nodiscard]] virtual std::string kind() const = 0;
};

class PolicyFollower final : public DecisionSource {
public:
    double decide(const DayState& day, const PositionGrid& grid) override;
    [[nodiscard]] std::string kind() const override { return "policy"; }
};

class ConstantAgent final : public DecisionSource {
public:
    explicit ConstantAgent(double fraction) : fraction_(fraction) {}
    double decide(const DayState&, const PositionGrid&) override { return fraction_; }
    [[nodiscard]] std::string kind() const override { return "constant"; }

private:
    double fraction_;
};

class ArchetypeAgent final : public DecisionSource {
public:
    ArchetypeAgent(archetype::Params params, std::uint64_t seed) : agent_(params, seed) {}
    double decide(const DayState& day, const PositionGrid& grid) override;
    [[nodiscard]] std::string kind() const override {
        return std::string(archetype::to_string(agent_.params().kind));
    }

private:
    archetype::Agent agent_;
};

// Plays a full episode. Identical setups and agents give identical logs.
std::vector<InteractionRecord> run_episode(EpisodeSetup setup, DecisionSource& agent);

// Replays recorded decisions against setup; used to check log fidelity.
std::vector<InteractionRecord> replay(EpisodeSetup setup, const std::vector<InteractionRecord>& log);

} // namespace nudge::sim
