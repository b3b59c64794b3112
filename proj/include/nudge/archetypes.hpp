#pragma once

#include "nudge/explanation_pool.hpp"
#include "nudge/forecaster.hpp"
#include "nudge/grid.hpp"
#include "nudge/random.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace nudge::archetype {

enum class Kind { AIAligned, Delayed, Cautious, Contrarian };

inline constexpr std::array<Kind, 4> kAllKinds{Kind::AIAligned, Kind::Delayed, Kind::Cautious,
                                               Kind::Contrarian};

std::string_view to_string(Kind kind);
std::optional<Kind> parse_kind(std::string_view text);

struct Params {
    Kind kind{Kind::AIAligned};
    double susceptibility{0.0}; // pull toward d_AI when the forecast's label is emphasized
    std::size_t lag{0};         // Delayed
    double noise{0.0};          // jitter, in grid-index units
    double cap{1.0};            // Cautious: maximum position fraction
    double trade_prob{1.0};     // Cautious: chance of trading on a given day
    double reliance_drift{0.0}; // Contrarian: per-day growth of the follow weight

    void validate() const;
    bool operator==(const Params&) const = default;
};

// Committed defaults; they reproduce the cluster orderings on the default market.
Params default_params(Kind kind);

// Everything a synthetic user reacts to on one day.
struct Observation {
    std::size_t day{0};
    std::size_t ai_index{0};   // today's d_AI
    std::size_t held_index{0}; // position held coming into the day
    forecast::ForecastDistribution forecast{};
    std::span<const explain::DisplayItem> payload{};
    std::span<const std::size_t> ai_history{}; // d_AI of days 0..day-1
};

// Share of the susceptibility that applies: 1 / |emphasized| when the forecast's
// top label is among the emphasized items, else 0.
double emphasis_weight(std::span<const explain::DisplayItem> payload,
                       const forecast::ForecastDistribution& forecast);

// One decision, as a grid index:
//   base rule per kind (AIAligned follows, Cautious trades toward min(cap, d_AI)
//   with probability trade_prob, Delayed follows d_AI from lag days ago,
//   Contrarian mixes d_AI with its mirror using w = clamp(reliance_drift * day, 0, 1)),
//   then noise * z, then a pull toward d_AI of susceptibility * emphasis_weight,
//   then rounding to the grid. Hold days (Cautious not trading, Delayed before
//   lag) keep the held position exactly. Draws the same number of variates every
//   call.
std::size_t decide(const Params& params, const Observation& obs, const PositionGrid& grid,
                   Rng& rng);

// Stateful wrapper tracking d_AI history and the held position over an episode.
class Agent {
public:
    Agent(Params params, std::uint64_t seed);

    void reset();
    // Returns the decided grid index and records it as the held position.
    std::size_t decide(std::size_t day, std::size_t ai_index,
                       const forecast::ForecastDistribution& forecast,
                       std::span<const explain::DisplayItem> payload, const PositionGrid& grid);

    [[nodiscard]] const Params& params() const noexcept { return params_; }

private:
    Params params_;
    std::uint64_t seed_;
    Rng rng_;
    std::vector<std::size_t> ai_history_;
    std::size_t held_{0};
};

struct CohortCounts {
    std::size_t ai_aligned{16};
    std::size_t delayed{14};
    std::size_t cautious{10};
    std::size_t contrarian{11};

    [[nodiscard]] std::size_t total() const noexcept {
        return ai_aligned + delayed + cautious + contrarian;
    }
    [[nodiscard]] std::size_t count(Kind kind) const;
};

struct CohortSpec {
    CohortCounts counts{};
    std::uint64_t seed{2024};
    // Relative jitter applied per agent to susceptibility, noise, cap, trade_prob
    // and reliance_drift: value * (1 + jitter * u), u uniform in [-1, 1].
    double jitter{0.2};
    std::array<Params, 4> base{default_params(Kind::AIAligned), default_params(Kind::Delayed),
                               default_params(Kind::Cautious), default_params(Kind::Contrarian)};

    [[nodiscard]] const Params& base_for(Kind kind) const;
    Params& base_for(Kind kind);
};

struct CohortMember {
    std::size_t index{0};
    Params params;
    std::uint64_t seed{0}; // agent random stream

    bool operator==(const CohortMember&) const = default;
};

// Members ordered AIAligned, Delayed, Cautious, Contrarian.
std::vector<CohortMember> generate_cohort(const CohortSpec& spec);

} // namespace nudge::archetype
