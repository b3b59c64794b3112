#pragma once

#include "nudge/grid.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace nudge::market {

// Per-day opening prices. Index t is the open of day t; an episode of N days
// needs N + 1 opens so the last order can be marked to market.
class PriceSeries {
public:
    PriceSeries() = default;
    explicit PriceSeries(std::vector<double> opens);

    [[nodiscard]] std::size_t size() const noexcept { return opens_.size(); }
    [[nodiscard]] double open(std::size_t day) const;
    [[nodiscard]] const std::vector<double>& opens() const noexcept { return opens_; }

    bool operator==(const PriceSeries&) const = default;

private:
    std::vector<double> opens_;
};

// Lognormal daily steps with an optional Markov regime-switching drift:
//   log(P[t+1] / P[t]) = drift + regime_drifts[r_t] + volatility * z_t
// Regimes persist day to day and switch with regime_switch_prob, which makes
// the drift autocorrelated and therefore learnable.
struct SeriesParams {
    double start_price{1000.0};
    double volatility{0.02};
    double drift{0.0};
    std::vector<double> regime_drifts{};
    double regime_switch_prob{0.0};
    std::size_t length{46};
};

// Throws ParameterError on negative volatility, zero length, non-positive
// start price or a switch probability outside [0, 1].
PriceSeries generate_series(std::uint64_t seed, const SeriesParams& params);

void write_series_csv(std::ostream& out, const PriceSeries& series);
PriceSeries read_series_csv(std::istream& in);
void save_series_csv(const std::filesystem::path& path, const PriceSeries& series);
PriceSeries load_series_csv(const std::filesystem::path& path);

struct PortfolioState {
    double cash{0.0};
    double shares{0.0};
    std::size_t day{0};

    bool operator==(const PortfolioState&) const = default;
};

double total_assets(const PortfolioState& state, double price);

// Current stock value / total assets at price.
double position_fraction(const PortfolioState& state, double price);

// Rebalances so that stock value / total assets == target.fraction at price.
// Fractional shares, no fees, fill at price. Day is left unchanged.
PortfolioState apply_target_position(const PortfolioState& state, const PositionTarget& target,
                                     double price);

struct EpisodeConfig {
    double initial_cash{1'000'000.0};
    std::size_t num_days{45};
    PositionGrid grid{};
    std::uint64_t rng_seed{0};

    // Throws ValidationError on num_days == 0 or non-positive cash.
    void validate() const;
};

} // namespace nudge::market
