#pragma once

#include "nudge/forecaster.hpp"

#include <cstddef>

namespace nudge {

// The context c a user decides under: what the user sees plus task and user status.
struct ContextFeatures {
    forecast::ForecastDistribution forecast{};
    std::size_t position_index{0};      // grid index nearest to the current stock fraction
    std::size_t last_decision_index{0}; // previous day's target; 0 on the first day
    std::size_t grid_size{11};
    double day_fraction{0.0};           // day / num_days
    double trailing_return{0.0};        // open[t] / open[t-5] - 1 (shorter window early on)
    double assets_ratio{1.0};           // total assets / initial cash

    bool operator==(const ContextFeatures&) const = default;
};

} // namespace nudge
