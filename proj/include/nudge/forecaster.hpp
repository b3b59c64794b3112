#pragma once

#include "nudge/market_sim.hpp"
#include "nudge/random.hpp"

#include <array>
#include <optional>
#include <string_view>

namespace nudge::forecast {

enum class Label : std::size_t { Bullish = 0, Neutral = 1, Bearish = 2 };

inline constexpr std::size_t kNumLabels = 3;
inline constexpr std::array<Label, kNumLabels> kAllLabels{Label::Bullish, Label::Neutral,
                                                          Label::Bearish};

std::string_view to_string(Label label);
std::optional<Label> parse_label(std::string_view text);

struct ForecastDistribution {
    double p_bullish{1.0 / 3.0};
    double p_neutral{1.0 / 3.0};
    double p_bearish{1.0 / 3.0};

    [[nodiscard]] double prob(Label label) const;
    [[nodiscard]] std::array<double, kNumLabels> as_array() const {
        return {p_bullish, p_neutral, p_bearish};
    }
    // Highest-probability label; ties resolve to the first in (bullish, neutral, bearish).
    [[nodiscard]] Label argmax() const;
    [[nodiscard]] bool valid(double tol = 1e-9) const;

    bool operator==(const ForecastDistribution&) const = default;
};

struct Thresholds {
    double up{0.02};
    double down{-0.02};
};

struct ForecastParams {
    double accuracy{0.7};
    std::size_t horizon{1};
    Thresholds thresholds{};

    void validate() const;
};

// Realized forward return over horizon, classified; returns of exactly the
// threshold are neutral. Throws IndexError when day + horizon is past the end.
Label true_class(const market::PriceSeries& series, std::size_t day, std::size_t horizon,
                 const Thresholds& thresholds);

// accuracy * onehot(reported) + (1 - accuracy) / 3.
ForecastDistribution mix(Label reported, double accuracy);

// Noisy oracle. Draws two uniforms (always both, so streams stay aligned
// across accuracy values): with probability accuracy the reported class is
// the true class, otherwise it is uniform over the three labels. The output
// is mix(reported, accuracy).
ForecastDistribution forecast(const market::PriceSeries& series, std::size_t day,
                              const ForecastParams& params, Rng& rng);

} // namespace nudge::forecast
