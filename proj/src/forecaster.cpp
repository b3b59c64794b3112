#include "nudge/forecaster.hpp"

#include "nudge/errors.hpp"

#include <cmath>
#include <string>

namespace nudge::forecast {

std::string_view to_string(Label label) {
    switch (label) {
    case Label::Bullish: return "bullish";
    case Label::Neutral: return "neutral";
    case Label::Bearish: return "bearish";
    }
    return "unknown";
}

std::optional<Label> parse_label(std::string_view text) {
    for (Label l : kAllLabels) {
        if (to_string(l) == text) {
            return l;
        }
    }
    return std::nullopt;
}

double ForecastDistribution::prob(Label label) const {
    return as_array()[static_cast<std::size_t>(label)];
}

Label ForecastDistribution::argmax() const {
    const auto p = as_array();
    std::size_t best = 0;
    for (std::size_t i = 1; i < kNumLabels; ++i) {
        if (p[i] > p[best]) {
            best = i;
        }
    }
    return static_cast<Label>(best);
}

bool ForecastDistribution::valid(double tol) const {
    double sum = 0.0;
    for (double p : as_array()) {
        if (!(p >= 0.0 && p <= 1.0)) {
            return false;
        }
        sum += p;
    }
    return std::abs(sum - 1.0) <= tol;
}

void ForecastParams::validate() const {
    if (!(accuracy >= 0.0 && accuracy <= 1.0)) {
        throw ValidationError("forecaster.accuracy: must lie in [0, 1]");
    }
    if (horizon == 0) {
        throw ValidationError("forecaster.horizon: must be at least 1");
    }
    if (!(thresholds.down < thresholds.up)) {
        throw ValidationError("forecaster.thresholds: down must be below up");
    }
}

Label true_class(const market::PriceSeries& series, std::size_t day, std::size_t horizon,
                 const Thresholds& thresholds) {
    if (day + horizon >= series.size()) {
        throw IndexError("true_class: day " + std::to_string(day) + " + horizon " +
                         std::to_string(horizon) + " past series end");
    }
    const double start = series.open(day);
    const double ret = (series.open(day + horizon) - start) / start;
    if (ret > thresholds.up) {
        return Label::Bullish;
    }
    if (ret < thresholds.down) {
        return Label::Bearish;
    }
    return Label::Neutral;
}

ForecastDistribution mix(Label reported, double accuracy) {
    const double base = (1.0 - accuracy) / 3.0;
    std::array<double, kNumLabels> p{base, base, base};
    p[static_cast<std::size_t>(reported)] += accuracy;
    return {p[0], p[1], p[2]};
}

ForecastDistribution forecast(const market::PriceSeries& series, std::size_t day,
                              const ForecastParams& params, Rng& rng) {
    const Label truth = true_class(series, day, params.horizon, params.thresholds);
    const double u = uniform01(rng);
    const std::size_t random_label = uniform_index(rng, kNumLabels);
    const Label reported = u < params.accuracy ? truth : static_cast<Label>(random_label);
    return mix(reported, params.accuracy);
}

} // namespace nudge::forecast
