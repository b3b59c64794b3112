#include "nudge/market_sim.hpp"

#include "nudge/errors.hpp"
#include "nudge/random.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

namespace nudge::market {

PriceSeries::PriceSeries(std::vector<double> opens) : opens_(std::move(opens)) {
    for (std::size_t i = 0; i < opens_.size(); ++i) {
        if (!(opens_[i] > 0.0) || !std::isfinite(opens_[i])) {
            throw ParameterError("price series: open at day " + std::to_string(i) +
                                 " must be positive and finite");
        }
    }
}

double PriceSeries::open(std::size_t day) const {
    if (day >= opens_.size()) {
        throw IndexError("price series: day " + std::to_string(day) + " out of range (size " +
                         std::to_string(opens_.size()) + ")");
    }
    return opens_[day];
}

PriceSeries generate_series(std::uint64_t seed, const SeriesParams& params) {
    if (params.volatility < 0.0 || !std::isfinite(params.volatility)) {
        throw ParameterError("series: volatility must be non-negative");
    }
    if (params.length == 0) {
        throw ParameterError("series: length must be positive");
    }
    if (!(params.start_price > 0.0)) {
        throw ParameterError("series: start_price must be positive");
    }
    if (params.regime_switch_prob < 0.0 || params.regime_switch_prob > 1.0) {
        throw ParameterError("series: regime_switch_prob must lie in [0, 1]");
    }

    Rng rng(seed);
    const std::size_t regimes = params.regime_drifts.size();
    std::size_t regime = regimes > 0 ? uniform_index(rng, regimes) : 0;

    std::vector<double> opens(params.length);
    opens[0] = params.start_price;
    for (std::size_t t = 1; t < params.length; ++t) {
        double mu = params.drift;
        if (regimes > 0) {
            mu += params.regime_drifts[regime];
        }
        // Always draw, so the regime path does not shift the noise stream.
        const double z = standard_normal(rng);
        opens[t] = opens[t - 1] * std::exp(mu + params.volatility * z);

        const double u = uniform01(rng);
        if (regimes > 1 && u < params.regime_switch_prob) {
            const std::size_t step = 1 + uniform_index(rng, regimes - 1);
            regime = (regime + step) % regimes;
        }
    }
    return PriceSeries(std::move(opens));
}

void write_series_csv(std::ostream& out, const PriceSeries& series) {
    out << "day,open\n";
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (std::size_t t = 0; t < series.size(); ++t) {
        out << t << ',' << series.opens()[t] << '\n';
    }
}

PriceSeries read_series_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw DataError("series csv: empty input");
    }
    if (line.rfind("day,open", 0) != 0) {
        throw DataError("series csv: expected header 'day,open'");
    }
    std::vector<double> opens;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw DataError("series csv: malformed line " + std::to_string(lineno));
        }
        std::size_t day = 0;
        double open = 0.0;
        try {
            day = std::stoul(line.substr(0, comma));
            open = std::stod(line.substr(comma + 1));
        } catch (const std::exception&) {
            throw DataError("series csv: malformed line " + std::to_string(lineno));
        }
        if (day != opens.size()) {
            throw DataError("series csv: days must be consecutive from 0 (line " +
                            std::to_string(lineno) + ")");
        }
        opens.push_back(open);
    }
    return PriceSeries(std::move(opens));
}

void save_series_csv(const std::filesystem::path& path, const PriceSeries& series) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    write_series_csv(out, series);
}

PriceSeries load_series_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot read " + path.string());
    }
    return read_series_csv(in);
}

double total_assets(const PortfolioState& state, double price) {
    return state.cash + state.shares * price;
}

double position_fraction(const PortfolioState& state, double price) {
    const double assets = total_assets(state, price);
    return assets > 0.0 ? state.shares * price / assets : 0.0;
}

PortfolioState apply_target_position(const PortfolioState& state, const PositionTarget& target,
                                     double price) {
    if (!(price > 0.0)) {
        throw ParameterError("apply_target_position: price must be positive");
    }
    const double assets = total_assets(state, price);
    if (std::abs(position_fraction(state, price) - target.fraction) <= 1e-12) {
        return state;
    }
    const double stock_value = target.fraction * assets;
    const double shares = stock_value / price;
    PortfolioState next = state;
    next.shares = shares;
    next.cash = assets - stock_value;
    if (next.cash < 0.0) {
        next.cash = 0.0;
    }
    return next;
}

void EpisodeConfig::validate() const {
    if (num_days == 0) {
        throw ValidationError("episode.num_days: must be at least 1");
    }
    if (!(initial_cash > 0.0)) {
        throw ValidationError("episode.initial_cash: must be positive");
    }
}

} // namespace nudge::market
