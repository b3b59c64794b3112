#include "nudge/archetypes.hpp"

#include "nudge/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace nudge::archetype {

std::string_view to_string(Kind kind) {
    switch (kind) {
    case Kind::AIAligned: return "ai_aligned";
    case Kind::Delayed: return "delayed";
    case Kind::Cautious: return "cautious";
    case Kind::Contrarian: return "contrarian";
    }
    return "unknown";
}

std::optional<Kind> parse_kind(std::string_view text) {
    for (Kind k : kAllKinds) {
        if (to_string(k) == text) {
            return k;
        }
    }
    return std::nullopt;
}

void Params::validate() const {
    const std::string who(to_string(kind));
    auto unit = [&](double v, const char* name) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw ValidationError("archetype " + who + "." + name + ": must lie in [0, 1]");
        }
    };
    unit(susceptibility, "susceptibility");
    unit(cap, "cap");
    unit(trade_prob, "trade_prob");
    if (!(noise >= 0.0)) {
        throw ValidationError("archetype " + who + ".noise: must be non-negative");
    }
    if (!(reliance_drift >= 0.0)) {
        throw ValidationError("archetype " + who + ".reliance_drift: must be non-negative");
    }
}

Params default_params(Kind kind) {
    Params p;
    p.kind = kind;
    switch (kind) {
    case Kind::AIAligned:
        p.susceptibility = 0.5;
        p.noise = 1.0;
        break;
    case Kind::Delayed:
        p.susceptibility = 0.2;
        p.lag = 2;
        p.noise = 0.8;
        break;
    case Kind::Cautious:
        p.susceptibility = 0.2;
        p.noise = 0.5;
        p.cap = 0.3;
        p.trade_prob = 0.3;
        break;
    case Kind::Contrarian:
        p.susceptibility = 0.1;
        p.noise = 1.0;
        p.reliance_drift = 0.012;
        break;
    }
    return p;
}

double emphasis_weight(std::span<const explain::DisplayItem> payload,
                       const forecast::ForecastDistribution& forecast) {
    const forecast::Label top = forecast.argmax();
    std::size_t emphasized = 0;
    bool top_emphasized = false;
    for (const auto& item : payload) {
        if (item.emphasized) {
            ++emphasized;
            top_emphasized = top_emphasized || item.label == top;
        }
    }
    return top_emphasized ? 1.0 / static_cast<double>(emphasized) : 0.0;
}

std::size_t decide(const Params& params, const Observation& obs, const PositionGrid& grid,
                   Rng& rng) {
    const double last = static_cast<double>(grid.last_index());
    const double ai = static_cast<double>(obs.ai_index);

    // Fixed draw count per call keeps agent streams aligned across conditions.
    const double u_trade = uniform01(rng);
    const double z = standard_normal(rng);

    double base = 0.0;
    switch (params.kind) {
    case Kind::AIAligned:
        base = ai;
        break;
    case Kind::Cautious: {
        if (u_trade >= params.trade_prob) {
            return obs.held_index;
        }
        std::size_t cap_index = 0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (grid.fraction(i) <= params.cap + 1e-12) {
                cap_index = i;
            }
        }
        base = static_cast<double>(std::min(cap_index, obs.ai_index));
        break;
    }
    case Kind::Delayed:
        if (obs.day < params.lag || obs.ai_history.size() < params.lag) {
            return obs.held_index;
        }
        base = static_cast<double>(obs.ai_history[obs.ai_history.size() - params.lag]);
        break;
    case Kind::Contrarian: {
        const double w =
            std::clamp(params.reliance_drift * static_cast<double>(obs.day), 0.0, 1.0);
        base = w * ai + (1.0 - w) * (last - ai);
        break;
    }
    }

    double value = base + params.noise * z;
    const double pull = params.susceptibility * emphasis_weight(obs.payload, obs.forecast);
    value += pull * (ai - value);
    return static_cast<std::size_t>(std::clamp(std::round(value), 0.0, last));
}

Agent::Agent(Params params, std::uint64_t seed) : params_(params), seed_(seed), rng_(seed) {
    params_.validate();
}

void Agent::reset() {
    rng_.seed(seed_);
    ai_history_.clear();
    held_ = 0;
}

std::size_t Agent::decide(std::size_t day, std::size_t ai_index,
                          const forecast::ForecastDistribution& forecast,
                          std::span<const explain::DisplayItem> payload, const PositionGrid& grid) {
    Observation obs;
    obs.day = day;
    obs.ai_index = ai_index;
    obs.held_index = held_;
    obs.forecast = forecast;
    obs.payload = payload;
    obs.ai_history = ai_history_;
    held_ = archetype::decide(params_, obs, grid, rng_);
    ai_history_.push_back(ai_index);
    return held_;
}

std::size_t CohortCounts::count(Kind kind) const {
    switch (kind) {
    case Kind::AIAligned: return ai_aligned;
    case Kind::Delayed: return delayed;
    case Kind::Cautious: return cautious;
    case Kind::Contrarian: return contrarian;
    }
    return 0;
}

const Params& CohortSpec::base_for(Kind kind) const {
    return base[static_cast<std::size_t>(kind)];
}

Params& CohortSpec::base_for(Kind kind) {
    return base[static_cast<std::size_t>(kind)];
}

std::vector<CohortMember> generate_cohort(const CohortSpec& spec) {
    if (!(spec.jitter >= 0.0 && spec.jitter < 1.0)) {
        throw ValidationError("cohort.jitter: must lie in [0, 1)");
    }
    std::vector<CohortMember> members;
    members.reserve(spec.counts.total());
    for (Kind kind : kAllKinds) {
        const Params& base = spec.base_for(kind);
        base.validate();
        for (std::size_t i = 0; i < spec.counts.count(kind); ++i) {
            const std::size_t index = members.size();
            Rng rng(derive_seed(spec.seed, streams::kCohort, index));
            auto jitter = [&](double v) {
                return v * (1.0 + spec.jitter * (2.0 * uniform01(rng) - 1.0));
            };
            Params p = base;
            p.kind = kind;
            p.susceptibility = std::clamp(jitter(base.susceptibility), 0.0, 1.0);
            p.noise = std::max(0.0, jitter(base.noise));
            const double cap = std::clamp(jitter(base.cap), 0.0, 1.0);
            const double trade_prob = std::clamp(jitter(base.trade_prob), 0.0, 1.0);
            const double drift = std::max(0.0, jitter(base.reliance_drift));
            if (kind == Kind::Cautious) {
                p.cap = cap;
                p.trade_prob = trade_prob;
            }
            if (kind == Kind::Contrarian) {
                p.reliance_drift = drift;
            }
            members.push_back({index, p, derive_seed(spec.seed, streams::kAgent, index)});
        }
    }
    return members;
}

} // namespace nudge::archetype
