#include "nudge/archetypes.hpp"
#include "nudge/errors.hpp"

#include <gtest/gtest.h>

using namespace nudge;
using namespace nudge::archetype;

namespace {

const PositionGrid& grid() {
    static const PositionGrid g;
    return g;
}

std::vector<explain::DisplayItem> payload(bool bull, bool neutral, bool bear) {
    return {{"bullish", forecast::Label::Bullish, "", bull},
            {"neutral", forecast::Label::Neutral, "", neutral},
            {"bearish", forecast::Label::Bearish, "", bear}};
}

Params noiseless(Kind kind) {
    Params p = default_params(kind);
    p.noise = 0.0;
    p.susceptibility = 0.0;
    return p;
}

const forecast::ForecastDistribution kBullish = forecast::mix(forecast::Label::Bullish, 0.7);

} // namespace

TEST(Archetype, AIAlignedNoiselessFollowsExactly) {
    Agent agent(noiseless(Kind::AIAligned), 1);
    const auto items = payload(false, false, false);
    for (std::size_t day = 0; day < 45; ++day) {
        const std::size_t ai = (day * 7) % 11;
        EXPECT_EQ(agent.decide(day, ai, kBullish, items, grid()), ai);
    }
}

TEST(Archetype, DelayedShiftsByLag) {
    Params p = noiseless(Kind::Delayed);
    p.lag = 2;
    Agent agent(p, 2);
    const auto items = payload(false, false, false);
    const std::vector<std::size_t> ai{10, 10, 0, 0, 0, 0};
    const std::vector<std::size_t> expected{0, 0, 10, 10, 0, 0};
    for (std::size_t day = 0; day < ai.size(); ++day) {
        EXPECT_EQ(agent.decide(day, ai[day], kBullish, items, grid()), expected[day]) << day;
    }
}

TEST(Archetype, ContrarianMirrorsOnDayZero) {
    Params p = noiseless(Kind::Contrarian);
    p.reliance_drift = 0.0;
    Agent agent(p, 3);
    EXPECT_EQ(agent.decide(0, 8, kBullish, payload(false, false, false), grid()), 2u);
    EXPECT_DOUBLE_EQ(grid().fraction(2), 0.2);
}

TEST(Archetype, ContrarianRelianceGrows) {
    Params p = noiseless(Kind::Contrarian);
    p.reliance_drift = 0.5;
    Rng rng(1);
    Observation obs;
    obs.ai_index = 10;
    obs.day = 1;
    EXPECT_EQ(decide(p, obs, grid(), rng), 5u);
    obs.day = 2;
    EXPECT_EQ(decide(p, obs, grid(), rng), 10u);
    obs.day = 40;
    EXPECT_EQ(decide(p, obs, grid(), rng), 10u);
}

TEST(Archetype, CautiousCapsAndHolds) {
    Params p = noiseless(Kind::Cautious);
    p.cap = 0.3;
    p.trade_prob = 1.0;
    Rng rng(4);
    Observation obs;
    obs.ai_index = 9;
    EXPECT_EQ(decide(p, obs, grid(), rng), 3u);
    obs.ai_index = 1;
    EXPECT_EQ(decide(p, obs, grid(), rng), 1u);

    p.trade_prob = 0.0;
    obs.held_index = 6;
    obs.ai_index = 0;
    for (int i = 0; i < 20; ++i) {
        EXPECT_EQ(decide(p, obs, grid(), rng), 6u);
    }
}

TEST(Archetype, CautiousTradeRateMatchesProbability) {
    Params p = noiseless(Kind::Cautious);
    p.trade_prob = 0.3;
    Rng rng(5);
    Observation obs;
    obs.held_index = 0;
    obs.ai_index = 2;
    int trades = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        trades += decide(p, obs, grid(), rng) == 2u ? 1 : 0;
    }
    const double sd = std::sqrt(0.3 * 0.7 / n);
    EXPECT_NEAR(trades / static_cast<double>(n), 0.3, 4 * sd);
}

TEST(Archetype, EmphasisPullsTowardAI) {
    Params p = noiseless(Kind::Contrarian);
    p.reliance_drift = 0.0;
    p.susceptibility = 1.0;
    Rng rng(6);
    Observation obs;
    obs.ai_index = 8;
    obs.forecast = kBullish;

    const auto plain = payload(false, false, false);
    obs.payload = plain;
    EXPECT_EQ(decide(p, obs, grid(), rng), 2u);

    const auto top = payload(true, false, false);
    obs.payload = top;
    EXPECT_EQ(decide(p, obs, grid(), rng), 8u);

    const auto two = payload(true, false, true);
    obs.payload = two;
    EXPECT_EQ(decide(p, obs, grid(), rng), 5u);

    const auto other = payload(false, true, true);
    obs.payload = other;
    EXPECT_EQ(decide(p, obs, grid(), rng), 2u);
}

TEST(Archetype, EmphasisWeight) {
    EXPECT_DOUBLE_EQ(emphasis_weight(payload(true, false, false), kBullish), 1.0);
    EXPECT_DOUBLE_EQ(emphasis_weight(payload(true, true, true), kBullish), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(emphasis_weight(payload(false, true, false), kBullish), 0.0);
    EXPECT_DOUBLE_EQ(emphasis_weight({}, kBullish), 0.0);
}

TEST(Archetype, DecisionsStayOnGrid) {
    for (Kind kind : kAllKinds) {
        Params p = default_params(kind);
        p.noise = 5.0;
        Agent agent(p, 7);
        const auto items = payload(true, false, false);
        for (std::size_t day = 0; day < 45; ++day) {
            EXPECT_LE(agent.decide(day, day % 11, kBullish, items, grid()), 10u);
        }
    }
}

TEST(Archetype, ResetReplaysStream) {
    Agent agent(default_params(Kind::AIAligned), 9);
    const auto items = payload(false, false, false);
    std::vector<std::size_t> first;
    for (std::size_t d = 0; d < 20; ++d) {
        first.push_back(agent.decide(d, 5, kBullish, items, grid()));
    }
    agent.reset();
    for (std::size_t d = 0; d < 20; ++d) {
        EXPECT_EQ(agent.decide(d, 5, kBullish, items, grid()), first[d]);
    }
}

TEST(Archetype, InvalidParamsRejected) {
    Params p = default_params(Kind::Cautious);
    p.cap = 1.5;
    EXPECT_THROW(Agent(p, 1), ValidationError);
    p = default_params(Kind::AIAligned);
    p.noise = -1.0;
    EXPECT_THROW(p.validate(), ValidationError);
}

TEST(Cohort, DefaultHasFiftyOneAgents) {
    const auto members = generate_cohort(CohortSpec{});
    ASSERT_EQ(members.size(), 51u);
    std::array<std::size_t, 4> counts{};
    for (const auto& m : members) {
        ++counts[static_cast<std::size_t>(m.params.kind)];
    }
    EXPECT_EQ(counts, (std::array<std::size_t, 4>{16, 14, 10, 11}));
}

TEST(Cohort, SingleAgent) {
    CohortSpec spec;
    spec.counts = {1, 0, 0, 0};
    const auto members = generate_cohort(spec);
    ASSERT_EQ(members.size(), 1u);
    EXPECT_EQ(members[0].params.kind, Kind::AIAligned);
}

TEST(Cohort, DeterministicAndJittered) {
    const auto a = generate_cohort(CohortSpec{});
    const auto b = generate_cohort(CohortSpec{});
    EXPECT_EQ(a, b);
    EXPECT_NE(a[0].params.susceptibility, a[1].params.susceptibility);
    for (const auto& m : a) {
        EXPECT_NO_THROW(m.params.validate());
        if (m.params.kind != Kind::Cautious) {
            EXPECT_EQ(m.params.cap, 1.0);
            EXPECT_EQ(m.params.trade_prob, 1.0);
        }
    }
    CohortSpec other;
    other.seed = 1;
    EXPECT_NE(generate_cohort(other), a);
}

TEST(Kind, ParseRoundTrip) {
    for (Kind k : kAllKinds) {
        EXPECT_EQ(parse_kind(to_string(k)), k);
    }
    EXPECT_FALSE(parse_kind("reckless").has_value());
}
