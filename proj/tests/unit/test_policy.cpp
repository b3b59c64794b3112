#include "nudge/errors.hpp"
#include "nudge/policy.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace nudge;
using namespace nudge::policy;

namespace {

TrainingSetup small_setup(std::size_t days) {
    TrainingSetup s;
    s.episode.num_days = days;
    s.forecaster.accuracy = 1.0;
    return s;
}

// Discounted return of a fixed action sequence on a deterministic series, with
// the same reward definition as training: daily change in assets / initial cash.
double discounted_return(const market::PriceSeries& series, const std::vector<std::size_t>& actions,
                         const PositionGrid& grid, double gamma) {
    double cash = 1.0;
    double shares = 0.0;
    double total = 0.0;
    double discount = 1.0;
    for (std::size_t t = 0; t < actions.size(); ++t) {
        const double p0 = series.open(t);
        const double assets = cash + shares * p0;
        shares = grid.fraction(actions[t]) * assets / p0;
        cash = assets - shares * p0;
        const double after = cash + shares * series.open(t + 1);
        total += discount * (after - assets);
        discount *= gamma;
    }
    return total;
}

} // namespace

TEST(StateKey, StringRoundTrip) {
    const StateKey k{forecast::Label::Bearish, 2, 7, 1};
    EXPECT_EQ(k.to_string(), "bearish:2:7:1");
    EXPECT_EQ(StateKey::parse(k.to_string()), k);
    EXPECT_THROW(StateKey::parse("bearish:2:7"), DataError);
    EXPECT_THROW(StateKey::parse("up:2:7:1"), DataError);
}

TEST(StateKey, Buckets) {
    EXPECT_EQ(confidence_tercile(forecast::ForecastDistribution{}), 0u);
    EXPECT_EQ(confidence_tercile(forecast::mix(forecast::Label::Bullish, 0.7)), 2u);
    EXPECT_EQ(confidence_tercile(forecast::mix(forecast::Label::Bullish, 0.4)), 1u);
    EXPECT_EQ(days_bucket(0, 45), 0u);
    EXPECT_EQ(days_bucket(15, 45), 1u);
    EXPECT_EQ(days_bucket(44, 45), 2u);
}

TEST(TrainPolicy, ZeroEpisodesGivesUniform) {
    const auto result = train_policy(small_setup(5), 0, Hyper{}, 1);
    EXPECT_EQ(result.table.num_states(), 0u);
    const StateKey k{forecast::Label::Bullish, 2, 0, 0};
    for (double tau : {0.0, 0.01, 1.0, 100.0}) {
        const auto d = policy_distribution(result.table, k, tau);
        EXPECT_TRUE(d.unseen_state);
        for (double p : d.probs) {
            EXPECT_DOUBLE_EQ(p, 1.0 / 11.0);
        }
    }
}

TEST(TrainPolicy, ZeroRowIsUniformAtAnyPositiveTemperature) {
    QTable q(11);
    const StateKey k{forecast::Label::Neutral, 0, 0, 0};
    q.row(k);
    for (double tau : {0.01, 1.0, 100.0}) {
        const auto d = policy_distribution(q, k, tau);
        EXPECT_FALSE(d.unseen_state);
        for (double p : d.probs) {
            EXPECT_NEAR(p, 1.0 / 11.0, 1e-15);
        }
    }
}

// A 2-day series rising 10% per day with a perfect forecaster. The optimal first
// action, found by enumerating every action pair, is full position; training
// must agree at every bullish state it reached.
TEST(TrainPolicy, PerfectBullishForecastLearnsFullPosition) {
    const market::PriceSeries series({1000.0, 1100.0, 1210.0});
    const auto setup = small_setup(2);
    const PositionGrid& grid = setup.episode.grid;
    Hyper hyper;
    hyper.gamma = 0.5;

    std::size_t oracle_first = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < grid.size(); ++a) {
        for (std::size_t b = 0; b < grid.size(); ++b) {
            const double v = discounted_return(series, {a, b}, grid, hyper.gamma);
            if (v > best) {
                best = v;
                oracle_first = a;
            }
        }
    }
    ASSERT_EQ(oracle_first, grid.last_index());

    const auto result =
        train_policy(setup, [&](std::size_t) { return series; }, 3000, hyper, 99);
    std::size_t checked = 0;
    for (const auto& [key, row] : result.table.rows()) {
        ASSERT_EQ(key.label, forecast::Label::Bullish);
        EXPECT_EQ(argmax_index(row), oracle_first) << key.to_string();
        ++checked;
    }
    EXPECT_GT(checked, 0u);
}

TEST(TrainPolicy, DeterministicForSeed) {
    auto setup = small_setup(10);
    setup.forecaster.accuracy = 0.7;
    const auto a = train_policy(setup, 200, Hyper{}, 5);
    const auto b = train_policy(setup, 200, Hyper{}, 5);
    EXPECT_EQ(a.table, b.table);
    EXPECT_EQ(a.episode_returns, b.episode_returns);
    const auto c = train_policy(setup, 200, Hyper{}, 6);
    EXPECT_NE(a.table, c.table);
}

TEST(TrainPolicy, NonFiniteValuesRaiseWithDiagnostics) {
    const market::PriceSeries series({1e-300, 1e300, 1e300});
    const auto setup = small_setup(2);
    Hyper hyper;
    hyper.epsilon_start = 1.0;
    hyper.epsilon_end = 1.0;
    try {
        (void)train_policy(setup, [&](std::size_t) { return series; }, 50, hyper, 1);
        FAIL() << "expected TrainingError";
    } catch (const TrainingError& e) {
        EXPECT_NE(std::string(e.what()).find("state"), std::string::npos);
    }
}

TEST(TrainPolicy, ShortSeriesRejected) {
    const market::PriceSeries series({1000.0, 1001.0});
    EXPECT_THROW(
        (void)train_policy(small_setup(5), [&](std::size_t) { return series; }, 1, Hyper{}, 1),
        TrainingError);
}

TEST(TrainPolicy, InvalidHyperRejected) {
    Hyper h;
    h.gamma = 1.0;
    EXPECT_THROW((void)train_policy(small_setup(3), 1, h, 1), ValidationError);
}

TEST(Boltzmann, TwoActionSoftmax) {
    const std::vector<double> q{1.0, 0.0};
    const auto p = boltzmann(q, 1.0);
    EXPECT_NEAR(p[0], std::exp(1.0) / (std::exp(1.0) + 1.0), 1e-12);
    EXPECT_NEAR(p[1], 1.0 / (std::exp(1.0) + 1.0), 1e-12);
    EXPECT_NEAR(p[0], 0.7311, 1e-4);
    EXPECT_NEAR(p[1], 0.2689, 1e-4);
}

TEST(Boltzmann, EqualValuesUniform) {
    const std::vector<double> q(5, 0.3);
    for (double p : boltzmann(q, 0.5)) {
        EXPECT_NEAR(p, 0.2, 1e-15);
    }
}

TEST(Boltzmann, ZeroTemperatureLimit) {
    const std::vector<double> q{0.1, 0.2, 0.9, 0.3, 0.4};
    const auto greedy = boltzmann(q, 0.0);
    const auto cold = boltzmann(q, 1e-6);
    for (std::size_t i = 0; i < q.size(); ++i) {
        EXPECT_DOUBLE_EQ(greedy[i], i == 2 ? 1.0 : 0.0);
        EXPECT_NEAR(cold[i], greedy[i], 1e-12);
    }
    const std::vector<double> tie{0.5, 0.5};
    EXPECT_EQ(boltzmann(tie, 0.0), (std::vector<double>{1.0, 0.0}));
}

TEST(Boltzmann, NegativeTemperatureIsContractError) {
    const std::vector<double> q{1.0, 0.0};
    EXPECT_THROW((void)boltzmann(q, -1.0), ContractError);
    EXPECT_THROW((void)policy_distribution(QTable(2), StateKey{}, -0.5), ContractError);
}

TEST(Boltzmann, SumsToOne) {
    const std::vector<double> q{0.01, -0.02, 0.015, 0.0, 0.002, 0.5, -3.0};
    for (double tau : {1e-4, 0.002, 0.1, 10.0}) {
        double s = 0.0;
        for (double p : boltzmann(q, tau)) {
            s += p;
        }
        EXPECT_NEAR(s, 1.0, 1e-9);
    }
}

TEST(SuggestedDecision, Examples) {
    const PositionGrid grid;
    std::vector<double> onehot(11, 0.0);
    onehot[8] = 1.0;
    EXPECT_DOUBLE_EQ(suggested_decision(grid, onehot).fraction, 0.8);
    const std::vector<double> uniform(11, 1.0 / 11.0);
    EXPECT_DOUBLE_EQ(suggested_decision(grid, uniform).fraction, 0.0);

    const PositionGrid coarse({0.0, 0.5, 1.0});
    const std::vector<double> d{0.1, 0.2, 0.7};
    EXPECT_DOUBLE_EQ(suggested_decision(coarse, d).fraction, 1.0);
    EXPECT_THROW((void)suggested_decision(grid, d), ContractError);
}

TEST(QTableJson, RoundTrip) {
    auto setup = small_setup(6);
    setup.forecaster.accuracy = 0.7;
    const auto table = train_policy(setup, 50, Hyper{}, 3).table;
    const auto text = to_json(table);
    const auto back = qtable_from_json(text);
    EXPECT_EQ(back, table);
    EXPECT_EQ(to_json(back), text);
}

TEST(QTableJson, RejectsMalformed) {
    EXPECT_THROW((void)qtable_from_json("not json"), DataError);
    EXPECT_THROW((void)qtable_from_json(R"({"format":"other","version":1})"), DataError);
    EXPECT_THROW(
        (void)qtable_from_json(
            R"({"format":"nudgexai.qtable","version":1,"num_actions":2,"states":{"bullish:0:0:0":[1.0]}})"),
        DataError);
}
