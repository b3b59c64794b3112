#include "nudge/errors.hpp"
#include "nudge/explanation_pool.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

using namespace nudge;
using namespace nudge::explain;

namespace {

ExplanationPool four_pool() {
    return ExplanationPool({{"a", Label::Bullish, "A"},
                            {"b", Label::Neutral, "B"},
                            {"c", Label::Bearish, "C"},
                            {"d", Label::Bullish, "D"}});
}

std::size_t binomial(std::size_t n, std::size_t k) {
    std::size_t r = 1;
    for (std::size_t i = 1; i <= k; ++i) {
        r = r * (n - k + i) / i;
    }
    return r;
}

ExplanationConfig emphasize(const std::vector<std::string>& ids) {
    ExplanationConfig c;
    for (const auto& id : {"bearish", "bullish", "neutral"}) {
        c.entries.push_back(
            {id, true, std::find(ids.begin(), ids.end(), id) != ids.end()});
    }
    return c;
}

} // namespace

TEST(ExplanationPool, DefaultPoolHasOnePerLabel) {
    const auto pool = ExplanationPool::default_pool();
    ASSERT_EQ(pool.size(), 3u);
    for (Label l : forecast::kAllLabels) {
        EXPECT_EQ(pool.count(l), 1u);
    }
    EXPECT_EQ(pool.items()[0].id, "bearish");
    EXPECT_EQ(pool.items()[1].id, "bullish");
    EXPECT_EQ(pool.items()[2].id, "neutral");
}

TEST(ExplanationPool, RejectsDuplicateOrEmptyIds) {
    EXPECT_THROW(ExplanationPool({{"x", Label::Bullish, ""}, {"x", Label::Bearish, ""}}),
                 ConfigError);
    EXPECT_THROW(ExplanationPool({{"", Label::Bullish, ""}}), ConfigError);
}

TEST(ExplanationPool, JsonRoundTripAndStrictKeys) {
    const auto pool = four_pool();
    EXPECT_EQ(pool_from_json(to_json(pool)).items(), pool.items());
    EXPECT_THROW(pool_from_json(R"([{"id":"a","label":"bullish","template":"t","extra":1}])"),
                 ConfigError);
    EXPECT_THROW(pool_from_json(R"([{"id":"a","label":"upward","template":"t"}])"), ConfigError);
    EXPECT_THROW(pool_from_json("{"), ConfigError);
}

TEST(EnumerateConfigs, DynEmphHasEight) {
    const auto pool = ExplanationPool::default_pool();
    const BiasingMode mode{Mode::DynEmph, 0};
    const auto configs = enumerate_configs(pool, mode);
    ASSERT_EQ(configs.size(), 8u);
    EXPECT_EQ(config_count(pool, mode), 8u);
    for (const auto& c : configs) {
        EXPECT_EQ(c.shown_count(), 3u);
        EXPECT_TRUE(c.is_canonical());
    }
    EXPECT_EQ(configs.front().code(), "sss");
    EXPECT_EQ(configs.back().code(), "EEE");
}

TEST(EnumerateConfigs, DynEmphNeedsOnePerLabel) {
    EXPECT_THROW((void)enumerate_configs(four_pool(), {Mode::DynEmph, 0}), ConfigError);
    const ExplanationPool missing({{"a", Label::Bullish, ""}, {"b", Label::Neutral, ""}});
    EXPECT_THROW((void)enumerate_configs(missing, {Mode::DynEmph, 0}), ConfigError);
}

TEST(EnumerateConfigs, XSelectorEmptyPool) {
    const auto configs = enumerate_configs(ExplanationPool{}, {Mode::XSelector, 2});
    ASSERT_EQ(configs.size(), 1u);
    EXPECT_TRUE(configs[0].entries.empty());
}

TEST(EnumerateConfigs, XSelectorBinomialCount) {
    const auto configs = enumerate_configs(four_pool(), {Mode::XSelector, 2});
    EXPECT_EQ(configs.size(), 1u + 4u + 6u);
    for (const auto& c : configs) {
        EXPECT_LE(c.shown_count(), 2u);
        for (const auto& e : c.entries) {
            EXPECT_FALSE(e.emphasized);
        }
    }
}

TEST(EnumerateConfigs, ClosedFormMatchesForManySizes) {
    for (std::size_t n = 0; n <= 7; ++n) {
        std::vector<Explanation> items;
        for (std::size_t i = 0; i < n; ++i) {
            items.push_back({"e" + std::to_string(i), forecast::kAllLabels[i % 3], ""});
        }
        const ExplanationPool pool(items);
        for (std::size_t budget = 0; budget <= n + 1; ++budget) {
            std::size_t expected = 0;
            for (std::size_t k = 0; k <= std::min(budget, n); ++k) {
                expected += binomial(n, k);
            }
            const BiasingMode mode{Mode::XSelector, budget};
            EXPECT_EQ(enumerate_configs(pool, mode).size(), expected);
            EXPECT_EQ(config_count(pool, mode), expected);
        }
    }
}

TEST(EnumerateConfigs, CanonicalOrderIsStrictAndTotal) {
    const auto configs = enumerate_configs(four_pool(), {Mode::XSelector, 4});
    std::set<std::string> codes;
    for (std::size_t i = 0; i < configs.size(); ++i) {
        codes.insert(configs[i].code());
        if (i > 0) {
            EXPECT_EQ(compare(configs[i - 1], configs[i]), std::strong_ordering::less);
        }
    }
    EXPECT_EQ(codes.size(), configs.size());
}

TEST(ExplanationConfig, CanonicalizeSortsAndDropsHiddenEmphasis) {
    ExplanationConfig c;
    c.entries = {{"neutral", false, true}, {"bearish", true, false}, {"bullish", true, true}};
    EXPECT_FALSE(c.is_canonical());
    c.canonicalize();
    EXPECT_TRUE(c.is_canonical());
    EXPECT_EQ(c.code(), "sE-");
    ExplanationConfig dup;
    dup.entries = {{"a", true, false}, {"a", true, true}};
    EXPECT_THROW(dup.canonicalize(), ContractError);
}

TEST(ExplanationConfig, CodeRoundTrip) {
    const auto pool = ExplanationPool::default_pool();
    for (const auto& c : enumerate_configs(pool, {Mode::DynEmph, 0})) {
        EXPECT_EQ(ExplanationConfig::from_code(pool, c.code()), c);
    }
}

TEST(DefaultConfig, PerMode) {
    const auto pool = ExplanationPool::default_pool();
    EXPECT_EQ(default_config(pool, {Mode::DynEmph, 0}).code(), "sss");
    EXPECT_EQ(default_config(pool, {Mode::XSelector, 2}).code(), "---");
}

TEST(Admissible, RespectsModeRules) {
    const auto pool = ExplanationPool::default_pool();
    EXPECT_TRUE(admissible(pool, {Mode::DynEmph, 0}, emphasize({"bullish"})));
    EXPECT_FALSE(admissible(pool, {Mode::XSelector, 3}, emphasize({"bullish"})));
    auto partial = emphasize({});
    partial.entries[0].shown = false;
    EXPECT_FALSE(admissible(pool, {Mode::DynEmph, 0}, partial));
    EXPECT_TRUE(admissible(pool, {Mode::XSelector, 2}, partial));
    EXPECT_FALSE(admissible(pool, {Mode::XSelector, 1}, partial));
}

TEST(Neighbors, SingleFlagFlips) {
    const auto pool = ExplanationPool::default_pool();
    const auto n = neighbors(pool, {Mode::DynEmph, 0}, default_config(pool, {Mode::DynEmph, 0}));
    ASSERT_EQ(n.size(), 3u);
    for (const auto& c : n) {
        std::size_t emph = 0;
        for (const auto& e : c.entries) {
            emph += e.emphasized ? 1 : 0;
        }
        EXPECT_EQ(emph, 1u);
    }
}

TEST(Render, AllShownPlain) {
    const auto pool = ExplanationPool::default_pool();
    const auto items = render(pool, emphasize({}));
    ASSERT_EQ(items.size(), 3u);
    EXPECT_EQ(items[0].label, Label::Bullish);
    EXPECT_EQ(items[1].label, Label::Neutral);
    EXPECT_EQ(items[2].label, Label::Bearish);
    for (const auto& i : items) {
        EXPECT_FALSE(i.emphasized);
    }
}

TEST(Render, EmphasizeBullishOnly) {
    const auto items = render(ExplanationPool::default_pool(), emphasize({"bullish"}));
    ASSERT_EQ(items.size(), 3u);
    EXPECT_TRUE(items[0].emphasized);
    EXPECT_FALSE(items[1].emphasized);
    EXPECT_FALSE(items[2].emphasized);
}

TEST(Render, HiddenOmittedAndUnknownRejected) {
    const auto pool = ExplanationPool::default_pool();
    const auto none = ExplanationConfig::from_code(pool, "---");
    EXPECT_TRUE(render(pool, none).empty());
    ExplanationConfig bad;
    bad.entries = {{"mystery", true, false}};
    EXPECT_THROW((void)render(pool, bad), ReferenceError);
}

TEST(Render, OrderWithinLabelById) {
    const auto items = render(four_pool(), ExplanationConfig::from_code(four_pool(), "ssss"));
    ASSERT_EQ(items.size(), 4u);
    EXPECT_EQ(items[0].id, "a");
    EXPECT_EQ(items[1].id, "d");
    EXPECT_EQ(items[2].id, "b");
    EXPECT_EQ(items[3].id, "c");
}

TEST(TemplateGenerate, BullishProbability) {
    const auto f = forecast::mix(Label::Bullish, 0.7);
    const auto e = template_generate(Label::Bullish, f, {1000.0, 0.031});
    EXPECT_NE(e.text.find("80%"), std::string::npos);
    EXPECT_NE(e.text.find("upward"), std::string::npos);
    EXPECT_NE(e.text.find("+3.1%"), std::string::npos);
    EXPECT_EQ(template_generate(Label::Bullish, f, {1000.0, 0.031}), e);
}

TEST(TemplateGenerate, HalfUpRounding) {
    const auto e = template_generate(Label::Neutral, forecast::ForecastDistribution{}, {1000.0, 0.0});
    EXPECT_NE(e.text.find("33%"), std::string::npos);
    EXPECT_EQ(percent_half_up(1.0 / 3.0), 33);
    EXPECT_EQ(percent_half_up(0.125), 13);
    EXPECT_EQ(percent_half_up(0.0), 0);
    EXPECT_EQ(percent_half_up(1.0), 100);
}

TEST(TemplateGenerate, InstantiateFillsEveryItem) {
    const auto pool = instantiate(ExplanationPool::default_pool(), TemplateGenerator{},
                                  forecast::mix(Label::Bearish, 0.7), {950.0, -0.02});
    for (const auto& e : pool.items()) {
        EXPECT_EQ(e.text.find('{'), std::string::npos);
    }
}

TEST(Mode, Parse) {
    EXPECT_EQ(parse_mode("dynemph"), Mode::DynEmph);
    EXPECT_EQ(parse_mode("xselector"), Mode::XSelector);
    EXPECT_FALSE(parse_mode("other").has_value());
}
