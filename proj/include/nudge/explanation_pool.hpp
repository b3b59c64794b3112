#pragma once

#include "nudge/forecaster.hpp"

#include <compare>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace nudge::explain {

using forecast::Label;

// An explanation as held by the pool. In a pool loaded from disk, text is a
// template with {prob}, {ret5}, {price} and {label} placeholders; after
// instantiation it is display text.
struct Explanation {
    std::string id;
    Label label{Label::Neutral};
    std::string text;

    bool operator==(const Explanation&) const = default;
};

class ExplanationPool {
public:
    ExplanationPool() = default;
    // Sorts by id. Throws ConfigError on duplicate or empty ids.
    explicit ExplanationPool(std::vector<Explanation> items);

    // One template per label.
    static ExplanationPool default_pool();

    [[nodiscard]] const std::vector<Explanation>& items() const noexcept { return items_; }
    [[nodiscard]] std::size_t size() const noexcept { return items_.size(); }
    [[nodiscard]] bool empty() const noexcept { return items_.empty(); }
    [[nodiscard]] const Explanation* find(const std::string& id) const;
    [[nodiscard]] std::size_t count(Label label) const;

private:
    std::vector<Explanation> items_;
};

// File format: [{"id": ..., "label": "bullish|neutral|bearish", "template": ...}]
ExplanationPool pool_from_json(const std::string& text);
ExplanationPool load_pool(const std::filesystem::path& path);
std::string to_json(const ExplanationPool& pool);

enum class Mode { DynEmph, XSelector };

struct BiasingMode {
    Mode mode{Mode::DynEmph};
    std::size_t budget{0}; // max shown count; XSelector only
};

std::string_view to_string(Mode mode);
std::optional<Mode> parse_mode(std::string_view text);

struct ConfigEntry {
    std::string id;
    bool shown{true};
    bool emphasized{false};

    bool operator==(const ConfigEntry&) const = default;
};

// The biasing decision x. Canonical form: entries sorted by id, unique ids,
// emphasized implies shown.
struct ExplanationConfig {
    std::vector<ConfigEntry> entries;

    // Sorts by id and drops emphasis on hidden entries. Throws ContractError on
    // duplicate ids.
    void canonicalize();
    [[nodiscard]] ExplanationConfig canonical() const;
    [[nodiscard]] bool is_canonical() const;

    // One char per entry: '-' hidden, 's' shown, 'E' shown and emphasized.
    [[nodiscard]] std::string code() const;
    static ExplanationConfig from_code(const ExplanationPool& pool, const std::string& code);

    [[nodiscard]] std::size_t shown_count() const;
    [[nodiscard]] const ConfigEntry* find(const std::string& id) const;

    bool operator==(const ExplanationConfig&) const = default;
};

// Lexicographic over per-entry (shown, emphasized) flags. Only meaningful for
// configs over the same pool.
std::strong_ordering compare(const ExplanationConfig& a, const ExplanationConfig& b);

// DynEmph: all shown, none emphasized. XSelector: nothing shown.
ExplanationConfig default_config(const ExplanationPool& pool, const BiasingMode& mode);

// Closed form: 2^n for DynEmph; sum_{k <= budget} C(n, k) for XSelector.
// Saturates at SIZE_MAX.
std::size_t config_count(const ExplanationPool& pool, const BiasingMode& mode);

// Every admissible config in canonical (lexicographic) order. DynEmph throws
// ConfigError unless the pool holds exactly one explanation per label.
std::vector<ExplanationConfig> enumerate_configs(const ExplanationPool& pool,
                                                 const BiasingMode& mode);

// True when config is reachable under mode (shape, budget, emphasis rules).
bool admissible(const ExplanationPool& pool, const BiasingMode& mode,
                const ExplanationConfig& config);

// Admissible configs one flag flip away from config.
std::vector<ExplanationConfig> neighbors(const ExplanationPool& pool, const BiasingMode& mode,
                                         const ExplanationConfig& config);

struct DisplayItem {
    std::string id;
    Label label{Label::Neutral};
    std::string text;
    bool emphasized{false};

    bool operator==(const DisplayItem&) const = default;
};

// Shown entries in order bullish, neutral, bearish, then by id. Throws
// ReferenceError if the config names an id missing from the pool.
std::vector<DisplayItem> render(const ExplanationPool& pool, const ExplanationConfig& config);

struct PriceContext {
    double open{0.0};
    double trailing_return{0.0}; // over the last five days, as a fraction
};

// Integer percent, rounded half-up.
int percent_half_up(double p);

std::string fill_template(const std::string& tmpl, Label label,
                          const forecast::ForecastDistribution& forecast,
                          const PriceContext& context);

// Pluggable text source. The template generator is the built-in; an LLM client
// can implement the same interface.
class ExplanationGenerator {
public:
    virtual ~ExplanationGenerator() = default;
    virtual Explanation generate(const Explanation& source,
                                 const forecast::ForecastDistribution& forecast,
                                 const PriceContext& context) const = 0;
};

class TemplateGenerator final : public ExplanationGenerator {
public:
    Explanation generate(const Explanation& source, const forecast::ForecastDistribution& forecast,
                         const PriceContext& context) const override;
};

// Fills the default template for label.
Explanation template_generate(Label label, const forecast::ForecastDistribution& forecast,
                              const PriceContext& context);

// Returns a pool with every text passed through generator.
ExplanationPool instantiate(const ExplanationPool& pool, const ExplanationGenerator& generator,
                            const forecast::ForecastDistribution& forecast,
                            const PriceContext& context);

} // namespace nudge::explain
