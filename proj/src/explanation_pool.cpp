#include "nudge/explanation_pool.hpp"

#include "nudge/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

namespace nudge::explain {

using nlohmann::json;

namespace {

const char* default_template(Label label) {
    switch (label) {
    case Label::Bullish:
        return "The model puts the chance of a rise above +2% at {prob}. The price moved {ret5} "
               "over the last five days and momentum points upward.";
    case Label::Neutral:
        return "The model puts the chance of a move between -2% and +2% at {prob}. The price "
               "moved {ret5} over the last five days without a clear direction.";
    case Label::Bearish:
        return "The model puts the chance of a fall below -2% at {prob}. The price moved {ret5} "
               "over the last five days and downside pressure is building.";
    }
    return "";
}

std::size_t label_rank(Label label) {
    return static_cast<std::size_t>(label);
}

// 0 hidden, 1 shown, 2 shown and emphasized.
int entry_state(const ConfigEntry& e) {
    if (!e.shown) {
        return 0;
    }
    return e.emphasized ? 2 : 1;
}

} // namespace

ExplanationPool::ExplanationPool(std::vector<Explanation> items) : items_(std::move(items)) {
    std::sort(items_.begin(), items_.end(),
              [](const Explanation& a, const Explanation& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < items_.size(); ++i) {
        if (items_[i].id.empty()) {
            throw ConfigError("explanation pool: empty id");
        }
        if (i > 0 && items_[i].id == items_[i - 1].id) {
            throw ConfigError("explanation pool: duplicate id '" + items_[i].id + "'");
        }
    }
}

ExplanationPool ExplanationPool::default_pool() {
    std::vector<Explanation> items;
    for (Label l : forecast::kAllLabels) {
        items.push_back({std::string(forecast::to_string(l)), l, default_template(l)});
    }
    return ExplanationPool(std::move(items));
}

const Explanation* ExplanationPool::find(const std::string& id) const {
    const auto it = std::lower_bound(
        items_.begin(), items_.end(), id,
        [](const Explanation& e, const std::string& key) { return e.id < key; });
    if (it == items_.end() || it->id != id) {
        return nullptr;
    }
    return &*it;
}

std::size_t ExplanationPool::count(Label label) const {
    return static_cast<std::size_t>(std::count_if(
        items_.begin(), items_.end(), [label](const Explanation& e) { return e.label == label; }));
}

ExplanationPool pool_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("explanation pool: invalid JSON: ") + e.what());
    }
    if (!doc.is_array()) {
        throw ConfigError("explanation pool: expected a JSON array");
    }
    std::vector<Explanation> items;
    for (const auto& item : doc) {
        for (const auto& [key, _] : item.items()) {
            if (key != "id" && key != "label" && key != "template") {
                throw ConfigError("explanation pool: unknown key '" + key + "'");
            }
        }
        if (!item.contains("id") || !item.contains("label") || !item.contains("template")) {
            throw ConfigError("explanation pool: each item needs id, label and template");
        }
        const auto label = forecast::parse_label(item.at("label").get<std::string>());
        if (!label) {
            throw ConfigError("explanation pool: unknown label '" +
                              item.at("label").get<std::string>() + "'");
        }
        items.push_back(
            {item.at("id").get<std::string>(), *label, item.at("template").get<std::string>()});
    }
    return ExplanationPool(std::move(items));
}

ExplanationPool load_pool(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read explanation pool " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return pool_from_json(buf.str());
}

std::string to_json(const ExplanationPool& pool) {
    json doc = json::array();
    for (const auto& e : pool.items()) {
        doc.push_back(
            {{"id", e.id}, {"label", std::string(forecast::to_string(e.label))}, {"template", e.text}});
    }
    return doc.dump(2) + "\n";
}

std::string_view to_string(Mode mode) {
    return mode == Mode::DynEmph ? "dynemph" : "xselector";
}

std::optional<Mode> parse_mode(std::string_view text) {
    if (text == "dynemph") {
        return Mode::DynEmph;
    }
    if (text == "xselector") {
        return Mode::XSelector;
    }
    return std::nullopt;
}

void ExplanationConfig::canonicalize() {
    std::sort(entries.begin(), entries.end(),
              [](const ConfigEntry& a, const ConfigEntry& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (i > 0 && entries[i].id == entries[i - 1].id) {
            throw ContractError("explanation config: duplicate id '" + entries[i].id + "'");
        }
        if (!entries[i].shown) {
            entries[i].emphasized = false;
        }
    }
}

ExplanationConfig ExplanationConfig::canonical() const {
    ExplanationConfig copy = *this;
    copy.canonicalize();
    return copy;
}

bool ExplanationConfig::is_canonical() const {
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (i > 0 && !(entries[i - 1].id < entries[i].id)) {
            return false;
        }
        if (entries[i].emphasized && !entries[i].shown) {
            return false;
        }
    }
    return true;
}

std::string ExplanationConfig::code() const {
    std::string out;
    out.reserve(entries.size());
    for (const auto& e : entries) {
        out.push_back(e.shown ? (e.emphasized ? 'E' : 's') : '-');
    }
    return out;
}

ExplanationConfig ExplanationConfig::from_code(const ExplanationPool& pool,
                                               const std::string& code) {
    if (code.size() != pool.size()) {
        throw ContractError("config code '" + code + "' does not match pool size");
    }
    ExplanationConfig config;
    for (std::size_t i = 0; i < code.size(); ++i) {
        const char c = code[i];
        if (c != '-' && c != 's' && c != 'E') {
            throw ContractError("config code '" + code + "': unexpected character");
        }
        config.entries.push_back({pool.items()[i].id, c != '-', c == 'E'});
    }
    return config;
}

std::size_t ExplanationConfig::shown_count() const {
    return static_cast<std::size_t>(
        std::count_if(entries.begin(), entries.end(), [](const ConfigEntry& e) { return e.shown; }));
}

const ConfigEntry* ExplanationConfig::find(const std::string& id) const {
    for (const auto& e : entries) {
        if (e.id == id) {
            return &e;
        }
    }
    return nullptr;
}

std::strong_ordering compare(const ExplanationConfig& a, const ExplanationConfig& b) {
    const std::size_t n = std::min(a.entries.size(), b.entries.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (auto c = entry_state(a.entries[i]) <=> entry_state(b.entries[i]); c != 0) {
            return c;
        }
    }
    return a.entries.size() <=> b.entries.size();
}

ExplanationConfig default_config(const ExplanationPool& pool, const BiasingMode& mode) {
    ExplanationConfig config;
    for (const auto& e : pool.items()) {
        config.entries.push_back({e.id, mode.mode == Mode::DynEmph, false});
    }
    return config;
}

namespace {

void require_label_coverage(const ExplanationPool& pool) {
    for (Label l : forecast::kAllLabels) {
        if (pool.count(l) != 1) {
            throw ConfigError("dynemph: pool needs exactly one explanation for label '" +
                              std::string(forecast::to_string(l)) + "' (found " +
                              std::to_string(pool.count(l)) + ")");
        }
    }
}

std::size_t saturating_add(std::size_t a, std::size_t b) {
    return a > std::numeric_limits<std::size_t>::max() - b ? std::numeric_limits<std::size_t>::max()
                                                           : a + b;
}

} // namespace

std::size_t config_count(const ExplanationPool& pool, const BiasingMode& mode) {
    const std::size_t n = pool.size();
    if (mode.mode == Mode::DynEmph) {
        return n >= 63 ? std::numeric_limits<std::size_t>::max() : (std::size_t{1} << n);
    }
    // sum_{k=0}^{min(budget, n)} C(n, k), with C(n, k) built incrementally.
    std::size_t total = 0;
    long double binom = 1.0L;
    const std::size_t top = std::min(mode.budget, n);
    for (std::size_t k = 0; k <= top; ++k) {
        if (k > 0) {
            binom = binom * static_cast<long double>(n - k + 1) / static_cast<long double>(k);
        }
        const long double rounded = std::round(binom);
        if (rounded >= static_cast<long double>(std::numeric_limits<std::size_t>::max())) {
            return std::numeric_limits<std::size_t>::max();
        }
        total = saturating_add(total, static_cast<std::size_t>(rounded));
    }
    return total;
}

std::vector<ExplanationConfig> enumerate_configs(const ExplanationPool& pool,
                                                 const BiasingMode& mode) {
    if (mode.mode == Mode::DynEmph) {
        require_label_coverage(pool);
    }
    const auto& items = pool.items();
    std::vector<ExplanationConfig> out;
    ExplanationConfig current;
    current.entries.reserve(items.size());

    // Depth-first, lower entry state first, which yields lexicographic order.
    std::function<void(std::size_t, std::size_t)> visit = [&](std::size_t i, std::size_t shown) {
        if (i == items.size()) {
            out.push_back(current);
            return;
        }
        if (mode.mode == Mode::DynEmph) {
            for (bool emph : {false, true}) {
                current.entries.push_back({items[i].id, true, emph});
                visit(i + 1, shown + 1);
                current.entries.pop_back();
            }
        } else {
            current.entries.push_back({items[i].id, false, false});
            visit(i + 1, shown);
            current.entries.pop_back();
            if (shown < mode.budget) {
                current.entries.push_back({items[i].id, true, false});
                visit(i + 1, shown + 1);
                current.entries.pop_back();
            }
        }
    };
    visit(0, 0);
    return out;
}

bool admissible(const ExplanationPool& pool, const BiasingMode& mode,
                const ExplanationConfig& config) {
    if (config.entries.size() != pool.size() || !config.is_canonical()) {
        return false;
    }
    for (std::size_t i = 0; i < pool.size(); ++i) {
        const auto& e = config.entries[i];
        if (e.id != pool.items()[i].id) {
            return false;
        }
        if (mode.mode == Mode::DynEmph && !e.shown) {
            return false;
        }
        if (mode.mode == Mode::XSelector && e.emphasized) {
            return false;
        }
    }
    return mode.mode == Mode::DynEmph || config.shown_count() <= mode.budget;
}

std::vector<ExplanationConfig> neighbors(const ExplanationPool& pool, const BiasingMode& mode,
                                         const ExplanationConfig& config) {
    std::vector<ExplanationConfig> out;
    for (std::size_t i = 0; i < config.entries.size(); ++i) {
        ExplanationConfig next = config;
        auto& e = next.entries[i];
        if (mode.mode == Mode::DynEmph) {
            e.emphasized = !e.emphasized;
        } else {
            e.shown = !e.shown;
        }
        if (admissible(pool, mode, next)) {
            out.push_back(std::move(next));
        }
    }
    return out;
}

std::vector<DisplayItem> render(const ExplanationPool& pool, const ExplanationConfig& config) {
    std::vector<DisplayItem> items;
    for (const auto& entry : config.entries) {
        const Explanation* e = pool.find(entry.id);
        if (e == nullptr) {
            throw ReferenceError("render: unknown explanation id '" + entry.id + "'");
        }
        if (!entry.shown) {
            continue;
        }
        items.push_back({e->id, e->label, e->text, entry.emphasized});
    }
    std::sort(items.begin(), items.end(), [](const DisplayItem& a, const DisplayItem& b) {
        if (label_rank(a.label) != label_rank(b.label)) {
            return label_rank(a.label) < label_rank(b.label);
        }
        return a.id < b.id;
    });
    return items;
}

int percent_half_up(double p) {
    return static_cast<int>(std::floor(p * 100.0 + 0.5));
}

std::string fill_template(const std::string& tmpl, Label label,
                          const forecast::ForecastDistribution& forecast,
                          const PriceContext& context) {
    char ret5[32];
    std::snprintf(ret5, sizeof ret5, "%+.1f%%", context.trailing_return * 100.0);
    char price[32];
    std::snprintf(price, sizeof price, "%.0f", context.open);
    const std::pair<std::string, std::string> subs[] = {
        {"{prob}", std::to_string(percent_half_up(forecast.prob(label))) + "%"},
        {"{ret5}", ret5},
        {"{price}", price},
        {"{label}", std::string(forecast::to_string(label))},
    };
    std::string out = tmpl;
    for (const auto& [key, value] : subs) {
        for (auto pos = out.find(key); pos != std::string::npos;
             pos = out.find(key, pos + value.size())) {
            out.replace(pos, key.size(), value);
        }
    }
    return out;
}

Explanation TemplateGenerator::generate(const Explanation& source,
                                        const forecast::ForecastDistribution& forecast,
                                        const PriceContext& context) const {
    return {source.id, source.label, fill_template(source.text, source.label, forecast, context)};
}

Explanation template_generate(Label label, const forecast::ForecastDistribution& forecast,
                              const PriceContext& context) {
    return {std::string(forecast::to_string(label)), label,
            fill_template(default_template(label), label, forecast, context)};
}

ExplanationPool instantiate(const ExplanationPool& pool, const ExplanationGenerator& generator,
                            const forecast::ForecastDistribution& forecast,
                            const PriceContext& context) {
    std::vector<Explanation> items;
    items.reserve(pool.size());
    for (const auto& e : pool.items()) {
        items.push_back(generator.generate(e, forecast, context));
    }
    return ExplanationPool(std::move(items));
}

} // namespace nudge::explain
