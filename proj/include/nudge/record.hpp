#pragma once

#include "nudge/context.hpp"
#include "nudge/explanation_pool.hpp"
#include "nudge/forecaster.hpp"
#include "nudge/market_sim.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace nudge {

struct PolicySnapshot {
    std::vector<double> distribution;
    std::size_t suggested_index{0};
    double suggested_fraction{0.0};
    bool unseen_state{false};

    bool operator==(const PolicySnapshot&) const = default;
};

struct AuditEntry {
    std::string config; // ExplanationConfig::code()
    double distance{0.0};

    bool operator==(const AuditEntry&) const = default;
};

// One decision step: the (c, x, d_u) triple plus everything needed to replay it.
struct InteractionRecord {
    std::string session_id;
    std::string agent_kind; // archetype name, or "human"
    std::size_t day{0};
    std::size_t num_days{0};
    double open_price{0.0};
    std::vector<double> trailing_prices; // up to five opens before this day, oldest first
    forecast::ForecastDistribution forecast{};
    ContextFeatures context{};
    explain::ExplanationConfig config{};
    std::vector<explain::DisplayItem> payload;
    std::vector<AuditEntry> audit;
    double nudge_distance{0.0};
    PolicySnapshot policy{};
    std::size_t decision_index{0};
    double decision{0.0};
    market::PortfolioState state_after{};
    double total_assets{0.0};     // after the order, at this day's open
    double assets_next_open{0.0}; // marked to the next day's open
    std::int64_t timestamp_ms{0};

    bool operator==(const InteractionRecord&) const = default;
};

nlohmann::json to_json(const InteractionRecord& record);
InteractionRecord record_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const explain::ExplanationConfig& config);
explain::ExplanationConfig config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const std::vector<explain::DisplayItem>& payload);
nlohmann::json to_json(const forecast::ForecastDistribution& f);
forecast::ForecastDistribution forecast_from_json(const nlohmann::json& doc);

// Canonical single-line JSON (sorted keys), without trailing newline.
std::string to_jsonl_line(const InteractionRecord& record);

void write_jsonl(std::ostream& out, const std::vector<InteractionRecord>& records);
std::vector<InteractionRecord> read_jsonl(std::istream& in);
void save_jsonl(const std::filesystem::path& path, const std::vector<InteractionRecord>& records);
std::vector<InteractionRecord> load_jsonl(const std::filesystem::path& path);
// Every *.jsonl file in dir, in file-name order.
std::vector<std::vector<InteractionRecord>> load_jsonl_dir(const std::filesystem::path& dir);

} // namespace nudge
