#include "nudge/record.hpp"

#include "nudge/errors.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

namespace nudge {

using nlohmann::json;

json to_json(const forecast::ForecastDistribution& f) {
    return {{"bullish", f.p_bullish}, {"neutral", f.p_neutral}, {"bearish", f.p_bearish}};
}

forecast::ForecastDistribution forecast_from_json(const json& doc) {
    return {doc.at("bullish").get<double>(), doc.at("neutral").get<double>(),
            doc.at("bearish").get<double>()};
}

json to_json(const explain::ExplanationConfig& config) {
    json entries = json::array();
    for (const auto& e : config.entries) {
        entries.push_back({{"id", e.id}, {"shown", e.shown}, {"emphasized", e.emphasized}});
    }
    return entries;
}

explain::ExplanationConfig config_from_json(const json& doc) {
    explain::ExplanationConfig config;
    for (const auto& e : doc) {
        config.entries.push_back(
            {e.at("id").get<std::string>(), e.at("shown").get<bool>(), e.at("emphasized").get<bool>()});
    }
    return config;
}

json to_json(const std::vector<explain::DisplayItem>& payload) {
    json items = json::array();
    for (const auto& item : payload) {
        items.push_back({{"id", item.id},
                         {"label", std::string(forecast::to_string(item.label))},
                         {"text", item.text},
                         {"emphasized", item.emphasized}});
    }
    return items;
}

namespace {

std::vector<explain::DisplayItem> payload_from_json(const json& doc) {
    std::vector<explain::DisplayItem> items;
    for (const auto& item : doc) {
        const auto label = forecast::parse_label(item.at("label").get<std::string>());
        if (!label) {
            throw DataError("record: unknown payload label");
        }
        items.push_back({item.at("id").get<std::string>(), *label,
                         item.at("text").get<std::string>(), item.at("emphasized").get<bool>()});
    }
    return items;
}

json context_to_json(const ContextFeatures& c) {
    return {{"forecast", to_json(c.forecast)},
            {"position_index", c.position_index},
            {"last_decision_index", c.last_decision_index},
            {"grid_size", c.grid_size},
            {"day_fraction", c.day_fraction},
            {"trailing_return", c.trailing_return},
            {"assets_ratio", c.assets_ratio}};
}

ContextFeatures context_from_json(const json& doc) {
    ContextFeatures c;
    c.forecast = forecast_from_json(doc.at("forecast"));
    c.position_index = doc.at("position_index").get<std::size_t>();
    c.last_decision_index = doc.at("last_decision_index").get<std::size_t>();
    c.grid_size = doc.at("grid_size").get<std::size_t>();
    c.day_fraction = doc.at("day_fraction").get<double>();
    c.trailing_return = doc.at("trailing_return").get<double>();
    c.assets_ratio = doc.at("assets_ratio").get<double>();
    return c;
}

} // namespace

json to_json(const InteractionRecord& r) {
    json audit = json::array();
    for (const auto& a : r.audit) {
        audit.push_back({{"config", a.config}, {"distance", a.distance}});
    }
    return {
        {"session_id", r.session_id},
        {"agent_kind", r.agent_kind},
        {"day", r.day},
        {"num_days", r.num_days},
        {"open_price", r.open_price},
        {"trailing_prices", r.trailing_prices},
        {"forecast", to_json(r.forecast)},
        {"context", context_to_json(r.context)},
        {"config", to_json(r.config)},
        {"payload", to_json(r.payload)},
        {"audit", std::move(audit)},
        {"nudge_distance", r.nudge_distance},
        {"policy",
         {{"distribution", r.policy.distribution},
          {"suggested_index", r.policy.suggested_index},
          {"suggested_fraction", r.policy.suggested_fraction},
          {"unseen_state", r.policy.unseen_state}}},
        {"decision_index", r.decision_index},
        {"decision", r.decision},
        {"state_after",
         {{"cash", r.state_after.cash},
          {"shares", r.state_after.shares},
          {"day", r.state_after.day}}},
        {"total_assets", r.total_assets},
        {"assets_next_open", r.assets_next_open},
        {"timestamp_ms", r.timestamp_ms},
    };
}

InteractionRecord record_from_json(const json& doc) {
    try {
        InteractionRecord r;
        r.session_id = doc.at("session_id").get<std::string>();
        r.agent_kind = doc.at("agent_kind").get<std::string>();
        r.day = doc.at("day").get<std::size_t>();
        r.num_days = doc.at("num_days").get<std::size_t>();
        r.open_price = doc.at("open_price").get<double>();
        r.trailing_prices = doc.at("trailing_prices").get<std::vector<double>>();
        r.forecast = forecast_from_json(doc.at("forecast"));
        r.context = context_from_json(doc.at("context"));
        r.config = config_from_json(doc.at("config"));
        r.payload = payload_from_json(doc.at("payload"));
        for (const auto& a : doc.at("audit")) {
            r.audit.push_back({a.at("config").get<std::string>(), a.at("distance").get<double>()});
        }
        r.nudge_distance = doc.at("nudge_distance").get<double>();
        const auto& p = doc.at("policy");
        r.policy.distribution = p.at("distribution").get<std::vector<double>>();
        r.policy.suggested_index = p.at("suggested_index").get<std::size_t>();
        r.policy.suggested_fraction = p.at("suggested_fraction").get<double>();
        r.policy.unseen_state = p.at("unseen_state").get<bool>();
        r.decision_index = doc.at("decision_index").get<std::size_t>();
        r.decision = doc.at("decision").get<double>();
        const auto& s = doc.at("state_after");
        r.state_after = {s.at("cash").get<double>(), s.at("shares").get<double>(),
                         s.at("day").get<std::size_t>()};
        r.total_assets = doc.at("total_assets").get<double>();
        r.assets_next_open = doc.at("assets_next_open").get<double>();
        r.timestamp_ms = doc.at("timestamp_ms").get<std::int64_t>();
        return r;
    } catch (const json::exception& e) {
        throw DataError(std::string("record: ") + e.what());
    }
}

std::string to_jsonl_line(const InteractionRecord& record) {
    return to_json(record).dump();
}

void write_jsonl(std::ostream& out, const std::vector<InteractionRecord>& records) {
    for (const auto& r : records) {
        out << to_jsonl_line(r) << '\n';
    }
}

std::vector<InteractionRecord> read_jsonl(std::istream& in) {
    std::vector<InteractionRecord> records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        json doc;
        try {
            doc = json::parse(line);
        } catch (const json::exception& e) {
            throw DataError("jsonl line " + std::to_string(lineno) + ": " + e.what());
        }
        records.push_back(record_from_json(doc));
    }
    return records;
}

void save_jsonl(const std::filesystem::path& path, const std::vector<InteractionRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    write_jsonl(out, records);
}

std::vector<InteractionRecord> load_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot read " + path.string());
    }
    return read_jsonl(in);
}

std::vector<std::vector<InteractionRecord>> load_jsonl_dir(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw DataError("not a directory: " + dir.string());
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    std::vector<std::vector<InteractionRecord>> sessions;
    for (const auto& f : files) {
        sessions.push_back(load_jsonl(f));
    }
    return sessions;
}

} // namespace nudge
