#include "nudge/service.hpp"

#include "nudge/analysis.hpp"
#include "nudge/errors.hpp"
#include "nudge/random.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace nudge::service {

using nlohmann::json;

namespace {

const std::set<std::string>& create_keys() {
    static const std::set<std::string> keys{"mode", "kind", "selection", "seed", "config"};
    return keys;
}

void reject_unknown(const json& body, const std::set<std::string>& allowed, const char* what) {
    if (!body.is_object()) {
        throw ValidationError(std::string(what) + ": expected a JSON object");
    }
    for (const auto& [key, _] : body.items()) {
        if (!allowed.count(key)) {
            throw ValidationError(std::string(what) + "." + key + ": unknown field");
        }
    }
}

bool non_negative_integer(const json& v) {
    return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

std::string string_field(const json& body, const char* key, std::string fallback) {
    if (!body.contains(key)) {
        return fallback;
    }
    if (!body.at(key).is_string()) {
        throw ValidationError(std::string(key) + ": expected a string");
    }
    return body.at(key).get<std::string>();
}

json grid_json(const PositionGrid& grid) {
    const auto f = grid.fractions();
    return std::vector<double>(f.begin(), f.end());
}

} // namespace

SessionManager::SessionManager(ExperimentConfig config, std::optional<std::filesystem::path> log_dir)
    : config_(std::move(config)), log_dir_(std::move(log_dir)) {
    id_salt_ = static_cast<std::uint64_t>(
        std::chrono::steady_clock::now().time_since_epoch().count());
    if (log_dir_) {
        std::filesystem::create_directories(*log_dir_);
    }
}

const experiment::Artifacts& SessionManager::artifacts(engine::Selection selection) {
    std::lock_guard lock(artifacts_mutex_);
    auto it = artifacts_.find(selection);
    if (it == artifacts_.end()) {
        auto cfg = config_;
        cfg.nudge.selection = selection;
        it = artifacts_.emplace(selection, experiment::load_artifacts(cfg)).first;
    }
    return it->second;
}

json SessionManager::create_session(const json& body_in) {
    const json body = body_in.is_null() ? json::object() : body_in;
    reject_unknown(body, create_keys(), "session");

    ExperimentConfig cfg = config_;
    if (body.contains("config")) {
        json merged = to_json(config_);
        merged.merge_patch(body.at("config"));
        try {
            cfg = parse_experiment_config(merged);
        } catch (const ConfigError& e) {
            throw ValidationError(e.what());
        }
        // Artifacts always come from the server's directory.
        cfg.paths = config_.paths;
    }

    const std::string mode = string_field(body, "mode", "human");
    if (mode != "human" && mode != "archetype") {
        throw ValidationError("mode: expected 'human' or 'archetype'");
    }
    const std::string sel_text =
        string_field(body, "selection", std::string(engine::to_string(cfg.nudge.selection)));
    const auto selection = engine::parse_selection(sel_text);
    if (!selection) {
        throw ValidationError("selection: expected 'optimize', 'random' or 'none'");
    }

    market::PriceSeries series;
    if (body.contains("seed")) {
        if (!non_negative_integer(body.at("seed"))) {
            throw ValidationError("seed: expected a non-negative integer");
        }
        const auto seed = body.at("seed").get<std::uint64_t>();
        cfg.episode.rng_seed = seed;
        series = experiment::series_for_seed(cfg, seed);
    } else {
        series = experiment::evaluation_series(cfg);
    }

    const auto& arts = artifacts(*selection);
    if (arts.policy->num_actions() != cfg.episode.grid.size()) {
        throw ValidationError("episode.grid: size " + std::to_string(cfg.episode.grid.size()) +
                              " does not match the trained policy (" +
                              std::to_string(arts.policy->num_actions()) + " actions)");
    }

    const std::uint64_t n = ++counter_;
    std::ostringstream id;
    id << "s" << std::setw(4) << std::setfill('0') << n << "-" << std::hex << std::setw(8)
       << (mix_seed(id_salt_ ^ n) & 0xffffffffULL);

    auto setup = experiment::episode_setup(cfg, arts, id.str(), std::move(series),
                                           experiment::make_nudger(cfg, arts, *selection));
    setup.clock = sim::wall_clock();

    auto session = std::make_shared<Session>();
    session->mode = mode;
    if (mode == "archetype") {
        const std::string kind_text = string_field(body, "kind", "ai_aligned");
        const auto kind = archetype::parse_kind(kind_text);
        if (!kind) {
            throw ValidationError("kind: unknown archetype '" + kind_text + "'");
        }
        setup.agent_kind = kind_text;
        session->episode = std::make_unique<sim::Episode>(std::move(setup));
        sim::ArchetypeAgent agent(cfg.cohort.base_for(*kind),
                                  derive_seed(cfg.episode.rng_seed, streams::kAgent, n));
        auto& ep = *session->episode;
        while (!ep.finished()) {
            ep.submit(agent.decide(ep.current(), ep.setup().episode.grid));
        }
    } else {
        if (body.contains("kind")) {
            throw ValidationError("kind: only valid with mode 'archetype'");
        }
        session->episode = std::make_unique<sim::Episode>(std::move(setup));
    }

    std::lock_guard slock(session->mutex);
    flush_log(id.str(), *session);
    {
        std::unique_lock lock(sessions_mutex_);
        sessions_.emplace(id.str(), session);
    }
    const auto& ep = *session->episode;
    return {{"session_id", id.str()},
            {"mode", mode},
            {"status", ep.finished() ? "finished" : "active"},
            {"day", ep.day()},
            {"num_days", ep.setup().episode.num_days},
            {"assets", ep.finished() ? ep.records().back().assets_next_open : ep.assets_now()},
            {"initial_cash", ep.setup().episode.initial_cash},
            {"grid", grid_json(ep.setup().episode.grid)}};
}

std::shared_ptr<SessionManager::Session> SessionManager::find(const std::string& id) const {
    std::shared_lock lock(sessions_mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) {
        throw NotFoundError("unknown session " + id);
    }
    return it->second;
}

void SessionManager::flush_log(const std::string& id, Session& session) const {
    if (!log_dir_) {
        return;
    }
    const auto& records = session.episode->records();
    if (session.logged == records.size()) {
        return;
    }
    std::ofstream out(*log_dir_ / (id + ".jsonl"), std::ios::app);
    for (; session.logged < records.size(); ++session.logged) {
        // One write per line keeps each record append whole.
        const std::string line = to_jsonl_line(records[session.logged]) + "\n";
        out.write(line.data(), static_cast<std::streamsize>(line.size()));
        out.flush();
    }
}

json SessionManager::view_locked(const std::string& id, const Session& session) const {
    const auto& ep = *session.episode;
    if (ep.finished()) {
        throw StateError("session " + id + " is finished");
    }
    const auto& d = ep.current();
    const auto& setup = ep.setup();
    std::vector<double> history;
    for (std::size_t t = 0; t <= d.day; ++t) {
        history.push_back(setup.series.open(t));
    }
    json items = json::array();
    for (const auto& item : d.payload) {
        items.push_back({{"id", item.id},
                         {"label", std::string(forecast::to_string(item.label))},
                         {"text", item.text},
                         {"emphasized", item.emphasized}});
    }
    const auto& p = ep.portfolio();
    return {{"session_id", id},
            {"day", d.day},
            {"num_days", setup.episode.num_days},
            {"open_price", d.open_price},
            {"price_history", history},
            {"forecast", to_json(d.forecast)},
            {"explanations", items},
            {"position", market::position_fraction(p, d.open_price)},
            {"last_order", ep.records().empty() ? 0.0 : ep.records().back().decision},
            {"cash", p.cash},
            {"shares", p.shares},
            {"assets", ep.assets_now()},
            {"grid", grid_json(setup.episode.grid)}};
}

json SessionManager::day_view(const std::string& id) const {
    const auto session = find(id);
    std::lock_guard lock(session->mutex);
    return view_locked(id, *session);
}

json SessionManager::post_order(const std::string& id, const json& body) {
    const auto session = find(id);
    reject_unknown(body, {"day", "fraction"}, "order");
    if (!body.contains("fraction") || !body.at("fraction").is_number()) {
        throw ValidationError("fraction: required number");
    }
    if (!body.contains("day") || !non_negative_integer(body.at("day"))) {
        throw ValidationError("day: required non-negative integer");
    }
    const double fraction = body.at("fraction").get<double>();
    const auto day = body.at("day").get<std::size_t>();

    std::lock_guard lock(session->mutex);
    auto& ep = *session->episode;
    if (ep.finished()) {
        throw ConflictError("session " + id + " is finished");
    }
    if (session->mode != "human") {
        throw ConflictError("session " + id + " is driven by an archetype");
    }
    if (day != ep.day()) {
        throw ConflictError("order for day " + std::to_string(day) + " but the session is on day " +
                            std::to_string(ep.day()));
    }
    if (!ep.setup().episode.grid.index_of(fraction)) {
        throw ValidationError("fraction: " + std::to_string(fraction) +
                              " is not on the position grid");
    }
    const auto& r = ep.submit(fraction);
    json out{{"session_id", id},
             {"accepted_day", r.day},
             {"decision", r.decision},
             {"assets", r.assets_next_open},
             {"status", ep.finished() ? "finished" : "active"}};
    if (ep.finished()) {
        out["next_day"] = nullptr;
        out["summary"] = session_summary(ep.records(), ep.setup().series,
                                         ep.setup().episode.initial_cash);
    } else {
        out["next_day"] = ep.day();
    }
    flush_log(id, *session);
    return out;
}

json SessionManager::summary(const std::string& id) const {
    const auto session = find(id);
    std::lock_guard lock(session->mutex);
    const auto& ep = *session->episode;
    if (!ep.finished()) {
        throw StateError("session " + id + " is still active");
    }
    json out = session_summary(ep.records(), ep.setup().series, ep.setup().episode.initial_cash);
    // Baseline of following the policy's argmax over the same series and forecasts.
    auto setup = ep.setup();
    setup.session_id += "-policy";
    setup.clock = sim::logical_clock();
    sim::PolicyFollower follower;
    const auto policy_run = sim::run_episode(std::move(setup), follower);
    out["policy_final_assets"] = policy_run.back().assets_next_open;
    out["session_id"] = id;
    return out;
}

json SessionManager::replay(const std::string& id) const {
    const auto session = find(id);
    std::lock_guard lock(session->mutex);
    const auto& ep = *session->episode;
    if (!ep.finished()) {
        throw StateError("session " + id + " is still active");
    }
    json records = json::array();
    for (const auto& r : ep.records()) {
        records.push_back(to_json(r));
    }
    return {{"session_id", id}, {"records", records}};
}

json session_summary(const std::vector<InteractionRecord>& records, const market::PriceSeries& series,
                     double initial_cash) {
    if (records.empty()) {
        throw StateError("no records");
    }
    std::vector<double> du;
    std::vector<double> dai;
    std::vector<double> assets;
    for (const auto& r : records) {
        du.push_back(r.decision);
        dai.push_back(r.policy.suggested_fraction);
        assets.push_back(r.assets_next_open);
    }
    const double final_assets = assets.back();
    const std::size_t n = records.size();
    const double full = initial_cash * series.open(n) / series.open(0);
    json corr = nullptr;
    bool constant = false;
    if (n >= 2) {
        const auto c = analysis::corrcoef(du, dai);
        corr = c.value;
        constant = c.constant;
    }
    double mae = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mae += std::abs(du[i] - dai[i]);
    }
    mae /= static_cast<double>(n);
    return {{"final_assets", final_assets},
            {"profit", final_assets - initial_cash},
            {"correlation_with_ai", corr},
            {"correlation_constant", constant},
            {"mean_abs_error", mae},
            {"decisions", du},
            {"ai_decisions", dai},
            {"assets", assets},
            {"full_position_final_assets", full}};
}

} // namespace nudge::service
