#pragma once

#include "nudge/config.hpp"
#include "nudge/episode.hpp"
#include "nudge/experiment.hpp"

#include "json.hpp"

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

namespace nudge::service {

// Owns live sessions. Every public call is safe from concurrent request threads;
// calls on one session are serialized by that session's mutex.
//
// Requests and responses are JSON documents matching the HTTP API bodies.
class SessionManager {
public:
    // log_dir: when set, each record is appended to <log_dir>/<session_id>.jsonl
    // as soon as it is produced.
    SessionManager(ExperimentConfig config, std::optional<std::filesystem::path> log_dir);

    // Body (all optional): {"mode": "human" | "archetype", "kind": <archetype>,
    // "selection": "optimize" | "random" | "none", "seed": <uint>}.
    // Archetype sessions are played to completion immediately.
    // Throws MissingArtifactError when the trained artifacts are absent.
    nlohmann::json create_session(const nlohmann::json& body);

    // Current day without any policy fields. NotFoundError, StateError when finished.
    nlohmann::json day_view(const std::string& id) const;

    // Body: {"day": <int>, "fraction": <grid element>}. ValidationError for an
    // off-grid fraction or malformed body, ConflictError for a stale day or a
    // finished session.
    nlohmann::json post_order(const std::string& id, const nlohmann::json& body);

    // Debrief data; StateError until the session is finished.
    nlohmann::json summary(const std::string& id) const;
    nlohmann::json replay(const std::string& id) const;

    [[nodiscard]] const ExperimentConfig& config() const noexcept { return config_; }

private:
    struct Session {
        mutable std::mutex mutex;
        std::unique_ptr<sim::Episode> episode;
        std::string mode;
        std::size_t logged{0};
    };

    std::shared_ptr<Session> find(const std::string& id) const;
    const experiment::Artifacts& artifacts(engine::Selection selection);
    void flush_log(const std::string& id, Session& session) const;
    nlohmann::json view_locked(const std::string& id, const Session& session) const;

    ExperimentConfig config_;
    std::optional<std::filesystem::path> log_dir_;
    std::mutex artifacts_mutex_;
    std::map<engine::Selection, experiment::Artifacts> artifacts_;
    mutable std::shared_mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::atomic<std::uint64_t> counter_{0};
    std::uint64_t id_salt_{0};
};

// Debrief metrics for a finished log: final assets, profit, correlation of the
// user's decisions with d_AI, and the buy-and-hold baseline over the same series.
nlohmann::json session_summary(const std::vector<InteractionRecord>& records,
                               const market::PriceSeries& series, double initial_cash);

} // namespace nudge::service
