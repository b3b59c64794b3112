#pragma once

#include "nudge/record.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nudge::analysis {

// Row-major dense matrix; rows are observations.
using Matrix = std::vector<std::vector<double>>;

struct PcaResult {
    Matrix transformed;                     // rows x n_components
    Matrix components;                      // n_components x cols, orthonormal rows
    std::vector<double> explained_variance; // non-increasing, sample variance (n - 1)
    std::vector<double> mean;
    bool rank_deficient{false};             // fewer than n_components non-zero variances
};

// Fits on the mean-centered matrix (no scaling). Each component's
// largest-magnitude loading is positive. Throws ContractError unless
// rows >= n_components, cols >= n_components and rows are equal length.
PcaResult pca(const Matrix& data, std::size_t n_components = 4);

struct KMeansResult {
    std::vector<std::size_t> labels;
    Matrix centroids;
    double inertia{0.0};
    std::vector<double> inertia_history; // after each Lloyd iteration of the kept run
    std::size_t iterations{0};
};

struct KMeansOptions {
    std::size_t k{4};
    std::uint64_t seed{0};
    std::size_t max_iter{300};
    std::size_t n_init{10};
};

double inertia(const Matrix& points, std::span<const std::size_t> labels, const Matrix& centroids);
std::vector<std::size_t> assign_labels(const Matrix& points, const Matrix& centroids);
Matrix update_centroids(const Matrix& points, std::span<const std::size_t> labels, std::size_t k);

// k-means++ seeding, Lloyd iterations, empty clusters repaired by moving the
// largest cluster's farthest point into them. The lowest-inertia of n_init runs
// is kept (first on ties). Throws DataError when points < k.
KMeansResult kmeans(const Matrix& points, const KMeansOptions& options);

struct Correlation {
    double value{0.0};
    bool constant{false}; // an input was constant; value is defined as 0
};

// Pearson correlation. Throws ContractError on length mismatch or length < 2.
Correlation corrcoef(std::span<const double> a, std::span<const double> b);
// Length T - window + 1. Throws ContractError when window > T or window < 2.
std::vector<Correlation> moving_corrcoef(std::span<const double> a, std::span<const double> b,
                                         std::size_t window = 20);

double adjusted_rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b);

inline constexpr const char* kClusterNames[4] = {"AI-aligned", "Delayed", "Cautious",
                                                 "Contrarian"};

struct ClusterStats {
    std::size_t id{0};
    double mean_abs_error{0.0};
    double mean_correlation{0.0};
};

// Names by ascending mean |d_u - d_AI| (ties: higher correlation first):
// AI-aligned, Delayed, Cautious, Contrarian for k = 4; cluster-<id> otherwise.
// Result is indexed by cluster id.
std::vector<std::string> label_clusters(std::span<const ClusterStats> stats);

struct UserMetrics {
    std::string session_id;
    std::string agent_kind;
    std::size_t cluster{0};
    double mean_abs_error{0.0};
    Correlation correlation{};
    double final_assets{0.0};
    std::vector<double> decisions;
    std::vector<double> ai_decisions;
    std::vector<double> pc; // PCA coordinates
};

UserMetrics user_metrics(const std::vector<InteractionRecord>& session);

struct ClusterSummary {
    std::size_t id{0};
    std::string name;
    std::size_t size{0};
    double mean_abs_error{0.0};
    double mean_correlation{0.0};
    double mean_final_assets{0.0};
    std::vector<double> mean_trajectory;
    std::vector<double> mean_ai_trajectory;
    std::vector<double> mean_moving_correlation;
};

struct ReportOptions {
    std::size_t n_components{4};
    std::size_t k{4};
    std::size_t window{20};
    std::uint64_t seed{0};
};

struct ClusterReport {
    std::vector<UserMetrics> users;
    std::vector<ClusterSummary> clusters;
    PcaResult pca;
    KMeansResult kmeans;
    // ARI between clusters and agent_kind, when every session has a synthetic kind.
    std::optional<double> adjusted_rand;
};

// Sessions must all have the same number of days. Throws DataError otherwise.
ClusterReport analyze(const std::vector<std::vector<InteractionRecord>>& sessions,
                      const ReportOptions& options = {});

// report.json, per_user.csv, clusters.csv, mean_trajectories.csv,
// moving_correlation.csv, explained_variance.csv
void write_report(const std::filesystem::path& dir, const ClusterReport& report);
std::string report_json(const ClusterReport& report);

} // namespace nudge::analysis
