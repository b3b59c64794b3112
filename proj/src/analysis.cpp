#include "nudge/analysis.hpp"

#include "nudge/errors.hpp"
#include "nudge/random.hpp"

#include <Eigen/Dense>

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>

namespace nudge::analysis {

namespace {

std::size_t check_rectangular(const Matrix& m) {
    const std::size_t cols = m.empty() ? 0 : m.front().size();
    for (const auto& row : m) {
        if (row.size() != cols) {
            throw ContractError("matrix rows have unequal lengths");
        }
    }
    return cols;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

} // namespace

PcaResult pca(const Matrix& data, std::size_t n_components) {
    const std::size_t cols = check_rectangular(data);
    const std::size_t rows = data.size();
    if (n_components == 0 || rows < n_components || cols < n_components) {
        throw ContractError("pca: need rows >= n_components and cols >= n_components");
    }

    Eigen::MatrixXd x(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = data[r][c];
        }
    }
    const Eigen::RowVectorXd mean = x.colwise().mean();
    x.rowwise() -= mean;
    const double denom = rows > 1 ? static_cast<double>(rows - 1) : 1.0;
    const Eigen::MatrixXd cov = (x.transpose() * x) / denom;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) {
        throw NumericError("pca: eigendecomposition failed");
    }
    // Eigen returns ascending eigenvalues.
    const Eigen::VectorXd values = solver.eigenvalues();
    const Eigen::MatrixXd vectors = solver.eigenvectors();

    PcaResult result;
    result.mean.assign(mean.data(), mean.data() + cols);
    const double scale = std::max(1.0, std::abs(values(static_cast<Eigen::Index>(cols - 1))));
    std::size_t nonzero = 0;
    Eigen::MatrixXd comps(static_cast<Eigen::Index>(n_components), static_cast<Eigen::Index>(cols));
    for (std::size_t k = 0; k < n_components; ++k) {
        const auto src = static_cast<Eigen::Index>(cols - 1 - k);
        Eigen::VectorXd v = vectors.col(src);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0.0) {
            v = -v;
        }
        comps.row(static_cast<Eigen::Index>(k)) = v.transpose();
        const double var = std::max(0.0, values(src));
        if (var > 1e-12 * scale) {
            ++nonzero;
        }
        result.explained_variance.push_back(var);
    }
    result.rank_deficient = nonzero < n_components;

    const Eigen::MatrixXd projected = x * comps.transpose();
    result.transformed.assign(rows, std::vector<double>(n_components));
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t k = 0; k < n_components; ++k) {
            result.transformed[r][k] =
                projected(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k));
        }
    }
    result.components.assign(n_components, std::vector<double>(cols));
    for (std::size_t k = 0; k < n_components; ++k) {
        for (std::size_t c = 0; c < cols; ++c) {
            result.components[k][c] =
                comps(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c));
        }
    }
    return result;
}

double inertia(const Matrix& points, std::span<const std::size_t> labels,
               const Matrix& centroids) {
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        total += squared_distance(points[i], centroids[labels[i]]);
    }
    return total;
}

std::vector<std::size_t> assign_labels(const Matrix& points, const Matrix& centroids) {
    std::vector<std::size_t> labels(points.size(), 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < centroids.size(); ++c) {
            const double d = squared_distance(points[i], centroids[c]);
            if (d < best) {
                best = d;
                labels[i] = c;
            }
        }
    }
    return labels;
}

Matrix update_centroids(const Matrix& points, std::span<const std::size_t> labels, std::size_t k) {
    const std::size_t dims = points.empty() ? 0 : points.front().size();
    Matrix centroids(k, std::vector<double>(dims, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        ++counts[labels[i]];
        for (std::size_t d = 0; d < dims; ++d) {
            centroids[labels[i]][d] += points[i][d];
        }
    }
    for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] > 0) {
            for (double& v : centroids[c]) {
                v /= static_cast<double>(counts[c]);
            }
        }
    }
    return centroids;
}

namespace {

Matrix kmeanspp_init(const Matrix& points, std::size_t k, Rng& rng) {
    Matrix centroids;
    centroids.push_back(points[uniform_index(rng, points.size())]);
    std::vector<double> d2(points.size());
    while (centroids.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& c : centroids) {
                best = std::min(best, squared_distance(points[i], c));
            }
            d2[i] = best;
            total += best;
        }
        std::size_t pick = 0;
        if (total <= 0.0) {
            // All points coincide with a centroid; take the first unused index.
            pick = centroids.size() % points.size();
        } else {
            const double target = uniform01(rng) * total;
            double acc = 0.0;
            pick = points.size() - 1;
            for (std::size_t i = 0; i < points.size(); ++i) {
                acc += d2[i];
                if (acc > target) {
                    pick = i;
                    break;
                }
            }
        }
        centroids.push_back(points[pick]);
    }
    return centroids;
}

// Moves the point of the largest cluster farthest from its centroid into each
// empty cluster. Returns true if anything changed.
bool repair_empty(const Matrix& points, std::vector<std::size_t>& labels, Matrix& centroids) {
    const std::size_t k = centroids.size();
    bool changed = false;
    for (std::size_t c = 0; c < k; ++c) {
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t l : labels) {
            ++counts[l];
        }
        if (counts[c] > 0) {
            continue;
        }
        const auto largest = static_cast<std::size_t>(
            std::max_element(counts.begin(), counts.end()) - counts.begin());
        if (counts[largest] < 2) {
            continue;
        }
        std::size_t far = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (labels[i] != largest) {
                continue;
            }
            const double d = squared_distance(points[i], centroids[largest]);
            if (d > far_d) {
                far_d = d;
                far = i;
            }
        }
        labels[far] = c;
        centroids = update_centroids(points, labels, k);
        changed = true;
    }
    return changed;
}

KMeansResult lloyd(const Matrix& points, Matrix centroids, std::size_t max_iter) {
    const std::size_t k = centroids.size();
    KMeansResult r;
    r.labels = assign_labels(points, centroids);
    for (std::size_t it = 0; it < max_iter; ++it) {
        centroids = update_centroids(points, r.labels, k);
        repair_empty(points, r.labels, centroids);
        r.inertia_history.push_back(inertia(points, r.labels, centroids));
        ++r.iterations;
        auto next = assign_labels(points, centroids);
        if (next == r.labels) {
            break;
        }
        r.labels = std::move(next);
    }
    r.centroids = update_centroids(points, r.labels, k);
    r.inertia = inertia(points, r.labels, r.centroids);
    return r;
}

} // namespace

KMeansResult kmeans(const Matrix& points, const KMeansOptions& options) {
    check_rectangular(points);
    if (options.k == 0 || points.size() < options.k) {
        throw DataError("kmeans: need at least k points (k = " + std::to_string(options.k) +
                        ", points = " + std::to_string(points.size()) + ")");
    }
    KMeansResult best;
    bool have = false;
    for (std::size_t run = 0; run < std::max<std::size_t>(1, options.n_init); ++run) {
        Rng rng(derive_seed(options.seed, 0x4b4d, run));
        KMeansResult r = lloyd(points, kmeanspp_init(points, options.k, rng), options.max_iter);
        if (!have || r.inertia < best.inertia) {
            best = std::move(r);
            have = true;
        }
    }
    return best;
}

Correlation corrcoef(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw ContractError("corrcoef: length mismatch");
    }
    if (a.size() < 2) {
        throw ContractError("corrcoef: need at least two values");
    }
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0;
    double saa = 0.0;
    double sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa <= 0.0 || sbb <= 0.0) {
        return {0.0, true};
    }
    return {std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0), false};
}

std::vector<Correlation> moving_corrcoef(std::span<const double> a, std::span<const double> b,
                                         std::size_t window) {
    if (a.size() != b.size()) {
        throw ContractError("moving_corrcoef: length mismatch");
    }
    if (window < 2 || window > a.size()) {
        throw ContractError("moving_corrcoef: window must lie in [2, length]");
    }
    std::vector<Correlation> out;
    out.reserve(a.size() - window + 1);
    for (std::size_t s = 0; s + window <= a.size(); ++s) {
        out.push_back(corrcoef(a.subspan(s, window), b.subspan(s, window)));
    }
    return out;
}

double adjusted_rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b) {
    if (a.size() != b.size()) {
        throw ContractError("adjusted_rand_index: length mismatch");
    }
    std::map<std::pair<std::size_t, std::size_t>, double> table;
    std::map<std::size_t, double> rows;
    std::map<std::size_t, double> cols;
    for (std::size_t i = 0; i < a.size(); ++i) {
        table[{a[i], b[i]}] += 1.0;
        rows[a[i]] += 1.0;
        cols[b[i]] += 1.0;
    }
    auto pairs = [](double n) { return n * (n - 1.0) / 2.0; };
    double index = 0.0;
    for (const auto& [_, n] : table) {
        index += pairs(n);
    }
    double sum_rows = 0.0;
    for (const auto& [_, n] : rows) {
        sum_rows += pairs(n);
    }
    double sum_cols = 0.0;
    for (const auto& [_, n] : cols) {
        sum_cols += pairs(n);
    }
    const double total = pairs(static_cast<double>(a.size()));
    if (total == 0.0) {
        return 1.0;
    }
    const double expected = sum_rows * sum_cols / total;
    const double max_index = 0.5 * (sum_rows + sum_cols);
    if (max_index == expected) {
        return 1.0;
    }
    return (index - expected) / (max_index - expected);
}

std::vector<std::string> label_clusters(std::span<const ClusterStats> stats) {
    std::vector<std::string> names(stats.size());
    if (stats.size() != 4) {
        for (std::size_t i = 0; i < stats.size(); ++i) {
            names[stats[i].id] = "cluster-" + std::to_string(stats[i].id);
        }
        return names;
    }
    std::vector<std::size_t> order(stats.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        if (stats[x].mean_abs_error != stats[y].mean_abs_error) {
            return stats[x].mean_abs_error < stats[y].mean_abs_error;
        }
        return stats[x].mean_correlation > stats[y].mean_correlation;
    });
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        names[stats[order[rank]].id] = kClusterNames[rank];
    }
    return names;
}

UserMetrics user_metrics(const std::vector<InteractionRecord>& session) {
    if (session.empty()) {
        throw DataError("analysis: empty session log");
    }
    UserMetrics m;
    m.session_id = session.front().session_id;
    m.agent_kind = session.front().agent_kind;
    double err = 0.0;
    for (const auto& r : session) {
        m.decisions.push_back(r.decision);
        m.ai_decisions.push_back(r.policy.suggested_fraction);
        err += std::abs(r.decision - r.policy.suggested_fraction);
    }
    m.mean_abs_error = err / static_cast<double>(session.size());
    m.correlation = session.size() >= 2 ? corrcoef(m.decisions, m.ai_decisions) : Correlation{0.0, true};
    m.final_assets = session.back().assets_next_open;
    return m;
}

ClusterReport analyze(const std::vector<std::vector<InteractionRecord>>& sessions,
                      const ReportOptions& options) {
    if (sessions.empty()) {
        throw DataError("analysis: no sessions");
    }
    ClusterReport report;
    for (const auto& s : sessions) {
        report.users.push_back(user_metrics(s));
    }
    const std::size_t days = report.users.front().decisions.size();
    Matrix trajectories;
    for (const auto& u : report.users) {
        if (u.decisions.size() != days) {
            throw DataError("analysis: session '" + u.session_id + "' has " +
                            std::to_string(u.decisions.size()) + " days, expected " +
                            std::to_string(days));
        }
        trajectories.push_back(u.decisions);
    }

    report.pca = pca(trajectories, options.n_components);
    report.kmeans = kmeans(report.pca.transformed,
                           {options.k, options.seed, 300, 10});
    for (std::size_t i = 0; i < report.users.size(); ++i) {
        report.users[i].cluster = report.kmeans.labels[i];
        report.users[i].pc = report.pca.transformed[i];
    }

    const bool window_fits = options.window >= 2 && options.window <= days;
    std::vector<ClusterStats> stats;
    for (std::size_t c = 0; c < options.k; ++c) {
        ClusterSummary s;
        s.id = c;
        s.mean_trajectory.assign(days, 0.0);
        s.mean_ai_trajectory.assign(days, 0.0);
        if (window_fits) {
            s.mean_moving_correlation.assign(days - options.window + 1, 0.0);
        }
        for (const auto& u : report.users) {
            if (u.cluster != c) {
                continue;
            }
            ++s.size;
            s.mean_abs_error += u.mean_abs_error;
            s.mean_correlation += u.correlation.value;
            s.mean_final_assets += u.final_assets;
            for (std::size_t t = 0; t < days; ++t) {
                s.mean_trajectory[t] += u.decisions[t];
                s.mean_ai_trajectory[t] += u.ai_decisions[t];
            }
            if (window_fits) {
                const auto mc = moving_corrcoef(u.decisions, u.ai_decisions, options.window);
                for (std::size_t t = 0; t < mc.size(); ++t) {
                    s.mean_moving_correlation[t] += mc[t].value;
                }
            }
        }
        if (s.size > 0) {
            const double n = static_cast<double>(s.size);
            s.mean_abs_error /= n;
            s.mean_correlation /= n;
            s.mean_final_assets /= n;
            for (auto* v : {&s.mean_trajectory, &s.mean_ai_trajectory, &s.mean_moving_correlation}) {
                for (double& x : *v) {
                    x /= n;
                }
            }
        }
        stats.push_back({c, s.mean_abs_error, s.mean_correlation});
        report.clusters.push_back(std::move(s));
    }
    const auto names = label_clusters(stats);
    for (auto& s : report.clusters) {
        s.name = names[s.id];
    }

    const bool synthetic = std::all_of(report.users.begin(), report.users.end(), [](const auto& u) {
        return !u.agent_kind.empty() && u.agent_kind != "human";
    });
    if (synthetic) {
        std::map<std::string, std::size_t> kind_ids;
        std::vector<std::size_t> truth;
        for (const auto& u : report.users) {
            truth.push_back(kind_ids.try_emplace(u.agent_kind, kind_ids.size()).first->second);
        }
        report.adjusted_rand = adjusted_rand_index(truth, report.kmeans.labels);
    }
    return report;
}

std::string report_json(const ClusterReport& report) {
    using nlohmann::json;
    json users = json::array();
    for (const auto& u : report.users) {
        users.push_back({{"session_id", u.session_id},
                         {"agent_kind", u.agent_kind},
                         {"cluster", u.cluster},
                         {"cluster_name", report.clusters.at(u.cluster).name},
                         {"mean_abs_error", u.mean_abs_error},
                         {"correlation", u.correlation.value},
                         {"correlation_constant", u.correlation.constant},
                         {"final_assets", u.final_assets},
                         {"pc", u.pc}});
    }
    json clusters = json::array();
    for (const auto& c : report.clusters) {
        clusters.push_back({{"id", c.id},
                            {"name", c.name},
                            {"size", c.size},
                            {"mean_abs_error", c.mean_abs_error},
                            {"mean_correlation", c.mean_correlation},
                            {"mean_final_assets", c.mean_final_assets}});
    }
    json doc = {{"users", std::move(users)},
                {"clusters", std::move(clusters)},
                {"explained_variance", report.pca.explained_variance},
                {"pca_rank_deficient", report.pca.rank_deficient},
                {"kmeans_inertia", report.kmeans.inertia}};
    doc["adjusted_rand_index"] =
        report.adjusted_rand ? json(*report.adjusted_rand) : json(nullptr);
    return doc.dump(2) + "\n";
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    out.precision(10);
    return out;
}

} // namespace

void write_report(const std::filesystem::path& dir, const ClusterReport& report) {
    std::filesystem::create_directories(dir);
    {
        auto out = open_out(dir / "report.json");
        out << report_json(report);
    }
    {
        auto out = open_out(dir / "per_user.csv");
        out << "session_id,agent_kind,cluster,cluster_name,mean_abs_error,correlation,final_assets";
        for (std::size_t k = 0; k < report.pca.explained_variance.size(); ++k) {
            out << ",pc" << k + 1;
        }
        out << '\n';
        for (const auto& u : report.users) {
            out << u.session_id << ',' << u.agent_kind << ',' << u.cluster << ','
                << report.clusters.at(u.cluster).name << ',' << u.mean_abs_error << ','
                << u.correlation.value << ',' << u.final_assets;
            for (double v : u.pc) {
                out << ',' << v;
            }
            out << '\n';
        }
    }
    {
        auto out = open_out(dir / "clusters.csv");
        out << "cluster,name,size,mean_abs_error,mean_correlation,mean_final_assets\n";
        for (const auto& c : report.clusters) {
            out << c.id << ',' << c.name << ',' << c.size << ',' << c.mean_abs_error << ','
                << c.mean_correlation << ',' << c.mean_final_assets << '\n';
        }
    }
    {
        auto out = open_out(dir / "mean_trajectories.csv");
        out << "day";
        for (const auto& c : report.clusters) {
            out << ',' << c.name;
        }
        out << ",d_ai\n";
        const std::size_t days =
            report.clusters.empty() ? 0 : report.clusters.front().mean_trajectory.size();
        for (std::size_t t = 0; t < days; ++t) {
            out << t;
            double ai = 0.0;
            for (const auto& u : report.users) {
                ai += u.ai_decisions[t];
            }
            for (const auto& c : report.clusters) {
                out << ',' << c.mean_trajectory[t];
            }
            out << ',' << ai / static_cast<double>(report.users.size()) << '\n';
        }
    }
    {
        auto out = open_out(dir / "moving_correlation.csv");
        out << "window_start";
        for (const auto& c : report.clusters) {
            out << ',' << c.name;
        }
        out << '\n';
        const std::size_t n =
            report.clusters.empty() ? 0 : report.clusters.front().mean_moving_correlation.size();
        for (std::size_t t = 0; t < n; ++t) {
            out << t;
            for (const auto& c : report.clusters) {
                out << ',' << c.mean_moving_correlation[t];
            }
            out << '\n';
        }
    }
    {
        auto out = open_out(dir / "explained_variance.csv");
        out << "component,variance\n";
        for (std::size_t k = 0; k < report.pca.explained_variance.size(); ++k) {
            out << k + 1 << ',' << report.pca.explained_variance[k] << '\n';
        }
    }
}

} // namespace nudge::analysis
