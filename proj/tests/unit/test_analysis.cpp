#include "nudge/analysis.hpp"
#include "nudge/errors.hpp"
#include "nudge/random.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

using namespace nudge;
using namespace nudge::analysis;

namespace {

// Cyclic Jacobi rotations on a symmetric matrix; returns eigenvalues, descending.
std::vector<double> jacobi_eigenvalues(std::vector<std::vector<double>> a) {
    const std::size_t n = a.size();
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                off += a[p][q] * a[p][q];
            }
        }
        if (off < 1e-30) {
            break;
        }
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a[p][q]) < 1e-300) {
                    continue;
                }
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k][p];
                    const double akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p][k];
                    const double aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> eig(n);
    for (std::size_t i = 0; i < n; ++i) {
        eig[i] = a[i][i];
    }
    std::sort(eig.rbegin(), eig.rend());
    return eig;
}

std::vector<std::vector<double>> sample_covariance(const Matrix& x) {
    const std::size_t n = x.size();
    const std::size_t m = x[0].size();
    std::vector<double> mean(m, 0.0);
    for (const auto& row : x) {
        for (std::size_t j = 0; j < m; ++j) {
            mean[j] += row[j] / static_cast<double>(n);
        }
    }
    std::vector<std::vector<double>> c(m, std::vector<double>(m, 0.0));
    for (const auto& row : x) {
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                c[i][j] += (row[i] - mean[i]) * (row[j] - mean[j]) / static_cast<double>(n - 1);
            }
        }
    }
    return c;
}

Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
    Matrix m(rows, std::vector<double>(cols));
    for (auto& row : m) {
        for (double& v : row) {
            v = standard_normal(rng) * (1.0 + uniform01(rng));
        }
    }
    return m;
}

} // namespace

TEST(Pca, IdenticalRowsGiveZeroCoordinates) {
    const Matrix x(6, std::vector<double>{0.1, 0.5, 0.9, 0.3});
    const auto r = pca(x, 2);
    EXPECT_TRUE(r.rank_deficient);
    for (const auto& row : r.transformed) {
        for (double v : row) {
            EXPECT_NEAR(v, 0.0, 1e-12);
        }
    }
}

TEST(Pca, PointsOnDiagonal) {
    Matrix x;
    for (int i = 0; i < 10; ++i) {
        x.push_back({static_cast<double>(i), static_cast<double>(i)});
    }
    const auto r = pca(x, 2);
    EXPECT_NEAR(r.components[0][0], 1.0 / std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(r.components[0][1], 1.0 / std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(r.explained_variance[1], 0.0, 1e-12);
    // Analytic: var(x) + var(y) with var = 55/6.
    EXPECT_NEAR(r.explained_variance[0], 2.0 * 55.0 / 6.0, 1e-10);
    EXPECT_TRUE(r.rank_deficient);
}

TEST(Pca, MatchesJacobiOracleAndIsOrthonormal) {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const auto x = random_matrix(rng, 10, 6);
        const auto r = pca(x, 4);
        const auto eig = jacobi_eigenvalues(sample_covariance(x));
        for (std::size_t k = 0; k < 4; ++k) {
            EXPECT_NEAR(r.explained_variance[k], eig[k], 1e-8);
            if (k > 0) {
                EXPECT_GE(r.explained_variance[k - 1], r.explained_variance[k]);
            }
        }
        for (std::size_t a = 0; a < 4; ++a) {
            for (std::size_t b = 0; b < 4; ++b) {
                double dot = 0.0;
                for (std::size_t j = 0; j < 6; ++j) {
                    dot += r.components[a][j] * r.components[b][j];
                }
                EXPECT_NEAR(dot, a == b ? 1.0 : 0.0, 1e-8);
            }
        }
    }
}

TEST(Pca, SignConventionAndShapeErrors) {
    Rng rng(12);
    const auto r = pca(random_matrix(rng, 8, 5), 3);
    for (const auto& comp : r.components) {
        const auto it = std::max_element(comp.begin(), comp.end(), [](double a, double b) {
            return std::abs(a) < std::abs(b);
        });
        EXPECT_GT(*it, 0.0);
    }
    EXPECT_THROW((void)pca(random_matrix(rng, 3, 5), 4), ContractError);
    EXPECT_THROW((void)pca(random_matrix(rng, 8, 3), 4), ContractError);
}

TEST(KMeans, SquareCorners) {
    const Matrix pts{{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    const auto r = kmeans(pts, {4, 1, 300, 10});
    EXPECT_NEAR(r.inertia, 0.0, 1e-15);
    std::vector<std::size_t> sorted = r.labels;
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(sorted, (std::vector<std::size_t>{0, 1, 2, 3}));
}

TEST(KMeans, SeparatedBlobsRecovered) {
    std::size_t correct = 0;
    std::size_t total = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(seed);
        Matrix pts;
        std::vector<std::size_t> truth;
        for (int i = 0; i < 40; ++i) {
            const std::size_t blob = i % 2;
            const double cx = blob == 0 ? 0.0 : 10.0;
            pts.push_back({cx + standard_normal(rng), standard_normal(rng)});
            truth.push_back(blob);
        }
        const auto r = kmeans(pts, {2, seed, 300, 10});
        std::size_t agree = 0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            agree += r.labels[i] == truth[i] ? 1 : 0;
        }
        correct += std::max(agree, pts.size() - agree);
        total += pts.size();
    }
    EXPECT_GE(static_cast<double>(correct) / static_cast<double>(total), 0.99);
}

TEST(KMeans, FixedPointMonotoneAndDeterministic) {
    Rng rng(13);
    const auto pts = random_matrix(rng, 60, 4);
    const auto a = kmeans(pts, {4, 7, 300, 10});
    const auto b = kmeans(pts, {4, 7, 300, 10});
    EXPECT_EQ(a.labels, b.labels);
    EXPECT_EQ(a.inertia_history, b.inertia_history);
    for (std::size_t i = 1; i < a.inertia_history.size(); ++i) {
        EXPECT_LE(a.inertia_history[i], a.inertia_history[i - 1] + 1e-12);
    }
    const auto centroids = update_centroids(pts, a.labels, 4);
    EXPECT_EQ(assign_labels(pts, centroids), a.labels);
    EXPECT_NEAR(inertia(pts, a.labels, a.centroids), a.inertia, 1e-9);
}

TEST(KMeans, TooFewPoints) {
    const Matrix pts{{0, 0}, {1, 1}};
    EXPECT_THROW((void)kmeans(pts, {3, 0, 300, 10}), DataError);
}

TEST(Corrcoef, Examples) {
    const std::vector<double> a{1, 2, 3};
    const std::vector<double> b{2, 4, 7};
    // Hand calculation: cov = 2.5, var(a) = 1, var(b) = 6.3333.
    EXPECT_NEAR(corrcoef(a, b).value, 2.5 / std::sqrt(1.0 * 19.0 / 3.0), 1e-12);
    EXPECT_NEAR(corrcoef(a, b).value, 0.9934, 1e-4);
    EXPECT_NEAR(corrcoef(a, a).value, 1.0, 1e-12);
    const std::vector<double> neg{-1, -2, -3};
    EXPECT_NEAR(corrcoef(a, neg).value, -1.0, 1e-12);
}

TEST(Corrcoef, ConstantAndShapeErrors) {
    const std::vector<double> a{1, 2, 3};
    const std::vector<double> flat{5, 5, 5};
    const auto c = corrcoef(a, flat);
    EXPECT_TRUE(c.constant);
    EXPECT_EQ(c.value, 0.0);
    const std::vector<double> two{1, 2};
    EXPECT_THROW((void)corrcoef(a, two), ContractError);
    const std::vector<double> one{1};
    EXPECT_THROW((void)corrcoef(one, one), ContractError);
}

TEST(MovingCorrcoef, LengthAndIdentity) {
    std::vector<double> a(45);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = std::sin(0.3 * static_cast<double>(i));
    }
    const auto m = moving_corrcoef(a, a, 20);
    ASSERT_EQ(m.size(), 26u);
    for (const auto& c : m) {
        EXPECT_NEAR(c.value, 1.0, 1e-12);
    }
    EXPECT_THROW((void)moving_corrcoef(a, a, 46), ContractError);
    EXPECT_THROW((void)moving_corrcoef(a, a, 1), ContractError);
}

TEST(MovingCorrcoef, SignFlipSwitchesWindows) {
    std::vector<double> a(45);
    std::vector<double> b(45);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = static_cast<double>(i);
        b[i] = i < 22 ? a[i] : -a[i];
    }
    const auto m = moving_corrcoef(a, b, 10);
    ASSERT_EQ(m.size(), 36u);
    for (std::size_t start = 0; start < m.size(); ++start) {
        if (start + 10 <= 22) {
            EXPECT_NEAR(m[start].value, 1.0, 1e-12) << start;
        } else if (start >= 22) {
            EXPECT_NEAR(m[start].value, -1.0, 1e-12) << start;
        } else {
            const std::span<const double> wa(a.data() + start, 10);
            const std::span<const double> wb(b.data() + start, 10);
            EXPECT_DOUBLE_EQ(m[start].value, corrcoef(wa, wb).value);
        }
    }
}

TEST(AdjustedRand, KnownValues) {
    const std::vector<std::size_t> a{0, 0, 0, 1, 1, 1};
    const std::vector<std::size_t> relabeled{1, 1, 1, 0, 0, 0};
    const std::vector<std::size_t> b{0, 0, 1, 1, 2, 2};
    EXPECT_NEAR(adjusted_rand_index(a, a), 1.0, 1e-12);
    EXPECT_NEAR(adjusted_rand_index(a, relabeled), 1.0, 1e-12);
    // (sum_ij C(n_ij,2) - expected) / (max - expected) = (2 - 6*3/15) / (4.5 - 1.2).
    EXPECT_NEAR(adjusted_rand_index(a, b), (2.0 - 1.2) / (4.5 - 1.2), 1e-12);
}

TEST(LabelClusters, OrderedByError) {
    const std::vector<ClusterStats> ordered{{0, 0.1, 0.9}, {1, 0.2, 0.5}, {2, 0.3, 0.2}, {3, 0.4, -0.1}};
    EXPECT_EQ(label_clusters(ordered),
              (std::vector<std::string>{"AI-aligned", "Delayed", "Cautious", "Contrarian"}));
    const std::vector<ClusterStats> shuffled{{0, 0.3, 0.2}, {1, 0.1, 0.9}, {2, 0.4, 0.0}, {3, 0.2, 0.5}};
    EXPECT_EQ(label_clusters(shuffled),
              (std::vector<std::string>{"Cautious", "AI-aligned", "Contrarian", "Delayed"}));
    const std::vector<ClusterStats> two{{0, 0.1, 0.0}, {1, 0.2, 0.0}};
    EXPECT_EQ(label_clusters(two), (std::vector<std::string>{"cluster-0", "cluster-1"}));
}

TEST(Analyze, SyntheticSessionsAndReportFiles) {
    std::vector<std::vector<InteractionRecord>> sessions;
    Rng rng(14);
    for (int s = 0; s < 12; ++s) {
        const bool follower = s % 2 == 0;
        std::vector<InteractionRecord> log;
        for (std::size_t day = 0; day < 30; ++day) {
            InteractionRecord r;
            r.session_id = "s" + std::to_string(s);
            r.agent_kind = follower ? "ai_aligned" : "contrarian";
            r.day = day;
            r.num_days = 30;
            r.policy.suggested_fraction = (day / 3) % 2 == 0 ? 1.0 : 0.0;
            const double noise = 0.1 * std::round(uniform01(rng));
            r.decision = follower ? std::abs(r.policy.suggested_fraction - noise)
                                  : 1.0 - r.policy.suggested_fraction;
            r.assets_next_open = 1e6 + (follower ? 1e4 : -1e4);
            log.push_back(r);
        }
        sessions.push_back(log);
    }
    ReportOptions opts;
    opts.k = 2;
    opts.n_components = 2;
    opts.window = 10;
    const auto report = analyze(sessions, opts);
    ASSERT_TRUE(report.adjusted_rand.has_value());
    EXPECT_NEAR(*report.adjusted_rand, 1.0, 1e-12);
    ASSERT_EQ(report.clusters.size(), 2u);
    EXPECT_EQ(report.clusters[0].mean_moving_correlation.size(), 21u);

    const auto dir = std::filesystem::temp_directory_path() / "nudgexai_report_test";
    std::filesystem::remove_all(dir);
    write_report(dir, report);
    for (const char* f : {"report.json", "per_user.csv", "clusters.csv", "mean_trajectories.csv",
                          "moving_correlation.csv", "explained_variance.csv"}) {
        EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
    }
    std::filesystem::remove_all(dir);

    sessions[3].pop_back();
    EXPECT_THROW((void)analyze(sessions, opts), DataError);
}
