#include <gtest/gtest.h>

#include "ctlayer/ct_core.hpp"
#include "ctlayer/error.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

#include <cmath>
#include <numeric>

using namespace ctlayer;
namespace oracle = ctlayer::testing;

namespace {

Matrix column(const std::vector<float>& v) { return Matrix(v.size(), 1, v); }

// All sequences of length `len` over {1,2,3}.
std::vector<std::vector<double>> sequences(std::size_t len) {
    std::vector<std::vector<double>> out;
    std::size_t total = 1;
    for (std::size_t i = 0; i < len; ++i) total *= 3;
    for (std::size_t code = 0; code < total; ++code) {
        std::vector<double> v(len);
        std::size_t c = code;
        for (std::size_t i = 0; i < len; ++i) {
            v[i] = 1.0 + static_cast<double>(c % 3);
            c /= 3;
        }
        out.push_back(std::move(v));
    }
    return out;
}

}  // namespace

TEST(NnDistance, Examples) {
    const Matrix train(2, 2, {0.0f, 0.0f, 3.0f, 4.0f});
    const std::vector<float> x = {1.0f, 1.0f};
    EXPECT_EQ(nn_sq_distance(x, train), 2.0);
    EXPECT_EQ(nn_sq_distance(train.row(1), train), 0.0);
    const Matrix single(1, 3, {1.0f, -2.0f, 0.5f});
    const std::vector<float> y = {0.0f, 0.0f, 0.0f};
    EXPECT_EQ(nn_sq_distance(y, single), 1.0 + 4.0 + 0.25);
    const std::vector<float> wrong = {1.0f};
    EXPECT_THROW(nn_sq_distance(wrong, train), Error);
}

TEST(NnDistance, ZeroExactlyForTrainingRows) {
    Rng rng(4);
    const Matrix train = oracle::random_matrix(30, 7, rng);
    const Matrix other = oracle::random_matrix(30, 7, rng);
    for (std::size_t i = 0; i < 30; ++i) {
        EXPECT_EQ(nn_sq_distance(train.row(i), train), 0.0);
        EXPECT_GT(nn_sq_distance(other.row(i), train), 0.0);
    }
    EXPECT_EQ(nn_sq_distances(other, train, 1), nn_sq_distances(other, train, 4));
}

TEST(MannWhitney, AllTiedIsZero) {
    const std::vector<double> c = {2.5, 2.5, 2.5};
    EXPECT_EQ(mann_whitney_zu(c, c), 0.0);
}

TEST(MannWhitney, SeparatedSamples) {
    const std::vector<double> low = {1, 2, 3};
    const std::vector<double> high = {4, 5, 6};
    const double expected = 4.5 / std::sqrt(5.25);
    EXPECT_NEAR(mann_whitney_zu(low, high), expected, 1e-12);
    EXPECT_NEAR(mann_whitney_zu(high, low), -expected, 1e-12);
    EXPECT_NEAR(expected, 1.9640, 1e-4);
    EXPECT_NEAR(mann_whitney_zu(low, high, false), expected, 1e-12);
}

TEST(MannWhitney, MatchesPairCountingOracleOnSmallLists) {
    for (std::size_t total = 2; total <= 6; ++total) {
        for (std::size_t n = 1; n < total; ++n) {
            const auto tests = sequences(n);
            const auto gens = sequences(total - n);
            for (const auto& t : tests) {
                for (const auto& g : gens) {
                    for (bool tie : {true, false}) {
                        const double z = mann_whitney_zu(t, g, tie);
                        ASSERT_NEAR(z, oracle::brute_force_zu(t, g, tie), 1e-12);
                        ASSERT_EQ(z, -mann_whitney_zu(g, t, tie));
                    }
                }
            }
        }
    }
}

TEST(MannWhitney, ShiftingGeneratedUpNeverLowersZ) {
    Rng rng(21);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> t(1 + rng.uniform_index(15));
        std::vector<double> g(1 + rng.uniform_index(15));
        for (auto& v : t) v = std::floor(rng.uniform01() * 6.0);
        for (auto& v : g) v = std::floor(rng.uniform01() * 6.0);
        const double before = mann_whitney_zu(t, g);
        const double shift = 0.5 + std::floor(rng.uniform01() * 4.0);
        for (auto& v : g) v += shift;
        EXPECT_GE(mann_whitney_zu(t, g), before - 1e-12);
    }
}

TEST(MannWhitney, RejectsEmptyAndNonFinite) {
    const std::vector<double> empty;
    const std::vector<double> one = {1.0};
    const std::vector<double> bad = {std::nan("")};
    EXPECT_THROW(mann_whitney_zu(empty, one), Error);
    EXPECT_THROW(mann_whitney_zu(one, empty), Error);
    EXPECT_THROW(mann_whitney_zu(one, bad), Error);
}

TEST(CellStats, OneDimensionalFixture) {
    Partition p;
    p.k = 2;
    p.dim = 1;
    p.centroids = {0.0, 10.0};
    const Matrix train = column({0.0f, 10.0f});
    const Matrix test = column({0.1f, 9.9f});
    const Matrix gen = column({0.2f, 9.8f});
    CellOptions opts;
    opts.tau_p = 1;
    opts.tau_q = 1;
    const auto cells = cell_ct_stats(p, train, test, gen, opts);
    ASSERT_EQ(cells.size(), 2u);
    for (const auto& c : cells) {
        EXPECT_EQ(c.n_test, 1u);
        EXPECT_EQ(c.n_gen, 1u);
        EXPECT_DOUBLE_EQ(c.weight, 0.5);
        EXPECT_TRUE(c.included);
        ASSERT_TRUE(c.z_u.has_value());
        // Single pair with gen farther than test: U = 1, sigma = 1/2.
        EXPECT_DOUBLE_EQ(*c.z_u, 1.0);
    }
    EXPECT_DOUBLE_EQ(ct_score(cells), 1.0);

    // Swap the roles: gen closer than test in both cells.
    const auto swapped = cell_ct_stats(p, train, gen, test, opts);
    for (const auto& c : swapped) EXPECT_DOUBLE_EQ(*c.z_u, -1.0);
}

TEST(CellStats, ThresholdExcludesSparseCells) {
    Partition p;
    p.k = 2;
    p.dim = 1;
    p.centroids = {0.0, 10.0};
    const Matrix train = column({0.0f, 10.0f});
    const Matrix test = column({0.1f, 0.3f, 9.9f, 9.7f});
    const Matrix gen = column({0.2f, 0.4f, 9.8f});
    CellOptions opts;
    opts.tau_p = 2;
    opts.tau_q = 2;
    const auto cells = cell_ct_stats(p, train, test, gen, opts);
    EXPECT_TRUE(cells[0].included);
    EXPECT_FALSE(cells[1].included);  // n_gen = tau_q - 1
    EXPECT_FALSE(cells[1].z_u.has_value());
    EXPECT_EQ(cells[1].n_test, 2u);
    EXPECT_DOUBLE_EQ(cells[0].weight + cells[1].weight, 1.0);
}

TEST(CellStats, SingleCellCarriesAllWeight) {
    Rng rng(2);
    const Matrix train = oracle::random_matrix(50, 3, rng);
    const Matrix test = oracle::random_matrix(20, 3, rng);
    const Matrix gen = oracle::random_matrix(20, 3, rng);
    KMeansOptions km;
    km.k = 1;
    const auto cells = cell_ct_stats(fit_kmeans(train, km), train, test, gen, CellOptions{});
    ASSERT_EQ(cells.size(), 1u);
    EXPECT_EQ(cells[0].weight, 1.0);
    EXPECT_TRUE(cells[0].included);
}

TEST(CtScore, WeightedAverage) {
    std::vector<CellStats> one(1);
    one[0].included = true;
    one[0].weight = 0.3;
    one[0].z_u = -2.25;
    EXPECT_DOUBLE_EQ(ct_score(one), -2.25);

    std::vector<CellStats> two(3);
    two[0] = {0, 6, 6, 0.6, 2.0, true};
    two[1] = {1, 4, 4, 0.4, -1.0, true};
    two[2] = {2, 0, 9, 0.0, std::nullopt, false};
    EXPECT_NEAR(ct_score(two), 0.8, 1e-15);

    std::vector<CellStats> reversed = {two[2], two[1], two[0]};
    EXPECT_EQ(ct_score(reversed), ct_score(two));

    std::vector<CellStats> none(2);
    try {
        ct_score(none);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::no_included_cells);
    }
}

namespace {

struct Triple {
    EmbeddingSet train, test, gen;
};

Triple gaussian_triple(std::uint64_t seed, std::size_t layers, std::size_t n, bool copy_gen) {
    Rng rng(seed);
    oracle::Mixture mix;
    const auto t = mix.sample(n, rng);
    const auto p = mix.sample(n, rng);
    auto q = copy_gen ? t : mix.sample(n, rng);
    if (copy_gen) rng.shuffle(q.begin(), q.end());
    const auto maps = oracle::default_affine_layers(layers);
    return {oracle::lift(t, maps), oracle::lift(p, maps), oracle::lift(q, maps)};
}

}  // namespace

TEST(CtCurve, SingleLayerEqualsLayerScore) {
    const Triple d = gaussian_triple(1, 1, 120, false);
    CtConfig cfg;
    const auto result = ct_curve(d.train, d.test, d.gen, cfg, "x");
    ASSERT_EQ(result.curve.scores.size(), 1u);
    const auto layer = ct_layer(d.train.layers[0], d.test.layers[0], d.gen.layers[0], cfg);
    EXPECT_EQ(result.curve.scores[0], layer.ct);
    EXPECT_EQ(result.curve.label, "x");
    EXPECT_EQ(result.curve.train_count, 120u);
}

TEST(CtCurve, ExactCopiesGiveUZeroInEveryCell) {
    const Triple d = gaussian_triple(8, 2, 300, true);
    CtConfig cfg;
    const auto result = ct_curve(d.train, d.test, d.gen, cfg);
    for (std::size_t l = 0; l < 2; ++l) {
        EXPECT_LT(result.curve.scores[l], -5.0);
        // Rebuild each cell's distance lists independently and check Z_U
        // against pair counting (U = 0) with the tie-corrected variance.
        KMeansOptions km;
        km.k = cfg.k;
        km.seed = cfg.seed;
        km.n_init = cfg.n_init;
        const Partition part = fit_kmeans(d.train.layers[l], km);
        const auto test_cells = assign_cells(part, d.test.layers[l]);
        const auto gen_cells = assign_cells(part, d.gen.layers[l]);
        for (const CellStats& c : result.layers[l].cells) {
            if (!c.included) continue;
            std::vector<double> lt, lg;
            for (std::size_t i = 0; i < test_cells.size(); ++i) {
                if (test_cells[i] != c.cell_index) continue;
                double best = INFINITY;
                for (std::size_t t = 0; t < d.train.layers[l].rows(); ++t) {
                    double s = 0.0;
                    for (std::size_t j = 0; j < d.train.layers[l].cols(); ++j) {
                        const double diff = double(d.test.layers[l](i, j)) - d.train.layers[l](t, j);
                        s += diff * diff;
                    }
                    best = std::min(best, s);
                }
                lt.push_back(best);
            }
            for (std::size_t i = 0; i < gen_cells.size(); ++i) {
                if (gen_cells[i] == c.cell_index) lg.push_back(0.0);
            }
            ASSERT_EQ(oracle::pair_count_u(lt, lg), 0.0);
            const double m = static_cast<double>(lg.size());
            const double n = static_cast<double>(lt.size());
            const double total = m + n;
            const double ties = m * m * m - m;  // one tie group: the zero distances
            const double sigma =
                std::sqrt(m * n / 12.0 * ((total + 1.0) - ties / (total * (total - 1.0))));
            EXPECT_NEAR(*c.z_u, -(m * n / 2.0) / sigma, 1e-9);
        }
    }
}

TEST(CtCurve, NullDataStaysNearZero) {
    int within = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Triple d = gaussian_triple(1000 + seed, 1, 300, false);
        CtConfig cfg;
        cfg.seed = seed;
        const double ct = ct_curve(d.train, d.test, d.gen, cfg).curve.scores[0];
        if (std::abs(ct) <= 3.0) ++within;
    }
    EXPECT_GE(within, 18);
}

TEST(CtCurve, InvariantToSampleOrderAndThreadCount) {
    const Triple d = gaussian_triple(77, 3, 150, false);
    CtConfig cfg;
    const auto base = ct_curve(d.train, d.test, d.gen, cfg);

    auto shuffle_rows = [](const EmbeddingSet& s, std::uint64_t seed) {
        std::vector<std::size_t> perm(s.sample_count());
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        Rng rng(seed);
        rng.shuffle(perm.begin(), perm.end());
        EmbeddingSet out;
        for (const Matrix& m : s.layers) {
            Matrix p(m.rows(), m.cols());
            for (std::size_t i = 0; i < m.rows(); ++i)
                for (std::size_t j = 0; j < m.cols(); ++j) p(i, j) = m(perm[i], j);
            out.layers.push_back(std::move(p));
        }
        return out;
    };
    const auto shuffled = ct_curve(shuffle_rows(d.train, 1), shuffle_rows(d.test, 2),
                                   shuffle_rows(d.gen, 3), cfg);
    EXPECT_EQ(base.curve.scores, shuffled.curve.scores);

    CtConfig threaded = cfg;
    threaded.threads = 4;
    EXPECT_EQ(base.curve.scores, ct_curve(d.train, d.test, d.gen, threaded).curve.scores);
}

TEST(CtCurve, FailureNamesTheLayer) {
    const Triple d = gaussian_triple(3, 2, 40, false);
    CtConfig cfg;
    cfg.tau_p = 1000;
    try {
        ct_curve(d.train, d.test, d.gen, cfg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::no_included_cells);
        EXPECT_NE(std::string(e.what()).find("layer 0"), std::string::npos);
    }
}
