#include <gtest/gtest.h>

#include "ctlayer/error.hpp"
#include "ctlayer/fingerprint.hpp"
#include "ctlayer/rng.hpp"

#include <cmath>

using namespace ctlayer;

namespace {

std::vector<LabeledCurve> two_entries(std::vector<double> a, std::vector<double> b) {
    return {{"A", "a", std::move(a), std::nullopt}, {"B", "b", std::move(b), std::nullopt}};
}

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::empty_input;  // sentinel that no test expects on success
}

}  // namespace

TEST(Metric, Parse) {
    EXPECT_EQ(parse_metric("l2"), MatchMetric::l2);
    EXPECT_EQ(parse_metric("cosine"), MatchMetric::cosine);
    EXPECT_EQ(parse_metric("combined"), MatchMetric::combined);
    EXPECT_THROW(parse_metric("l3"), Error);
    EXPECT_STREQ(to_string(MatchMetric::combined), "combined");
}

TEST(Db, BuildValidates) {
    EXPECT_THROW(build_db({}), Error);
    auto dup = two_entries({1, 0}, {0, 1});
    dup[1].label = "A";
    EXPECT_EQ(code_of([&] { build_db(dup); }), ErrorCode::duplicate_label);
    auto ragged = two_entries({1, 0}, {0, 1, 2});
    EXPECT_EQ(code_of([&] { build_db(ragged); }), ErrorCode::length_mismatch);
    auto nan = two_entries({1, 0}, {0, std::nan("")});
    EXPECT_EQ(code_of([&] { build_db(nan); }), ErrorCode::non_finite);
}

TEST(Db, JsonRoundTrip) {
    auto curves = two_entries({1.5, -0.1, 1e-300}, {0, 1, 2});
    curves[0].baseline_features = std::vector<double>{1, 2, 3};
    const FingerprintDb db = build_db(curves);
    const FingerprintDb back = db_from_json(db_to_json(db));
    EXPECT_EQ(back.layer_count, 3u);
    ASSERT_EQ(back.entries.size(), 2u);
    EXPECT_EQ(back.entries[0].curve, db.entries[0].curve);
    EXPECT_EQ(back.entries[0].baseline_features, db.entries[0].baseline_features);
    EXPECT_FALSE(back.entries[1].baseline_features);
    EXPECT_EQ(back.find("B")->architecture, "b");
    EXPECT_EQ(back.find("C"), nullptr);
    EXPECT_EQ(db_to_json(back), db_to_json(db));
    EXPECT_THROW(db_from_json("{not json"), Error);
    EXPECT_THROW(db_from_json(R"({"version":2,"layer_count":1,"entries":[]})"), Error);
}

TEST(Distances, Basics) {
    const std::vector<double> a = {3, 4};
    const std::vector<double> z = {0, 0};
    EXPECT_EQ(l2_distance(a, z), 5.0);
    EXPECT_EQ(cosine_similarity(a, z), 0.0);
    const std::vector<double> b = {6, 8};
    EXPECT_NEAR(cosine_similarity(a, b), 1.0, 1e-15);
}

TEST(Match, ClearWinnerUnderEveryMetric) {
    const FingerprintDb db = build_db(two_entries({1, 0}, {0, 1}));
    const std::vector<double> q = {0.9, 0.1};
    for (auto m : {MatchMetric::l2, MatchMetric::cosine, MatchMetric::combined}) {
        EXPECT_EQ(match_curve(db, q, m).predicted_label, "A");
    }
}

TEST(Match, CosineTieFallsBackToL2) {
    const FingerprintDb db = build_db(two_entries({2, 0}, {1, 0}));
    const std::vector<double> q = {10, 0};
    const MatchResult r = match_curve(db, q, MatchMetric::combined);
    EXPECT_EQ(r.predicted_label, "A");
    EXPECT_EQ(r.candidates[0].cosine_rank, 1u);
    EXPECT_EQ(r.candidates[1].cosine_rank, 1u);
    EXPECT_EQ(r.candidates[0].l2, 8.0);
    EXPECT_EQ(r.candidates[1].l2, 9.0);
    EXPECT_EQ(r.candidates[0].rank_sum, 2u);
    // Pure cosine tie keeps db order.
    EXPECT_EQ(match_curve(db, q, MatchMetric::cosine).predicted_label, "A");
}

TEST(Match, CosineIgnoresScale) {
    Rng rng(6);
    std::vector<LabeledCurve> curves;
    for (int i = 0; i < 5; ++i) {
        std::vector<double> v(8);
        for (auto& x : v) x = rng.normal();
        curves.push_back({"c" + std::to_string(i), "f", v, std::nullopt});
    }
    const FingerprintDb db = build_db(curves);
    for (int i = 0; i < 5; ++i) {
        auto q = curves[i].curve;
        for (auto& x : q) x *= 7.5;
        EXPECT_EQ(match_curve(db, q, MatchMetric::cosine).predicted_index, std::size_t(i));
    }
}

TEST(Eval, CountsArchitectureMatches) {
    const FingerprintDb db = build_db(two_entries({1, 0}, {0, 1}));
    const std::vector<Query> qs = {
        {"q1", "a", {1, 0.1}}, {"q2", "b", {0.1, 1}}, {"q3", "b", {1, 0}}};
    const AccuracyReport r = eval_accuracy(db, qs, MatchMetric::l2);
    EXPECT_EQ(r.correct, 2u);
    EXPECT_EQ(r.total, 3u);
    EXPECT_NEAR(r.accuracy, 2.0 / 3.0, 1e-15);
}

TEST(Eval, BaselineUsesNormalisedFeatures) {
    auto curves = two_entries({1, 0}, {0, 1});
    curves[0].baseline_features = std::vector<double>{0, 100, 5};
    curves[1].baseline_features = std::vector<double>{1, 200, 5};
    const FingerprintDb db = build_db(curves);
    // Raw L2 would pick A (coordinate 1 dominates); after scaling B is closer.
    const std::vector<double> q = {0.95, 140, 5};
    EXPECT_EQ(match_baseline(db, q, MatchMetric::l2).predicted_label, "B");
    const std::vector<Query> qs = {{"q", "b", q}};
    EXPECT_EQ(eval_baseline_accuracy(db, qs, MatchMetric::l2).correct, 1u);

    auto missing = two_entries({1, 0}, {0, 1});
    EXPECT_THROW(match_baseline(build_db(missing), q, MatchMetric::l2), Error);
}

TEST(Heatmap, FamilyMeans) {
    const std::vector<LabeledCurve> curves = {{"a1", "A", {1, 0}, std::nullopt},
                                              {"a2", "A", {0.99, 0.14}, std::nullopt},
                                              {"b1", "B", {0, 1}, std::nullopt}};
    const Heatmap h = cosine_heatmap(curves, {});
    ASSERT_EQ(h.similarity.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(h.similarity[i][i], 1.0);
        for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(h.similarity[i][j], h.similarity[j][i]);
    }
    EXPECT_NEAR(*h.intra_mean, 0.99 / std::hypot(0.99, 0.14), 1e-12);
    EXPECT_NEAR(*h.intra_mean, 0.990, 1e-3);
    EXPECT_NEAR(*h.inter_mean, 0.070, 1e-3);

    const std::string csv = heatmap_to_csv(h);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "label,a1,a2,b1");
    EXPECT_NE(csv.find("a1,1.000000,0.990"), std::string::npos);

    // The explicit map overrides architecture tags.
    const Heatmap regrouped = cosine_heatmap(curves, {{"a2", "B"}});
    EXPECT_NEAR(*regrouped.intra_mean, 0.14 / std::hypot(0.99, 0.14), 1e-12);
}

TEST(Frechet, OneDimensional) {
    const std::vector<double> m0 = {0}, m1 = {1}, c1 = {1}, c4 = {4};
    EXPECT_NEAR(frechet_distance(m0, c1, m1, c4), 2.0, 1e-9);
    EXPECT_NEAR(frechet_distance(m0, c1, m0, c1), 0.0, 1e-12);
}

TEST(Frechet, DiagonalAndSymmetry) {
    const std::vector<double> mu = {0, 0};
    const std::vector<double> a = {1, 0, 0, 4};
    const std::vector<double> b = {4, 0, 0, 1};
    EXPECT_NEAR(frechet_distance(mu, a, mu, b), 2.0, 1e-9);
    EXPECT_NEAR(frechet_distance(mu, b, mu, a), 2.0, 1e-9);
    const std::vector<double> bad = {1, 0, 0, -1};
    EXPECT_EQ(code_of([&] { frechet_distance(mu, bad, mu, a); }), ErrorCode::not_psd);
    const std::vector<double> m3 = {0, 0, 0};
    EXPECT_THROW(frechet_distance(m3, a, mu, a), Error);
}

TEST(Frechet, FitGaussianUsesPopulationCovariance) {
    const Matrix s(2, 1, {0.0f, 2.0f});
    const Gaussian g = fit_gaussian(s);
    EXPECT_EQ(g.mean[0], 1.0);
    EXPECT_EQ(g.cov[0], 1.0);
}

TEST(Baseline, TwoImagePixelStats) {
    const std::vector<Image> images = {Image(2, 2, 0), Image(2, 2, 255)};
    const Matrix emb(4, 2, {0, 1, 1, 0, 2, 2, -1, 0});
    const auto f = baseline_features(images, emb, emb);
    ASSERT_EQ(f.size(), 7u);
    for (int c = 0; c < 3; ++c) {
        EXPECT_DOUBLE_EQ(f[c], 127.5);
        EXPECT_DOUBLE_EQ(f[3 + c], 127.5);
    }
    EXPECT_NEAR(f[6], 0.0, 1e-9);
}

TEST(Match, CombinedNeverPicksJointLast) {
    Rng rng(17);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 2 + rng.uniform_index(6);
        std::vector<LabeledCurve> curves;
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> v(4);
            for (auto& x : v) x = std::round(rng.normal() * 2.0) / 2.0;
            curves.push_back({"c" + std::to_string(i), "f", v, std::nullopt});
        }
        std::vector<double> q(4);
        for (auto& x : q) x = std::round(rng.normal() * 2.0) / 2.0;
        const MatchResult r = match_curve(build_db(curves), q, MatchMetric::combined);
        std::size_t worst_l2 = 0, worst_cos = 0;
        for (const auto& c : r.candidates) {
            worst_l2 = std::max(worst_l2, c.l2_rank);
            worst_cos = std::max(worst_cos, c.cosine_rank);
        }
        const auto& win = r.candidates[r.predicted_index];
        const bool joint_last = win.l2_rank == worst_l2 && win.cosine_rank == worst_cos;
        const bool all_tied = worst_l2 == 1 && worst_cos == 1;
        EXPECT_TRUE(!joint_last || all_tied) << "trial " << trial;
    }
}
