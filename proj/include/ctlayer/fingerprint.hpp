#pragma once

#include "ctlayer/ct_core.hpp"
#include "ctlayer/imageops.hpp"
#include "ctlayer/tensor_io.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ctlayer {

enum class MatchMetric { l2, cosine, combined };

MatchMetric parse_metric(std::string_view name);
const char* to_string(MatchMetric metric);

/// A labelled C_T-Layer curve tagged with its model family.
struct LabeledCurve {
    std::string label;
    std::string architecture;
    std::vector<double> curve;
    std::optional<std::vector<double>> baseline_features;
};

using FingerprintEntry = LabeledCurve;

struct FingerprintDb {
    static constexpr int kVersion = 1;

    int version = kVersion;
    std::size_t layer_count = 0;
    std::vector<FingerprintEntry> entries;

    const FingerprintEntry* find(std::string_view label) const;
};

FingerprintDb build_db(std::span<const LabeledCurve> curves);

std::string db_to_json(const FingerprintDb& db);
FingerprintDb db_from_json(std::string_view text);

double l2_distance(std::span<const double> a, std::span<const double> b);
// Zero-norm inputs give similarity 0.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

struct CandidateScore {
    std::string label;
    double l2 = 0.0;
    double cosine = 0.0;
    std::size_t l2_rank = 0;      // 1 = best, ties share the lowest rank
    std::size_t cosine_rank = 0;
    std::size_t rank_sum = 0;
};

struct MatchResult {
    std::string predicted_label;
    std::size_t predicted_index = 0;
    MatchMetric metric = MatchMetric::combined;
    std::vector<CandidateScore> candidates;  // db order
};

// Nearest neighbour over arbitrary reference vectors; labels align with refs.
MatchResult match_vectors(std::span<const std::vector<double>> refs,
                          std::span<const std::string> labels, std::span<const double> query,
                          MatchMetric metric);

MatchResult match_curve(const FingerprintDb& db, std::span<const double> query,
                        MatchMetric metric);

struct Query {
    std::string label;
    std::string architecture;
    std::vector<double> values;
};

struct AccuracyReport {
    double accuracy = 0.0;
    std::size_t correct = 0;
    std::size_t total = 0;
    std::vector<MatchResult> matches;
};

// A query counts as correct when the matched entry shares its architecture.
AccuracyReport eval_accuracy(const FingerprintDb& db, std::span<const Query> queries,
                             MatchMetric metric);

// Same protocol over the entries' baseline feature vectors, z-normalised per
// coordinate across the db (zero-spread coordinates dropped).
AccuracyReport eval_baseline_accuracy(const FingerprintDb& db, std::span<const Query> queries,
                                      MatchMetric metric);
MatchResult match_baseline(const FingerprintDb& db, std::span<const double> features,
                           MatchMetric metric);

struct Heatmap {
    std::vector<std::string> labels;
    std::vector<std::vector<double>> similarity;
    std::optional<double> intra_mean;
    std::optional<double> inter_mean;
};

Heatmap cosine_heatmap(std::span<const LabeledCurve> curves,
                       const std::map<std::string, std::string>& family_of);

std::string heatmap_to_csv(const Heatmap& heatmap);
std::string heatmap_summary_json(const Heatmap& heatmap);

// Mean vector and population covariance of the rows.
struct Gaussian {
    std::vector<double> mean;
    std::vector<double> cov;  // dim x dim, row-major
    std::size_t dim = 0;
};

Gaussian fit_gaussian(const Matrix& samples);

double frechet_distance(std::span<const double> mu1, std::span<const double> cov1,
                        std::span<const double> mu2, std::span<const double> cov2);
double frechet_distance(const Gaussian& a, const Gaussian& b);

// [mean R, mean G, mean B, std R, std G, std B, Frechet(final layer, reference)]
std::vector<double> baseline_features(std::span<const Image> images, const Matrix& embeddings,
                                      const Matrix& reference);

}  // namespace ctlayer
