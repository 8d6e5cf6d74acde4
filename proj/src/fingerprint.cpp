#include "ctlayer/fingerprint.hpp"

#include "ctlayer/error.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <utility>

namespace ctlayer {

using nlohmann::json;

MatchMetric parse_metric(std::string_view name) {
    if (name == "l2") return MatchMetric::l2;
    if (name == "cosine") return MatchMetric::cosine;
    if (name == "combined") return MatchMetric::combined;
    throw Error(ErrorCode::invalid_argument,
                "unknown metric '" + std::string(name) + "' (expected l2, cosine or combined)");
}

const char* to_string(MatchMetric metric) {
    switch (metric) {
        case MatchMetric::l2: return "l2";
        case MatchMetric::cosine: return "cosine";
        case MatchMetric::combined: return "combined";
    }
    return "unknown";
}

const FingerprintEntry* FingerprintDb::find(std::string_view label) const {
    for (const auto& e : entries) {
        if (e.label == label) return &e;
    }
    return nullptr;
}

namespace {

void require_finite(std::span<const double> v, const std::string& what) {
    for (double x : v) {
        if (!std::isfinite(x)) throw Error(ErrorCode::non_finite, "non-finite value in " + what);
    }
}

}  // namespace

FingerprintDb build_db(std::span<const LabeledCurve> curves) {
    if (curves.empty()) throw Error(ErrorCode::empty_input, "fingerprint db needs >= 1 curve");
    FingerprintDb db;
    db.layer_count = curves.front().curve.size();
    if (db.layer_count == 0) throw Error(ErrorCode::empty_input, "curves must be non-empty");
    std::set<std::string> labels;
    std::optional<std::size_t> feature_len;
    for (const LabeledCurve& c : curves) {
        if (c.curve.size() != db.layer_count) {
            throw Error(ErrorCode::length_mismatch,
                        "curve '" + c.label + "' has length " + std::to_string(c.curve.size()) +
                            ", expected " + std::to_string(db.layer_count));
        }
        if (!labels.insert(c.label).second) {
            throw Error(ErrorCode::duplicate_label, "duplicate label '" + c.label + "'");
        }
        require_finite(c.curve, "curve '" + c.label + "'");
        if (c.baseline_features) {
            if (feature_len && *feature_len != c.baseline_features->size()) {
                throw Error(ErrorCode::length_mismatch,
                            "baseline features of '" + c.label + "' have a different length");
            }
            feature_len = c.baseline_features->size();
            require_finite(*c.baseline_features, "baseline features of '" + c.label + "'");
        }
        db.entries.push_back(c);
    }
    return db;
}

std::string db_to_json(const FingerprintDb& db) {
    json entries = json::array();
    for (const auto& e : db.entries) {
        entries.push_back({{"label", e.label},
                           {"architecture", e.architecture},
                           {"curve", e.curve},
                           {"baseline_features",
                            e.baseline_features ? json(*e.baseline_features) : json(nullptr)}});
    }
    json j = {{"version", db.version},
              {"layer_count", db.layer_count},
              {"entries", std::move(entries)}};
    return j.dump(2) + "\n";
}

FingerprintDb db_from_json(std::string_view text) {
    std::vector<LabeledCurve> curves;
    std::size_t layer_count = 0;
    try {
        const json j = json::parse(text);
        if (j.at("version").get<int>() != FingerprintDb::kVersion) {
            throw Error(ErrorCode::parse_error, "unsupported fingerprint db version");
        }
        layer_count = j.at("layer_count").get<std::size_t>();
        for (const json& e : j.at("entries")) {
            LabeledCurve c;
            c.label = e.at("label").get<std::string>();
            c.architecture = e.value("architecture", std::string{});
            c.curve = e.at("curve").get<std::vector<double>>();
            if (e.contains("baseline_features") && !e["baseline_features"].is_null()) {
                c.baseline_features = e["baseline_features"].get<std::vector<double>>();
            }
            curves.push_back(std::move(c));
        }
    } catch (const json::exception& ex) {
        throw Error(ErrorCode::parse_error, std::string("invalid fingerprint db: ") + ex.what());
    }
    FingerprintDb db = build_db(curves);
    if (db.layer_count != layer_count) {
        throw Error(ErrorCode::length_mismatch, "db layer_count disagrees with its curves");
    }
    return db;
}

double l2_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw Error(ErrorCode::length_mismatch, "vector length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw Error(ErrorCode::length_mismatch, "vector length mismatch");
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

MatchResult match_vectors(std::span<const std::vector<double>> refs,
                          std::span<const std::string> labels, std::span<const double> query,
                          MatchMetric metric) {
    if (refs.empty()) throw Error(ErrorCode::empty_input, "cannot match against an empty db");
    if (labels.size() != refs.size()) {
        throw Error(ErrorCode::invalid_argument, "labels and references differ in count");
    }
    require_finite(query, "query");
    MatchResult result;
    result.metric = metric;
    const std::size_t n = refs.size();
    result.candidates.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (refs[i].size() != query.size()) {
            throw Error(ErrorCode::length_mismatch,
                        "query length " + std::to_string(query.size()) + " does not match '" +
                            labels[i] + "' length " + std::to_string(refs[i].size()));
        }
        auto& c = result.candidates[i];
        c.label = labels[i];
        c.l2 = l2_distance(refs[i], query);
        c.cosine = cosine_similarity(refs[i], query);
    }
    for (auto& c : result.candidates) {
        c.l2_rank = 1;
        c.cosine_rank = 1;
        for (const auto& o : result.candidates) {
            if (o.l2 < c.l2) ++c.l2_rank;
            if (o.cosine > c.cosine) ++c.cosine_rank;
        }
        c.rank_sum = c.l2_rank + c.cosine_rank;
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i) {
        const auto& c = result.candidates[i];
        const auto& b = result.candidates[best];
        bool better = false;
        switch (metric) {
            case MatchMetric::l2: better = c.l2 < b.l2; break;
            case MatchMetric::cosine: better = c.cosine > b.cosine; break;
            case MatchMetric::combined:
                better = c.rank_sum < b.rank_sum || (c.rank_sum == b.rank_sum && c.l2 < b.l2);
                break;
        }
        if (better) best = i;
    }
    result.predicted_index = best;
    result.predicted_label = result.candidates[best].label;
    return result;
}

MatchResult match_curve(const FingerprintDb& db, std::span<const double> query,
                        MatchMetric metric) {
    if (db.entries.empty()) throw Error(ErrorCode::empty_input, "fingerprint db is empty");
    if (query.size() != db.layer_count) {
        throw Error(ErrorCode::length_mismatch,
                    "query curve has " + std::to_string(query.size()) + " layers, db has " +
                        std::to_string(db.layer_count));
    }
    std::vector<std::vector<double>> refs;
    std::vector<std::string> labels;
    for (const auto& e : db.entries) {
        refs.push_back(e.curve);
        labels.push_back(e.label);
    }
    return match_vectors(refs, labels, query, metric);
}

namespace {

AccuracyReport score_queries(const FingerprintDb& db, std::span<const Query> queries,
                             const auto& match_one) {
    if (queries.empty()) throw Error(ErrorCode::empty_input, "no queries to evaluate");
    AccuracyReport report;
    report.total = queries.size();
    for (const Query& q : queries) {
        MatchResult m = match_one(q);
        if (db.entries[m.predicted_index].architecture == q.architecture) ++report.correct;
        report.matches.push_back(std::move(m));
    }
    report.accuracy = static_cast<double>(report.correct) / static_cast<double>(report.total);
    return report;
}

// Per-coordinate z-normalisation fitted on the db's baseline vectors.
struct FeatureScaler {
    std::vector<std::size_t> kept;
    std::vector<double> mean;
    std::vector<double> stddev;

    explicit FeatureScaler(const FingerprintDb& db) {
        std::size_t dim = 0;
        for (const auto& e : db.entries) {
            if (!e.baseline_features) {
                throw Error(ErrorCode::empty_input,
                            "db entry '" + e.label + "' has no baseline features");
            }
            dim = e.baseline_features->size();
        }
        const double count = static_cast<double>(db.entries.size());
        for (std::size_t j = 0; j < dim; ++j) {
            double mu = 0.0;
            for (const auto& e : db.entries) mu += (*e.baseline_features)[j];
            mu /= count;
            double var = 0.0;
            for (const auto& e : db.entries) {
                const double d = (*e.baseline_features)[j] - mu;
                var += d * d;
            }
            const double sd = std::sqrt(var / count);
            if (sd > 0.0) {
                kept.push_back(j);
                mean.push_back(mu);
                stddev.push_back(sd);
            }
        }
    }

    std::vector<double> apply(std::span<const double> v) const {
        std::vector<double> out;
        out.reserve(kept.size());
        for (std::size_t i = 0; i < kept.size(); ++i) {
            out.push_back((v[kept[i]] - mean[i]) / stddev[i]);
        }
        return out;
    }
};

MatchResult match_scaled(const FingerprintDb& db, const FeatureScaler& scaler,
                         std::span<const double> features, MatchMetric metric) {
    std::vector<std::vector<double>> refs;
    std::vector<std::string> labels;
    const std::size_t dim = db.entries.front().baseline_features->size();
    if (features.size() != dim) {
        throw Error(ErrorCode::length_mismatch,
                    "query has " + std::to_string(features.size()) +
                        " baseline features, db has " + std::to_string(dim));
    }
    for (const auto& e : db.entries) {
        refs.push_back(scaler.apply(*e.baseline_features));
        labels.push_back(e.label);
    }
    const auto q = scaler.apply(features);
    return match_vectors(refs, labels, q, metric);
}

}  // namespace

AccuracyReport eval_accuracy(const FingerprintDb& db, std::span<const Query> queries,
                             MatchMetric metric) {
    return score_queries(db, queries,
                         [&](const Query& q) { return match_curve(db, q.values, metric); });
}

MatchResult match_baseline(const FingerprintDb& db, std::span<const double> features,
                           MatchMetric metric) {
    if (db.entries.empty()) throw Error(ErrorCode::empty_input, "fingerprint db is empty");
    const FeatureScaler scaler(db);
    return match_scaled(db, scaler, features, metric);
}

AccuracyReport eval_baseline_accuracy(const FingerprintDb& db, std::span<const Query> queries,
                                      MatchMetric metric) {
    if (db.entries.empty()) throw Error(ErrorCode::empty_input, "fingerprint db is empty");
    const FeatureScaler scaler(db);
    return score_queries(db, queries, [&](const Query& q) {
        return match_scaled(db, scaler, q.values, metric);
    });
}

Heatmap cosine_heatmap(std::span<const LabeledCurve> curves,
                       const std::map<std::string, std::string>& family_of) {
    if (curves.size() < 2) throw Error(ErrorCode::empty_input, "heatmap needs >= 2 curves");
    const std::size_t n = curves.size();
    const std::size_t len = curves.front().curve.size();
    std::vector<std::string> families;
    Heatmap h;
    for (const auto& c : curves) {
        if (c.curve.size() != len) {
            throw Error(ErrorCode::length_mismatch, "curve '" + c.label + "' has a different length");
        }
        h.labels.push_back(c.label);
        const auto it = family_of.find(c.label);
        families.push_back(it != family_of.end() ? it->second : c.architecture);
    }
    h.similarity.assign(n, std::vector<double>(n, 1.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double s = cosine_similarity(curves[i].curve, curves[j].curve);
            h.similarity[i][j] = s;
            h.similarity[j][i] = s;
        }
    }
    double intra = 0.0;
    double inter = 0.0;
    std::size_t n_intra = 0;
    std::size_t n_inter = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            if (families[i] == families[j]) {
                intra += h.similarity[i][j];
                ++n_intra;
            } else {
                inter += h.similarity[i][j];
                ++n_inter;
            }
        }
    }
    if (n_intra) h.intra_mean = intra / static_cast<double>(n_intra);
    if (n_inter) h.inter_mean = inter / static_cast<double>(n_inter);
    return h;
}

std::string heatmap_to_csv(const Heatmap& heatmap) {
    std::string out = "label";
    for (const auto& l : heatmap.labels) out += "," + l;
    out += "\n";
    char buf[64];
    for (std::size_t i = 0; i < heatmap.labels.size(); ++i) {
        out += heatmap.labels[i];
        for (double v : heatmap.similarity[i]) {
            std::snprintf(buf, sizeof(buf), "%.6f", v);
            std::string cell = buf;
            if (cell == "-0.000000") cell = "0.000000";
            out += "," + cell;
        }
        out += "\n";
    }
    return out;
}

std::string heatmap_summary_json(const Heatmap& heatmap) {
    json j = {{"intra_mean", heatmap.intra_mean ? json(*heatmap.intra_mean) : json(nullptr)},
              {"inter_mean", heatmap.inter_mean ? json(*heatmap.inter_mean) : json(nullptr)}};
    return j.dump(2) + "\n";
}

Gaussian fit_gaussian(const Matrix& samples) {
    if (samples.empty()) throw Error(ErrorCode::empty_input, "cannot fit a Gaussian to no samples");
    const std::size_t n = samples.rows();
    const std::size_t d = samples.cols();
    Gaussian g;
    g.dim = d;
    g.mean.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) g.mean[j] += samples(i, j);
    for (double& m : g.mean) m /= static_cast<double>(n);
    g.cov.assign(d * d, 0.0);
    std::vector<double> centred(d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) centred[j] = samples(i, j) - g.mean[j];
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = a; b < d; ++b) g.cov[a * d + b] += centred[a] * centred[b];
    }
    for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = a; b < d; ++b) {
            g.cov[a * d + b] /= static_cast<double>(n);
            g.cov[b * d + a] = g.cov[a * d + b];
        }
    }
    return g;
}

namespace {

using MatrixXd = Eigen::MatrixXd;

// Eigenvalues of a symmetric matrix with tiny negatives clamped to zero.
Eigen::SelfAdjointEigenSolver<MatrixXd> psd_eigen(const MatrixXd& m, const char* what) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> solver(m);
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorCode::not_psd, std::string("eigendecomposition failed for ") + what);
    }
    const auto& ev = solver.eigenvalues();
    const double scale = ev.cwiseAbs().maxCoeff();
    if (ev.minCoeff() < -1e-8 * scale) {
        throw Error(ErrorCode::not_psd, std::string(what) + " is not positive semidefinite");
    }
    return solver;
}

MatrixXd psd_sqrt(const MatrixXd& m, const char* what) {
    const auto e = psd_eigen(m, what);
    const Eigen::VectorXd root = e.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return e.eigenvectors() * root.asDiagonal() * e.eigenvectors().transpose();
}

MatrixXd symmetric_from(std::span<const double> values, std::size_t d) {
    MatrixXd m(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) m(i, j) = values[i * d + j];
    return (m + m.transpose()) / 2.0;
}

}  // namespace

double frechet_distance(std::span<const double> mu1, std::span<const double> cov1,
                        std::span<const double> mu2, std::span<const double> cov2) {
    const std::size_t d = mu1.size();
    if (d == 0 || mu2.size() != d || cov1.size() != d * d || cov2.size() != d * d) {
        throw Error(ErrorCode::dim_mismatch, "Frechet distance inputs have mismatched dimensions");
    }
    require_finite(mu1, "mean");
    require_finite(mu2, "mean");
    require_finite(cov1, "covariance");
    require_finite(cov2, "covariance");

    const MatrixXd s1 = symmetric_from(cov1, d);
    const MatrixXd s2 = symmetric_from(cov2, d);
    // tr sqrt(R1 S2 R1) with R = sqrt(S) equals the nuclear norm of R1 R2.
    // Singular values avoid square-rooting near-zero eigenvalues of the
    // product, and swapping the arguments only transposes R1 R2.
    const MatrixXd r1 = psd_sqrt(s1, "first covariance");
    const MatrixXd r2 = psd_sqrt(s2, "second covariance");
    const Eigen::JacobiSVD<MatrixXd> svd(r1 * r2);
    const double tr_sqrt = svd.singularValues().sum();

    double mean_term = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double diff = mu1[i] - mu2[i];
        mean_term += diff * diff;
    }
    const double value = mean_term + s1.trace() + s2.trace() - 2.0 * tr_sqrt;
    return std::max(0.0, value);
}

double frechet_distance(const Gaussian& a, const Gaussian& b) {
    return frechet_distance(a.mean, a.cov, b.mean, b.cov);
}

std::vector<double> baseline_features(std::span<const Image> images, const Matrix& embeddings,
                                      const Matrix& reference) {
    if (images.empty()) throw Error(ErrorCode::empty_input, "baseline dataset has no images");
    if (embeddings.empty() || reference.empty()) {
        throw Error(ErrorCode::empty_input, "baseline needs non-empty embeddings and reference");
    }
    if (embeddings.cols() != reference.cols()) {
        throw Error(ErrorCode::dim_mismatch, "dataset and reference embedding widths differ");
    }
    constexpr std::size_t C = Image::kChannels;
    double sum[C] = {0.0, 0.0, 0.0};
    double count = 0.0;
    for (const Image& img : images) {
        const auto& px = img.pixels();
        for (std::size_t i = 0; i < px.size(); i += C)
            for (std::size_t ch = 0; ch < C; ++ch) sum[ch] += px[i + ch];
        count += static_cast<double>(img.width() * img.height());
    }
    if (count == 0.0) throw Error(ErrorCode::empty_input, "baseline images have no pixels");
    double mean[C];
    for (std::size_t ch = 0; ch < C; ++ch) mean[ch] = sum[ch] / count;
    double sq[C] = {0.0, 0.0, 0.0};
    for (const Image& img : images) {
        const auto& px = img.pixels();
        for (std::size_t i = 0; i < px.size(); i += C) {
            for (std::size_t ch = 0; ch < C; ++ch) {
                const double d = px[i + ch] - mean[ch];
                sq[ch] += d * d;
            }
        }
    }
    std::vector<double> features;
    for (std::size_t ch = 0; ch < C; ++ch) features.push_back(mean[ch]);
    for (std::size_t ch = 0; ch < C; ++ch) features.push_back(std::sqrt(sq[ch] / count));
    features.push_back(frechet_distance(fit_gaussian(embeddings), fit_gaussian(reference)));
    return features;
}

}  // namespace ctlayer
