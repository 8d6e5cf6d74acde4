#include "ctlayer/ct_core.hpp"

#include "ctlayer/error.hpp"
#include "ctlayer/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace ctlayer {

namespace {

double sq_dist(std::span<const float> a, std::span<const float> b) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    const std::size_t d = a.size();
    std::size_t j = 0;
    for (; j + 4 <= d; j += 4) {
        for (std::size_t u = 0; u < 4; ++u) {
            const double diff = static_cast<double>(a[j + u]) - static_cast<double>(b[j + u]);
            acc[u] += diff * diff;
        }
    }
    for (; j < d; ++j) {
        const double diff = static_cast<double>(a[j]) - static_cast<double>(b[j]);
        acc[0] += diff * diff;
    }
    return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

}  // namespace

double nn_sq_distance(std::span<const float> x, const Matrix& train_layer) {
    if (train_layer.empty()) {
        throw Error(ErrorCode::empty_input, "training layer is empty");
    }
    if (x.size() != train_layer.cols()) {
        throw Error(ErrorCode::dim_mismatch, "query dim " + std::to_string(x.size()) +
                                                 " does not match training dim " +
                                                 std::to_string(train_layer.cols()));
    }
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < train_layer.rows(); ++t) {
        best = std::min(best, sq_dist(x, train_layer.row(t)));
    }
    return best;
}

std::vector<double> nn_sq_distances(const Matrix& samples, const Matrix& train_layer,
                                    unsigned threads) {
    if (samples.cols() != train_layer.cols()) {
        throw Error(ErrorCode::dim_mismatch, "sample dim " + std::to_string(samples.cols()) +
                                                 " does not match training dim " +
                                                 std::to_string(train_layer.cols()));
    }
    std::vector<double> out(samples.rows());
    parallel_for(samples.rows(), threads,
                 [&](std::size_t i) { out[i] = nn_sq_distance(samples.row(i), train_layer); });
    return out;
}

double mann_whitney_zu(std::span<const double> dist_test, std::span<const double> dist_gen,
                       bool tie_correction) {
    if (dist_test.empty() || dist_gen.empty()) {
        throw Error(ErrorCode::empty_input, "Mann-Whitney test needs two non-empty samples");
    }
    struct Entry {
        double value;
        bool generated;
    };
    std::vector<Entry> pooled;
    pooled.reserve(dist_test.size() + dist_gen.size());
    for (double v : dist_test) pooled.push_back({v, false});
    for (double v : dist_gen) pooled.push_back({v, true});
    for (const Entry& e : pooled) {
        if (!std::isfinite(e.value)) {
            throw Error(ErrorCode::non_finite, "non-finite distance in Mann-Whitney input");
        }
    }
    std::sort(pooled.begin(), pooled.end(),
              [](const Entry& a, const Entry& b) { return a.value < b.value; });

    const double n = static_cast<double>(dist_test.size());
    const double m = static_cast<double>(dist_gen.size());
    const double total = n + m;

    double rank_sum_gen = 0.0;
    double tie_term = 0.0;
    for (std::size_t i = 0; i < pooled.size();) {
        std::size_t j = i;
        std::size_t gen_in_group = 0;
        while (j < pooled.size() && pooled[j].value == pooled[i].value) {
            gen_in_group += pooled[j].generated ? 1 : 0;
            ++j;
        }
        // Ranks i+1 .. j share the midrank.
        const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        rank_sum_gen += midrank * static_cast<double>(gen_in_group);
        const double t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        i = j;
    }

    const double u_gen = rank_sum_gen - m * (m + 1.0) / 2.0;
    const double mn = m * n;
    double variance = 0.0;
    if (tie_correction) {
        variance = mn / 12.0 * ((total + 1.0) - tie_term / (total * (total - 1.0)));
    } else {
        variance = mn * (total + 1.0) / 12.0;
    }
    if (!(variance > 0.0)) return 0.0;
    return (u_gen - mn / 2.0) / std::sqrt(variance);
}

std::vector<CellStats> cell_ct_stats(const Partition& partition, const Matrix& train_layer,
                                     const Matrix& test_layer, const Matrix& gen_layer,
                                     const CellOptions& options) {
    if (options.tau_p < 1 || options.tau_q < 1) {
        throw Error(ErrorCode::invalid_argument, "cell thresholds must be >= 1");
    }
    if (test_layer.empty() || gen_layer.empty()) {
        throw Error(ErrorCode::empty_input, "test and generated layers must be non-empty");
    }
    if (train_layer.cols() != partition.dim) {
        throw Error(ErrorCode::dim_mismatch, "training dim does not match partition dim");
    }
    const auto test_cells = assign_cells(partition, test_layer);
    const auto gen_cells = assign_cells(partition, gen_layer);
    const auto test_dist = nn_sq_distances(test_layer, train_layer, options.threads);
    const auto gen_dist = nn_sq_distances(gen_layer, train_layer, options.threads);

    std::vector<std::vector<double>> per_cell_test(partition.k);
    std::vector<std::vector<double>> per_cell_gen(partition.k);
    for (std::size_t i = 0; i < test_cells.size(); ++i) {
        per_cell_test[test_cells[i]].push_back(test_dist[i]);
    }
    for (std::size_t i = 0; i < gen_cells.size(); ++i) {
        per_cell_gen[gen_cells[i]].push_back(gen_dist[i]);
    }

    const double total_test = static_cast<double>(test_layer.rows());
    std::vector<CellStats> cells(partition.k);
    for (std::size_t c = 0; c < partition.k; ++c) {
        CellStats& s = cells[c];
        s.cell_index = c;
        s.n_test = per_cell_test[c].size();
        s.n_gen = per_cell_gen[c].size();
        s.weight = static_cast<double>(s.n_test) / total_test;
        s.included = s.n_test >= options.tau_p && s.n_gen >= options.tau_q;
        if (s.included) {
            s.z_u = mann_whitney_zu(per_cell_test[c], per_cell_gen[c], options.tie_correction);
        }
    }
    return cells;
}

double ct_score(std::span<const CellStats> cells) {
    std::vector<const CellStats*> ordered;
    for (const CellStats& c : cells) {
        if (c.included) ordered.push_back(&c);
    }
    if (ordered.empty()) {
        throw Error(ErrorCode::no_included_cells, "no cell passes threshold tau");
    }
    std::sort(ordered.begin(), ordered.end(), [](const CellStats* a, const CellStats* b) {
        return a->cell_index < b->cell_index;
    });
    double weighted = 0.0;
    double weight_sum = 0.0;
    for (const CellStats* c : ordered) {
        if (!c->z_u) {
            throw Error(ErrorCode::invalid_argument,
                        "included cell " + std::to_string(c->cell_index) + " has no Z_U value");
        }
        weighted += c->weight * *c->z_u;
        weight_sum += c->weight;
    }
    if (!(weight_sum > 0.0)) {
        throw Error(ErrorCode::no_included_cells, "included cells carry zero test mass");
    }
    return weighted / weight_sum;
}

LayerDiagnostics ct_layer(const Matrix& train_layer, const Matrix& test_layer,
                          const Matrix& gen_layer, const CtConfig& config) {
    KMeansOptions km;
    km.k = config.k;
    km.seed = config.seed;
    km.max_iters = config.max_iters;
    km.tol = config.tol;
    km.n_init = config.n_init;
    const Partition partition = fit_kmeans(train_layer, km);

    CellOptions opts;
    opts.tau_p = config.tau_p;
    opts.tau_q = config.tau_q;
    opts.tie_correction = config.tie_correction;
    opts.threads = config.threads;

    LayerDiagnostics diag;
    diag.cells = cell_ct_stats(partition, train_layer, test_layer, gen_layer, opts);
    diag.ct = ct_score(diag.cells);
    diag.kmeans_iterations = partition.iterations_run;
    diag.wcss = partition.wcss;
    return diag;
}

CtCurveResult ct_curve(const EmbeddingSet& train, const EmbeddingSet& test,
                       const EmbeddingSet& gen, const CtConfig& config,
                       const std::string& label) {
    const ValidatedTriple triple = validate_triple(train, test, gen);
    CtCurveResult result;
    result.curve.label = label;
    result.curve.k = config.k;
    result.curve.tau_p = config.tau_p;
    result.curve.tau_q = config.tau_q;
    result.curve.seed = config.seed;
    result.curve.train_count = triple.shape.train_count;
    result.curve.test_count = triple.shape.test_count;
    result.curve.gen_count = triple.shape.gen_count;

    for (std::size_t l = 0; l < triple.shape.layer_count; ++l) {
        try {
            LayerDiagnostics diag =
                ct_layer(train.layers[l], test.layers[l], gen.layers[l], config);
            diag.layer = l;
            result.curve.scores.push_back(diag.ct);
            result.layers.push_back(std::move(diag));
        } catch (const Error& e) {
            throw Error(e.code(), "layer " + std::to_string(l) + ": " + e.what());
        }
    }
    return result;
}

}  // namespace ctlayer
