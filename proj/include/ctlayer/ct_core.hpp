#pragma once

#include "ctlayer/partition.hpp"
#include "ctlayer/tensor_io.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ctlayer {

/// Squared Euclidean distance from x to its nearest training row (brute force).
double nn_sq_distance(std::span<const float> x, const Matrix& train_layer);

/// nn_sq_distance for every row of `samples`; thread count does not affect output.
std::vector<double> nn_sq_distances(const Matrix& samples, const Matrix& train_layer,
                                    unsigned threads = 1);

/// Normal-approximated Mann-Whitney statistic of the generated distances
/// against the test distances, using pooled midranks.
///
/// U counts pairs (gen > test) plus half the ties. Negative values mean the
/// generated samples sit closer to the training set than held-out test
/// samples do (data-copying); positive values mean they sit farther away
/// (underfitting). Returns 0 when every pooled value is tied.
double mann_whitney_zu(std::span<const double> dist_test, std::span<const double> dist_gen,
                       bool tie_correction = true);

struct CellStats {
    std::size_t cell_index = 0;
    std::size_t n_test = 0;
    std::size_t n_gen = 0;
    double weight = 0.0;  // n_test / total test samples
    std::optional<double> z_u;  // set only for included cells
    bool included = false;
};

struct CellOptions {
    std::size_t tau_p = 10;
    std::size_t tau_q = 10;
    bool tie_correction = true;
    unsigned threads = 1;
};

std::vector<CellStats> cell_ct_stats(const Partition& partition, const Matrix& train_layer,
                                     const Matrix& test_layer, const Matrix& gen_layer,
                                     const CellOptions& options);

/// Test-mass weighted mean of Z_U over the included cells, summed in cell order.
double ct_score(std::span<const CellStats> cells);

struct CtConfig {
    std::size_t k = 5;
    std::uint64_t seed = 0;
    std::size_t tau_p = 10;
    std::size_t tau_q = 10;
    std::size_t max_iters = 100;
    double tol = 1e-6;
    std::size_t n_init = 10;
    bool tie_correction = true;
    unsigned threads = 1;
};

struct CtCurve {
    std::string label;
    std::vector<double> scores;
    // metadata
    std::size_t k = 0;
    std::size_t tau_p = 0;
    std::size_t tau_q = 0;
    std::uint64_t seed = 0;
    std::size_t train_count = 0;
    std::size_t test_count = 0;
    std::size_t gen_count = 0;

    std::size_t layer_count() const noexcept { return scores.size(); }
};

struct LayerDiagnostics {
    std::size_t layer = 0;
    double ct = 0.0;
    std::size_t kmeans_iterations = 0;
    double wcss = 0.0;
    std::vector<CellStats> cells;
};

struct CtCurveResult {
    CtCurve curve;
    std::vector<LayerDiagnostics> layers;
};

LayerDiagnostics ct_layer(const Matrix& train_layer, const Matrix& test_layer,
                          const Matrix& gen_layer, const CtConfig& config);

CtCurveResult ct_curve(const EmbeddingSet& train, const EmbeddingSet& test,
                       const EmbeddingSet& gen, const CtConfig& config,
                       const std::string& label = {});

}  // namespace ctlayer
