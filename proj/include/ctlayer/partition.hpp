#pragma once

#include "ctlayer/tensor_io.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ctlayer {

struct KMeansOptions {
    std::size_t k = 5;
    std::uint64_t seed = 0;
    std::size_t max_iters = 100;
    // Stop once the largest squared centroid displacement is <= tol.
    double tol = 1e-6;
    // Independent k-means++ restarts; the lowest-WCSS run is kept.
    std::size_t n_init = 10;
};

/// KMeans cell structure fitted on one layer of training embeddings.
struct Partition {
    std::size_t k = 0;
    std::size_t dim = 0;
    std::vector<double> centroids;  // k x dim, row-major
    std::vector<std::size_t> training_assignment;
    double wcss = 0.0;
    // WCSS after each assignment step of the kept run; non-increasing.
    std::vector<double> wcss_history;
    std::uint64_t seed = 0;
    std::size_t iterations_run = 0;

    std::span<const double> centroid(std::size_t c) const {
        return {centroids.data() + c * dim, dim};
    }
};

double squared_distance(std::span<const float> x, std::span<const double> centroid);

// Nearest centroid by squared Euclidean distance; ties go to the lowest index.
std::size_t nearest_centroid(const Partition& partition, std::span<const float> x);

// Fits k-means++ initialised Lloyd iterations. Rows are visited in a canonical
// (lexicographic) order, so the result does not depend on training row order.
Partition fit_kmeans(const Matrix& train_layer, const KMeansOptions& options);

std::vector<std::size_t> assign_cells(const Partition& partition, const Matrix& samples);

}  // namespace ctlayer
