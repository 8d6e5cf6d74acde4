#include "ctlayer/partition.hpp"

#include "ctlayer/error.hpp"
#include "ctlayer/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace ctlayer {

double squared_distance(std::span<const float> x, std::span<const double> centroid) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    const std::size_t d = x.size();
    std::size_t j = 0;
    for (; j + 4 <= d; j += 4) {
        for (std::size_t u = 0; u < 4; ++u) {
            const double diff = static_cast<double>(x[j + u]) - centroid[j + u];
            acc[u] += diff * diff;
        }
    }
    for (; j < d; ++j) {
        const double diff = static_cast<double>(x[j]) - centroid[j];
        acc[0] += diff * diff;
    }
    return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

std::size_t nearest_centroid(const Partition& partition, std::span<const float> x) {
    std::size_t best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < partition.k; ++c) {
        const double dist = squared_distance(x, partition.centroid(c));
        if (dist < best_dist) {
            best_dist = dist;
            best = c;
        }
    }
    return best;
}

namespace {

struct Run {
    std::vector<double> centroids;
    std::vector<std::size_t> assignment;  // canonical order
    std::vector<double> history;
    std::size_t iterations = 0;
    double wcss = 0.0;
};

class Lloyd {
public:
    Lloyd(const Matrix& data, const std::vector<std::size_t>& order, std::size_t k,
          const KMeansOptions& options)
        : data_(data), order_(order), n_(order.size()), d_(data.cols()), k_(k),
          options_(options) {}

    Run run(Rng& rng) const {
        Run out;
        out.centroids = seed_plus_plus(rng);
        out.assignment.assign(n_, 0);
        std::vector<double> dist(n_, 0.0);
        bool converged = false;
        for (std::size_t iter = 0;; ++iter) {
            out.wcss = assign(out.centroids, out.assignment, dist);
            out.history.push_back(out.wcss);
            if (converged || iter == options_.max_iters) break;

            repair_empty(out.centroids, out.assignment, dist);
            std::vector<double> next = means(out.centroids, out.assignment);
            double shift = 0.0;
            for (std::size_t c = 0; c < k_; ++c) {
                double s = 0.0;
                for (std::size_t j = 0; j < d_; ++j) {
                    const double diff = next[c * d_ + j] - out.centroids[c * d_ + j];
                    s += diff * diff;
                }
                shift = std::max(shift, s);
            }
            out.centroids = std::move(next);
            ++out.iterations;
            converged = shift <= options_.tol;
        }
        return out;
    }

private:
    std::span<const float> point(std::size_t i) const { return data_.row(order_[i]); }

    std::span<const double> centroid(const std::vector<double>& c, std::size_t idx) const {
        return {c.data() + idx * d_, d_};
    }

    void set_centroid(std::vector<double>& c, std::size_t idx, std::size_t point_idx) const {
        const auto p = point(point_idx);
        for (std::size_t j = 0; j < d_; ++j) c[idx * d_ + j] = p[j];
    }

    std::vector<double> seed_plus_plus(Rng& rng) const {
        std::vector<double> centroids(k_ * d_, 0.0);
        std::vector<bool> chosen(n_, false);
        std::size_t first = rng.uniform_index(n_);
        set_centroid(centroids, 0, first);
        chosen[first] = true;

        std::vector<double> d2(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            d2[i] = squared_distance(point(i), centroid(centroids, 0));
        }
        for (std::size_t c = 1; c < k_; ++c) {
            double total = 0.0;
            for (double v : d2) total += v;
            std::size_t pick = n_;
            if (total > 0.0) {
                const double target = rng.uniform01() * total;
                double cum = 0.0;
                for (std::size_t i = 0; i < n_; ++i) {
                    if (d2[i] <= 0.0) continue;
                    cum += d2[i];
                    pick = i;
                    if (cum > target) break;
                }
            } else {
                // Every point coincides with a centroid; take the first unused row.
                for (std::size_t i = 0; i < n_ && pick == n_; ++i) {
                    if (!chosen[i]) pick = i;
                }
            }
            set_centroid(centroids, c, pick);
            chosen[pick] = true;
            for (std::size_t i = 0; i < n_; ++i) {
                d2[i] = std::min(d2[i], squared_distance(point(i), centroid(centroids, c)));
            }
        }
        return centroids;
    }

    double assign(const std::vector<double>& centroids, std::vector<std::size_t>& assignment,
                  std::vector<double>& dist) const {
        double wcss = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            std::size_t best = 0;
            double best_dist = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k_; ++c) {
                const double v = squared_distance(point(i), centroid(centroids, c));
                if (v < best_dist) {
                    best_dist = v;
                    best = c;
                }
            }
            assignment[i] = best;
            dist[i] = best_dist;
            wcss += best_dist;
        }
        return wcss;
    }

    // Moves each empty centroid onto the point farthest from its own centroid.
    void repair_empty(std::vector<double>& centroids, std::vector<std::size_t>& assignment,
                      std::vector<double>& dist) const {
        std::vector<std::size_t> counts(k_, 0);
        for (std::size_t a : assignment) ++counts[a];
        for (std::size_t c = 0; c < k_; ++c) {
            if (counts[c] != 0) continue;
            std::size_t far = n_;
            double far_dist = 0.0;
            for (std::size_t i = 0; i < n_; ++i) {
                if (counts[assignment[i]] >= 2 && dist[i] > far_dist) {
                    far_dist = dist[i];
                    far = i;
                }
            }
            if (far == n_) continue;
            set_centroid(centroids, c, far);
            --counts[assignment[far]];
            assignment[far] = c;
            counts[c] = 1;
            dist[far] = 0.0;
        }
    }

    std::vector<double> means(const std::vector<double>& previous,
                              const std::vector<std::size_t>& assignment) const {
        std::vector<double> sums(k_ * d_, 0.0);
        std::vector<std::size_t> counts(k_, 0);
        for (std::size_t i = 0; i < n_; ++i) {
            const auto p = point(i);
            const std::size_t c = assignment[i];
            ++counts[c];
            for (std::size_t j = 0; j < d_; ++j) sums[c * d_ + j] += p[j];
        }
        for (std::size_t c = 0; c < k_; ++c) {
            if (counts[c] == 0) {
                std::copy_n(previous.begin() + static_cast<std::ptrdiff_t>(c * d_), d_,
                            sums.begin() + static_cast<std::ptrdiff_t>(c * d_));
                continue;
            }
            const double inv = static_cast<double>(counts[c]);
            for (std::size_t j = 0; j < d_; ++j) sums[c * d_ + j] /= inv;
        }
        return sums;
    }

    const Matrix& data_;
    const std::vector<std::size_t>& order_;
    std::size_t n_;
    std::size_t d_;
    std::size_t k_;
    const KMeansOptions& options_;
};

}  // namespace

Partition fit_kmeans(const Matrix& train_layer, const KMeansOptions& options) {
    const std::size_t n = train_layer.rows();
    if (n == 0 || train_layer.cols() == 0) {
        throw Error(ErrorCode::empty_input, "cannot fit k-means on an empty matrix");
    }
    if (options.k < 1) throw Error(ErrorCode::invalid_argument, "k must be >= 1");
    if (options.k > n) {
        throw Error(ErrorCode::invalid_argument, "k = " + std::to_string(options.k) +
                                                     " exceeds the " + std::to_string(n) +
                                                     " training samples");
    }
    if (!(options.tol >= 0.0)) throw Error(ErrorCode::invalid_argument, "tol must be >= 0");
    if (options.n_init < 1) throw Error(ErrorCode::invalid_argument, "n_init must be >= 1");
    for (float v : train_layer.values()) {
        if (!std::isfinite(v)) {
            throw Error(ErrorCode::non_finite, "non-finite value in k-means input");
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto ra = train_layer.row(a);
        const auto rb = train_layer.row(b);
        return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
    });

    Lloyd lloyd(train_layer, order, options.k, options);
    Rng rng(options.seed);
    Run best;
    for (std::size_t r = 0; r < options.n_init; ++r) {
        Run run = lloyd.run(rng);
        if (r == 0 || run.wcss < best.wcss) best = std::move(run);
    }

    Partition p;
    p.k = options.k;
    p.dim = train_layer.cols();
    p.centroids = std::move(best.centroids);
    p.training_assignment.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) p.training_assignment[order[i]] = best.assignment[i];
    p.wcss = best.wcss;
    p.wcss_history = std::move(best.history);
    p.seed = options.seed;
    p.iterations_run = best.iterations;
    return p;
}

std::vector<std::size_t> assign_cells(const Partition& partition, const Matrix& samples) {
    if (samples.cols() != partition.dim) {
        throw Error(ErrorCode::dim_mismatch,
                    "sample dim " + std::to_string(samples.cols()) +
                        " does not match centroid dim " + std::to_string(partition.dim));
    }
    std::vector<std::size_t> cells(samples.rows());
    for (std::size_t i = 0; i < samples.rows(); ++i) {
        cells[i] = nearest_centroid(partition, samples.row(i));
    }
    return cells;
}

}  // namespace ctlayer
