#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ctlayer {

/// Dense row-major float matrix; one row per sample.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), values_(rows * cols, 0.0f) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<float> values);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return rows_ == 0; }

    std::span<const float> row(std::size_t i) const {
        return {values_.data() + i * cols_, cols_};
    }
    std::span<float> row(std::size_t i) { return {values_.data() + i * cols_, cols_}; }

    float operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
    float& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }

    const std::vector<float>& values() const noexcept { return values_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<float> values_;
};

/// Per-layer embeddings of one dataset (training, test or generated).
/// Layer 0 is the earliest encoder layer.
struct EmbeddingSet {
    std::string label;
    std::vector<Matrix> layers;

    std::size_t layer_count() const noexcept { return layers.size(); }
    std::size_t sample_count() const noexcept {
        return layers.empty() ? 0 : layers.front().rows();
    }
};

// Throws Error if the set has no layers, no samples, unequal sample counts
// across layers, a zero-width layer or a non-finite value.
void validate(const EmbeddingSet& set);

bool bit_equal(const EmbeddingSet& a, const EmbeddingSet& b);

enum class EmbeddingFormat { cte1, csv };

EmbeddingFormat parse_embedding_format(std::string_view name);

// CTE1: "CTE1", u32 L, then per layer u32 n, u32 d, n*d f32; little-endian.
std::vector<std::uint8_t> encode_cte1(const EmbeddingSet& set);
EmbeddingSet decode_cte1(std::span<const std::uint8_t> bytes);

std::size_t save_embedding_set(const EmbeddingSet& set, std::ostream& out);
EmbeddingSet load_embedding_set(std::istream& in, EmbeddingFormat format);

void save_embedding_set(const EmbeddingSet& set, const std::string& path);
EmbeddingSet load_embedding_set(const std::string& path, EmbeddingFormat format);

// Single-layer CSV, one sample per line, no header.
EmbeddingSet parse_embedding_csv(std::string_view text);

struct TripleShape {
    std::size_t layer_count = 0;
    std::vector<std::size_t> dims;
    std::size_t train_count = 0;
    std::size_t test_count = 0;
    std::size_t gen_count = 0;
};

struct ValidatedTriple {
    const EmbeddingSet& train;
    const EmbeddingSet& test;
    const EmbeddingSet& gen;
    TripleShape shape;
};

ValidatedTriple validate_triple(const EmbeddingSet& train, const EmbeddingSet& test,
                                const EmbeddingSet& gen);

}  // namespace ctlayer
