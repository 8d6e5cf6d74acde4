#include "ctlayer/tensor_io.hpp"

#include "ctlayer/error.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <utility>

namespace ctlayer {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::bad_magic: return "bad_magic";
        case ErrorCode::truncated: return "truncated";
        case ErrorCode::non_finite: return "non_finite";
        case ErrorCode::zero_samples: return "zero_samples";
        case ErrorCode::inconsistent_sample_count: return "inconsistent_sample_count";
        case ErrorCode::layer_count_mismatch: return "layer_count_mismatch";
        case ErrorCode::dim_mismatch: return "dim_mismatch";
        case ErrorCode::parse_error: return "parse_error";
        case ErrorCode::io_error: return "io_error";
        case ErrorCode::invalid_argument: return "invalid_argument";
        case ErrorCode::no_included_cells: return "no_included_cells";
        case ErrorCode::not_psd: return "not_psd";
        case ErrorCode::duplicate_label: return "duplicate_label";
        case ErrorCode::length_mismatch: return "length_mismatch";
        case ErrorCode::empty_input: return "empty_input";
    }
    return "unknown";
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<float> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows_ * cols_) {
        throw Error(ErrorCode::invalid_argument,
                    "matrix value count " + std::to_string(values_.size()) +
                        " does not match shape " + std::to_string(rows_) + "x" +
                        std::to_string(cols_));
    }
}

void validate(const EmbeddingSet& set) {
    if (set.layers.empty()) {
        throw Error(ErrorCode::zero_samples, "embedding set has no layers");
    }
    const std::size_t n = set.layers.front().rows();
    if (n == 0) {
        throw Error(ErrorCode::zero_samples, "embedding set has zero samples");
    }
    for (std::size_t l = 0; l < set.layers.size(); ++l) {
        const Matrix& m = set.layers[l];
        if (m.rows() != n) {
            throw Error(ErrorCode::inconsistent_sample_count,
                        "inconsistent sample count: layer 0 has " + std::to_string(n) +
                            " samples, layer " + std::to_string(l) + " has " +
                            std::to_string(m.rows()));
        }
        if (m.cols() == 0) {
            throw Error(ErrorCode::dim_mismatch,
                        "layer " + std::to_string(l) + " has zero embedding width");
        }
        for (float v : m.values()) {
            if (!std::isfinite(v)) {
                throw Error(ErrorCode::non_finite,
                            "non-finite value in layer " + std::to_string(l));
            }
        }
    }
}

bool bit_equal(const EmbeddingSet& a, const EmbeddingSet& b) {
    if (a.layers.size() != b.layers.size()) return false;
    for (std::size_t l = 0; l < a.layers.size(); ++l) {
        const Matrix& x = a.layers[l];
        const Matrix& y = b.layers[l];
        if (x.rows() != y.rows() || x.cols() != y.cols()) return false;
        for (std::size_t i = 0; i < x.values().size(); ++i) {
            if (std::bit_cast<std::uint32_t>(x.values()[i]) !=
                std::bit_cast<std::uint32_t>(y.values()[i])) {
                return false;
            }
        }
    }
    return true;
}

EmbeddingFormat parse_embedding_format(std::string_view name) {
    if (name == "cte" || name == "cte1") return EmbeddingFormat::cte1;
    if (name == "csv") return EmbeddingFormat::csv;
    throw Error(ErrorCode::invalid_argument,
                "unknown embedding format '" + std::string(name) + "' (expected cte1 or csv)");
}

namespace {

constexpr std::uint8_t kMagic[4] = {'C', 'T', 'E', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int shift = 0; shift < 32; shift += 8) {
        out.push_back(static_cast<std::uint8_t>(v >> shift));
    }
}

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::size_t remaining() const { return bytes_.size() - pos_; }

    std::uint32_t u32(const char* what) {
        require(4, what);
        std::uint32_t v = 0;
        for (int b = 0; b < 4; ++b) {
            v |= static_cast<std::uint32_t>(bytes_[pos_ + b]) << (8 * b);
        }
        pos_ += 4;
        return v;
    }

    void require(std::size_t count, const char* what) const {
        if (remaining() < count) {
            throw Error(ErrorCode::truncated,
                        std::string("truncated payload while reading ") + what);
        }
    }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_cte1(const EmbeddingSet& set) {
    validate(set);
    constexpr auto kMax = std::numeric_limits<std::uint32_t>::max();
    if (set.layers.size() > kMax) {
        throw Error(ErrorCode::invalid_argument, "too many layers for CTE1");
    }
    std::size_t total = 8;
    for (const Matrix& m : set.layers) {
        if (m.rows() > kMax || m.cols() > kMax) {
            throw Error(ErrorCode::invalid_argument, "layer shape exceeds CTE1 u32 range");
        }
        total += 8 + 4 * m.values().size();
    }
    std::vector<std::uint8_t> out;
    out.reserve(total);
    for (std::uint8_t b : kMagic) out.push_back(b);
    put_u32(out, static_cast<std::uint32_t>(set.layers.size()));
    for (const Matrix& m : set.layers) {
        put_u32(out, static_cast<std::uint32_t>(m.rows()));
        put_u32(out, static_cast<std::uint32_t>(m.cols()));
        for (float v : m.values()) put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
    return out;
}

EmbeddingSet decode_cte1(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4 || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
        throw Error(ErrorCode::bad_magic, "bad magic: expected \"CTE1\"");
    }
    ByteReader reader(bytes.subspan(4));
    const std::uint32_t layer_count = reader.u32("layer count");
    if (layer_count == 0) {
        throw Error(ErrorCode::zero_samples, "CTE1 file declares zero layers");
    }
    EmbeddingSet set;
    for (std::uint32_t l = 0; l < layer_count; ++l) {
        const std::uint64_t n = reader.u32("sample count");
        const std::uint64_t d = reader.u32("dim");
        const std::uint64_t count = n * d;
        if (count > reader.remaining() / 4) {
            throw Error(ErrorCode::truncated,
                        "truncated payload in layer " + std::to_string(l));
        }
        std::vector<float> values(count);
        for (auto& v : values) v = std::bit_cast<float>(reader.u32("value"));
        set.layers.emplace_back(n, d, std::move(values));
    }
    if (reader.remaining() != 0) {
        throw Error(ErrorCode::parse_error,
                    std::to_string(reader.remaining()) + " trailing bytes after last layer");
    }
    validate(set);
    return set;
}

EmbeddingSet parse_embedding_csv(std::string_view text) {
    std::vector<float> values;
    std::size_t cols = 0;
    std::size_t rows = 0;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto eol = text.find('\n');
        std::string_view line = text.substr(0, eol);
        text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

        std::size_t fields = 0;
        while (true) {
            const auto comma = line.find(',');
            std::string_view field = line.substr(0, comma);
            const auto first = field.find_first_not_of(" \t");
            const auto last = field.find_last_not_of(" \t");
            if (first == std::string_view::npos) {
                throw Error(ErrorCode::parse_error,
                            "empty field on CSV line " + std::to_string(line_no));
            }
            field = field.substr(first, last - first + 1);
            if (field.front() == '+') field.remove_prefix(1);
            float v = 0.0f;
            const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
            if (ec != std::errc{} || ptr != field.data() + field.size()) {
                throw Error(ErrorCode::parse_error, "invalid number '" + std::string(field) +
                                                        "' on CSV line " +
                                                        std::to_string(line_no));
            }
            values.push_back(v);
            ++fields;
            if (comma == std::string_view::npos) break;
            line.remove_prefix(comma + 1);
        }
        if (rows == 0) {
            cols = fields;
        } else if (fields != cols) {
            throw Error(ErrorCode::parse_error, "CSV line " + std::to_string(line_no) + " has " +
                                                    std::to_string(fields) + " fields, expected " +
                                                    std::to_string(cols));
        }
        ++rows;
    }
    if (rows == 0) {
        throw Error(ErrorCode::zero_samples, "CSV input has zero samples");
    }
    EmbeddingSet set;
    set.layers.emplace_back(rows, cols, std::move(values));
    validate(set);
    return set;
}

std::size_t save_embedding_set(const EmbeddingSet& set, std::ostream& out) {
    const auto bytes = encode_cte1(set);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::io_error, "failed to write embedding set");
    return bytes.size();
}

EmbeddingSet load_embedding_set(std::istream& in, EmbeddingFormat format) {
    std::string data{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    if (in.bad()) throw Error(ErrorCode::io_error, "failed to read embedding set");
    if (format == EmbeddingFormat::csv) return parse_embedding_csv(data);
    return decode_cte1({reinterpret_cast<const std::uint8_t*>(data.data()), data.size()});
}

void save_embedding_set(const EmbeddingSet& set, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io_error, "cannot open '" + path + "' for writing");
    save_embedding_set(set, out);
}

EmbeddingSet load_embedding_set(const std::string& path, EmbeddingFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io_error, "cannot open '" + path + "'");
    try {
        return load_embedding_set(in, format);
    } catch (const Error& e) {
        throw Error(e.code(), path + ": " + e.what());
    }
}

ValidatedTriple validate_triple(const EmbeddingSet& train, const EmbeddingSet& test,
                                const EmbeddingSet& gen) {
    validate(train);
    validate(test);
    validate(gen);
    const std::size_t layers = train.layer_count();
    if (test.layer_count() != layers || gen.layer_count() != layers) {
        throw Error(ErrorCode::layer_count_mismatch,
                    "layer count mismatch: train " + std::to_string(layers) + ", test " +
                        std::to_string(test.layer_count()) + ", gen " +
                        std::to_string(gen.layer_count()));
    }
    TripleShape shape;
    shape.layer_count = layers;
    for (std::size_t l = 0; l < layers; ++l) {
        const std::size_t d = train.layers[l].cols();
        if (test.layers[l].cols() != d || gen.layers[l].cols() != d) {
            throw Error(ErrorCode::dim_mismatch,
                        "dim mismatch at layer " + std::to_string(l) + ": train " +
                            std::to_string(d) + ", test " + std::to_string(test.layers[l].cols()) +
                            ", gen " + std::to_string(gen.layers[l].cols()));
        }
        shape.dims.push_back(d);
    }
    shape.train_count = train.sample_count();
    shape.test_count = test.sample_count();
    shape.gen_count = gen.sample_count();
    return {train, test, gen, std::move(shape)};
}

}  // namespace ctlayer
