#include <gtest/gtest.h>

#include "ctlayer/error.hpp"
#include "ctlayer/rng.hpp"
#include "ctlayer/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <sstream>

using namespace ctlayer;

namespace {

std::vector<std::uint8_t> le32(std::uint32_t v) {
    return {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8),
            static_cast<std::uint8_t>(v >> 16), static_cast<std::uint8_t>(v >> 24)};
}

void append(std::vector<std::uint8_t>& out, const std::vector<std::uint8_t>& bytes) {
    out.insert(out.end(), bytes.begin(), bytes.end());
}

ErrorCode decode_error(const std::vector<std::uint8_t>& bytes) {
    try {
        decode_cte1(bytes);
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected decode to fail";
    return ErrorCode::invalid_argument;
}

EmbeddingSet one_layer(std::size_t rows, std::size_t cols, std::vector<float> values) {
    EmbeddingSet s;
    s.layers.emplace_back(rows, cols, std::move(values));
    return s;
}

}  // namespace

TEST(TensorIo, EncodesSingleSampleExactly) {
    const auto bytes = encode_cte1(one_layer(1, 2, {1.0f, 2.0f}));
    std::vector<std::uint8_t> expected = {'C', 'T', 'E', '1'};
    append(expected, le32(1));
    append(expected, le32(1));
    append(expected, le32(2));
    append(expected, le32(0x3f800000));  // 1.0f
    append(expected, le32(0x40000000));  // 2.0f
    EXPECT_EQ(bytes.size(), 24u);
    EXPECT_EQ(bytes, expected);
}

TEST(TensorIo, DecodesHandAssembledFixture) {
    std::vector<std::uint8_t> bytes = {'C', 'T', 'E', '1'};
    append(bytes, le32(1));
    append(bytes, le32(1));
    append(bytes, le32(1));
    append(bytes, le32(std::bit_cast<std::uint32_t>(0.5f)));
    const EmbeddingSet set = decode_cte1(bytes);
    ASSERT_EQ(set.layer_count(), 1u);
    EXPECT_EQ(set.layers[0].rows(), 1u);
    EXPECT_EQ(set.layers[0].cols(), 1u);
    EXPECT_EQ(set.layers[0](0, 0), 0.5f);
}

TEST(TensorIo, RejectsBadMagic) {
    std::vector<std::uint8_t> bytes = {'X', 'X', 'X', 'X'};
    append(bytes, le32(1));
    EXPECT_EQ(decode_error(bytes), ErrorCode::bad_magic);
    EXPECT_EQ(decode_error({}), ErrorCode::bad_magic);
}

TEST(TensorIo, RejectsTruncatedPayloadAtEveryCut) {
    EmbeddingSet s;
    s.layers.emplace_back(2, 3, std::vector<float>{1, 2, 3, 4, 5, 6});
    s.layers.emplace_back(2, 1, std::vector<float>{7, 8});
    const auto bytes = encode_cte1(s);
    for (std::size_t cut = 4; cut < bytes.size(); ++cut) {
        std::vector<std::uint8_t> prefix(bytes.begin(), bytes.begin() + static_cast<long>(cut));
        const ErrorCode code = decode_error(prefix);
        EXPECT_TRUE(code == ErrorCode::truncated) << "cut at " << cut << " gave " << to_string(code);
    }
}

TEST(TensorIo, RejectsNonFiniteAndZeroSamples) {
    auto nan_bytes = encode_cte1(one_layer(1, 1, {1.0f}));
    const auto nan_bits = le32(std::bit_cast<std::uint32_t>(std::numeric_limits<float>::quiet_NaN()));
    std::copy(nan_bits.begin(), nan_bits.end(), nan_bytes.end() - 4);
    EXPECT_EQ(decode_error(nan_bytes), ErrorCode::non_finite);

    std::vector<std::uint8_t> empty = {'C', 'T', 'E', '1'};
    append(empty, le32(1));
    append(empty, le32(0));
    append(empty, le32(4));
    EXPECT_EQ(decode_error(empty), ErrorCode::zero_samples);

    std::vector<std::uint8_t> no_layers = {'C', 'T', 'E', '1'};
    append(no_layers, le32(0));
    EXPECT_EQ(decode_error(no_layers), ErrorCode::zero_samples);
}

TEST(TensorIo, RejectsTrailingBytes) {
    auto bytes = encode_cte1(one_layer(1, 1, {1.0f}));
    bytes.push_back(0);
    EXPECT_EQ(decode_error(bytes), ErrorCode::parse_error);
}

TEST(TensorIo, SaveRejectsInconsistentSampleCount) {
    EmbeddingSet s;
    s.layers.emplace_back(3, 1, std::vector<float>{1, 2, 3});
    s.layers.emplace_back(2, 1, std::vector<float>{1, 2});
    std::ostringstream out;
    try {
        save_embedding_set(s, out);
        FAIL() << "expected failure";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::inconsistent_sample_count);
        EXPECT_NE(std::string(e.what()).find("inconsistent sample count"), std::string::npos);
    }
    EXPECT_TRUE(out.str().empty());
}

TEST(TensorIo, RoundTripsRandomSetsBitExactly) {
    Rng rng(7);
    for (int trial = 0; trial < 25; ++trial) {
        EmbeddingSet s;
        const std::size_t layers = 1 + rng.uniform_index(4);
        const std::size_t n = 1 + rng.uniform_index(6);
        for (std::size_t l = 0; l < layers; ++l) {
            const std::size_t d = 1 + rng.uniform_index(5);
            Matrix m(n, d);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < d; ++j)
                    m(i, j) = std::bit_cast<float>(static_cast<std::uint32_t>(rng.next_u64())) ;
            // Replace non-finite bit patterns; everything else (denormals, -0) stays.
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < d; ++j)
                    if (!std::isfinite(m(i, j))) m(i, j) = -0.0f;
            s.layers.push_back(std::move(m));
        }
        std::stringstream buf;
        const std::size_t written = save_embedding_set(s, buf);
        EXPECT_EQ(written, buf.str().size());
        const EmbeddingSet back = load_embedding_set(buf, EmbeddingFormat::cte1);
        EXPECT_TRUE(bit_equal(s, back));
    }
}

TEST(TensorIo, ParsesCsvSingleLayer) {
    const EmbeddingSet s = parse_embedding_csv("1.0,2.0\n3.0,4.0");
    ASSERT_EQ(s.layer_count(), 1u);
    EXPECT_EQ(s.layers[0], Matrix(2, 2, {1.0f, 2.0f, 3.0f, 4.0f}));
    EXPECT_EQ(parse_embedding_csv("0.5\r\n-1e3\n\n").layers[0], Matrix(2, 1, {0.5f, -1000.0f}));
}

TEST(TensorIo, CsvErrors) {
    EXPECT_THROW(parse_embedding_csv(""), Error);
    EXPECT_THROW(parse_embedding_csv("1,2\n3\n"), Error);
    EXPECT_THROW(parse_embedding_csv("1,abc\n"), Error);
    EXPECT_THROW(parse_embedding_csv("1,,2\n"), Error);
    EXPECT_THROW(parse_embedding_csv("inf\n"), Error);
}

TEST(TensorIo, ValidateTripleReportsShape) {
    auto make = [](std::size_t layers, std::size_t n, std::size_t dim) {
        EmbeddingSet s;
        for (std::size_t l = 0; l < layers; ++l) s.layers.emplace_back(n, dim);
        return s;
    };
    const auto train = make(12, 5, 768);
    const auto test = make(12, 4, 768);
    const auto gen = make(12, 3, 768);
    const auto v = validate_triple(train, test, gen);
    EXPECT_EQ(v.shape.layer_count, 12u);
    EXPECT_EQ(v.shape.dims, std::vector<std::size_t>(12, 768));
    EXPECT_EQ(v.shape.train_count, 5u);
    EXPECT_EQ(v.shape.test_count, 4u);
    EXPECT_EQ(v.shape.gen_count, 3u);

    try {
        validate_triple(train, test, make(11, 3, 768));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::layer_count_mismatch);
        EXPECT_NE(std::string(e.what()).find("layer count mismatch"), std::string::npos);
    }

    auto bad_test = make(12, 4, 768);
    bad_test.layers[3] = Matrix(4, 512);
    try {
        validate_triple(train, bad_test, gen);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::dim_mismatch);
        EXPECT_NE(std::string(e.what()).find("layer 3"), std::string::npos);
    }
}
