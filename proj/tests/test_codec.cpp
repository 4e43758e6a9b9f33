#include <doctest.h>

#include <random>

#include "crew/codec.hpp"
#include "helpers.hpp"

using namespace crew;

TEST_CASE("index width follows ceil(log2 uw)") {
    CHECK(index_bit_width(1) == 0);
    CHECK(index_bit_width(2) == 1);
    CHECK(index_bit_width(3) == 2);
    CHECK(index_bit_width(4) == 2);
    CHECK(index_bit_width(5) == 3);
    CHECK(index_bit_width(45) == 6);
    CHECK(index_bit_width(128) == 7);
    CHECK(index_bit_width(129) == 8);
    CHECK(index_bit_width(256) == 8);
}

TEST_CASE("encode uses first-occurrence order") {
    auto layer = testutil::make_quantized({{5, 5, 9, 5}});
    auto enc = encode(layer);
    REQUIRE(enc.uw_counts[0] == 2);
    CHECK(enc.unique_weights[0] == std::vector<int8_t>{5, 9});
    CHECK(enc.index_matrix == std::vector<uint8_t>{0, 0, 1, 0});
    CHECK(enc.bit_widths[0] == 1);
}

TEST_CASE("rows with at most four uniques need at most two index bits") {
    auto layer = testutil::make_quantized({{1, 2, 3, 4, 1, 2, 3, 4},
                                           {7, 7, 7, 7, 7, 7, 7, 7},
                                           {1, 1, 2, 2, 3, 3, 1, 2},
                                           {-5, 6, -5, 6, -5, 6, -5, 6}});
    auto enc = encode(layer);
    for (int i = 0; i < 4; ++i)
        CHECK(enc.bit_widths[i] <= 2);
}

TEST_CASE("analyze_rows counts distinct values") {
    auto layer = testutil::make_quantized({{3, 7, 3, 7, 7, 1}, {2, 2, 2, 2, 2, 2}});
    auto analysis = analyze_rows(layer);
    CHECK(analysis.uw_counts[0] == 3);
    CHECK(analysis.uw_counts[1] == 1);
    CHECK(analysis.mean_uw == doctest::Approx(2.0));
    CHECK(analysis.histogram.at(3) == 1);
    CHECK(analysis.histogram.at(1) == 1);
}

TEST_CASE("dense reconstruction is lossless") {
    std::mt19937 rng(31337);
    for (int trial = 0; trial < 50; ++trial) {
        auto layer = testutil::random_layer(rng, 16, 16);
        auto enc = encode(layer);
        auto back = decode_to_dense(enc);
        REQUIRE(back.weights.size() == layer.weights.size());
        for (size_t k = 0; k < layer.weights.size(); ++k)
            CHECK(back.weights[k] == layer.weights[k]);
        CHECK(back.bias == layer.bias);
    }
}

TEST_CASE("pack emits the exact bit count of the block") {
    // rows engineered to widths [1, 2, 2, 1]; one 4x8 block is
    // 8*1 + 8*2 + 8*2 + 8*1 = 48 bits = 6 bytes, no padding
    auto layer = testutil::make_quantized({{1, 2, 1, 2, 1, 2, 1, 2},
                                           {1, 2, 3, 4, 1, 2, 3, 4},
                                           {5, 6, 7, 5, 6, 7, 5, 6},
                                           {8, 9, 8, 9, 8, 9, 8, 9}});
    auto enc = encode(layer);
    REQUIRE(enc.bit_widths == std::vector<uint8_t>{1, 2, 2, 1});
    auto packed = pack(enc, 4, 8);
    CHECK(packed.block_stream.size() == 6);
    CHECK(packed_index_bits(enc.bit_widths, 8, 4, 8) == 48);
    CHECK(storage_report(enc, 4, 8).index_bits == 48);
}

TEST_CASE("single-unique rows contribute no index bits") {
    auto layer = testutil::make_quantized({{4, 4, 4, 4}, {9, 9, 9, 9}});
    auto enc = encode(layer);
    auto packed = pack(enc, 2, 4);
    CHECK(packed.block_stream.empty());
    auto back = unpack(packed);
    CHECK(decode_to_dense(back).weights == layer.weights);
}

TEST_CASE("single-cell layer packs to a header-only stream") {
    auto layer = testutil::make_quantized({{42}});
    auto enc = encode(layer);
    auto packed = pack(enc, 1, 1);
    CHECK(packed.block_stream.empty());
    auto bytes = packed.to_bytes();
    auto reparsed = PackedCrewLayer::from_bytes(bytes);
    auto back = decode_to_dense(unpack(reparsed));
    CHECK(back.weights == layer.weights);
}

TEST_CASE("pack/unpack round trips across ragged block edges") {
    std::mt19937 rng(2718);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 48);
        const int m = 1 + static_cast<int>(rng() % 40);
        auto layer = testutil::random_layer(rng, n, m);
        auto enc = encode(layer);
        const int bs_row = 1 + static_cast<int>(rng() % static_cast<unsigned>(n));
        const int bs_col = 1 + static_cast<int>(rng() % static_cast<unsigned>(m));
        auto packed = pack(enc, bs_row, bs_col);

        // byte determinism
        auto packed_again = pack(enc, bs_row, bs_col);
        CHECK(packed.to_bytes() == packed_again.to_bytes());

        auto enc2 = unpack(PackedCrewLayer::from_bytes(packed.to_bytes()));
        CHECK(enc2.index_matrix == enc.index_matrix);
        CHECK(enc2.uw_counts == enc.uw_counts);
        CHECK(enc2.bit_widths == enc.bit_widths);
        CHECK(enc2.unique_weights == enc.unique_weights);
        CHECK(enc2.bias == enc.bias);
        CHECK(enc2.scale == enc.scale);
    }
}

TEST_CASE("decode_block returns the exact index sub-matrix") {
    std::mt19937 rng(5151);
    auto layer = testutil::random_layer(rng, 21, 13);  // ragged on both axes for 8x5 blocks
    auto enc = encode(layer);
    auto packed = pack(enc, 8, 5);
    for (int br = 0; br < packed.blocks_down(); ++br) {
        for (int bc = 0; bc < packed.blocks_across(); ++bc) {
            auto block = decode_block(packed, br, bc);
            for (int r = 0; r < block.rows; ++r)
                for (int c = 0; c < block.cols; ++c)
                    CHECK(block.indexes[static_cast<size_t>(r) * block.cols + c] ==
                          enc.index_at(br * 8 + r, bc * 5 + c));
        }
    }
    CHECK_THROWS_AS(decode_block(packed, packed.blocks_down(), 0), config_error);
}

TEST_CASE("truncated streams are rejected") {
    std::mt19937 rng(99);
    auto layer = testutil::random_layer(rng, 8, 8);
    auto enc = encode(layer);
    auto bytes = pack(enc, 4, 4).to_bytes();
    bytes.pop_back();
    CHECK_THROWS_AS(PackedCrewLayer::from_bytes(bytes), format_error);
}

TEST_CASE("descriptor and unique count disagreement is rejected") {
    auto layer = testutil::make_quantized({{1, 2, 3, 1}, {4, 4, 5, 5}});
    auto enc = encode(layer);
    auto packed = pack(enc, 2, 4);
    // row 0 really has 3 uniques (width 2); claim 2 (width 1)
    packed.uw_counts_minus1[0] = 1;
    CHECK_THROWS_AS(unpack(packed), format_error);
}

TEST_CASE("width-8 rows use the escape flag and round trip") {
    // a row with more than 128 distinct values needs 8-bit indexes
    QuantizedLayer layer;
    layer.n_inputs = 2;
    layer.n_outputs = 200;
    layer.weights.resize(400);
    for (int j = 0; j < 200; ++j) {
        layer.weights[j] = static_cast<int8_t>(j - 100);          // 200 distinct
        layer.weights[200 + j] = static_cast<int8_t>(j % 3);      // 3 distinct
    }
    layer.bias.assign(200, 0);

    auto enc = encode(layer);
    REQUIRE(enc.uw_counts[0] == 200);
    REQUIRE(enc.bit_widths[0] == 8);
    auto packed = pack(enc, 2, 16);
    CHECK(packed.row_bit_width(0) == 8);
    CHECK(packed.row_bit_width(1) == 2);
    auto back = unpack(PackedCrewLayer::from_bytes(packed.to_bytes()));
    CHECK(decode_to_dense(back).weights == layer.weights);
}

TEST_CASE("narrow bit widths pack and sign-extend correctly") {
    std::mt19937 rng(404);
    for (int q : {2, 4, 7}) {
        QuantizedLayer layer;
        layer.n_inputs = 9;
        layer.n_outputs = 13;
        layer.q = q;
        layer.weights.resize(9 * 13);
        const int lo = -(1 << (q - 1));
        const int span = 1 << q;
        for (auto& w : layer.weights)
            w = static_cast<int8_t>(lo + static_cast<int>(rng() % span));
        layer.bias.assign(13, -3);

        auto enc = encode(layer);
        auto packed = pack(enc, 4, 4);
        CHECK(packed.q == q);
        auto back = unpack(PackedCrewLayer::from_bytes(packed.to_bytes()));
        CHECK(decode_to_dense(back).weights == layer.weights);
        CHECK(back.unique_weights == enc.unique_weights);
    }
}

TEST_CASE("storage report matches the packed stream byte for byte") {
    std::mt19937 rng(808);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 40);
        const int m = 1 + static_cast<int>(rng() % 40);
        auto layer = testutil::random_layer(rng, n, m);
        auto enc = encode(layer);
        const int bs_row = std::min(16, n);
        const int bs_col = std::min(16, m);
        auto packed = pack(enc, bs_row, bs_col);
        auto rep = storage_report(enc, 16, 16);
        CHECK(rep.index_bits == packed.block_stream.size() * 8);
        CHECK(rep.unique_bits == packed.unique_stream.size() * 8);
        CHECK(rep.metadata_bits == (packed.uw_counts_minus1.size() +
                                    packed.size_descriptors.size() +
                                    packed.width_escape.size()) * 8);
        CHECK(rep.crew_bits == rep.unique_bits + rep.index_bits + rep.metadata_bits);
    }
}

TEST_CASE("two uniques over three outputs trims a fifth of the weight payload") {
    // dense: 24 bits per row; unique table 16 + three 1-bit indexes = 19
    QuantizedLayer layer;
    layer.n_inputs = 64;
    layer.n_outputs = 3;
    layer.weights.resize(64 * 3);
    for (int i = 0; i < 64; ++i) {
        layer.weights[i * 3 + 0] = static_cast<int8_t>(i);
        layer.weights[i * 3 + 1] = static_cast<int8_t>(i);
        layer.weights[i * 3 + 2] = static_cast<int8_t>(i + 64);
    }
    layer.bias.assign(3, 0);
    auto rep = storage_report(encode(layer));
    CHECK(rep.saved_muls_fraction == doctest::Approx(1.0 / 3.0));
    CHECK(rep.storage_reduction_fraction > 0.18);
    CHECK(rep.storage_reduction_fraction < 0.22);
}

TEST_CASE("full-range rows make the encoding larger than dense") {
    QuantizedLayer layer;
    layer.n_inputs = 4;
    layer.n_outputs = 256;
    layer.weights.resize(4 * 256);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 256; ++j)
            layer.weights[i * 256 + j] = static_cast<int8_t>((j + i * 13) % 256 - 128);
    layer.bias.assign(256, 0);
    auto analysis = analyze_rows(layer);
    REQUIRE(analysis.uw_counts[0] == 256);
    auto rep = storage_report(encode(layer));
    CHECK(rep.storage_reduction_fraction < 0.0);
    CHECK(rep.saved_muls_fraction >= 0.0);
}

TEST_CASE("reduction is positive when uniques stay below half the range") {
    // generated wide rows meeting the sufficient condition: UW_i <= 2^(q-1)
    // and per-row side cost far below the index savings
    std::mt19937 rng(1212);
    for (int trial = 0; trial < 10; ++trial) {
        const int uw = 2 + static_cast<int>(rng() % 127);  // <= 128
        QuantizedLayer layer;
        layer.n_inputs = 8;
        layer.n_outputs = 2048;
        layer.weights.resize(8 * 2048);
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 2048; ++j)
                layer.weights[i * 2048 + j] =
                    static_cast<int8_t>((j < uw ? j : static_cast<int>(rng() % uw)) - 64);
        layer.bias.assign(2048, 0);
        auto enc = encode(layer);
        for (int i = 0; i < 8; ++i)
            REQUIRE(enc.uw_counts[i] <= 128);
        CHECK(storage_report(enc).storage_reduction_fraction > 0.0);
    }
}

TEST_CASE("index payload obeys the size law") {
    // packed bits = sum_i M*b_i plus per-block padding of under a byte
    std::mt19937 rng(606);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 50);
        const int m = 1 + static_cast<int>(rng() % 50);
        auto layer = testutil::random_layer(rng, n, m);
        auto enc = encode(layer);
        const int bs_row = 1 + static_cast<int>(rng() % static_cast<unsigned>(n));
        const int bs_col = 1 + static_cast<int>(rng() % static_cast<unsigned>(m));
        auto packed = pack(enc, bs_row, bs_col);

        uint64_t flat_bits = 0;
        for (int i = 0; i < n; ++i)
            flat_bits += static_cast<uint64_t>(enc.bit_widths[i]) * m;
        const uint64_t blocks =
            static_cast<uint64_t>(packed.blocks_down()) * packed.blocks_across();
        const uint64_t packed_bits = packed.block_stream.size() * 8;
        CHECK(packed_bits >= flat_bits);
        CHECK(packed_bits - flat_bits < 8 * blocks);
    }
}

TEST_CASE("hostile unique counts are rejected") {
    auto layer = testutil::make_quantized({{1, 2}, {3, 3}});
    auto packed = pack(encode(layer), 2, 2);
    packed.uw_counts_minus1[1] = 200;  // 201 uniques in a 2-cell row
    CHECK_THROWS_AS(unpack(packed), format_error);
}

TEST_CASE("ucnn index accounting blows up for deep layers") {
    QuantizedLayer layer;
    layer.n_inputs = 2048;
    layer.n_outputs = 4;
    layer.weights.assign(2048 * 4, 3);
    layer.bias.assign(4, 0);
    auto rep = storage_report(encode(layer));
    // 11 bits per index beats the 8-bit weights it replaces
    CHECK(rep.ucnn_index_bits == 2048ull * 4 * 11);
    CHECK(rep.ucnn_index_bits > rep.dense_bits);
}
