#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "crew/quantize.hpp"
#include "helpers.hpp"

using namespace crew;

namespace {

// Independent scalar oracle: same stated rule, different formulation
// (long double, explicit sign split), kept apart from the library path.
int oracle_quantize(double w, double scale, int q) {
    const long double x = static_cast<long double>(w) / static_cast<long double>(scale);
    long double r = x >= 0 ? std::floor(x + 0.5L) : std::ceil(x - 0.5L);
    const long double hi = (1 << (q - 1)) - 1;
    const long double lo = -(1 << (q - 1));
    if (r > hi) r = hi;
    if (r < lo) r = lo;
    return static_cast<int>(r);
}

FloatLayer row_layer(std::vector<float> weights) {
    FloatLayer layer;
    layer.n_inputs = 1;
    layer.n_outputs = static_cast<int>(weights.size());
    layer.weights = std::move(weights);
    layer.bias.assign(layer.n_outputs, 0.0f);
    return layer;
}

}  // namespace

TEST_CASE("quantize maps the documented example exactly") {
    auto layer = row_layer({-1.0f, 0.5f, 1.0f});
    auto q = quantize_layer(layer, 8);
    CHECK(q.scale == doctest::Approx(1.0 / 127.0));
    // frozen from the scalar oracle: -127, 64 (0.5/scale = 63.5 rounds away
    // from zero), 127
    CHECK(oracle_quantize(-1.0, 1.0 / 127.0, 8) == -127);
    CHECK(oracle_quantize(0.5, 1.0 / 127.0, 8) == 64);
    CHECK(oracle_quantize(1.0, 1.0 / 127.0, 8) == 127);
    CHECK(q.weights[0] == -127);
    CHECK(q.weights[1] == 64);
    CHECK(q.weights[2] == 127);
}

TEST_CASE("all-zero layer degenerates to scale one") {
    auto layer = row_layer({0.0f, 0.0f, 0.0f});
    auto q = quantize_layer(layer, 8);
    CHECK(q.scale == 1.0f);
    for (int8_t w : q.weights)
        CHECK(w == 0);
}

TEST_CASE("on-grid layers quantize losslessly") {
    std::vector<float> grid;
    for (int k = -127; k <= 127; k += 17)
        grid.push_back(static_cast<float>(k) / 127.0f);
    grid.push_back(1.0f);  // pin max|w| so the scale is exactly 1/127
    auto layer = row_layer(grid);
    auto q = quantize_layer(layer, 8);
    auto back = dequantize(q);
    for (size_t k = 0; k < grid.size(); ++k)
        CHECK(back.weights[k] == doctest::Approx(grid[k]).epsilon(1e-7));

    // idempotence on the integer domain
    auto q2 = quantize_layer(back, 8);
    CHECK(q2.weights == q.weights);
}

TEST_CASE("dequantize multiplies by the scale") {
    auto layer = testutil::make_quantized({{-127, 64, 127}});
    layer.scale = 1.0f / 127.0f;
    auto f = dequantize(layer);
    CHECK(f.weights[0] == doctest::Approx(-1.0));
    CHECK(f.weights[1] == doctest::Approx(64.0 / 127.0));
    CHECK(f.weights[2] == doctest::Approx(1.0));
}

TEST_CASE("per-weight error stays within half a scale step") {
    std::mt19937 rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        FloatLayer layer;
        layer.n_inputs = 4;
        layer.n_outputs = 16;
        layer.weights.resize(64);
        for (auto& w : layer.weights)
            w = static_cast<float>(static_cast<int>(rng() % 20001) - 10000) / 1000.0f;
        layer.bias.assign(16, 0.0f);
        const int q = 2 + static_cast<int>(rng() % 7);
        auto qz = quantize_layer(layer, q);
        auto back = dequantize(qz);
        for (size_t k = 0; k < layer.weights.size(); ++k)
            CHECK(std::fabs(back.weights[k] - layer.weights[k]) <= qz.scale * 0.5 + 1e-6);
    }
}

TEST_CASE("quantization never raises the per-row distinct count") {
    std::mt19937 rng(4242);
    for (int trial = 0; trial < 20; ++trial) {
        FloatLayer layer;
        layer.n_inputs = 6;
        layer.n_outputs = 24;
        layer.weights.resize(6 * 24);
        // floats drawn from a small pool force duplicates before quantization
        std::vector<float> pool(1 + rng() % 40);
        for (auto& v : pool)
            v = static_cast<float>(static_cast<int>(rng() % 2001) - 1000) / 500.0f;
        for (auto& w : layer.weights)
            w = pool[rng() % pool.size()];
        layer.bias.assign(24, 0.0f);

        auto qz = quantize_layer(layer, 8);
        for (int i = 0; i < layer.n_inputs; ++i) {
            std::set<float> floats;
            for (int j = 0; j < layer.n_outputs; ++j)
                floats.insert(layer.at(i, j));
            CHECK(testutil::distinct_in_row(qz, i) <= static_cast<int>(floats.size()));
            CHECK(testutil::distinct_in_row(qz, i) <= 256);
        }
    }
}

TEST_CASE("biases land on the same integer grid") {
    FloatLayer layer = row_layer({2.0f, -2.0f});
    layer.bias = {1.0f, -0.51f};
    auto q = quantize_layer(layer, 8);
    // scale = 2/127; bias/scale = 63.5 -> 64 and -32.385 -> -32
    CHECK(q.bias[0] == 64);
    CHECK(q.bias[1] == -32);
}

TEST_CASE("bit width bounds are enforced") {
    auto layer = row_layer({1.0f});
    CHECK_THROWS_AS(quantize_layer(layer, 1), config_error);
    CHECK_THROWS_AS(quantize_layer(layer, 9), config_error);
}
