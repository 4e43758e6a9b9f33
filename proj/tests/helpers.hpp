#pragma once

#include <initializer_list>
#include <random>
#include <set>
#include <vector>

#include "crew/layer.hpp"

namespace testutil {

inline crew::QuantizedLayer make_quantized(std::initializer_list<std::initializer_list<int>> rows,
                                           std::vector<int32_t> bias = {}) {
    crew::QuantizedLayer layer;
    layer.n_inputs = static_cast<int>(rows.size());
    layer.n_outputs = static_cast<int>(rows.begin()->size());
    for (const auto& row : rows)
        for (int v : row)
            layer.weights.push_back(static_cast<int8_t>(v));
    layer.bias = bias.empty() ? std::vector<int32_t>(layer.n_outputs, 0) : std::move(bias);
    return layer;
}

/// Random layer whose rows draw from a bounded value pool, so repetition
/// shows up at every size. Test-side generator, independent of the library.
inline crew::QuantizedLayer random_layer(std::mt19937& rng, int n, int m, int pool_max = 256) {
    crew::QuantizedLayer layer;
    layer.n_inputs = n;
    layer.n_outputs = m;
    layer.weights.resize(static_cast<size_t>(n) * m);
    layer.bias.resize(m);
    const int pool = 1 + static_cast<int>(rng() % static_cast<unsigned>(pool_max));
    std::vector<int8_t> values(pool);
    for (auto& v : values)
        v = static_cast<int8_t>(static_cast<int>(rng() % 256) - 128);
    for (auto& w : layer.weights)
        w = values[rng() % values.size()];
    for (auto& b : layer.bias)
        b = static_cast<int32_t>(rng() % 2001) - 1000;
    return layer;
}

inline std::vector<int8_t> random_input(std::mt19937& rng, int n) {
    std::vector<int8_t> input(n);
    for (auto& v : input)
        v = static_cast<int8_t>(static_cast<int>(rng() % 256) - 128);
    return input;
}

inline int distinct_in_row(const crew::QuantizedLayer& layer, int i) {
    std::set<int8_t> values;
    for (int j = 0; j < layer.n_outputs; ++j)
        values.insert(layer.at(i, j));
    return static_cast<int>(values.size());
}

}  // namespace testutil
