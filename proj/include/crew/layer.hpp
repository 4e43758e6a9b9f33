#pragma once

#include <cstdint>
#include <vector>

#include "crew/error.hpp"

namespace crew {

/// Fully-connected layer in the float domain. Row i of `weights` holds the
/// n_outputs weights of input neuron i (row-major).
struct FloatLayer {
    int n_inputs = 0;
    int n_outputs = 0;
    std::vector<float> weights;  // n_inputs * n_outputs, row-major
    std::vector<float> bias;     // n_outputs

    float at(int i, int j) const { return weights[static_cast<size_t>(i) * n_outputs + j]; }
    float& at(int i, int j) { return weights[static_cast<size_t>(i) * n_outputs + j]; }

    void validate() const;
};

/// Fully-connected layer with q-bit signed integer weights and a single
/// dequantization scale. Biases are int32 in the same scale.
struct QuantizedLayer {
    int n_inputs = 0;
    int n_outputs = 0;
    int q = 8;
    float scale = 1.0f;
    std::vector<int8_t> weights;  // n_inputs * n_outputs, row-major
    std::vector<int32_t> bias;    // n_outputs

    int8_t at(int i, int j) const { return weights[static_cast<size_t>(i) * n_outputs + j]; }
    int8_t& at(int i, int j) { return weights[static_cast<size_t>(i) * n_outputs + j]; }

    void validate() const;
};

}  // namespace crew
