#include "crew/quantize.hpp"

#include <algorithm>
#include <cmath>

namespace crew {

namespace {

int32_t round_half_away(double x) {
    return static_cast<int32_t>(x >= 0.0 ? std::floor(x + 0.5) : std::ceil(x - 0.5));
}

}  // namespace

QuantizedLayer quantize_layer(const FloatLayer& layer, int q) {
    layer.validate();
    if (q < 2 || q > 8)
        throw config_error("bit width must be in [2, 8]");

    float max_abs = 0.0f;
    for (float w : layer.weights)
        max_abs = std::max(max_abs, std::fabs(w));

    const int hi = (1 << (q - 1)) - 1;
    const int lo = -(1 << (q - 1));
    // all-zero layer: any scale works, pick 1 to avoid dividing by zero
    const float scale = max_abs > 0.0f ? max_abs / static_cast<float>(hi) : 1.0f;

    QuantizedLayer out;
    out.n_inputs = layer.n_inputs;
    out.n_outputs = layer.n_outputs;
    out.q = q;
    out.scale = scale;
    out.weights.resize(layer.weights.size());
    for (size_t k = 0; k < layer.weights.size(); ++k) {
        int32_t v = round_half_away(static_cast<double>(layer.weights[k]) / scale);
        out.weights[k] = static_cast<int8_t>(std::clamp(v, lo, hi));
    }
    out.bias.resize(layer.bias.size());
    for (size_t k = 0; k < layer.bias.size(); ++k)
        out.bias[k] = round_half_away(static_cast<double>(layer.bias[k]) / scale);
    return out;
}

FloatLayer dequantize(const QuantizedLayer& layer) {
    layer.validate();
    FloatLayer out;
    out.n_inputs = layer.n_inputs;
    out.n_outputs = layer.n_outputs;
    out.weights.resize(layer.weights.size());
    for (size_t k = 0; k < layer.weights.size(); ++k)
        out.weights[k] = static_cast<float>(layer.weights[k]) * layer.scale;
    out.bias.resize(layer.bias.size());
    for (size_t k = 0; k < layer.bias.size(); ++k)
        out.bias[k] = static_cast<float>(layer.bias[k]) * layer.scale;
    return out;
}

}  // namespace crew
