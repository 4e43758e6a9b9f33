#pragma once

#include "crew/layer.hpp"

namespace crew {

/// Symmetric per-tensor linear quantization to q-bit signed integers.
/// scale = max|w| / (2^(q-1) - 1), values rounded half away from zero.
/// An all-zero layer gets scale 1.0. Biases are rounded to int32 in the
/// same scale so integer execution can add them directly.
QuantizedLayer quantize_layer(const FloatLayer& layer, int q = 8);

FloatLayer dequantize(const QuantizedLayer& layer);

}  // namespace crew
