#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "crew/layer.hpp"

namespace crew {

/// Generation target for synthetic layers: how many distinct weight values
/// each input row should end up with. Either a constant or a discrete
/// histogram of (unique-count, probability) pairs.
struct UniqueWeightProfile {
    int n_inputs = 0;
    int n_outputs = 0;
    // (uw value, probability); a single entry with probability 1 is the
    // constant case.
    std::vector<std::pair<int, double>> uw_histogram;
    // Skew of the per-row value-frequency distribution. Rank r gets mass
    // proportional to 1/r^zipf_exponent, so higher exponents concentrate
    // usage on a few values and leave a long low-frequency tail.
    double zipf_exponent = 1.0;

    static UniqueWeightProfile constant(int uw, int n_inputs, int n_outputs);

    void validate() const;
};

using LoadedLayer = std::variant<FloatLayer, QuantizedLayer>;

/// Reads an FCL1 container. The dtype byte decides which alternative is
/// returned.
LoadedLayer load_layer(const std::string& path);

FloatLayer load_float_layer(const std::string& path);
QuantizedLayer load_quantized_layer(const std::string& path);

void save_layer(const FloatLayer& layer, const std::string& path);
void save_layer(const QuantizedLayer& layer, const std::string& path);

/// Deterministic synthetic layer: every row i realizes exactly the unique
/// count drawn from the profile, with value usage frequencies skewed by the
/// profile's zipf exponent. Bias is zero, scale 1.0.
QuantizedLayer synth_layer(const UniqueWeightProfile& profile, uint64_t seed);

}  // namespace crew
