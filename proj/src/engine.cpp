#include "crew/engine.hpp"

#include <cmath>
#include <cstdlib>

#include "detail/rng.hpp"

namespace crew {

namespace {

void check_input(int n_inputs, size_t input_size) {
    if (input_size != static_cast<size_t>(n_inputs))
        throw format_error("input length does not match the layer's input count");
    // 8-bit operands and N <= 2^15 keep int32 accumulation overflow-free
    if (n_inputs > (1 << 15))
        throw format_error("input count exceeds the int32 accumulation guarantee");
}

}  // namespace

ExecutionTrace dense_forward(const QuantizedLayer& layer, std::span<const int8_t> input) {
    check_input(layer.n_inputs, input.size());
    ExecutionTrace trace;
    trace.outputs.assign(layer.n_outputs, 0);
    for (int i = 0; i < layer.n_inputs; ++i) {
        const int32_t in = input[i];
        const int8_t* row = layer.weights.data() + static_cast<size_t>(i) * layer.n_outputs;
        for (int j = 0; j < layer.n_outputs; ++j)
            trace.outputs[j] += in * row[j];
    }
    for (int j = 0; j < layer.n_outputs; ++j)
        trace.outputs[j] += layer.bias[j];
    const uint64_t cells = static_cast<uint64_t>(layer.n_inputs) * layer.n_outputs;
    trace.multiplications = cells;
    trace.additions = cells + layer.n_outputs;
    return trace;
}

CrewForwardResult crew_forward(const CrewEncoding& enc, std::span<const int8_t> input) {
    check_input(enc.n_inputs, input.size());
    CrewForwardResult res;

    // step 1: memoize input * unique products
    res.table.row_offset.resize(enc.n_inputs + 1);
    res.table.row_offset[0] = 0;
    for (int i = 0; i < enc.n_inputs; ++i)
        res.table.row_offset[i + 1] = res.table.row_offset[i] + enc.uw_counts[i];
    res.table.values.resize(res.table.row_offset.back());
    for (int i = 0; i < enc.n_inputs; ++i) {
        const int32_t in = input[i];
        int16_t* dst = res.table.values.data() + res.table.row_offset[i];
        const auto& uniques = enc.unique_weights[i];
        for (size_t k = 0; k < uniques.size(); ++k)
            dst[k] = static_cast<int16_t>(in * uniques[k]);
    }

    // step 2: gather memoized products through the index matrix
    auto& trace = res.trace;
    trace.outputs.assign(enc.n_outputs, 0);
    for (int i = 0; i < enc.n_inputs; ++i) {
        const int16_t* row = res.table.values.data() + res.table.row_offset[i];
        const uint8_t* idx = enc.index_matrix.data() + static_cast<size_t>(i) * enc.n_outputs;
        for (int j = 0; j < enc.n_outputs; ++j)
            trace.outputs[j] += row[idx[j]];
    }
    for (int j = 0; j < enc.n_outputs; ++j)
        trace.outputs[j] += enc.bias[j];

    const uint64_t cells = static_cast<uint64_t>(enc.n_inputs) * enc.n_outputs;
    trace.multiplications = enc.total_unique();
    trace.additions = cells + enc.n_outputs;
    trace.partial_product_table_entries = res.table.values.size();
    trace.index_lookups = cells;
    return res;
}

ExecutionTrace ucnn_forward(const QuantizedLayer& layer, std::span<const int8_t> input) {
    check_input(layer.n_inputs, input.size());
    ExecutionTrace trace;
    trace.outputs.assign(layer.n_outputs, 0);

    std::vector<int32_t> group_sum(256);
    std::vector<int32_t> group_stamp(256, -1);
    std::vector<uint8_t> group_values;
    group_values.reserve(256);

    for (int j = 0; j < layer.n_outputs; ++j) {
        group_values.clear();
        // gather inputs per distinct weight of this column
        for (int i = 0; i < layer.n_inputs; ++i) {
            const uint8_t key = static_cast<uint8_t>(layer.at(i, j));
            if (group_stamp[key] != j) {
                group_stamp[key] = j;
                group_sum[key] = 0;
                group_values.push_back(key);
            }
            group_sum[key] += input[i];
        }
        int32_t acc = layer.bias[j];
        for (uint8_t key : group_values)
            acc += static_cast<int32_t>(static_cast<int8_t>(key)) * group_sum[key];
        trace.outputs[j] = acc;
        trace.multiplications += group_values.size();
    }
    const uint64_t cells = static_cast<uint64_t>(layer.n_inputs) * layer.n_outputs;
    trace.additions = cells + layer.n_outputs;
    return trace;
}

VerifyReport verify_equivalence(const CrewEncoding& enc, const QuantizedLayer& reference,
                                int vectors, uint64_t seed) {
    if (reference.n_inputs != enc.n_inputs || reference.n_outputs != enc.n_outputs)
        throw format_error("reference layer dimensions do not match the encoding");
    VerifyReport rep;
    rep.vectors = vectors;
    double rel_sum = 0.0;
    std::vector<int8_t> input(enc.n_inputs);
    for (int k = 0; k < vectors; ++k) {
        auto rng = detail::Rng::for_index(seed, static_cast<uint64_t>(k));
        for (auto& v : input)
            v = static_cast<int8_t>(rng.range(-128, 127));
        const auto got = crew_forward(enc, input).trace.outputs;
        const auto want = dense_forward(reference, input).outputs;
        bool exact = true;
        double diff2 = 0.0, ref2 = 0.0;
        for (int j = 0; j < enc.n_outputs; ++j) {
            const int64_t d = static_cast<int64_t>(got[j]) - want[j];
            diff2 += static_cast<double>(d) * d;
            ref2 += static_cast<double>(want[j]) * want[j];
            if (d != 0) {
                exact = false;
                ++rep.mismatched_cells;
                rep.max_abs_diff = std::max<int64_t>(rep.max_abs_diff, std::llabs(d));
                if (!rep.has_mismatch) {
                    rep.has_mismatch = true;
                    rep.first_mismatch_vector = k;
                    rep.first_mismatch_output = j;
                    rep.first_expected = want[j];
                    rep.first_actual = got[j];
                }
            }
        }
        if (exact)
            ++rep.exact_vectors;
        rel_sum += ref2 > 0.0 ? std::sqrt(diff2 / ref2) : (diff2 > 0.0 ? std::sqrt(diff2) : 0.0);
    }
    rep.mean_rel_err = vectors > 0 ? rel_sum / vectors : 0.0;
    return rep;
}

std::vector<int> column_unique_counts(const QuantizedLayer& layer) {
    std::vector<int> counts(layer.n_outputs, 0);
    std::vector<int32_t> stamp(256, -1);
    for (int j = 0; j < layer.n_outputs; ++j) {
        int uw = 0;
        for (int i = 0; i < layer.n_inputs; ++i) {
            const uint8_t key = static_cast<uint8_t>(layer.at(i, j));
            if (stamp[key] != j) {
                stamp[key] = j;
                ++uw;
            }
        }
        counts[j] = uw;
    }
    return counts;
}

}  // namespace crew
