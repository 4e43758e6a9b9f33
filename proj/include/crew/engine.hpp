#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "crew/codec.hpp"
#include "crew/layer.hpp"

namespace crew {

struct ExecutionTrace {
    uint64_t multiplications = 0;
    uint64_t additions = 0;
    uint64_t partial_product_table_entries = 0;
    uint64_t index_lookups = 0;
    std::vector<int32_t> outputs;
};

/// Memo buffer of step 1: row i holds UW_i products input(i) * unique(i,k).
/// 8-bit operands keep every entry within 16 bits.
struct PartialProductTable {
    std::vector<int16_t> values;
    std::vector<uint32_t> row_offset;  // N+1 entries

    int16_t at(int i, int k) const { return values[row_offset[i] + k]; }
};

/// Reference dot product: out(j) = sum_i w(i,j)*in(i) + bias(j), int32.
ExecutionTrace dense_forward(const QuantizedLayer& layer, std::span<const int8_t> input);

struct CrewForwardResult {
    ExecutionTrace trace;
    PartialProductTable table;
};

/// Two-step memoized execution: multiply each input by its unique weights
/// once, then assemble outputs through index lookups. Bit-exact with
/// dense_forward.
CrewForwardResult crew_forward(const CrewEncoding& enc, std::span<const int8_t> input);

/// Per-output factorization: inputs sharing a weight value in column j are
/// summed first, then each distinct value is multiplied once.
ExecutionTrace ucnn_forward(const QuantizedLayer& layer, std::span<const int8_t> input);

/// Column-wise distinct counts (factorization group counts per output).
std::vector<int> column_unique_counts(const QuantizedLayer& layer);

struct VerifyReport {
    int vectors = 0;
    int exact_vectors = 0;
    uint64_t mismatched_cells = 0;
    int64_t max_abs_diff = 0;
    double mean_rel_err = 0.0;  // mean relative L2 over the batch
    bool has_mismatch = false;
    int first_mismatch_vector = -1;
    int first_mismatch_output = -1;
    int32_t first_expected = 0;
    int32_t first_actual = 0;

    bool all_exact() const { return exact_vectors == vectors; }
};

/// Runs crew_forward against dense_forward on `vectors` seeded random int8
/// inputs and summarizes the differences. Exact for a faithful encoding,
/// non-zero after approximation.
VerifyReport verify_equivalence(const CrewEncoding& enc, const QuantizedLayer& reference,
                                int vectors = 64, uint64_t seed = 0xc0ffee);

}  // namespace crew
