#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "crew/layer.hpp"

namespace crew {

/// Index bit width for a row with `uw` distinct values: ceil(log2 uw),
/// 0 when the row has a single value.
int index_bit_width(int uw);

struct RowAnalysis {
    std::vector<int> uw_counts;   // distinct values per input row
    double mean_uw = 0.0;         // average unique weights per input
    double muls_fraction = 0.0;   // sum(uw) / (N*M)
    std::map<int, int> histogram; // uw value -> number of rows

    /// Fraction of rows with fewer than `limit` unique weights.
    double cumulative_below(int limit) const;
};

RowAnalysis analyze_rows(const QuantizedLayer& layer);

/// Per-input unique-weight tables plus the index matrix selecting which
/// memoized product feeds each output. Lossless: reconstructing the dense
/// matrix from it reproduces the source layer cell-exactly.
struct CrewEncoding {
    int n_inputs = 0;
    int n_outputs = 0;
    int q = 8;
    float scale = 1.0f;
    std::vector<std::vector<int8_t>> unique_weights;  // row i: UW_i values, first-occurrence order
    std::vector<uint16_t> uw_counts;                  // UW_i
    std::vector<uint8_t> bit_widths;                  // ceil(log2 UW_i), 0 if UW_i == 1
    std::vector<uint8_t> index_matrix;                // N*M row-major, entry < UW_i
    std::vector<int32_t> bias;

    uint8_t index_at(int i, int j) const {
        return index_matrix[static_cast<size_t>(i) * n_outputs + j];
    }
    uint64_t total_unique() const;
};

CrewEncoding encode(const QuantizedLayer& layer);

/// Inverse of encode: expands the index matrix back to a dense layer.
QuantizedLayer decode_to_dense(const CrewEncoding& enc);

struct StorageReport {
    uint64_t dense_bits = 0;        // N*M*q
    uint64_t unique_bits = 0;       // per-row byte-aligned q-bit unique streams
    uint64_t index_bits = 0;        // packed index blocks including padding
    uint64_t metadata_bits = 0;     // uw counts + size descriptors + width escape bitmap
    uint64_t crew_bits = 0;         // unique + index + metadata
    uint64_t ucnn_index_bits = 0;   // N*M*ceil(log2 N)
    double saved_muls_fraction = 0.0;
    // 1 - (unique_bits + index_bits) / dense_bits: how much of the dense
    // weight payload the unique tables plus packed indexes replace. Per-row
    // side metadata is reported separately in metadata_bits / crew_bits.
    double storage_reduction_fraction = 0.0;
};

StorageReport storage_report(const CrewEncoding& enc, int bs_row = 16, int bs_col = 16);

/// Serialized CREW layer: header, per-row metadata, unique-weight stream,
/// biases, then index blocks in row-major block order. Every block is
/// bit-concatenated rows at that row's index width, padded to a byte.
struct PackedCrewLayer {
    uint32_t n_inputs = 0;
    uint32_t n_outputs = 0;
    uint8_t q = 8;
    float scale = 1.0f;
    uint16_t bs_row = 16;
    uint16_t bs_col = 16;
    std::vector<uint8_t> uw_counts_minus1;   // N bytes
    std::vector<uint8_t> size_descriptors;   // ceil(3N/8) bytes, 3-bit fields MSB-first
    std::vector<uint8_t> width_escape;       // ceil(N/8) bytes, bit set -> width 8
    std::vector<uint8_t> unique_stream;      // row-concatenated, byte-aligned per row
    std::vector<int32_t> bias;               // M entries
    std::vector<uint8_t> block_stream;

    int blocks_down() const { return static_cast<int>((n_inputs + bs_row - 1) / bs_row); }
    int blocks_across() const { return static_cast<int>((n_outputs + bs_col - 1) / bs_col); }

    /// Index bit width of row i, decoded from descriptor + escape bit.
    int row_bit_width(int i) const;

    std::vector<uint8_t> to_bytes() const;
    static PackedCrewLayer from_bytes(std::span<const uint8_t> bytes);
};

PackedCrewLayer pack(const CrewEncoding& enc, int bs_row, int bs_col);
CrewEncoding unpack(const PackedCrewLayer& packed);

/// Decodes one block back to 8-bit indexes, row-major within the block.
/// Ragged edge blocks come back with their true (smaller) dimensions.
struct DecodedBlock {
    int rows = 0;
    int cols = 0;
    std::vector<uint8_t> indexes;  // rows*cols
};
DecodedBlock decode_block(const PackedCrewLayer& packed, int block_row, int block_col);

void save_packed(const PackedCrewLayer& packed, const std::string& path);
PackedCrewLayer load_packed(const std::string& path);

/// Exact bit count of the packed index blocks (padding included) without
/// materializing the stream.
uint64_t packed_index_bits(const std::vector<uint8_t>& bit_widths, int n_outputs,
                           int bs_row, int bs_col);

}  // namespace crew
