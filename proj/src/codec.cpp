#include "crew/codec.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "crew/bitstream.hpp"
#include "detail/binio.hpp"

namespace crew {

namespace {

constexpr char kMagic[4] = {'C', 'R', 'E', 'W'};
constexpr uint16_t kVersion = 1;

uint64_t unique_stream_bits(const std::vector<uint16_t>& uw_counts, int q) {
    // q-bit values, each row padded to a byte boundary
    uint64_t bits = 0;
    for (uint16_t uw : uw_counts)
        bits += ((static_cast<uint64_t>(uw) * q + 7) / 8) * 8;
    return bits;
}

uint64_t side_metadata_bits(int n) {
    const uint64_t counts = static_cast<uint64_t>(n) * 8;          // UW_i - 1 bytes
    const uint64_t descriptors = ((3ull * n + 7) / 8) * 8;         // 3-bit widths
    const uint64_t escape = ((static_cast<uint64_t>(n) + 7) / 8) * 8;  // width-8 flags
    return counts + descriptors + escape;
}

}  // namespace

int index_bit_width(int uw) {
    if (uw <= 1)
        return 0;
    return std::bit_width(static_cast<unsigned>(uw - 1));
}

double RowAnalysis::cumulative_below(int limit) const {
    if (uw_counts.empty())
        return 0.0;
    size_t below = 0;
    for (int uw : uw_counts)
        if (uw < limit)
            ++below;
    return static_cast<double>(below) / static_cast<double>(uw_counts.size());
}

RowAnalysis analyze_rows(const QuantizedLayer& layer) {
    layer.validate();
    RowAnalysis out;
    out.uw_counts.reserve(layer.n_inputs);
    uint64_t total = 0;
    for (int i = 0; i < layer.n_inputs; ++i) {
        bool seen[256] = {};
        int uw = 0;
        const int8_t* row = layer.weights.data() + static_cast<size_t>(i) * layer.n_outputs;
        for (int j = 0; j < layer.n_outputs; ++j) {
            uint8_t slot = static_cast<uint8_t>(row[j]);
            if (!seen[slot]) {
                seen[slot] = true;
                ++uw;
            }
        }
        out.uw_counts.push_back(uw);
        out.histogram[uw] += 1;
        total += static_cast<uint64_t>(uw);
    }
    out.mean_uw = static_cast<double>(total) / layer.n_inputs;
    out.muls_fraction = static_cast<double>(total) /
                        (static_cast<double>(layer.n_inputs) * layer.n_outputs);
    return out;
}

uint64_t CrewEncoding::total_unique() const {
    uint64_t total = 0;
    for (uint16_t uw : uw_counts)
        total += uw;
    return total;
}

CrewEncoding encode(const QuantizedLayer& layer) {
    layer.validate();
    CrewEncoding enc;
    enc.n_inputs = layer.n_inputs;
    enc.n_outputs = layer.n_outputs;
    enc.q = layer.q;
    enc.scale = layer.scale;
    enc.bias = layer.bias;
    enc.unique_weights.resize(layer.n_inputs);
    enc.uw_counts.resize(layer.n_inputs);
    enc.bit_widths.resize(layer.n_inputs);
    enc.index_matrix.resize(layer.weights.size());

    for (int i = 0; i < layer.n_inputs; ++i) {
        int slot_of[256];
        std::fill(slot_of, slot_of + 256, -1);
        auto& uniques = enc.unique_weights[i];
        const int8_t* row = layer.weights.data() + static_cast<size_t>(i) * layer.n_outputs;
        uint8_t* idx = enc.index_matrix.data() + static_cast<size_t>(i) * layer.n_outputs;
        for (int j = 0; j < layer.n_outputs; ++j) {
            uint8_t key = static_cast<uint8_t>(row[j]);
            if (slot_of[key] < 0) {
                slot_of[key] = static_cast<int>(uniques.size());
                uniques.push_back(row[j]);
            }
            idx[j] = static_cast<uint8_t>(slot_of[key]);
        }
        enc.uw_counts[i] = static_cast<uint16_t>(uniques.size());
        enc.bit_widths[i] = static_cast<uint8_t>(index_bit_width(static_cast<int>(uniques.size())));
    }
    return enc;
}

QuantizedLayer decode_to_dense(const CrewEncoding& enc) {
    QuantizedLayer layer;
    layer.n_inputs = enc.n_inputs;
    layer.n_outputs = enc.n_outputs;
    layer.q = enc.q;
    layer.scale = enc.scale;
    layer.bias = enc.bias;
    layer.weights.resize(static_cast<size_t>(enc.n_inputs) * enc.n_outputs);
    for (int i = 0; i < enc.n_inputs; ++i) {
        const auto& uniques = enc.unique_weights[i];
        const uint8_t* idx = enc.index_matrix.data() + static_cast<size_t>(i) * enc.n_outputs;
        int8_t* row = layer.weights.data() + static_cast<size_t>(i) * enc.n_outputs;
        for (int j = 0; j < enc.n_outputs; ++j) {
            if (idx[j] >= uniques.size())
                throw format_error("index out of range of the unique table");
            row[j] = uniques[idx[j]];
        }
    }
    return layer;
}

uint64_t packed_index_bits(const std::vector<uint8_t>& bit_widths, int n_outputs,
                           int bs_row, int bs_col) {
    const int n = static_cast<int>(bit_widths.size());
    uint64_t total = 0;
    for (int r0 = 0; r0 < n; r0 += bs_row) {
        const int rows = std::min(bs_row, n - r0);
        uint64_t row_bits = 0;
        for (int i = r0; i < r0 + rows; ++i)
            row_bits += bit_widths[i];
        for (int c0 = 0; c0 < n_outputs; c0 += bs_col) {
            const uint64_t cols = static_cast<uint64_t>(std::min(bs_col, n_outputs - c0));
            total += ((row_bits * cols + 7) / 8) * 8;
        }
    }
    return total;
}

StorageReport storage_report(const CrewEncoding& enc, int bs_row, int bs_col) {
    if (bs_row < 1 || bs_col < 1)
        throw config_error("block size must be at least 1x1");
    StorageReport rep;
    const uint64_t cells = static_cast<uint64_t>(enc.n_inputs) * enc.n_outputs;
    rep.dense_bits = cells * enc.q;
    rep.unique_bits = unique_stream_bits(enc.uw_counts, enc.q);
    rep.index_bits = packed_index_bits(enc.bit_widths, enc.n_outputs,
                                       std::min(bs_row, enc.n_inputs),
                                       std::min(bs_col, enc.n_outputs));
    rep.metadata_bits = side_metadata_bits(enc.n_inputs);
    rep.crew_bits = rep.unique_bits + rep.index_bits + rep.metadata_bits;
    const int ucnn_width = index_bit_width(enc.n_inputs);
    rep.ucnn_index_bits = cells * static_cast<uint64_t>(ucnn_width);
    rep.saved_muls_fraction =
        1.0 - static_cast<double>(enc.total_unique()) / static_cast<double>(cells);
    rep.storage_reduction_fraction =
        1.0 - static_cast<double>(rep.unique_bits + rep.index_bits) /
                  static_cast<double>(rep.dense_bits);
    return rep;
}

int PackedCrewLayer::row_bit_width(int i) const {
    const size_t bit_pos = static_cast<size_t>(i) * 3;
    int desc = 0;
    for (int b = 0; b < 3; ++b) {
        size_t p = bit_pos + b;
        desc = (desc << 1) | ((size_descriptors[p >> 3] >> (7 - (p & 7))) & 1);
    }
    const bool escape = (width_escape[i >> 3] >> (7 - (i & 7))) & 1;
    if (escape) {
        if (desc != 7)
            throw format_error("width escape set on a descriptor other than 7");
        return 8;
    }
    return desc;
}

PackedCrewLayer pack(const CrewEncoding& enc, int bs_row, int bs_col) {
    if (bs_row < 1 || bs_row > enc.n_inputs || bs_col < 1 || bs_col > enc.n_outputs)
        throw config_error("block size must fit inside the layer");

    PackedCrewLayer out;
    out.n_inputs = static_cast<uint32_t>(enc.n_inputs);
    out.n_outputs = static_cast<uint32_t>(enc.n_outputs);
    out.q = static_cast<uint8_t>(enc.q);
    out.scale = enc.scale;
    out.bs_row = static_cast<uint16_t>(bs_row);
    out.bs_col = static_cast<uint16_t>(bs_col);
    out.bias = enc.bias;

    const int n = enc.n_inputs;
    const int m = enc.n_outputs;

    out.uw_counts_minus1.resize(n);
    for (int i = 0; i < n; ++i)
        out.uw_counts_minus1[i] = static_cast<uint8_t>(enc.uw_counts[i] - 1);

    // 3-bit widths; width 8 is descriptor 7 plus its escape bit
    BitWriter desc;
    out.width_escape.assign((n + 7) / 8, 0);
    for (int i = 0; i < n; ++i) {
        int b = enc.bit_widths[i];
        if (b == 8) {
            desc.write(7, 3);
            out.width_escape[i >> 3] |= static_cast<uint8_t>(1u << (7 - (i & 7)));
        } else {
            desc.write(static_cast<uint32_t>(b), 3);
        }
    }
    out.size_descriptors = desc.take();

    for (int i = 0; i < n; ++i) {
        BitWriter row;
        const uint32_t mask = (enc.q == 8) ? 0xffu : ((1u << enc.q) - 1);
        for (int8_t v : enc.unique_weights[i])
            row.write(static_cast<uint8_t>(v) & mask, enc.q);
        auto bytes = row.take();
        out.unique_stream.insert(out.unique_stream.end(), bytes.begin(), bytes.end());
    }

    for (int r0 = 0; r0 < n; r0 += bs_row) {
        const int rows = std::min(bs_row, n - r0);
        for (int c0 = 0; c0 < m; c0 += bs_col) {
            const int cols = std::min(bs_col, m - c0);
            BitWriter block;
            for (int i = r0; i < r0 + rows; ++i) {
                const int b = enc.bit_widths[i];
                if (b == 0)
                    continue;
                const uint8_t* idx = enc.index_matrix.data() + static_cast<size_t>(i) * m + c0;
                for (int j = 0; j < cols; ++j)
                    block.write(idx[j], b);
            }
            auto bytes = block.take();
            out.block_stream.insert(out.block_stream.end(), bytes.begin(), bytes.end());
        }
    }
    return out;
}

namespace {

struct BlockTable {
    std::vector<size_t> offset;  // byte offset of each block, +1 sentinel
    int blocks_across = 0;
};

BlockTable block_offsets(const PackedCrewLayer& p) {
    BlockTable table;
    const int n = static_cast<int>(p.n_inputs);
    const int m = static_cast<int>(p.n_outputs);
    table.blocks_across = p.blocks_across();
    table.offset.reserve(static_cast<size_t>(p.blocks_down()) * table.blocks_across + 1);
    size_t pos = 0;
    for (int r0 = 0; r0 < n; r0 += p.bs_row) {
        const int rows = std::min<int>(p.bs_row, n - r0);
        uint64_t row_bits = 0;
        for (int i = r0; i < r0 + rows; ++i)
            row_bits += static_cast<uint64_t>(p.row_bit_width(i));
        for (int c0 = 0; c0 < m; c0 += p.bs_col) {
            const uint64_t cols = static_cast<uint64_t>(std::min<int>(p.bs_col, m - c0));
            table.offset.push_back(pos);
            pos += (row_bits * cols + 7) / 8;
        }
    }
    table.offset.push_back(pos);
    return table;
}

}  // namespace

DecodedBlock decode_block(const PackedCrewLayer& packed, int block_row, int block_col) {
    const int n = static_cast<int>(packed.n_inputs);
    const int m = static_cast<int>(packed.n_outputs);
    if (block_row < 0 || block_row >= packed.blocks_down() || block_col < 0 ||
        block_col >= packed.blocks_across())
        throw config_error("block coordinates out of range");

    auto table = block_offsets(packed);
    const size_t flat = static_cast<size_t>(block_row) * table.blocks_across + block_col;
    if (table.offset.back() > packed.block_stream.size())
        throw format_error("block stream truncated");

    DecodedBlock out;
    const int r0 = block_row * packed.bs_row;
    const int c0 = block_col * packed.bs_col;
    out.rows = std::min<int>(packed.bs_row, n - r0);
    out.cols = std::min<int>(packed.bs_col, m - c0);
    out.indexes.assign(static_cast<size_t>(out.rows) * out.cols, 0);

    BitReader reader(std::span<const uint8_t>(packed.block_stream)
                         .subspan(table.offset[flat], table.offset[flat + 1] - table.offset[flat]));
    for (int r = 0; r < out.rows; ++r) {
        const int b = packed.row_bit_width(r0 + r);
        if (b == 0)
            continue;  // single-unique rows carry no bits, indexes stay 0
        for (int c = 0; c < out.cols; ++c)
            out.indexes[static_cast<size_t>(r) * out.cols + c] =
                static_cast<uint8_t>(reader.read(b));
    }
    return out;
}

CrewEncoding unpack(const PackedCrewLayer& packed) {
    const int n = static_cast<int>(packed.n_inputs);
    const int m = static_cast<int>(packed.n_outputs);

    CrewEncoding enc;
    enc.n_inputs = n;
    enc.n_outputs = m;
    enc.q = packed.q;
    enc.scale = packed.scale;
    enc.bias = packed.bias;
    enc.uw_counts.resize(n);
    enc.bit_widths.resize(n);
    enc.unique_weights.resize(n);
    enc.index_matrix.resize(static_cast<size_t>(n) * m);

    detail::ByteCursor uniq(packed.unique_stream);
    for (int i = 0; i < n; ++i) {
        const int uw = packed.uw_counts_minus1[i] + 1;
        if (uw > m)
            throw format_error("row " + std::to_string(i) +
                               " claims more unique weights than it has cells");
        const int b = packed.row_bit_width(i);
        if (b != index_bit_width(uw))
            throw format_error("size descriptor disagrees with the unique count of row " +
                               std::to_string(i));
        enc.uw_counts[i] = static_cast<uint16_t>(uw);
        enc.bit_widths[i] = static_cast<uint8_t>(b);

        const size_t row_bytes = (static_cast<size_t>(uw) * packed.q + 7) / 8;
        BitReader bits(uniq.take(row_bytes));
        auto& values = enc.unique_weights[i];
        values.resize(uw);
        for (int k = 0; k < uw; ++k) {
            // sign-extend q-bit values back to int8
            auto raw = static_cast<int32_t>(bits.read(packed.q));
            raw = (raw << (32 - packed.q)) >> (32 - packed.q);
            values[k] = static_cast<int8_t>(raw);
        }
        // duplicate values would make the mapping ambiguous
        bool seen[256] = {};
        for (int8_t v : values) {
            uint8_t key = static_cast<uint8_t>(v);
            if (seen[key])
                throw format_error("duplicate unique weight in row " + std::to_string(i));
            seen[key] = true;
        }
    }
    if (uniq.remaining() != 0)
        throw format_error("unique-weight stream longer than its rows");

    auto table = block_offsets(packed);
    if (table.offset.back() != packed.block_stream.size())
        throw format_error("block stream length does not match the size descriptors");

    for (int br = 0; br < packed.blocks_down(); ++br) {
        for (int bc = 0; bc < packed.blocks_across(); ++bc) {
            auto block = decode_block(packed, br, bc);
            const int r0 = br * packed.bs_row;
            const int c0 = bc * packed.bs_col;
            for (int r = 0; r < block.rows; ++r) {
                const int uw = enc.uw_counts[r0 + r];
                uint8_t* dst = enc.index_matrix.data() +
                               static_cast<size_t>(r0 + r) * m + c0;
                for (int c = 0; c < block.cols; ++c) {
                    uint8_t v = block.indexes[static_cast<size_t>(r) * block.cols + c];
                    if (v >= uw)
                        throw format_error("decoded index exceeds the unique count");
                    dst[c] = v;
                }
            }
        }
    }
    return enc;
}

std::vector<uint8_t> PackedCrewLayer::to_bytes() const {
    std::vector<uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 4);
    detail::put(out, kVersion);
    detail::put(out, n_inputs);
    detail::put(out, n_outputs);
    detail::put(out, q);
    detail::put(out, scale);
    detail::put(out, bs_row);
    detail::put(out, bs_col);
    out.insert(out.end(), uw_counts_minus1.begin(), uw_counts_minus1.end());
    out.insert(out.end(), size_descriptors.begin(), size_descriptors.end());
    out.insert(out.end(), width_escape.begin(), width_escape.end());
    out.insert(out.end(), unique_stream.begin(), unique_stream.end());
    for (int32_t b : bias)
        detail::put(out, b);
    out.insert(out.end(), block_stream.begin(), block_stream.end());
    return out;
}

PackedCrewLayer PackedCrewLayer::from_bytes(std::span<const uint8_t> bytes) {
    detail::ByteCursor cur(bytes);
    auto magic = cur.take(4);
    if (!std::equal(magic.begin(), magic.end(), kMagic))
        throw format_error("bad magic, not a CREW stream");
    const auto version = cur.get<uint16_t>();
    if (version != kVersion)
        throw format_error("unsupported CREW stream version " + std::to_string(version));

    PackedCrewLayer p;
    p.n_inputs = cur.get<uint32_t>();
    p.n_outputs = cur.get<uint32_t>();
    p.q = cur.get<uint8_t>();
    p.scale = cur.get<float>();
    p.bs_row = cur.get<uint16_t>();
    p.bs_col = cur.get<uint16_t>();
    if (p.n_inputs < 1 || p.n_outputs < 1)
        throw format_error("CREW stream with empty dimensions");
    if (p.q < 2 || p.q > 8)
        throw format_error("CREW stream with unsupported bit width");
    if (p.bs_row < 1 || p.bs_col < 1)
        throw format_error("CREW stream with empty block size");

    const int n = static_cast<int>(p.n_inputs);
    auto counts = cur.take(static_cast<size_t>(n));
    p.uw_counts_minus1.assign(counts.begin(), counts.end());
    auto desc = cur.take((static_cast<size_t>(n) * 3 + 7) / 8);
    p.size_descriptors.assign(desc.begin(), desc.end());
    auto escape = cur.take((static_cast<size_t>(n) + 7) / 8);
    p.width_escape.assign(escape.begin(), escape.end());

    size_t uniq_bytes = 0;
    for (int i = 0; i < n; ++i)
        uniq_bytes += (static_cast<size_t>(p.uw_counts_minus1[i] + 1) * p.q + 7) / 8;
    auto uniq = cur.take(uniq_bytes);
    p.unique_stream.assign(uniq.begin(), uniq.end());

    p.bias.resize(p.n_outputs);
    for (auto& b : p.bias)
        b = cur.get<int32_t>();

    auto rest = cur.take(cur.remaining());
    p.block_stream.assign(rest.begin(), rest.end());

    // validates descriptor consistency and the block stream length
    auto table = block_offsets(p);
    if (table.offset.back() != p.block_stream.size())
        throw format_error("block stream length does not match the size descriptors");
    return p;
}

void save_packed(const PackedCrewLayer& packed, const std::string& path) {
    detail::write_file_atomic(path, packed.to_bytes());
}

PackedCrewLayer load_packed(const std::string& path) {
    auto bytes = detail::read_file(path);
    try {
        return PackedCrewLayer::from_bytes(bytes);
    } catch (const format_error& e) {
        throw format_error(path + ": " + e.what());
    }
}

}  // namespace crew
