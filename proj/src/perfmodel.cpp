#include "crew/perfmodel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "crew/engine.hpp"

namespace crew {

namespace {

constexpr const char* kBuffers[] = {"input", "weight", "index", "pp",
                                    "indirection", "psum", "output"};

uint64_t ceil_div(uint64_t a, uint64_t b) {
    return (a + b - 1) / b;
}

uint64_t bytes_for_bits(uint64_t bits) {
    return (bits + 7) / 8;
}

void finish(SimReport& r, const DataflowConfig& cfg) {
    r.traffic_cycles = ceil_div(r.dram.total(), static_cast<uint64_t>(cfg.dram_bytes_per_cycle));
    r.cycles = std::max(r.compute_cycles, r.traffic_cycles);
    r.seconds = static_cast<double>(r.cycles) / cfg.frequency_hz;
}

struct CrewShape {
    std::vector<uint16_t> uw_counts;
    std::vector<uint8_t> bit_widths;
    int n = 0, m = 0, q = 8;
    uint64_t index_stream_bytes = 0;  // packed blocks only, metadata separate
};

SimReport simulate_crew_shape(const CrewShape& s, const DataflowConfig& cfg) {
    cfg.validate();
    SimReport r;
    r.dataflow = "crew";

    const uint64_t cells = static_cast<uint64_t>(s.n) * s.m;
    uint64_t total_uw = 0;
    for (uint16_t uw : s.uw_counts)
        total_uw += uw;

    // step 1: inputs round-robin over PE rows, each row's unique
    // multiplications spread across its pe_cols multipliers
    uint64_t step1_first = 0;
    uint64_t step1_total = 0;
    for (int row = 0; row < cfg.pe_rows; ++row) {
        uint64_t uw_sum = 0, uw_first = 0;
        int assigned = 0;
        for (int i = row; i < s.n; i += cfg.pe_rows) {
            uw_sum += s.uw_counts[i];
            if (assigned < cfg.bs_row)
                uw_first += s.uw_counts[i];
            ++assigned;
        }
        step1_total = std::max(step1_total, ceil_div(uw_sum, cfg.pe_cols));
        step1_first = std::max(step1_first, ceil_div(uw_first, cfg.pe_cols));
    }

    // step 2 overlaps everything past the first block batch
    const uint64_t step2 = ceil_div(cells, static_cast<uint64_t>(cfg.pe_rows) * cfg.pe_cols);
    const uint64_t stripes =
        ceil_div(s.m, static_cast<uint64_t>(cfg.pe_cols) * cfg.bs_col);
    const uint64_t drain = stripes * cfg.pe_rows;
    const uint64_t writeback = ceil_div(s.m, cfg.pe_cols);
    r.compute_cycles = step1_first + std::max(step2, step1_total - step1_first) +
                       drain + writeback;

    uint64_t unique_bytes = 0;
    for (uint16_t uw : s.uw_counts)
        unique_bytes += bytes_for_bits(static_cast<uint64_t>(uw) * s.q);
    const uint64_t metadata_bytes = static_cast<uint64_t>(s.n)          // UW_i - 1
                                    + bytes_for_bits(3ull * s.n)        // size descriptors
                                    + bytes_for_bits(s.n);              // width escapes
    r.dram.unique_weights = unique_bytes;
    r.dram.weights_or_indexes = s.index_stream_bytes + metadata_bytes;
    r.dram.inputs = bytes_for_bits(static_cast<uint64_t>(s.n) * cfg.input_bits);
    r.dram.outputs = bytes_for_bits(static_cast<uint64_t>(s.m) * cfg.accumulator_bits);

    r.multiplications = total_uw;
    r.additions = cells + s.m;

    r.sram_accesses["input_read"] = static_cast<uint64_t>(s.n);
    r.sram_accesses["weight_read"] = total_uw;
    r.sram_accesses["pp_write"] = total_uw;
    r.sram_accesses["pp_read"] = cells;
    r.sram_accesses["indirection_write"] = cells;
    r.sram_accesses["indirection_read"] = cells;
    r.sram_accesses["psum_read"] = cells;
    r.sram_accesses["psum_write"] = cells;
    r.sram_accesses["index_read"] = s.index_stream_bytes + metadata_bytes;
    r.sram_accesses["output_write"] = static_cast<uint64_t>(s.m);

    finish(r, cfg);
    return r;
}

}  // namespace

void DataflowConfig::validate() const {
    if (pe_rows < 1 || pe_cols < 1)
        throw config_error("array dimensions must be at least 1x1");
    if (bs_row < 1 || bs_col < 1)
        throw config_error("block size must be at least 1x1");
    if (frequency_hz <= 0.0 || !std::isfinite(frequency_hz))
        throw config_error("frequency must be positive");
    if (dram_bytes_per_cycle < 1)
        throw config_error("dram_bytes_per_cycle must be at least 1");
    if (weight_bits < 2 || weight_bits > 8 || input_bits < 2 || input_bits > 8)
        throw config_error("operand widths must be in [2, 8] bits");
    if (partial_product_bits < weight_bits + input_bits)
        throw config_error("partial products must hold a full operand product");
    if (accumulator_bits < partial_product_bits)
        throw config_error("accumulator must be at least as wide as a partial product");
    if (indirection_buffer_bytes < 1 || pp_buffer_bytes < 1 || psum_buffer_bytes < 1)
        throw config_error("buffer capacities must be positive");
    // decoded indexes are padded to one byte each; double buffering needs
    // a full block per half
    const long block_bytes = static_cast<long>(bs_row) * bs_col;
    if (block_bytes > indirection_buffer_bytes / 2)
        throw config_error("one block of decoded indexes exceeds half the indirection buffer");
}

namespace {

std::vector<std::pair<std::string, std::string>> parse_kv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw io_error("cannot open " + path);
    std::vector<std::pair<std::string, std::string>> entries;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        const auto strip = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos)
                return std::string();
            const auto e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        };
        if (strip(line).empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error(path + ":" + std::to_string(lineno) + ": expected key = value");
        entries.emplace_back(strip(line.substr(0, eq)), strip(line.substr(eq + 1)));
    }
    return entries;
}

double parse_number(const std::string& path, const std::string& key, const std::string& value) {
    try {
        size_t used = 0;
        double v = std::stod(value, &used);
        if (used != value.size())
            throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw config_error(path + ": value of '" + key + "' is not a number: " + value);
    }
}

}  // namespace

DataflowConfig DataflowConfig::from_file(const std::string& path) {
    DataflowConfig cfg;
    for (const auto& [key, value] : parse_kv_file(path)) {
        const double v = parse_number(path, key, value);
        const auto as_int = [&](int& field) { field = static_cast<int>(v); };
        if (key == "pe_rows") as_int(cfg.pe_rows);
        else if (key == "pe_cols") as_int(cfg.pe_cols);
        else if (key == "bs_row") as_int(cfg.bs_row);
        else if (key == "bs_col") as_int(cfg.bs_col);
        else if (key == "frequency_hz") cfg.frequency_hz = v;
        else if (key == "dram_bytes_per_cycle") as_int(cfg.dram_bytes_per_cycle);
        else if (key == "weight_bits") as_int(cfg.weight_bits);
        else if (key == "input_bits") as_int(cfg.input_bits);
        else if (key == "partial_product_bits") as_int(cfg.partial_product_bits);
        else if (key == "accumulator_bits") as_int(cfg.accumulator_bits);
        else if (key == "indirection_buffer_bytes") as_int(cfg.indirection_buffer_bytes);
        else if (key == "pp_buffer_bytes") as_int(cfg.pp_buffer_bytes);
        else if (key == "psum_buffer_bytes") as_int(cfg.psum_buffer_bytes);
        else throw config_error(path + ": unknown key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

void CostTable::validate() const {
    if (units.empty())
        throw config_error("cost table must label its units");
    const auto check = [](double v, const std::string& what) {
        if (v < 0.0 || !std::isfinite(v))
            throw config_error("cost of " + what + " must be non-negative");
    };
    check(multiply, "multiply");
    check(add, "add");
    check(dram_byte, "dram_byte");
    for (const auto& [k, v] : sram_read)
        check(v, "sram_read_" + k);
    for (const auto& [k, v] : sram_write)
        check(v, "sram_write_" + k);
}

CostTable CostTable::from_file(const std::string& path) {
    CostTable t;
    const auto known_buffer = [](const std::string& name) {
        for (const char* b : kBuffers)
            if (name == b)
                return true;
        return false;
    };
    for (const auto& [key, value] : parse_kv_file(path)) {
        if (key == "units") {
            t.units = value;
        } else if (key == "multiply") {
            t.multiply = parse_number(path, key, value);
        } else if (key == "add") {
            t.add = parse_number(path, key, value);
        } else if (key == "dram_byte") {
            t.dram_byte = parse_number(path, key, value);
        } else if (key.rfind("sram_read_", 0) == 0 && known_buffer(key.substr(10))) {
            t.sram_read[key.substr(10)] = parse_number(path, key, value);
        } else if (key.rfind("sram_write_", 0) == 0 && known_buffer(key.substr(11))) {
            t.sram_write[key.substr(11)] = parse_number(path, key, value);
        } else {
            throw config_error(path + ": unknown key '" + key + "'");
        }
    }
    t.validate();
    return t;
}

CostTable CostTable::zero() {
    CostTable t;
    t.units = "zero";
    return t;
}

SimReport simulate_baseline(int n_inputs, int n_outputs, int q, const DataflowConfig& cfg) {
    cfg.validate();
    if (n_inputs < 1 || n_outputs < 1)
        throw config_error("layer dimensions must be at least 1x1");
    SimReport r;
    r.dataflow = "baseline";

    const uint64_t cells = static_cast<uint64_t>(n_inputs) * n_outputs;
    // batch-1 output stationary: the output matrix is M x 1, so each fold
    // pins pe_rows outputs and streams the N-long dot product through one
    // array column; the other columns have no batch elements to chew on
    const uint64_t folds = ceil_div(n_outputs, cfg.pe_rows);
    const uint64_t fill = static_cast<uint64_t>(cfg.pe_rows) + cfg.pe_cols - 2;
    r.compute_cycles = folds * (static_cast<uint64_t>(n_inputs) + fill);

    r.dram.weights_or_indexes = bytes_for_bits(cells * q);
    r.dram.inputs = bytes_for_bits(static_cast<uint64_t>(n_inputs) * cfg.input_bits);
    r.dram.outputs = bytes_for_bits(static_cast<uint64_t>(n_outputs) * cfg.accumulator_bits);

    r.multiplications = cells;
    r.additions = cells + n_outputs;

    r.sram_accesses["weight_read"] = cells;
    r.sram_accesses["input_read"] = folds * n_inputs;
    r.sram_accesses["output_write"] = static_cast<uint64_t>(n_outputs);

    finish(r, cfg);
    return r;
}

SimReport simulate_crew(const CrewEncoding& enc, const DataflowConfig& cfg) {
    CrewShape s;
    s.uw_counts = enc.uw_counts;
    s.bit_widths = enc.bit_widths;
    s.n = enc.n_inputs;
    s.m = enc.n_outputs;
    s.q = enc.q;
    s.index_stream_bytes = packed_index_bits(enc.bit_widths, enc.n_outputs,
                                             std::min(cfg.bs_row, enc.n_inputs),
                                             std::min(cfg.bs_col, enc.n_outputs)) / 8;
    return simulate_crew_shape(s, cfg);
}

SimReport simulate_crew(const PackedCrewLayer& packed, const DataflowConfig& cfg) {
    if (static_cast<int>(packed.bs_row) != std::min(cfg.bs_row, static_cast<int>(packed.n_inputs)) ||
        static_cast<int>(packed.bs_col) != std::min(cfg.bs_col, static_cast<int>(packed.n_outputs)))
        throw config_error("packed stream block size does not match the configuration");
    CrewShape s;
    s.n = static_cast<int>(packed.n_inputs);
    s.m = static_cast<int>(packed.n_outputs);
    s.q = packed.q;
    s.uw_counts.resize(s.n);
    s.bit_widths.resize(s.n);
    for (int i = 0; i < s.n; ++i) {
        s.uw_counts[i] = static_cast<uint16_t>(packed.uw_counts_minus1[i] + 1);
        s.bit_widths[i] = static_cast<uint8_t>(packed.row_bit_width(i));
    }
    s.index_stream_bytes = packed.block_stream.size();
    return simulate_crew_shape(s, cfg);
}

SimReport simulate_ucnn(const QuantizedLayer& layer, const DataflowConfig& cfg) {
    cfg.validate();
    layer.validate();
    SimReport r;
    r.dataflow = "ucnn";

    const uint64_t cells = static_cast<uint64_t>(layer.n_inputs) * layer.n_outputs;
    const auto col_counts = column_unique_counts(layer);
    uint64_t total_col_uw = 0;
    uint64_t unique_bytes = 0;
    for (int uw : col_counts) {
        total_col_uw += static_cast<uint64_t>(uw);
        unique_bytes += bytes_for_bits(static_cast<uint64_t>(uw) * layer.q);
    }

    const uint64_t fill = static_cast<uint64_t>(cfg.pe_rows) + cfg.pe_cols - 2;
    const uint64_t stripes =
        ceil_div(layer.n_outputs, static_cast<uint64_t>(cfg.pe_cols) * cfg.bs_col);
    r.compute_cycles = fill +
                       ceil_div(cells, static_cast<uint64_t>(cfg.pe_rows) * cfg.pe_cols) +
                       stripes * cfg.pe_rows + ceil_div(layer.n_outputs, cfg.pe_cols);

    // factorization gathers inputs per group: N*M indexes of ceil(log2 N) bits
    const int index_bits = index_bit_width(layer.n_inputs);
    const uint64_t index_bytes = bytes_for_bits(cells * static_cast<uint64_t>(index_bits));
    r.dram.weights_or_indexes = index_bytes;
    r.dram.unique_weights = unique_bytes;
    r.dram.inputs = bytes_for_bits(static_cast<uint64_t>(layer.n_inputs) * cfg.input_bits);
    r.dram.outputs = bytes_for_bits(static_cast<uint64_t>(layer.n_outputs) * cfg.accumulator_bits);

    r.multiplications = total_col_uw;
    r.additions = cells + layer.n_outputs;

    r.sram_accesses["input_read"] = cells;
    r.sram_accesses["weight_read"] = total_col_uw;
    r.sram_accesses["index_read"] = index_bytes;
    r.sram_accesses["psum_read"] = cells;
    r.sram_accesses["psum_write"] = cells;
    r.sram_accesses["output_write"] = static_cast<uint64_t>(layer.n_outputs);

    finish(r, cfg);
    return r;
}

double energy_of(const SimReport& report, const CostTable& costs) {
    double e = static_cast<double>(report.multiplications) * costs.multiply +
               static_cast<double>(report.additions) * costs.add +
               static_cast<double>(report.dram.total()) * costs.dram_byte;
    for (const auto& [key, count] : report.sram_accesses) {
        const auto split = key.rfind('_');
        const std::string buffer = key.substr(0, split);
        const std::string dir = key.substr(split + 1);
        const auto& table = dir == "read" ? costs.sram_read : costs.sram_write;
        const auto it = table.find(buffer);
        if (it != table.end())
            e += static_cast<double>(count) * it->second;
    }
    return e;
}

CompareReport compare(const QuantizedLayer& layer, const DataflowConfig& cfg,
                      const CostTable& costs) {
    costs.validate();
    CompareReport rep;
    rep.baseline = simulate_baseline(layer.n_inputs, layer.n_outputs, layer.q, cfg);
    rep.ucnn = simulate_ucnn(layer, cfg);
    rep.crew = simulate_crew(encode(layer), cfg);

    rep.baseline.energy = energy_of(rep.baseline, costs);
    rep.ucnn.energy = energy_of(rep.ucnn, costs);
    rep.crew.energy = energy_of(rep.crew, costs);

    const auto ratios = [&](SimReport& r) {
        r.speedup_vs_baseline =
            static_cast<double>(rep.baseline.cycles) / static_cast<double>(r.cycles);
        r.energy_ratio_vs_baseline =
            rep.baseline.energy > 0.0 ? r.energy / rep.baseline.energy : 1.0;
    };
    ratios(rep.baseline);
    ratios(rep.ucnn);
    ratios(rep.crew);
    return rep;
}

}  // namespace crew
