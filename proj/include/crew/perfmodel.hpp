#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "crew/codec.hpp"
#include "crew/layer.hpp"

namespace crew {

/// Systolic array geometry, block size and memory system parameters.
struct DataflowConfig {
    int pe_rows = 16;
    int pe_cols = 16;
    int bs_row = 16;
    int bs_col = 16;
    double frequency_hz = 5.0e8;
    int dram_bytes_per_cycle = 32;  // 16 GB/s at 500 MHz
    int weight_bits = 8;
    int input_bits = 8;
    int partial_product_bits = 16;
    int accumulator_bits = 32;
    int indirection_buffer_bytes = 512;  // per PE, double buffered
    int pp_buffer_bytes = 1024;          // shared per PE row
    int psum_buffer_bytes = 768;

    void validate() const;  // throws config_error

    static DataflowConfig from_file(const std::string& path);
};

/// Linear per-event energy weights. Replaces synthesis/characterization
/// with user-supplied numbers; the shipped example file is illustrative.
struct CostTable {
    std::string units;  // required label, e.g. "pJ"
    double multiply = 0.0;
    double add = 0.0;
    double dram_byte = 0.0;
    std::map<std::string, double> sram_read;   // by buffer name
    std::map<std::string, double> sram_write;

    void validate() const;

    static CostTable from_file(const std::string& path);
    static CostTable zero();
};

struct DramBytes {
    uint64_t weights_or_indexes = 0;
    uint64_t unique_weights = 0;
    uint64_t inputs = 0;
    uint64_t outputs = 0;

    uint64_t total() const { return weights_or_indexes + unique_weights + inputs + outputs; }
};

struct SimReport {
    std::string dataflow;
    uint64_t cycles = 0;
    uint64_t compute_cycles = 0;
    uint64_t traffic_cycles = 0;
    uint64_t multiplications = 0;
    uint64_t additions = 0;
    DramBytes dram;
    std::map<std::string, uint64_t> sram_accesses;  // "<buffer>_read"/"<buffer>_write"
    double energy = 0.0;
    double seconds = 0.0;
    double speedup_vs_baseline = 1.0;
    double energy_ratio_vs_baseline = 1.0;
};

/// Output-stationary TPU-like baseline. With batch size one the output
/// matrix is M x 1, so each fold of ceil(M/pe_rows) activates a single
/// array column for N accumulation cycles plus pipeline fill.
SimReport simulate_baseline(int n_inputs, int n_outputs, int q, const DataflowConfig& cfg);

/// Blocked weight-stationary CREW dataflow: step 1 multiplies inputs by
/// their unique weights (round-robin input-to-row assignment), step 2
/// streams index blocks and accumulates, overlapped after the first block
/// batch. DRAM carries unique weights, packed indexes and per-row metadata.
SimReport simulate_crew(const CrewEncoding& enc, const DataflowConfig& cfg);
SimReport simulate_crew(const PackedCrewLayer& packed, const DataflowConfig& cfg);

/// Factorization dataflow on the same blocked array: per-output input
/// grouping with N*M indexes of ceil(log2 N) bits each.
SimReport simulate_ucnn(const QuantizedLayer& layer, const DataflowConfig& cfg);

struct CompareReport {
    SimReport baseline;
    SimReport ucnn;
    SimReport crew;
};

/// Runs all three dataflows, prices them with the cost table and fills in
/// the ratios vs baseline.
CompareReport compare(const QuantizedLayer& layer, const DataflowConfig& cfg,
                      const CostTable& costs);

double energy_of(const SimReport& report, const CostTable& costs);

}  // namespace crew
