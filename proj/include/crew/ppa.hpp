#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crew/layer.hpp"

namespace crew {

struct PpaConfig {
    // A row is rewritten only if the occurrence mass of the values to be
    // removed stays below this fraction of the row.
    double threshold = 0.10;
    // How many index bits a row may lose (levels of halving the unique
    // count to the next lower power of two).
    int max_bits_reduced = 1;

    void validate() const;
};

struct PpaRowReport {
    int input = 0;
    int original_uw = 0;
    int final_uw = 0;
    int target_uw = 0;        // power-of-two target of the last evaluated level
    int dist_w = 0;           // unique values removed (total across levels)
    int low_freq_w = 0;       // occurrences covered by the removed values
    double wr = 0.0;          // low_freq_w / M at the last evaluated level
    bool applied = false;
    int bits_reduced = 0;
    std::vector<int8_t> removed;       // del values, in removal order
    std::vector<int8_t> replacements;  // nearest surviving value for each removed
};

struct PpaResult {
    QuantizedLayer layer;
    std::vector<PpaRowReport> rows;

    double rows_reduced_fraction() const;
};

/// Approximates the least-frequent unique values of each row onto their
/// nearest surviving values, shrinking the unique count to the next lower
/// power of two when the removed mass stays under the threshold. Rows are
/// processed independently; untouched rows are returned cell-exact.
PpaResult apply_ppa(const QuantizedLayer& layer, const PpaConfig& cfg = {});

struct PpaSweepPoint {
    double threshold = 0.0;
    uint64_t crew_bits = 0;
    double compression_ratio = 1.0;   // crew_bits(before) / crew_bits(after)
    double rows_reduced_pct = 0.0;
    double mean_rel_err = 0.0;        // relative L2 of outputs over a seeded batch
    double max_rel_err = 0.0;
};

/// Runs apply_ppa at each threshold and measures compression plus output
/// perturbation against the unmodified layer on a fixed seeded batch of
/// random int8 inputs.
std::vector<PpaSweepPoint> ppa_sweep(const QuantizedLayer& layer,
                                     const std::vector<double>& thresholds,
                                     int max_bits_reduced = 1,
                                     int batch = 256, uint64_t seed = 0x5eed);

std::string sweep_to_csv(const std::vector<PpaSweepPoint>& points);

}  // namespace crew
