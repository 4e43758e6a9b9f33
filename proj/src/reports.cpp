#include "crew/reports.hpp"

#include <sstream>

namespace crew {

using nlohmann::json;

json to_json(const RowAnalysis& analysis) {
    json hist = json::array();
    for (const auto& [uw, rows] : analysis.histogram)
        hist.push_back({{"uw", uw}, {"rows", rows}});
    return json{{"mean_uw_per_input", analysis.mean_uw},
                {"muls_fraction", analysis.muls_fraction},
                {"rows", analysis.uw_counts.size()},
                {"uw_histogram", hist},
                {"cumulative_below_64", analysis.cumulative_below(64)}};
}

json to_json(const StorageReport& report) {
    return json{{"dense_bits", report.dense_bits},
                {"unique_bits", report.unique_bits},
                {"index_bits", report.index_bits},
                {"metadata_bits", report.metadata_bits},
                {"crew_bits", report.crew_bits},
                {"ucnn_index_bits", report.ucnn_index_bits},
                {"saved_muls_fraction", report.saved_muls_fraction},
                {"storage_reduction_fraction", report.storage_reduction_fraction}};
}

json to_json(const SimReport& report) {
    return json{{"dataflow", report.dataflow},
                {"cycles", report.cycles},
                {"compute_cycles", report.compute_cycles},
                {"traffic_cycles", report.traffic_cycles},
                {"seconds", report.seconds},
                {"multiplications", report.multiplications},
                {"additions", report.additions},
                {"dram_bytes",
                 {{"weights_or_indexes", report.dram.weights_or_indexes},
                  {"unique_weights", report.dram.unique_weights},
                  {"inputs", report.dram.inputs},
                  {"outputs", report.dram.outputs},
                  {"total", report.dram.total()}}},
                {"sram_accesses", report.sram_accesses},
                {"energy", report.energy},
                {"speedup_vs_baseline", report.speedup_vs_baseline},
                {"energy_ratio_vs_baseline", report.energy_ratio_vs_baseline}};
}

json to_json(const CompareReport& report) {
    return json{{"baseline", to_json(report.baseline)},
                {"ucnn", to_json(report.ucnn)},
                {"crew", to_json(report.crew)}};
}

std::string sim_csv_header() {
    return "layer,dataflow,cycles,compute_cycles,traffic_cycles,multiplications,additions,"
           "dram_bytes_total,energy,speedup_vs_baseline,energy_ratio_vs_baseline";
}

std::string sim_csv_row(const std::string& layer_name, const SimReport& r) {
    std::ostringstream out;
    out << layer_name << ',' << r.dataflow << ',' << r.cycles << ',' << r.compute_cycles << ','
        << r.traffic_cycles << ',' << r.multiplications << ',' << r.additions << ','
        << r.dram.total() << ',' << r.energy << ',' << r.speedup_vs_baseline << ','
        << r.energy_ratio_vs_baseline;
    return out.str();
}

}  // namespace crew
