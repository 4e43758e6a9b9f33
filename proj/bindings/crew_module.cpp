#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "crew/codec.hpp"
#include "crew/engine.hpp"
#include "crew/perfmodel.hpp"
#include "crew/ppa.hpp"
#include "crew/presets.hpp"
#include "crew/quantize.hpp"
#include "crew/tensorio.hpp"

namespace py = pybind11;
using namespace crew;

namespace {

py::bytes pack_to_bytes(const CrewEncoding& enc, int bs_row, int bs_col) {
    auto bytes = pack(enc, bs_row, bs_col).to_bytes();
    return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

CrewEncoding unpack_from_bytes(const py::bytes& data) {
    std::string_view view = data;
    return unpack(PackedCrewLayer::from_bytes(
        std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(view.data()), view.size())));
}

py::dict sim_to_dict(const SimReport& r) {
    py::dict dram;
    dram["weights_or_indexes"] = r.dram.weights_or_indexes;
    dram["unique_weights"] = r.dram.unique_weights;
    dram["inputs"] = r.dram.inputs;
    dram["outputs"] = r.dram.outputs;
    dram["total"] = r.dram.total();
    py::dict d;
    d["dataflow"] = r.dataflow;
    d["cycles"] = r.cycles;
    d["compute_cycles"] = r.compute_cycles;
    d["traffic_cycles"] = r.traffic_cycles;
    d["seconds"] = r.seconds;
    d["multiplications"] = r.multiplications;
    d["additions"] = r.additions;
    d["dram_bytes"] = dram;
    d["sram_accesses"] = r.sram_accesses;
    d["energy"] = r.energy;
    d["speedup_vs_baseline"] = r.speedup_vs_baseline;
    d["energy_ratio_vs_baseline"] = r.energy_ratio_vs_baseline;
    return d;
}

}  // namespace

PYBIND11_MODULE(_crew, m) {
    m.doc() = "Partial-product memoization toolkit for quantized FC layers";
    m.attr("__version__") = "0.1.0";

    py::register_exception<io_error>(m, "IoError");
    py::register_exception<format_error>(m, "FormatError");
    py::register_exception<config_error>(m, "ConfigError");

    py::class_<FloatLayer>(m, "FloatLayer")
        .def(py::init<>())
        .def_readwrite("n_inputs", &FloatLayer::n_inputs)
        .def_readwrite("n_outputs", &FloatLayer::n_outputs)
        .def_readwrite("weights", &FloatLayer::weights)
        .def_readwrite("bias", &FloatLayer::bias)
        .def("__repr__", [](const FloatLayer& l) {
            return "FloatLayer(" + std::to_string(l.n_inputs) + "x" +
                   std::to_string(l.n_outputs) + ")";
        });

    py::class_<QuantizedLayer>(m, "QuantizedLayer")
        .def(py::init<>())
        .def_readwrite("n_inputs", &QuantizedLayer::n_inputs)
        .def_readwrite("n_outputs", &QuantizedLayer::n_outputs)
        .def_readwrite("q", &QuantizedLayer::q)
        .def_readwrite("scale", &QuantizedLayer::scale)
        .def_readwrite("weights", &QuantizedLayer::weights)
        .def_readwrite("bias", &QuantizedLayer::bias)
        .def("__repr__", [](const QuantizedLayer& l) {
            return "QuantizedLayer(" + std::to_string(l.n_inputs) + "x" +
                   std::to_string(l.n_outputs) + ", q=" + std::to_string(l.q) + ")";
        });

    py::class_<UniqueWeightProfile>(m, "UniqueWeightProfile")
        .def(py::init<>())
        .def_static("constant", &UniqueWeightProfile::constant, py::arg("uw"),
                    py::arg("n_inputs"), py::arg("n_outputs"))
        .def_readwrite("n_inputs", &UniqueWeightProfile::n_inputs)
        .def_readwrite("n_outputs", &UniqueWeightProfile::n_outputs)
        .def_readwrite("uw_histogram", &UniqueWeightProfile::uw_histogram)
        .def_readwrite("zipf_exponent", &UniqueWeightProfile::zipf_exponent);

    py::class_<RowAnalysis>(m, "RowAnalysis")
        .def_readonly("uw_counts", &RowAnalysis::uw_counts)
        .def_readonly("mean_uw", &RowAnalysis::mean_uw)
        .def_readonly("muls_fraction", &RowAnalysis::muls_fraction)
        .def_readonly("histogram", &RowAnalysis::histogram)
        .def("cumulative_below", &RowAnalysis::cumulative_below);

    py::class_<CrewEncoding>(m, "CrewEncoding")
        .def_readonly("n_inputs", &CrewEncoding::n_inputs)
        .def_readonly("n_outputs", &CrewEncoding::n_outputs)
        .def_readonly("q", &CrewEncoding::q)
        .def_readonly("scale", &CrewEncoding::scale)
        .def_readonly("unique_weights", &CrewEncoding::unique_weights)
        .def_readonly("uw_counts", &CrewEncoding::uw_counts)
        .def_readonly("bit_widths", &CrewEncoding::bit_widths)
        .def_readonly("index_matrix", &CrewEncoding::index_matrix)
        .def_readonly("bias", &CrewEncoding::bias)
        .def("total_unique", &CrewEncoding::total_unique);

    py::class_<StorageReport>(m, "StorageReport")
        .def_readonly("dense_bits", &StorageReport::dense_bits)
        .def_readonly("unique_bits", &StorageReport::unique_bits)
        .def_readonly("index_bits", &StorageReport::index_bits)
        .def_readonly("metadata_bits", &StorageReport::metadata_bits)
        .def_readonly("crew_bits", &StorageReport::crew_bits)
        .def_readonly("ucnn_index_bits", &StorageReport::ucnn_index_bits)
        .def_readonly("saved_muls_fraction", &StorageReport::saved_muls_fraction)
        .def_readonly("storage_reduction_fraction", &StorageReport::storage_reduction_fraction);

    py::class_<ExecutionTrace>(m, "ExecutionTrace")
        .def_readonly("multiplications", &ExecutionTrace::multiplications)
        .def_readonly("additions", &ExecutionTrace::additions)
        .def_readonly("partial_product_table_entries",
                      &ExecutionTrace::partial_product_table_entries)
        .def_readonly("index_lookups", &ExecutionTrace::index_lookups)
        .def_readonly("outputs", &ExecutionTrace::outputs);

    py::class_<VerifyReport>(m, "VerifyReport")
        .def_readonly("vectors", &VerifyReport::vectors)
        .def_readonly("exact_vectors", &VerifyReport::exact_vectors)
        .def_readonly("mismatched_cells", &VerifyReport::mismatched_cells)
        .def_readonly("max_abs_diff", &VerifyReport::max_abs_diff)
        .def_readonly("mean_rel_err", &VerifyReport::mean_rel_err)
        .def("all_exact", &VerifyReport::all_exact);

    py::class_<PpaConfig>(m, "PpaConfig")
        .def(py::init<>())
        .def_readwrite("threshold", &PpaConfig::threshold)
        .def_readwrite("max_bits_reduced", &PpaConfig::max_bits_reduced);

    py::class_<PpaRowReport>(m, "PpaRowReport")
        .def_readonly("input", &PpaRowReport::input)
        .def_readonly("original_uw", &PpaRowReport::original_uw)
        .def_readonly("final_uw", &PpaRowReport::final_uw)
        .def_readonly("target_uw", &PpaRowReport::target_uw)
        .def_readonly("dist_w", &PpaRowReport::dist_w)
        .def_readonly("low_freq_w", &PpaRowReport::low_freq_w)
        .def_readonly("wr", &PpaRowReport::wr)
        .def_readonly("applied", &PpaRowReport::applied)
        .def_readonly("bits_reduced", &PpaRowReport::bits_reduced)
        .def_readonly("removed", &PpaRowReport::removed)
        .def_readonly("replacements", &PpaRowReport::replacements);

    py::class_<PpaResult>(m, "PpaResult")
        .def_readonly("layer", &PpaResult::layer)
        .def_readonly("rows", &PpaResult::rows)
        .def("rows_reduced_fraction", &PpaResult::rows_reduced_fraction);

    py::class_<PpaSweepPoint>(m, "PpaSweepPoint")
        .def_readonly("threshold", &PpaSweepPoint::threshold)
        .def_readonly("crew_bits", &PpaSweepPoint::crew_bits)
        .def_readonly("compression_ratio", &PpaSweepPoint::compression_ratio)
        .def_readonly("rows_reduced_pct", &PpaSweepPoint::rows_reduced_pct)
        .def_readonly("mean_rel_err", &PpaSweepPoint::mean_rel_err)
        .def_readonly("max_rel_err", &PpaSweepPoint::max_rel_err);

    py::class_<DataflowConfig>(m, "DataflowConfig")
        .def(py::init<>())
        .def_readwrite("pe_rows", &DataflowConfig::pe_rows)
        .def_readwrite("pe_cols", &DataflowConfig::pe_cols)
        .def_readwrite("bs_row", &DataflowConfig::bs_row)
        .def_readwrite("bs_col", &DataflowConfig::bs_col)
        .def_readwrite("frequency_hz", &DataflowConfig::frequency_hz)
        .def_readwrite("dram_bytes_per_cycle", &DataflowConfig::dram_bytes_per_cycle)
        .def_readwrite("weight_bits", &DataflowConfig::weight_bits)
        .def_readwrite("input_bits", &DataflowConfig::input_bits)
        .def_readwrite("partial_product_bits", &DataflowConfig::partial_product_bits)
        .def_readwrite("accumulator_bits", &DataflowConfig::accumulator_bits)
        .def_readwrite("indirection_buffer_bytes", &DataflowConfig::indirection_buffer_bytes)
        .def_readwrite("pp_buffer_bytes", &DataflowConfig::pp_buffer_bytes)
        .def_readwrite("psum_buffer_bytes", &DataflowConfig::psum_buffer_bytes)
        .def("validate", &DataflowConfig::validate)
        .def_static("from_file", &DataflowConfig::from_file);

    py::class_<CostTable>(m, "CostTable")
        .def(py::init<>())
        .def_readwrite("units", &CostTable::units)
        .def_readwrite("multiply", &CostTable::multiply)
        .def_readwrite("add", &CostTable::add)
        .def_readwrite("dram_byte", &CostTable::dram_byte)
        .def_readwrite("sram_read", &CostTable::sram_read)
        .def_readwrite("sram_write", &CostTable::sram_write)
        .def_static("from_file", &CostTable::from_file)
        .def_static("zero", &CostTable::zero);

    py::class_<SuitePreset>(m, "SuitePreset")
        .def_readonly("name", &SuitePreset::name)
        .def_readonly("profile", &SuitePreset::profile);

    // io
    m.def("load_layer", [](const std::string& path) -> py::object {
        auto loaded = load_layer(path);
        if (auto* f = std::get_if<FloatLayer>(&loaded))
            return py::cast(std::move(*f));
        return py::cast(std::move(std::get<QuantizedLayer>(loaded)));
    });
    m.def("save_layer", py::overload_cast<const FloatLayer&, const std::string&>(&save_layer));
    m.def("save_layer", py::overload_cast<const QuantizedLayer&, const std::string&>(&save_layer));
    m.def("synth_layer", &synth_layer, py::arg("profile"), py::arg("seed"));

    // quantization
    m.def("quantize_layer", &quantize_layer, py::arg("layer"), py::arg("q") = 8);
    m.def("dequantize", &dequantize);

    // codec
    m.def("analyze_rows", &analyze_rows);
    m.def("encode", &encode);
    m.def("decode_to_dense", &decode_to_dense);
    m.def("storage_report", &storage_report, py::arg("enc"), py::arg("bs_row") = 16,
          py::arg("bs_col") = 16);
    m.def("index_bit_width", &index_bit_width);
    m.def("pack_bytes", &pack_to_bytes, py::arg("enc"), py::arg("bs_row") = 16,
          py::arg("bs_col") = 16, "Serialize an encoding to CREW stream bytes");
    m.def("unpack_bytes", &unpack_from_bytes, "Parse CREW stream bytes back to an encoding");

    // engine
    m.def("dense_forward", [](const QuantizedLayer& layer, const std::vector<int8_t>& input) {
        return dense_forward(layer, input);
    });
    m.def("crew_forward", [](const CrewEncoding& enc, const std::vector<int8_t>& input) {
        return crew_forward(enc, input).trace;
    });
    m.def("ucnn_forward", [](const QuantizedLayer& layer, const std::vector<int8_t>& input) {
        return ucnn_forward(layer, input);
    });
    m.def("verify_equivalence", &verify_equivalence, py::arg("enc"), py::arg("reference"),
          py::arg("vectors") = 64, py::arg("seed") = 0xc0ffee);

    // ppa
    m.def("apply_ppa", &apply_ppa, py::arg("layer"), py::arg("cfg") = PpaConfig{});
    m.def("ppa_sweep", &ppa_sweep, py::arg("layer"), py::arg("thresholds"),
          py::arg("max_bits_reduced") = 1, py::arg("batch") = 256, py::arg("seed") = 0x5eed);

    // performance model
    m.def("simulate_baseline", [](int n, int m_, int q, const DataflowConfig& cfg) {
        return sim_to_dict(simulate_baseline(n, m_, q, cfg));
    }, py::arg("n_inputs"), py::arg("n_outputs"), py::arg("q") = 8,
       py::arg("cfg") = DataflowConfig{});
    m.def("simulate_crew", [](const CrewEncoding& enc, const DataflowConfig& cfg) {
        return sim_to_dict(simulate_crew(enc, cfg));
    }, py::arg("enc"), py::arg("cfg") = DataflowConfig{});
    m.def("simulate_ucnn", [](const QuantizedLayer& layer, const DataflowConfig& cfg) {
        return sim_to_dict(simulate_ucnn(layer, cfg));
    }, py::arg("layer"), py::arg("cfg") = DataflowConfig{});
    m.def("compare", [](const QuantizedLayer& layer, const DataflowConfig& cfg,
                        const CostTable& costs) {
        auto rep = compare(layer, cfg, costs);
        py::dict d;
        d["baseline"] = sim_to_dict(rep.baseline);
        d["ucnn"] = sim_to_dict(rep.ucnn);
        d["crew"] = sim_to_dict(rep.crew);
        return d;
    }, py::arg("layer"), py::arg("cfg") = DataflowConfig{},
       py::arg("costs") = CostTable::zero());

    m.def("reference_suite", &reference_suite);
}
