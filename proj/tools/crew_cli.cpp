// crew: encode quantized fully-connected layers into the CREW
// partial-product-memoization format, execute them bit-exactly, apply the
// approximation heuristic and model dataflow performance.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "crew/codec.hpp"
#include "crew/engine.hpp"
#include "crew/perfmodel.hpp"
#include "crew/ppa.hpp"
#include "crew/presets.hpp"
#include "crew/quantize.hpp"
#include "crew/reports.hpp"
#include "crew/tensorio.hpp"

namespace {

using nlohmann::json;

constexpr int kExitUsage = 2;
constexpr int kExitFormat = 3;
constexpr int kExitIo = 4;

struct GlobalOpts {
    uint64_t seed = 0xc0ffee;
    bool quiet = false;
    bool json_out = false;
};

void say(const GlobalOpts& g, const std::string& line) {
    if (!g.quiet)
        std::cout << line << '\n';
}

void write_text_atomic(const std::string& path, const std::string& text) {
    namespace fs = std::filesystem;
    fs::path tmp = fs::path(path);
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw crew::io_error("cannot open " + tmp.string() + " for writing");
        out << text;
        if (!out)
            throw crew::io_error("write failed on " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec)
        throw crew::io_error("rename failed for " + path + ": " + ec.message());
}

bool is_crew_file(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe)
        throw crew::io_error("cannot open " + path);
    char magic[4] = {};
    probe.read(magic, 4);
    return probe.gcount() == 4 && std::string_view(magic, 4) == "CREW";
}

crew::QuantizedLayer load_quantized_or_crew(const std::string& path) {
    if (is_crew_file(path))
        return crew::decode_to_dense(crew::unpack(crew::load_packed(path)));
    return crew::load_quantized_layer(path);
}

std::vector<int8_t> parse_inline_input(const std::string& list) {
    std::vector<int8_t> values;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        int v = 0;
        try {
            v = std::stoi(item);
        } catch (const std::exception&) {
            throw crew::config_error("inline input is not an integer: " + item);
        }
        if (v < -128 || v > 127)
            throw crew::config_error("inline input value out of int8 range: " + item);
        values.push_back(static_cast<int8_t>(v));
    }
    return values;
}

std::vector<int8_t> read_raw_int8(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw crew::io_error("cannot open " + path);
    std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return std::vector<int8_t>(raw.begin(), raw.end());
}

crew::CostTable resolve_costs(const std::string& costs_path) {
    if (!costs_path.empty())
        return crew::CostTable::from_file(costs_path);
    if (const char* env = std::getenv("CREW_COSTS"); env && *env)
        return crew::CostTable::from_file(env);
    return crew::CostTable::zero();
}

void emit_report(const GlobalOpts& g, const json& doc, const std::string& out_path) {
    if (!out_path.empty())
        write_text_atomic(out_path, doc.dump(2) + "\n");
    else if (g.json_out)
        std::cout << doc.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CREW toolkit: partial-product memoization for quantized FC layers"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--seed", g.seed, "Seed for every random draw");
    app.add_flag("--quiet", g.quiet, "Suppress progress chatter");
    app.add_flag("--json", g.json_out, "Print machine-readable JSON to stdout");

    int exit_code = 0;

    // quantize -----------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("quantize", "Quantize a float layer to q-bit integers");
        auto in = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto bits = std::make_shared<int>(8);
        cmd->add_option("input", *in, "FCL1 float layer")->required();
        cmd->add_option("output", *out, "FCL1 quantized layer")->required();
        cmd->add_option("--bits", *bits, "Bit width")->check(CLI::Range(2, 8));
        cmd->callback([&, in, out, bits] {
            auto layer = crew::load_float_layer(*in);
            auto q = crew::quantize_layer(layer, *bits);
            crew::save_layer(q, *out);
            say(g, "quantized " + std::to_string(q.n_inputs) + "x" +
                       std::to_string(q.n_outputs) + " layer to " + std::to_string(*bits) +
                       " bits, scale " + std::to_string(q.scale));
        });
    }

    // encode -------------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("encode", "Encode a quantized layer into a CREW stream");
        auto in = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto bs_row = std::make_shared<int>(16);
        auto bs_col = std::make_shared<int>(16);
        cmd->add_option("input", *in, "FCL1 quantized layer")->required();
        cmd->add_option("output", *out, "CREW stream")->required();
        cmd->add_option("--bs-row", *bs_row, "Block rows")->check(CLI::PositiveNumber);
        cmd->add_option("--bs-col", *bs_col, "Block columns")->check(CLI::PositiveNumber);
        cmd->callback([&, in, out, bs_row, bs_col] {
            auto layer = crew::load_quantized_layer(*in);
            auto enc = crew::encode(layer);
            auto packed = crew::pack(enc, std::min(*bs_row, layer.n_inputs),
                                     std::min(*bs_col, layer.n_outputs));
            crew::save_packed(packed, *out);
            auto rep = crew::storage_report(enc, packed.bs_row, packed.bs_col);
            std::ostringstream msg;
            msg << "encoded: saved muls " << 100.0 * rep.saved_muls_fraction
                << "%, storage reduction " << 100.0 * rep.storage_reduction_fraction << "%";
            say(g, msg.str());
        });
    }

    // decode -------------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("decode", "Expand a CREW stream back to a dense layer");
        auto in = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        cmd->add_option("input", *in, "CREW stream")->required();
        cmd->add_option("output", *out, "FCL1 quantized layer")->required();
        cmd->callback([&, in, out] {
            auto packed = crew::load_packed(*in);
            auto layer = crew::decode_to_dense(crew::unpack(packed));
            crew::save_layer(layer, *out);
            say(g, "decoded " + std::to_string(layer.n_inputs) + "x" +
                       std::to_string(layer.n_outputs) + " layer");
        });
    }

    // verify -------------------------------------------------------------
    {
        auto* cmd = app.add_subcommand(
            "verify", "Check memoized execution against the dense reference");
        auto in = std::make_shared<std::string>();
        auto ref = std::make_shared<std::string>();
        auto vectors = std::make_shared<int>(64);
        auto approx = std::make_shared<bool>(false);
        auto inline_input = std::make_shared<std::string>();
        auto input_file = std::make_shared<std::string>();
        auto out_bin = std::make_shared<std::string>();
        auto out_csv = std::make_shared<std::string>();
        cmd->add_option("input", *in, "CREW stream")->required();
        cmd->add_option("--ref", *ref, "Reference FCL1 layer (defaults to the stream itself)");
        cmd->add_option("--inputs", *vectors, "Random vectors to test")->check(CLI::PositiveNumber);
        cmd->add_flag("--approx", *approx, "Report mismatch statistics without failing");
        cmd->add_option("--vector", *inline_input, "Run one inline input vector, e.g. 1,-2,3");
        cmd->add_option("--vector-file", *input_file, "Run one raw int8 input vector file");
        cmd->add_option("--out-bin", *out_bin, "Write outputs as raw int32");
        cmd->add_option("--out-csv", *out_csv, "Write outputs as CSV");
        cmd->callback([&, in, ref, vectors, approx, inline_input, input_file, out_bin, out_csv] {
            const auto packed = crew::load_packed(*in);
            const auto enc = crew::unpack(packed);
            const crew::QuantizedLayer reference =
                ref->empty() ? crew::decode_to_dense(enc) : load_quantized_or_crew(*ref);

            if (!inline_input->empty() || !input_file->empty()) {
                const auto input = inline_input->empty() ? read_raw_int8(*input_file)
                                                         : parse_inline_input(*inline_input);
                const auto got = crew::crew_forward(enc, input);
                const auto want = crew::dense_forward(reference, input);
                if (!out_bin->empty())
                    write_text_atomic(*out_bin,
                                      std::string(reinterpret_cast<const char*>(
                                                      got.trace.outputs.data()),
                                                  got.trace.outputs.size() * sizeof(int32_t)));
                if (!out_csv->empty()) {
                    std::ostringstream csv;
                    csv << "output\n";
                    for (int32_t v : got.trace.outputs)
                        csv << v << '\n';
                    write_text_atomic(*out_csv, csv.str());
                }
                const bool match = got.trace.outputs == want.outputs;
                if (g.json_out)
                    std::cout << json{{"exact", match},
                                      {"multiplications", got.trace.multiplications},
                                      {"outputs", got.trace.outputs}}
                                     .dump()
                              << '\n';
                else
                    say(g, match ? "exact match against the reference layer"
                                 : "outputs differ from the reference layer");
                if (!match && !*approx)
                    exit_code = kExitFormat;
                return;
            }

            const auto rep = crew::verify_equivalence(enc, reference, *vectors, g.seed);
            if (g.json_out) {
                std::cout << json{{"vectors", rep.vectors},
                                  {"exact_vectors", rep.exact_vectors},
                                  {"mismatched_cells", rep.mismatched_cells},
                                  {"max_abs_diff", rep.max_abs_diff},
                                  {"mean_rel_err", rep.mean_rel_err}}
                                 .dump()
                          << '\n';
            } else if (rep.all_exact()) {
                say(g, "OK, " + std::to_string(rep.exact_vectors) + "/" +
                           std::to_string(rep.vectors) + " exact");
            } else {
                std::ostringstream msg;
                msg << "mismatch: first at vector " << rep.first_mismatch_vector << ", output "
                    << rep.first_mismatch_output << " (expected " << rep.first_expected
                    << ", got " << rep.first_actual << "); " << rep.mismatched_cells
                    << " cells differ, max |diff| " << rep.max_abs_diff << ", mean rel err "
                    << rep.mean_rel_err;
                say(g, msg.str());
            }
            if (!rep.all_exact() && !*approx)
                exit_code = kExitFormat;
        });
    }

    // stats ----------------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("stats", "Unique-weight and storage statistics");
        auto in = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto hist_csv = std::make_shared<std::string>();
        auto bs_row = std::make_shared<int>(16);
        auto bs_col = std::make_shared<int>(16);
        cmd->add_option("input", *in, "FCL1 quantized layer or CREW stream")->required();
        cmd->add_option("--out", *out, "Write the JSON report to a file");
        cmd->add_option("--hist-csv", *hist_csv, "Write the histogram as uw,rows,cumulative CSV");
        cmd->add_option("--bs-row", *bs_row, "Block rows for storage accounting");
        cmd->add_option("--bs-col", *bs_col, "Block columns for storage accounting");
        cmd->callback([&, in, out, hist_csv, bs_row, bs_col] {
            auto layer = load_quantized_or_crew(*in);
            auto analysis = crew::analyze_rows(layer);
            auto report = crew::storage_report(crew::encode(layer), *bs_row, *bs_col);
            json doc{{"layer",
                      {{"n_inputs", layer.n_inputs},
                       {"n_outputs", layer.n_outputs},
                       {"q", layer.q}}},
                     {"analysis", crew::to_json(analysis)},
                     {"storage", crew::to_json(report)}};
            emit_report(g, doc, *out);
            if (!hist_csv->empty()) {
                std::ostringstream csv;
                csv << "uw,rows,cumulative_fraction\n";
                size_t acc = 0;
                for (const auto& [uw, rows] : analysis.histogram) {
                    acc += static_cast<size_t>(rows);
                    csv << uw << ',' << rows << ','
                        << static_cast<double>(acc) / analysis.uw_counts.size() << '\n';
                }
                write_text_atomic(*hist_csv, csv.str());
            }
            if (!g.json_out) {
                std::ostringstream msg;
                msg << "UW/I mean " << analysis.mean_uw << ", MULs "
                    << 100.0 * analysis.muls_fraction << "%, saved muls "
                    << 100.0 * report.saved_muls_fraction << "%, storage reduction "
                    << 100.0 * report.storage_reduction_fraction << "%";
                say(g, msg.str());
            }
        });
    }

    // ppa ------------------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("ppa", "Approximate low-frequency unique weights");
        auto in = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto thr = std::make_shared<double>(0.10);
        auto max_bits = std::make_shared<int>(1);
        cmd->add_option("input", *in, "FCL1 quantized layer")->required();
        cmd->add_option("output", *out, "Rewritten FCL1 quantized layer")->required();
        cmd->add_option("--thr", *thr, "Removed-mass threshold")->check(CLI::Range(0.0, 1.0));
        cmd->add_option("--max-bits", *max_bits, "Bits to shave per row at most")
            ->check(CLI::PositiveNumber);
        cmd->callback([&, in, out, thr, max_bits] {
            auto layer = crew::load_quantized_layer(*in);
            crew::PpaConfig cfg;
            cfg.threshold = *thr;
            cfg.max_bits_reduced = *max_bits;
            auto res = crew::apply_ppa(layer, cfg);
            crew::save_layer(res.layer, *out);
            std::ostringstream msg;
            msg << "ppa: reduced " << 100.0 * res.rows_reduced_fraction() << "% of rows";
            say(g, msg.str());
            if (g.json_out) {
                json rows = json::array();
                for (const auto& r : res.rows)
                    if (r.applied)
                        rows.push_back({{"input", r.input},
                                        {"original_uw", r.original_uw},
                                        {"final_uw", r.final_uw},
                                        {"bits_reduced", r.bits_reduced},
                                        {"wr", r.wr}});
                std::cout << json{{"rows_reduced_fraction", res.rows_reduced_fraction()},
                                  {"applied_rows", rows}}
                                 .dump()
                          << '\n';
            }
        });
    }

    // ppa-sweep --------------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("ppa-sweep", "Compression/perturbation over thresholds");
        auto in = std::make_shared<std::string>();
        auto thrs = std::make_shared<std::string>("0,0.05,0.10,0.15,0.20");
        auto out = std::make_shared<std::string>();
        auto batch = std::make_shared<int>(256);
        auto max_bits = std::make_shared<int>(1);
        cmd->add_option("input", *in, "FCL1 quantized layer")->required();
        cmd->add_option("--thrs", *thrs, "Comma-separated thresholds");
        cmd->add_option("--out", *out, "CSV output path (default stdout)");
        cmd->add_option("--batch", *batch, "Random input vectors for the perturbation metric")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--max-bits", *max_bits, "Bits to shave per row at most")
            ->check(CLI::PositiveNumber);
        cmd->callback([&, in, thrs, out, batch, max_bits] {
            auto layer = crew::load_quantized_layer(*in);
            std::vector<double> thresholds;
            try {
                std::stringstream ss(*thrs);
                std::string item;
                while (std::getline(ss, item, ','))
                    thresholds.push_back(std::stod(item));
            } catch (const std::exception&) {
                throw crew::config_error("bad threshold list: " + *thrs);
            }
            auto points = crew::ppa_sweep(layer, thresholds, *max_bits, *batch, g.seed);
            auto csv = crew::sweep_to_csv(points);
            if (out->empty())
                std::cout << csv;
            else
                write_text_atomic(*out, csv);
        });
    }

    // simulate ----------------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("simulate", "Model dataflow cycles, traffic and energy");
        auto in = std::make_shared<std::string>();
        auto config_path = std::make_shared<std::string>();
        auto costs_path = std::make_shared<std::string>();
        auto dataflow = std::make_shared<std::string>("all");
        auto out = std::make_shared<std::string>();
        auto csv = std::make_shared<std::string>();
        cmd->add_option("input", *in, "FCL1 quantized layer or CREW stream")->required();
        cmd->add_option("--config", *config_path, "Dataflow config file");
        cmd->add_option("--costs", *costs_path, "Cost table file (or env CREW_COSTS)");
        cmd->add_option("--dataflow", *dataflow, "baseline | ucnn | crew | all")
            ->check(CLI::IsMember({"baseline", "ucnn", "crew", "all"}));
        cmd->add_option("--out", *out, "Write the JSON report to a file");
        cmd->add_option("--csv", *csv, "Write per-dataflow CSV rows to a file");
        cmd->callback([&, in, config_path, costs_path, dataflow, out, csv] {
            auto cfg = config_path->empty() ? crew::DataflowConfig{}
                                            : crew::DataflowConfig::from_file(*config_path);
            const auto costs = resolve_costs(*costs_path);
            crew::QuantizedLayer layer;
            if (is_crew_file(*in)) {
                // a packed stream fixes its own block geometry
                const auto packed = crew::load_packed(*in);
                cfg.bs_row = packed.bs_row;
                cfg.bs_col = packed.bs_col;
                layer = crew::decode_to_dense(crew::unpack(packed));
            } else {
                layer = crew::load_quantized_layer(*in);
            }

            json doc;
            std::vector<crew::SimReport> reports;
            if (*dataflow == "all") {
                auto rep = crew::compare(layer, cfg, costs);
                doc = crew::to_json(rep);
                reports = {rep.baseline, rep.ucnn, rep.crew};
            } else {
                crew::SimReport rep;
                if (*dataflow == "baseline")
                    rep = crew::simulate_baseline(layer.n_inputs, layer.n_outputs, layer.q, cfg);
                else if (*dataflow == "ucnn")
                    rep = crew::simulate_ucnn(layer, cfg);
                else
                    rep = crew::simulate_crew(crew::encode(layer), cfg);
                rep.energy = crew::energy_of(rep, costs);
                doc = crew::to_json(rep);
                reports = {rep};
            }
            emit_report(g, doc, *out);
            if (!csv->empty()) {
                std::ostringstream body;
                body << crew::sim_csv_header() << '\n';
                for (const auto& r : reports)
                    body << crew::sim_csv_row(*in, r) << '\n';
                write_text_atomic(*csv, body.str());
            }
            if (!g.json_out && reports.size() == 3) {
                std::ostringstream msg;
                msg << "speedup crew " << reports[2].speedup_vs_baseline << "x, ucnn "
                    << reports[1].speedup_vs_baseline << "x";
                say(g, msg.str());
            }
        });
    }

    // suite ---------------------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("suite", "Generate and evaluate the reference presets");
        auto out_dir = std::make_shared<std::string>(".");
        auto config_path = std::make_shared<std::string>();
        auto costs_path = std::make_shared<std::string>();
        auto emit_layers = std::make_shared<bool>(false);
        cmd->add_option("--out-dir", *out_dir, "Directory for reports and layers");
        cmd->add_option("--config", *config_path, "Dataflow config file");
        cmd->add_option("--costs", *costs_path, "Cost table file (or env CREW_COSTS)");
        cmd->add_flag("--emit-layers", *emit_layers, "Also write each preset as an FCL1 file");
        cmd->callback([&, out_dir, config_path, costs_path, emit_layers] {
            const auto cfg = config_path->empty() ? crew::DataflowConfig{}
                                                  : crew::DataflowConfig::from_file(*config_path);
            const auto costs = resolve_costs(*costs_path);
            std::filesystem::create_directories(*out_dir);

            json presets = json::array();
            std::ostringstream csv;
            csv << "preset,n_inputs,n_outputs,mean_uw,muls_pct,saved_muls_pct,"
                   "storage_reduction_pct,speedup_crew,speedup_ucnn,energy_ratio_crew,"
                   "energy_ratio_ucnn\n";
            size_t rows_total = 0, rows_below_64 = 0;
            for (const auto& preset : crew::reference_suite()) {
                const auto layer = crew::synth_layer(preset.profile, g.seed);
                const auto analysis = crew::analyze_rows(layer);
                const auto storage = crew::storage_report(crew::encode(layer), cfg.bs_row,
                                                          cfg.bs_col);
                const auto rep = crew::compare(layer, cfg, costs);
                rows_total += analysis.uw_counts.size();
                for (int uw : analysis.uw_counts)
                    if (uw < 64)
                        ++rows_below_64;

                presets.push_back({{"name", preset.name},
                                   {"n_inputs", layer.n_inputs},
                                   {"n_outputs", layer.n_outputs},
                                   {"analysis", crew::to_json(analysis)},
                                   {"storage", crew::to_json(storage)},
                                   {"simulation", crew::to_json(rep)}});
                csv << preset.name << ',' << layer.n_inputs << ',' << layer.n_outputs << ','
                    << analysis.mean_uw << ',' << 100.0 * analysis.muls_fraction << ','
                    << 100.0 * storage.saved_muls_fraction << ','
                    << 100.0 * storage.storage_reduction_fraction << ','
                    << rep.crew.speedup_vs_baseline << ',' << rep.ucnn.speedup_vs_baseline << ','
                    << rep.crew.energy_ratio_vs_baseline << ','
                    << rep.ucnn.energy_ratio_vs_baseline << '\n';

                if (*emit_layers) {
                    const auto path =
                        (std::filesystem::path(*out_dir) / (preset.name + ".fcl")).string();
                    crew::save_layer(layer, path);
                }
                say(g, preset.name + ": speedup crew " +
                           std::to_string(rep.crew.speedup_vs_baseline) + "x, ucnn " +
                           std::to_string(rep.ucnn.speedup_vs_baseline) + "x");
            }
            json doc{{"seed", g.seed},
                     {"presets", presets},
                     {"blended_rows_below_64",
                      static_cast<double>(rows_below_64) / static_cast<double>(rows_total)}};
            write_text_atomic((std::filesystem::path(*out_dir) / "suite_report.json").string(),
                              doc.dump(2) + "\n");
            write_text_atomic((std::filesystem::path(*out_dir) / "suite_report.csv").string(),
                              csv.str());
            if (g.json_out)
                std::cout << doc.dump(2) << '\n';
        });
    }

    for (auto* sub : app.get_subcommands(nullptr))
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    } catch (const crew::io_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const crew::config_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const crew::format_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFormat;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return exit_code;
}
