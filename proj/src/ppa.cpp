#include "crew/ppa.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "crew/codec.hpp"
#include "crew/engine.hpp"
#include "detail/rng.hpp"

namespace crew {

void PpaConfig::validate() const {
    if (threshold < 0.0 || threshold > 1.0 || !std::isfinite(threshold))
        throw config_error("threshold must be in [0, 1]");
    if (max_bits_reduced < 1)
        throw config_error("max_bits_reduced must be at least 1");
}

double PpaResult::rows_reduced_fraction() const {
    if (rows.empty())
        return 0.0;
    size_t reduced = 0;
    for (const auto& r : rows)
        if (r.applied)
            ++reduced;
    return static_cast<double>(reduced) / static_cast<double>(rows.size());
}

namespace {

int largest_pow2_below(int uw) {
    int p = 1;
    while (p * 2 < uw)
        p *= 2;
    return p;  // uw >= 2
}

struct UniqueFreq {
    int8_t value;
    int count;
};

std::vector<UniqueFreq> row_frequencies(const int8_t* row, int m) {
    int counts[256] = {};
    for (int j = 0; j < m; ++j)
        counts[static_cast<uint8_t>(row[j])]++;
    std::vector<UniqueFreq> out;
    for (int v = -128; v <= 127; ++v) {
        const int c = counts[static_cast<uint8_t>(static_cast<int8_t>(v))];
        if (c > 0)
            out.push_back({static_cast<int8_t>(v), c});
    }
    return out;
}

// Removal order: least frequent first; among equals the smaller magnitude
// goes first, and -v before +v.
bool removal_before(const UniqueFreq& a, const UniqueFreq& b) {
    if (a.count != b.count)
        return a.count < b.count;
    const int aa = std::abs(static_cast<int>(a.value));
    const int ab = std::abs(static_cast<int>(b.value));
    if (aa != ab)
        return aa < ab;
    return a.value < b.value;
}

int8_t nearest_survivor(int8_t removed, const std::vector<int8_t>& survivors) {
    int best_dist = 1 << 30;
    int8_t best = survivors.front();
    for (int8_t s : survivors) {
        const int d = std::abs(static_cast<int>(s) - static_cast<int>(removed));
        if (d < best_dist || (d == best_dist && s < best)) {
            best_dist = d;
            best = s;
        }
    }
    return best;
}

}  // namespace

PpaResult apply_ppa(const QuantizedLayer& layer, const PpaConfig& cfg) {
    layer.validate();
    cfg.validate();

    PpaResult res;
    res.layer = layer;
    res.rows.resize(layer.n_inputs);
    const int m = layer.n_outputs;

    for (int i = 0; i < layer.n_inputs; ++i) {
        int8_t* row = res.layer.weights.data() + static_cast<size_t>(i) * m;
        auto& rep = res.rows[i];
        rep.input = i;

        auto freqs = row_frequencies(row, m);
        rep.original_uw = static_cast<int>(freqs.size());
        rep.final_uw = rep.original_uw;
        if (rep.original_uw <= 1)
            continue;

        for (int level = 0; level < cfg.max_bits_reduced; ++level) {
            const int uw = static_cast<int>(freqs.size());
            if (uw <= 1)
                break;
            const int target = largest_pow2_below(uw);
            const int dist = uw - target;

            std::sort(freqs.begin(), freqs.end(), removal_before);
            int low_freq = 0;
            for (int k = 0; k < dist; ++k)
                low_freq += freqs[k].count;
            const double wr = static_cast<double>(low_freq) / static_cast<double>(m);

            rep.target_uw = target;
            if (level == 0 || wr < cfg.threshold) {
                // keep the report on the last level we actually evaluated
                rep.wr = wr;
            }
            if (!(wr < cfg.threshold))
                break;

            std::vector<int8_t> survivors;
            survivors.reserve(target);
            for (int k = dist; k < uw; ++k)
                survivors.push_back(freqs[k].value);

            for (int k = 0; k < dist; ++k) {
                const int8_t gone = freqs[k].value;
                const int8_t repl = nearest_survivor(gone, survivors);
                rep.removed.push_back(gone);
                rep.replacements.push_back(repl);
                for (int j = 0; j < m; ++j)
                    if (row[j] == gone)
                        row[j] = repl;
            }
            rep.dist_w += dist;
            rep.low_freq_w += low_freq;
            rep.applied = true;
            rep.bits_reduced += 1;
            rep.final_uw = target;
            freqs = row_frequencies(row, m);
        }
    }
    return res;
}

std::vector<PpaSweepPoint> ppa_sweep(const QuantizedLayer& layer,
                                     const std::vector<double>& thresholds,
                                     int max_bits_reduced, int batch, uint64_t seed) {
    layer.validate();
    for (double t : thresholds)
        if (t < 0.0 || t > 1.0)
            throw config_error("sweep thresholds must be in [0, 1]");

    const auto base_enc = encode(layer);
    const uint64_t base_bits = storage_report(base_enc).crew_bits;

    // fixed seeded batch shared by every threshold
    std::vector<std::vector<int8_t>> inputs(batch);
    for (int b = 0; b < batch; ++b) {
        auto rng = detail::Rng::for_index(seed, static_cast<uint64_t>(b));
        inputs[b].resize(layer.n_inputs);
        for (auto& v : inputs[b])
            v = static_cast<int8_t>(rng.range(-128, 127));
    }
    std::vector<std::vector<int32_t>> reference(batch);
    for (int b = 0; b < batch; ++b)
        reference[b] = dense_forward(layer, inputs[b]).outputs;

    std::vector<PpaSweepPoint> points;
    points.reserve(thresholds.size());
    for (double thr : thresholds) {
        PpaConfig cfg;
        cfg.threshold = thr;
        cfg.max_bits_reduced = max_bits_reduced;
        auto ppa = apply_ppa(layer, cfg);

        PpaSweepPoint pt;
        pt.threshold = thr;
        pt.crew_bits = storage_report(encode(ppa.layer)).crew_bits;
        pt.compression_ratio = static_cast<double>(base_bits) / static_cast<double>(pt.crew_bits);
        pt.rows_reduced_pct = 100.0 * ppa.rows_reduced_fraction();

        double err_sum = 0.0;
        double err_max = 0.0;
        for (int b = 0; b < batch; ++b) {
            auto outputs = dense_forward(ppa.layer, inputs[b]).outputs;
            double diff2 = 0.0, ref2 = 0.0;
            for (size_t j = 0; j < outputs.size(); ++j) {
                const double d = static_cast<double>(outputs[j]) - reference[b][j];
                diff2 += d * d;
                ref2 += static_cast<double>(reference[b][j]) * reference[b][j];
            }
            const double rel = ref2 > 0.0 ? std::sqrt(diff2 / ref2)
                                          : (diff2 > 0.0 ? std::sqrt(diff2) : 0.0);
            err_sum += rel;
            err_max = std::max(err_max, rel);
        }
        pt.mean_rel_err = err_sum / batch;
        pt.max_rel_err = err_max;
        points.push_back(pt);
    }
    return points;
}

std::string sweep_to_csv(const std::vector<PpaSweepPoint>& points) {
    std::ostringstream out;
    out << "thr,crew_bits,compression_ratio,rows_reduced_pct,mean_rel_err,max_rel_err\n";
    for (const auto& p : points)
        out << p.threshold << ',' << p.crew_bits << ',' << p.compression_ratio << ','
            << p.rows_reduced_pct << ',' << p.mean_rel_err << ',' << p.max_rel_err << '\n';
    return out.str();
}

}  // namespace crew
