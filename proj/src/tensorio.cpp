#include "crew/tensorio.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "detail/binio.hpp"
#include "detail/rng.hpp"

namespace crew {

namespace {

constexpr char kMagic[4] = {'F', 'C', 'L', '1'};
constexpr uint8_t kDtypeFloat = 0;
constexpr uint8_t kDtypeInt8 = 1;

void check_dims(uint32_t n, uint32_t m) {
    if (n < 1 || m < 1)
        throw format_error("layer dimensions must be at least 1x1");
    // keep N*M addressable and int32 accumulation safe
    if (n > (1u << 20) || m > (1u << 20))
        throw format_error("layer dimensions out of supported range");
}

}  // namespace

void FloatLayer::validate() const {
    check_dims(static_cast<uint32_t>(n_inputs), static_cast<uint32_t>(n_outputs));
    if (weights.size() != static_cast<size_t>(n_inputs) * n_outputs)
        throw format_error("weight payload does not match dimensions");
    if (bias.size() != static_cast<size_t>(n_outputs))
        throw format_error("bias payload does not match dimensions");
    for (float w : weights)
        if (!std::isfinite(w))
            throw format_error("non-finite weight value");
    for (float b : bias)
        if (!std::isfinite(b))
            throw format_error("non-finite bias value");
}

void QuantizedLayer::validate() const {
    check_dims(static_cast<uint32_t>(n_inputs), static_cast<uint32_t>(n_outputs));
    if (q < 2 || q > 8)
        throw format_error("bit width must be in [2, 8]");
    if (!(scale > 0.0f) || !std::isfinite(scale))
        throw format_error("scale must be positive and finite");
    if (weights.size() != static_cast<size_t>(n_inputs) * n_outputs)
        throw format_error("weight payload does not match dimensions");
    if (bias.size() != static_cast<size_t>(n_outputs))
        throw format_error("bias payload does not match dimensions");
    const int lo = -(1 << (q - 1));
    const int hi = (1 << (q - 1)) - 1;
    for (int8_t w : weights)
        if (w < lo || w > hi)
            throw format_error("weight outside the q-bit signed range");
}

UniqueWeightProfile UniqueWeightProfile::constant(int uw, int n_inputs, int n_outputs) {
    UniqueWeightProfile p;
    p.n_inputs = n_inputs;
    p.n_outputs = n_outputs;
    p.uw_histogram = {{uw, 1.0}};
    return p;
}

void UniqueWeightProfile::validate() const {
    check_dims(static_cast<uint32_t>(n_inputs), static_cast<uint32_t>(n_outputs));
    if (uw_histogram.empty())
        throw config_error("profile needs at least one unique-count entry");
    double total = 0.0;
    for (const auto& [uw, p] : uw_histogram) {
        if (uw < 1 || uw > std::min(n_outputs, 256))
            throw config_error("unique count " + std::to_string(uw) +
                               " outside [1, min(M, 256)]");
        if (!(p >= 0.0) || !std::isfinite(p))
            throw config_error("histogram probabilities must be non-negative");
        total += p;
    }
    if (total <= 0.0)
        throw config_error("histogram probabilities sum to zero");
    if (!(zipf_exponent >= 0.0) || !std::isfinite(zipf_exponent))
        throw config_error("zipf exponent must be non-negative");
}

LoadedLayer load_layer(const std::string& path) {
    auto bytes = detail::read_file(path);
    detail::ByteCursor cur(bytes);

    auto magic = cur.take(4);
    if (!std::equal(magic.begin(), magic.end(), kMagic))
        throw format_error(path + ": bad magic, not an FCL1 container");
    uint8_t dtype = cur.get<uint8_t>();
    uint32_t n = cur.get<uint32_t>();
    uint32_t m = cur.get<uint32_t>();
    check_dims(n, m);
    const size_t cells = static_cast<size_t>(n) * m;

    if (dtype == kDtypeFloat) {
        FloatLayer layer;
        layer.n_inputs = static_cast<int>(n);
        layer.n_outputs = static_cast<int>(m);
        if (cur.remaining() != cells * 4 + m * 4)
            throw format_error(path + ": payload length does not match header dimensions");
        layer.weights.resize(cells);
        for (auto& w : layer.weights)
            w = cur.get<float>();
        layer.bias.resize(m);
        for (auto& b : layer.bias)
            b = cur.get<float>();
        layer.validate();
        return layer;
    }
    if (dtype == kDtypeInt8) {
        QuantizedLayer layer;
        layer.n_inputs = static_cast<int>(n);
        layer.n_outputs = static_cast<int>(m);
        layer.q = 8;  // the container stores full int8 values
        if (cur.remaining() != 4 + cells + m * 4)
            throw format_error(path + ": payload length does not match header dimensions");
        layer.scale = cur.get<float>();
        layer.weights.resize(cells);
        for (auto& w : layer.weights)
            w = static_cast<int8_t>(cur.get<uint8_t>());
        layer.bias.resize(m);
        for (auto& b : layer.bias)
            b = cur.get<int32_t>();
        layer.validate();
        return layer;
    }
    throw format_error(path + ": unknown dtype tag " + std::to_string(dtype));
}

FloatLayer load_float_layer(const std::string& path) {
    auto loaded = load_layer(path);
    if (auto* f = std::get_if<FloatLayer>(&loaded))
        return std::move(*f);
    throw format_error(path + ": expected a float layer, found a quantized one");
}

QuantizedLayer load_quantized_layer(const std::string& path) {
    auto loaded = load_layer(path);
    if (auto* qz = std::get_if<QuantizedLayer>(&loaded))
        return std::move(*qz);
    throw format_error(path + ": expected a quantized layer, found a float one");
}

void save_layer(const FloatLayer& layer, const std::string& path) {
    layer.validate();
    std::vector<uint8_t> out;
    out.reserve(13 + layer.weights.size() * 4 + layer.bias.size() * 4);
    out.insert(out.end(), kMagic, kMagic + 4);
    detail::put(out, kDtypeFloat);
    detail::put(out, static_cast<uint32_t>(layer.n_inputs));
    detail::put(out, static_cast<uint32_t>(layer.n_outputs));
    for (float w : layer.weights)
        detail::put(out, w);
    for (float b : layer.bias)
        detail::put(out, b);
    detail::write_file_atomic(path, out);
}

void save_layer(const QuantizedLayer& layer, const std::string& path) {
    layer.validate();
    std::vector<uint8_t> out;
    out.reserve(17 + layer.weights.size() + layer.bias.size() * 4);
    out.insert(out.end(), kMagic, kMagic + 4);
    detail::put(out, kDtypeInt8);
    detail::put(out, static_cast<uint32_t>(layer.n_inputs));
    detail::put(out, static_cast<uint32_t>(layer.n_outputs));
    detail::put(out, layer.scale);
    for (int8_t w : layer.weights)
        detail::put(out, static_cast<uint8_t>(w));
    for (int32_t b : layer.bias)
        detail::put(out, b);
    detail::write_file_atomic(path, out);
}

namespace {

int draw_unique_count(const UniqueWeightProfile& profile, detail::Rng& rng) {
    if (profile.uw_histogram.size() == 1)
        return profile.uw_histogram.front().first;
    double total = 0.0;
    for (const auto& [uw, p] : profile.uw_histogram)
        total += p;
    double x = rng.uniform01() * total;
    double acc = 0.0;
    for (const auto& [uw, p] : profile.uw_histogram) {
        acc += p;
        if (x < acc)
            return uw;
    }
    return profile.uw_histogram.back().first;
}

}  // namespace

QuantizedLayer synth_layer(const UniqueWeightProfile& profile, uint64_t seed) {
    profile.validate();
    const int n = profile.n_inputs;
    const int m = profile.n_outputs;

    QuantizedLayer layer;
    layer.n_inputs = n;
    layer.n_outputs = m;
    layer.q = 8;
    layer.scale = 1.0f;
    layer.weights.resize(static_cast<size_t>(n) * m);
    layer.bias.assign(m, 0);

    for (int i = 0; i < n; ++i) {
        auto rng = detail::Rng::for_index(seed, static_cast<uint64_t>(i));
        const int uw = draw_unique_count(profile, rng);
        if (uw > m)
            throw config_error("profile demands " + std::to_string(uw) +
                               " distinct values but the row only has " + std::to_string(m) +
                               " slots");

        // uw distinct values, partial Fisher-Yates over the int8 range
        int pool[256];
        std::iota(pool, pool + 256, -128);
        std::vector<int8_t> values(uw);
        for (int k = 0; k < uw; ++k) {
            int pick = k + static_cast<int>(rng.below(static_cast<uint64_t>(256 - k)));
            std::swap(pool[k], pool[pick]);
            values[k] = static_cast<int8_t>(pool[k]);
        }

        // rank k gets mass 1/(k+1)^s; cumulative table for the draw
        std::vector<double> cum(uw);
        double total = 0.0;
        for (int k = 0; k < uw; ++k) {
            total += std::pow(static_cast<double>(k + 1), -profile.zipf_exponent);
            cum[k] = total;
        }

        // one slot per value guarantees the realized distinct count, the
        // rest follow the skewed draw
        int8_t* row = layer.weights.data() + static_cast<size_t>(i) * m;
        for (int k = 0; k < uw; ++k)
            row[k] = values[k];
        for (int j = uw; j < m; ++j) {
            double x = rng.uniform01() * total;
            int k = static_cast<int>(std::lower_bound(cum.begin(), cum.end(), x) - cum.begin());
            if (k >= uw)
                k = uw - 1;
            row[j] = values[k];
        }
        for (int j = m - 1; j > 0; --j) {
            int k = static_cast<int>(rng.below(static_cast<uint64_t>(j + 1)));
            std::swap(row[j], row[k]);
        }
    }
    return layer;
}

}  // namespace crew
