#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "crew/codec.hpp"
#include "crew/ppa.hpp"
#include "crew/presets.hpp"
#include "helpers.hpp"

using namespace crew;

namespace {

/// One row with exactly `uw` distinct values where the `tail` least
/// frequent ones carry `tail_each` occurrences apiece and the rest split
/// the remaining slots roughly evenly.
QuantizedLayer tailed_row(int uw, int tail, int tail_each, int m) {
    QuantizedLayer layer;
    layer.n_inputs = 1;
    layer.n_outputs = m;
    layer.weights.resize(m);
    layer.bias.assign(m, 0);
    int pos = 0;
    const int head = uw - tail;
    const int head_slots = m - tail * tail_each;
    for (int k = 0; k < head; ++k) {
        const int count = head_slots / head + (k < head_slots % head ? 1 : 0);
        for (int c = 0; c < count; ++c)
            layer.weights[pos++] = static_cast<int8_t>(k - 60);
    }
    for (int k = 0; k < tail; ++k)
        for (int c = 0; c < tail_each; ++c)
            layer.weights[pos++] = static_cast<int8_t>(k + 70);
    REQUIRE(pos == m);
    return layer;
}

}  // namespace

TEST_CASE("a 38-unique row with a light tail shrinks to 32 and one less bit") {
    // 6 removable values at 2 occurrences each over 2252 slots: 0.53% < 10%
    auto layer = tailed_row(38, 6, 2, 2252);
    REQUIRE(testutil::distinct_in_row(layer, 0) == 38);
    REQUIRE(encode(layer).bit_widths[0] == 6);

    auto res = apply_ppa(layer, {});
    CHECK(res.rows[0].applied);
    CHECK(res.rows[0].original_uw == 38);
    CHECK(res.rows[0].final_uw == 32);
    CHECK(res.rows[0].target_uw == 32);
    CHECK(res.rows[0].dist_w == 6);
    CHECK(res.rows[0].wr < 0.10);
    CHECK(testutil::distinct_in_row(res.layer, 0) == 32);
    CHECK(encode(res.layer).bit_widths[0] == 5);
}

TEST_CASE("a heavy tail blocks the approximation") {
    // 6 removable values at 60 occurrences each over 2252 slots: 16% >= 10%
    auto layer = tailed_row(38, 6, 60, 2252);
    auto res = apply_ppa(layer, {});
    CHECK_FALSE(res.rows[0].applied);
    CHECK(res.rows[0].wr >= 0.10);
    CHECK(res.layer.weights == layer.weights);
}

TEST_CASE("zero threshold is the identity") {
    std::mt19937 rng(1);
    auto layer = testutil::random_layer(rng, 10, 64);
    PpaConfig cfg;
    cfg.threshold = 0.0;
    auto res = apply_ppa(layer, cfg);
    CHECK(res.layer.weights == layer.weights);
    for (const auto& r : res.rows)
        CHECK_FALSE(r.applied);
    CHECK(res.rows_reduced_fraction() == 0.0);
}

TEST_CASE("single-unique rows are skipped") {
    auto layer = testutil::make_quantized({{5, 5, 5, 5}});
    auto res = apply_ppa(layer, {});
    CHECK_FALSE(res.rows[0].applied);
    CHECK(res.layer.weights == layer.weights);
}

TEST_CASE("power-of-two rows may halve when allowed by the threshold") {
    // 32 uniques: 16 dominant (60 slots each), 16 rare (1 slot each)
    QuantizedLayer layer;
    layer.n_inputs = 1;
    layer.n_outputs = 976;
    layer.weights.resize(976);
    layer.bias.assign(976, 0);
    int pos = 0;
    for (int k = 0; k < 16; ++k)
        for (int c = 0; c < 60; ++c)
            layer.weights[pos++] = static_cast<int8_t>(k * 2);
    for (int k = 0; k < 16; ++k)
        layer.weights[pos++] = static_cast<int8_t>(100 + k);
    REQUIRE(pos == 976);

    auto res = apply_ppa(layer, {});  // 16/976 = 1.6% < 10%
    CHECK(res.rows[0].applied);
    CHECK(res.rows[0].original_uw == 32);
    CHECK(res.rows[0].final_uw == 16);
}

TEST_CASE("replacement picks the nearest survivor, smaller value on ties") {
    // uniques: 0 (x5), 10 (x5), 100 (x1); removing 100 must land on 10
    auto layer = testutil::make_quantized(
        {{0, 0, 0, 0, 0, 10, 10, 10, 10, 10, 100}});
    PpaConfig cfg;
    cfg.threshold = 0.5;
    auto res = apply_ppa(layer, cfg);
    REQUIRE(res.rows[0].applied);
    REQUIRE(res.rows[0].removed.size() == 1);
    CHECK(res.rows[0].removed[0] == 100);
    CHECK(res.rows[0].replacements[0] == 10);

    // equidistant case: removing 5 between 0 and 10 lands on the smaller
    auto layer2 = testutil::make_quantized({{0, 0, 0, 0, 0, 10, 10, 10, 10, 10, 5}});
    auto res2 = apply_ppa(layer2, cfg);
    REQUIRE(res2.rows[0].applied);
    CHECK(res2.rows[0].removed[0] == 5);
    CHECK(res2.rows[0].replacements[0] == 0);
}

TEST_CASE("two-level reduction under a permissive tail") {
    // 16 dominant values plus 22 singletons: 38 -> 32 -> 16 within budget
    QuantizedLayer layer;
    layer.n_inputs = 1;
    layer.n_outputs = 1622;
    layer.weights.resize(1622);
    layer.bias.assign(1622, 0);
    int pos = 0;
    for (int k = 0; k < 16; ++k)
        for (int c = 0; c < 100; ++c)
            layer.weights[pos++] = static_cast<int8_t>(k * 3 - 90);
    for (int k = 0; k < 22; ++k)
        layer.weights[pos++] = static_cast<int8_t>(60 + k);
    REQUIRE(pos == 1622);
    REQUIRE(testutil::distinct_in_row(layer, 0) == 38);

    PpaConfig cfg;
    cfg.max_bits_reduced = 2;
    auto res = apply_ppa(layer, cfg);
    CHECK(res.rows[0].applied);
    CHECK(res.rows[0].bits_reduced == 2);
    CHECK(res.rows[0].final_uw == 16);
    CHECK(testutil::distinct_in_row(res.layer, 0) == 16);

    // single-level config stops at 32
    auto res1 = apply_ppa(layer, {});
    CHECK(res1.rows[0].final_uw == 32);
}

TEST_CASE("applied rows end on a power of two with matching width drop") {
    auto suite = reference_suite();
    auto profile = suite[0].profile;  // ds2-like
    profile.n_inputs = 64;
    auto layer = synth_layer(profile, 11);
    auto before = encode(layer);
    auto res = apply_ppa(layer, {});
    auto after = encode(res.layer);
    for (const auto& r : res.rows) {
        if (r.applied) {
            CHECK((r.final_uw & (r.final_uw - 1)) == 0);
            CHECK(after.bit_widths[r.input] == before.bit_widths[r.input] - r.bits_reduced);
            CHECK(r.wr < 0.10);
        } else {
            // untouched rows stay cell-exact
            for (int j = 0; j < layer.n_outputs; ++j)
                CHECK(res.layer.at(r.input, j) == layer.at(r.input, j));
        }
    }
    CHECK(res.layer.bias == layer.bias);
    CHECK(res.layer.n_inputs == layer.n_inputs);
    CHECK(res.layer.n_outputs == layer.n_outputs);
}

TEST_CASE("every modified cell moves to the nearest survivor of its old value") {
    auto profile = reference_suite()[3].profile;  // kaldi-like, widest spread
    profile.n_inputs = 32;
    auto layer = synth_layer(profile, 21);
    auto res = apply_ppa(layer, {});
    for (const auto& r : res.rows) {
        if (!r.applied)
            continue;
        // survivors = final distinct set of the row
        std::set<int8_t> survivors;
        for (int j = 0; j < layer.n_outputs; ++j)
            survivors.insert(res.layer.at(r.input, j));
        for (int j = 0; j < layer.n_outputs; ++j) {
            const int8_t before = layer.at(r.input, j);
            const int8_t after = res.layer.at(r.input, j);
            if (before == after)
                continue;
            // the old value must be one of the recorded removals and the
            // new one its recorded replacement
            bool found = false;
            for (size_t k = 0; k < r.removed.size(); ++k) {
                if (r.removed[k] == before) {
                    found = r.replacements[k] == after ||
                            // a replacement may itself be removed one level later
                            survivors.count(after) == 1;
                    break;
                }
            }
            CHECK(found);
        }
    }
}

TEST_CASE("apply_ppa is deterministic") {
    auto profile = reference_suite()[2].profile;
    profile.n_inputs = 48;
    auto layer = synth_layer(profile, 3);
    auto a = apply_ppa(layer, {});
    auto b = apply_ppa(layer, {});
    CHECK(a.layer.weights == b.layer.weights);
}

TEST_CASE("sweep compression never decreases with the threshold") {
    auto profile = reference_suite()[0].profile;
    profile.n_inputs = 96;
    auto layer = synth_layer(profile, 17);
    auto points = ppa_sweep(layer, {0.0, 0.05, 0.10, 0.15, 0.20}, 1, 16);
    REQUIRE(points.size() == 5);
    CHECK(points[0].compression_ratio == doctest::Approx(1.0));
    CHECK(points[0].mean_rel_err == 0.0);
    CHECK(points[0].max_rel_err == 0.0);
    for (size_t k = 1; k < points.size(); ++k)
        CHECK(points[k].compression_ratio >= points[k - 1].compression_ratio - 1e-12);
}

TEST_CASE("sweep csv carries the documented columns") {
    auto layer = testutil::make_quantized({{1, 1, 2, 2, 3, 3, 3, 3}});
    auto points = ppa_sweep(layer, {0.0, 0.5}, 1, 4);
    auto csv = sweep_to_csv(points);
    CHECK(csv.find("thr,crew_bits,compression_ratio,rows_reduced_pct,mean_rel_err,max_rel_err") ==
          0);
}

TEST_CASE("config validation") {
    PpaConfig cfg;
    cfg.threshold = -0.1;
    CHECK_THROWS_AS(cfg.validate(), config_error);
    cfg.threshold = 0.5;
    cfg.max_bits_reduced = 0;
    CHECK_THROWS_AS(cfg.validate(), config_error);
}
