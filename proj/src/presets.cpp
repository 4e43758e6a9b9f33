#include "crew/presets.hpp"

namespace crew {

// Desk-scale stand-ins for the FC layers of five network families. Layer
// widths follow typical gate/projection sizes of each family (GRU 3x768,
// LSTM 4x1024 / 4x1500, MLP hiddens); the unique-count histograms are
// centered on the observed per-family means (38, 29, 49, 59, 43) and the
// kaldi profile keeps part of its mass above 64 like the wider observed
// distributions. Exponent 1.5 leaves most unique values below 1% usage,
// matching the measured frequency histograms.
std::vector<SuitePreset> reference_suite() {
    std::vector<SuitePreset> suite;

    const auto make = [](std::string name, int n, int m,
                         std::vector<std::pair<int, double>> hist) {
        SuitePreset p;
        p.name = std::move(name);
        p.profile.n_inputs = n;
        p.profile.n_outputs = m;
        p.profile.uw_histogram = std::move(hist);
        p.profile.zipf_exponent = 1.5;
        return p;
    };

    suite.push_back(make("ds2-like", 512, 2304,
                         {{36, 0.2}, {37, 0.2}, {38, 0.2}, {39, 0.2}, {40, 0.2}}));
    suite.push_back(make("gnmt-like", 1024, 4096,
                         {{25, 0.2}, {27, 0.2}, {29, 0.2}, {31, 0.2}, {33, 0.2}}));
    suite.push_back(make("transformer-like", 512, 1024,
                         {{45, 0.2}, {47, 0.2}, {49, 0.2}, {51, 0.2}, {53, 0.2}}));
    suite.push_back(make("kaldi-like", 512, 2048,
                         {{45, 0.15}, {52, 0.2}, {59, 0.3}, {66, 0.2}, {73, 0.15}}));
    suite.push_back(make("ptblm-like", 512, 6000,
                         {{39, 0.2}, {41, 0.2}, {43, 0.2}, {45, 0.2}, {47, 0.2}}));
    return suite;
}

}  // namespace crew
