#pragma once

#include <string>
#include <vector>

#include "crew/tensorio.hpp"

namespace crew {

/// Named synthetic profile for the reference suite. Each preset targets the
/// mean unique-weights-per-input of a well-known network family at
/// desk-scale layer dimensions.
struct SuitePreset {
    std::string name;
    UniqueWeightProfile profile;
};

/// The five reference presets (ds2-like, gnmt-like, transformer-like,
/// kaldi-like, ptblm-like). Mean unique counts: 38, 29, 49, 59, 43.
std::vector<SuitePreset> reference_suite();

}  // namespace crew
