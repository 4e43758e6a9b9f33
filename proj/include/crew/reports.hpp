#pragma once

#include <json.hpp>

#include "crew/codec.hpp"
#include "crew/perfmodel.hpp"

namespace crew {

nlohmann::json to_json(const RowAnalysis& analysis);
nlohmann::json to_json(const StorageReport& report);
nlohmann::json to_json(const SimReport& report);
nlohmann::json to_json(const CompareReport& report);

std::string sim_csv_header();
std::string sim_csv_row(const std::string& layer_name, const SimReport& report);

}  // namespace crew
