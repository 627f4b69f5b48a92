#pragma once

#include <filesystem>

#include <json.hpp>

#include "ccrn/erasure_model.hpp"

namespace ccrn {

/// Parses {"kind":"independent","e12":..,"e13":..,"e14":..,"e23":..,"e24":..} or
/// {"kind":"joint","node1":[8 masses],"node2":[4 masses]}. Values given as strings ("0.15",
/// "3/20") are read as exact rationals; the model then classifies with exact comparisons when
/// every value is a string. Throws ConfigError on malformed input.
ErasureModel model_from_json(const nlohmann::json& j);

ErasureModel load_model(const std::filesystem::path& path);

/// Joint form of the model with double masses.
nlohmann::json model_to_json(const ErasureModel& model);

}  // namespace ccrn
