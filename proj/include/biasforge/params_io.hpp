#pragma once

#include <filesystem>
#include <string_view>

#include "biasforge/core_model.hpp"
#include "biasforge/json_io.hpp"

namespace biasforge {

inline constexpr std::string_view kTable2PresetName = "table2-v1";

// Reference evaluator parameters: prior coefficients, bias terms, price, and
// the D/A/H signal maps with their weights. Signal M is absent.
ModelParams table2_preset();

// "table2" or "table2-v1".
ModelParams preset_by_name(std::string_view name);

Json params_to_json(const ModelParams& params);

// Accepts either a params object or an estimate report (reads its "estimates").
ModelParams params_from_json(const Json& j);

ModelParams load_params(const std::filesystem::path& path);
void save_params(const std::filesystem::path& path, const ModelParams& params);

}  // namespace biasforge
