#pragma once

#include <filesystem>
#include <optional>

#include <json.hpp>

#include "wmid/core/model.hpp"
#include "wmid/core/watermark.hpp"

namespace wmid {

nlohmann::json to_json(const SyntheticModelConfig& cfg);
SyntheticModelConfig model_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const WatermarkSpec& spec);
WatermarkSpec watermark_from_json(const nlohmann::json& j);

// Flat object holding the model fields and, optionally, the watermark
// fields. The watermark is present when any of gamma/delta/variant is.
struct SimulationConfig {
  SyntheticModelConfig model;
  std::optional<WatermarkSpec> watermark;
};

nlohmann::json to_json(const SimulationConfig& cfg);
SimulationConfig simulation_from_json(const nlohmann::json& j);
SimulationConfig load_simulation_config(const std::filesystem::path& path);
void save_simulation_config(const SimulationConfig& cfg, const std::filesystem::path& path);

}  // namespace wmid
