#pragma once

#include <filesystem>
#include <string>

#include "fluxcube/model.hpp"

namespace fluxcube {

inline constexpr int kModelSchemaVersion = 1;

// Every parameter is written as a shortest round-trip decimal, so load(save(m)) is bit-identical.
std::string model_to_json(const FluxCubeModel& model);
// Throws InputError on malformed documents or a schema version mismatch.
FluxCubeModel model_from_json(const std::string& text);

void save_model(const std::filesystem::path& path, const FluxCubeModel& model);
FluxCubeModel load_model(const std::filesystem::path& path);

std::string config_to_json(const TrainConfig& config);
// Missing keys keep their defaults; unknown keys are rejected.
TrainConfig config_from_json(const std::string& text);

}  // namespace fluxcube
