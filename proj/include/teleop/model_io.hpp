#pragma once

#include <filesystem>
#include <string_view>

#include "teleop/kinematics.hpp"

namespace teleop {

/// Parses a robot description document (JSON, schema in docs/robot_description.md).
/// Throws ModelError on malformed input, unknown keys, or failed validation.
KinematicModel load_model(std::string_view document);
KinematicModel load_model_file(const std::filesystem::path& path);

}  // namespace teleop
