#pragma once

#include <filesystem>
#include <string>

#include "hybridsum/pipeline.hpp"

namespace hybridsum {

/// Parses a run configuration (JSON). Unknown keys and wrong types raise
/// ConfigError carrying the offending key path, e.g. "/router/threshold".
/// Relative paths are resolved against `base_dir`.
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// Applies HYBRIDSUM_GENERATOR_CMD, HYBRIDSUM_CLASSIFIER_CMD and
/// HYBRIDSUM_BACKEND_TIMEOUT_MS when set.
void apply_env_overrides(RunConfig& config);

}  // namespace hybridsum
