// SPDX-License-Identifier: Apache-2.0
/**
 * @file   json_config.hpp
 * @brief  JSON config files for a CLI11 subcommand.
 *
 * A config file is one JSON object whose keys are long flag names, with
 * '_' accepted for '-'. Arrays feed multi-value flags. Values given on the
 * command line win over values from the file, which win over defaults.
 *
 *   {"iterations": 200, "lr": 0.001, "wavelengths": [565, 520, 461]}
 */
#pragma once

#include "CLI11.hpp"

#include <filesystem>

namespace cxgan::cli {

/// Feeds every key of the file to the matching option of `app` that was not
/// set on the command line. Throws CLI::ConfigError for unreadable files and
/// unknown keys, CLI::ValidationError for rejected values.
void apply_json_config(CLI::App &app, const std::filesystem::path &path);

} // namespace cxgan::cli
