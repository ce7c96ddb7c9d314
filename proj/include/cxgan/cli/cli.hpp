// SPDX-License-Identifier: Apache-2.0
/**
 * @file   cli.hpp
 * @brief  The cxgan command line: prepare, train, enhance, deconvolve,
 *         evaluate and report.
 *
 * Exit codes: 0 success, 1 processing failure (including some failed
 * images or rows), 2 usage error (bad flags, missing input files).
 */
#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace cxgan::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs one command. `args` excludes the program name.
int run(std::span<const std::string> args, std::ostream &out, std::ostream &err);

} // namespace cxgan::cli
