#pragma once

#include <string>

#include "yieldopt/config.hpp"

namespace yieldopt::cli {

inline constexpr const char* kVersion = "1.0.0";

/// Options common to all subcommands.
struct RunOptions {
  std::string out_dir = "out";
  std::string save_surrogate;  // optional path
  std::string load_surrogate;  // optional path
};

/// Each runner writes its reports plus run_record.json into out_dir and
/// returns the process exit code (0 success, 4 non-convergence). Config
/// problems throw ConfigError (exit 2), solver failures propagate as
/// std::runtime_error/domain_error (exit 3).
int run_estimate(const RunConfig& config, const RunOptions& opts);
int run_optimize(const RunConfig& config, const RunOptions& opts, bool adaptive);
int run_gradcheck(const RunConfig& config, const RunOptions& opts);
int run_calibrate(const RunConfig& config, const RunOptions& opts);

}  // namespace yieldopt::cli
