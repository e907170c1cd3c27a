#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "yieldopt/models.hpp"
#include "yieldopt/optimizer.hpp"

namespace yieldopt::cli {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Fully resolved run configuration. Every field has a benchmark default; a
/// config file overrides individual keys and the resolved values are echoed
/// into the run record.
struct RunConfig {
  std::string variant = "4param";  // 4param | 12param
  double a_mm = 30.0;
  double b_mm = 15.0;
  int base_elements = 64;

  Eigen::VectorXd mean;    // estimation / calibration / gradcheck point
  Eigen::VectorXd start;   // optimization starting point
  Eigen::VectorXd std;     // explicit standard deviations
  Eigen::VectorXd trunc;   // truncation offsets

  double threshold_db = -24.0;
  double freq_lo_ghz = 6.5;
  double freq_hi_ghz = 7.5;
  int num_freqs = 11;

  int budget = 90;
  double safety = 2.0;
  bool calibrate = false;  // calibrate the safety factor before estimating
  int n_cal = 20;

  long n_mc = 2500;
  std::uint64_t seed_sample = 2024;
  std::uint64_t seed_calibration = 777;

  Eigen::Vector3d effort_weights{1.0, 4.0, 16.0};

  optimizer::NewtonParams newton;
  std::string evaluator = "hybrid";  // hybrid | closed_form | mc_fine (optimize)
  bool rebuild_surrogate = false;

  double gradcheck_delta = 1e-3;
  double gradcheck_eta = 0.05;
  std::vector<long> gradcheck_schedule{1000, 10000, 100000};

  models::Variant variant_enum() const;
  void resolve_defaults();  // fills mean/start/std/trunc left empty
  void validate() const;

  estimator::PerfSpec perf_spec() const;
  estimator::EffortWeights weights() const;
  UncertainInput uncertainty(const Eigen::VectorXd& about) const;
};

/// Parses `key = value` lines (comments with '#', optional [section] headers
/// are ignored). Unknown keys are an error.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);

/// Resolved-config echo as a JSON string (stable key order).
std::string config_json(const RunConfig& c);

}  // namespace yieldopt::cli
