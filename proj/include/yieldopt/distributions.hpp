#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace yieldopt {

/// Truncated multivariate normal description of the design-parameter vector.
/// The covariance is diagonal (entries std[j]^2); each component is truncated
/// symmetrically at mean[j] +- trunc[j].
struct UncertainInput {
  Eigen::VectorXd mean;   // nominal values (mm for geometry, unitless for material)
  Eigen::VectorXd std;    // per-component standard deviation
  Eigen::VectorXd trunc;  // per-component truncation offset about the mean

  Eigen::Index dim() const { return mean.size(); }

  /// Throws std::invalid_argument when sizes mismatch or std/trunc are not
  /// strictly positive.
  void validate() const;
};

/// Zero-mean truncated-normal offsets xi_i, one row per sample point.
/// Offsets are produced by a counter-based stream keyed on (seed, i, j), so a
/// set regenerated with the same seed is bit-identical and extending the
/// count preserves existing rows (prefix property).
struct SampleSet {
  Eigen::MatrixXd offsets;  // count x dim
  std::uint64_t seed = 0;

  Eigen::Index count() const { return offsets.rows(); }
  Eigen::Index dim() const { return offsets.cols(); }
};

/// Draws n zero-mean truncated-normal offset rows. Each component uses
/// inverse-CDF sampling of the uniform value derived from hashing
/// (seed, i, j), which keeps the draw independent of evaluation order.
SampleSet draw_offsets(const UncertainInput& input, Eigen::Index n, std::uint64_t seed);

/// Extends a sample set to n_new rows (same seed). Rows [0, count) are reused
/// unchanged; only the tail is generated.
SampleSet extend_offsets(const UncertainInput& input, const SampleSet& s, Eigen::Index n_new);

/// Realizes parameter vectors p_i = mean + xi_i. Rows are points.
Eigen::MatrixXd realize(const SampleSet& s, const Eigen::VectorXd& mean);

/// Untruncated multivariate normal density at p (diagnostics only; the
/// estimators never evaluate it).
double pdf(const UncertainInput& input, const Eigen::VectorXd& p);

/// Standard normal CDF.
double normal_cdf(double x);

/// Standard normal quantile (Wichura's PPND16 rational approximation,
/// accurate to ~1e-15 relative). p must lie in (0, 1).
double normal_quantile(double p);

}  // namespace yieldopt
