#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "yieldopt/estimator.hpp"

namespace yieldopt::optimizer {

/// Globalized-Newton and adaptive-sampling parameters. The defaults are the
/// working set used throughout: beta/gamma/phi/q for the line search and angle
/// condition, sigma_y_max/n_start/inc for the sample-size control.
struct NewtonParams {
  double beta = 0.5;
  double gamma = 0.01;
  double phi1 = 1e-6;
  double phi2 = 1e-6;
  double q = 0.1;
  int max_backsteps = 3;        // Armijo trials beta^0..beta^3, then forced beta^3
  double sigma_y_max = 0.01;
  long n_start = 100;
  int inc = 1;
  double grad_tol = 1e-6;
  double step_tol = 1e-8;
  int max_iterations = 100;
  void validate() const;
};

/// Sample mean/covariance restricted to accepted points.
struct ConditionalMoments {
  Eigen::VectorXd safe_mean;
  Eigen::MatrixXd safe_cov;
  long n_safe = 0;
  bool cov_available = false;  // needs at least two accepted points
};

ConditionalMoments conditional_moments(const Eigen::MatrixXd& points,
                                       const std::vector<char>& verdicts);

/// Y * Sigma^{-1} (safe_mean - mean); zero with empty safe set.
Eigen::VectorXd yield_gradient(double yield, const Eigen::VectorXd& mean,
                               const Eigen::VectorXd& sigma2_diag,
                               const ConditionalMoments& m);

/// Y * Sigma^{-1} (Sigma_S + d d^T - Sigma) Sigma^{-1} with d = safe_mean - mean.
Eigen::MatrixXd yield_hessian(double yield, const Eigen::VectorXd& mean,
                              const Eigen::VectorXd& sigma2_diag,
                              const ConditionalMoments& m);

/// Newton direction with ascent safeguard: d from hess * d = -grad is accepted
/// when the solve succeeds and grad^T d >= min(phi1, phi2 ||d||^q) ||d||^2,
/// otherwise the gradient is used.
struct NewtonDirection {
  Eigen::VectorXd s;
  bool newton = false;
};
NewtonDirection newton_direction(const Eigen::VectorXd& grad,
                                 const std::optional<Eigen::MatrixXd>& hess,
                                 const NewtonParams& params);

/// Yield evaluations for the optimizer: a fixed common-random-numbers offset
/// pool classified at shifting means. Implementations must classify each point
/// independently so that extending a sample fuses exactly.
class YieldOracle {
 public:
  virtual ~YieldOracle() = default;
  virtual int dim() const = 0;
  /// Offsets rows [0, n); grows the pool on demand, keeping the prefix fixed.
  virtual const Eigen::MatrixXd& offsets(long n) = 0;
  /// Verdicts for points mean + offsets[i], i in [begin, end).
  virtual std::vector<char> classify(const Eigen::VectorXd& mean, long begin, long end) = 0;
  /// Cumulative weighted solver effort spent so far.
  virtual double effort() const = 0;
  /// Cumulative count of classified sample points.
  virtual long point_evals() const = 0;
};

/// One yield evaluation at a mean: verdicts over [0, n) plus derived values.
struct YieldEvaluation {
  Eigen::VectorXd mean;
  long n = 0;
  std::vector<char> verdicts;
  double yield = 0;
  ConditionalMoments moments;
};

YieldEvaluation evaluate_yield(YieldOracle& oracle, const Eigen::VectorXd& mean, long n);
/// Extends an evaluation to n_new points at the same mean (classifies only the
/// new tail and fuses).
YieldEvaluation extend_yield(YieldOracle& oracle, YieldEvaluation ev, long n_new);

/// Largest sigma in {beta^0..beta^maxback} satisfying the sufficient-increase
/// test Y(p + sigma s) - Y(p) >= sigma gamma grad^T s; when none does, the
/// smallest trial is forced. Returns the chosen step and its evaluation.
struct ArmijoResult {
  double sigma = 0;
  bool satisfied = false;
  YieldEvaluation trial;
  int evaluations = 0;
};
ArmijoResult armijo_step(YieldOracle& oracle, const YieldEvaluation& current,
                         const Eigen::VectorXd& direction, const Eigen::VectorXd& grad,
                         const NewtonParams& params);

struct IterationRecord {
  int iteration = 0;
  Eigen::VectorXd mean;
  double yield = 0;
  double sigma_y = 0;
  long n = 0;
  double effort = 0;      // cumulative oracle effort after the iteration
  char step_kind = 'n';   // 'n' newton, 'g' gradient, '-' none (stop test hit)
  double step_size = 0;
};

struct OptState {
  Eigen::VectorXd mean;
  double yield = 0;
  double sigma_y = 0;
  long n = 0;
  int iterations = 0;
  long yield_evaluations = 0;
  bool converged = false;
  bool empty_safe_set = false;
  std::vector<IterationRecord> history;
};

/// Globalized Newton ascent at fixed sample size.
OptState globalized_newton(YieldOracle& oracle, const Eigen::VectorXd& start,
                           const Eigen::VectorXd& sigma2_diag, const NewtonParams& params,
                           long n_fixed);

/// Adaptive Newton-MC: Newton runs until stagnation; when the estimator's
/// standard deviation still exceeds sigma_y_max the sample grows by
/// inc * n_start (evaluating only the new points) until the accuracy target or
/// a significant yield change, then Newton resumes.
OptState adaptive_newton_mc(YieldOracle& oracle, const Eigen::VectorXd& start,
                            const Eigen::VectorXd& sigma2_diag, const NewtonParams& params);

/// Central-difference vs analytic gradient comparison with common random
/// numbers, at growing sample sizes until the componentwise difference meets
/// eta or the cap is reached.
struct GradientCheckRow {
  long n = 0;
  Eigen::VectorXd grad_analytic;
  Eigen::VectorXd grad_fd;
  Eigen::VectorXd fd_stderr;  // per-component MC standard error of the FD quotient
  double max_abs_diff = 0;
};
struct GradientCheckReport {
  std::vector<GradientCheckRow> rows;
  bool satisfied = false;  // difference <= eta before the cap
};
GradientCheckReport gradient_quality_check(YieldOracle& oracle, const Eigen::VectorXd& mean,
                                           const Eigen::VectorXd& sigma2_diag, double delta,
                                           double eta, const std::vector<long>& n_schedule);

}  // namespace yieldopt::optimizer
