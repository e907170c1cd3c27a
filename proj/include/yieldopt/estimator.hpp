#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <functional>
#include <memory>
#include <vector>

#include "yieldopt/distributions.hpp"
#include "yieldopt/surrogate.hpp"

namespace yieldopt::estimator {

using Complex = std::complex<double>;

/// Performance feature specification: |S| <= threshold (dB) over the
/// discretized frequency band.
struct PerfSpec {
  double threshold_db = -24.0;
  Eigen::VectorXd omegas;  // strictly increasing angular frequencies

  double c_lin() const { return std::pow(10.0, threshold_db / 20.0); }
  int num_freqs() const { return static_cast<int>(omegas.size()); }
  void validate() const;

  /// Eleven equidistant points over [6.5, 7.5] GHz at -24 dB.
  static PerfSpec benchmark();
};

struct SafetyFactor {
  double s = 2.0;
  bool warned_zero_indicator = false;
};

struct EffortWeights {
  std::array<double, 3> w{1.0, 4.0, 16.0};
};

/// sqrt(Y (1-Y) / N). Throws for N < 1 or Y outside [0, 1].
double mc_std(double yield, long n);

/// Weighted count of high-fidelity factorizations per mesh level.
double effort(const std::array<long, 3>& counts, const EffortWeights& weights = {});

/// Multilevel high-fidelity model as seen by the estimators. Implementations
/// tally one factorization per eval / chain advance at the touched level.
class MultilevelModel {
 public:
  struct Counter {
    std::array<long, 3> fact{0, 0, 0};
  };
  struct Step {
    Complex value;        // QoI at the newly solved level
    double indicator;     // DWR estimate for the previous level's value (NaN at level 0)
  };
  /// Escalation ladder for one (point, frequency) pair; levels are solved in
  /// order and each advance reuses the previous level's solution.
  class Chain {
   public:
    virtual ~Chain() = default;
    virtual Step advance() = 0;
    virtual int level() const = 0;  // last solved level, -1 before the first advance
  };

  virtual ~MultilevelModel() = default;
  virtual int num_levels() const = 0;
  virtual Complex eval(const Eigen::VectorXd& p, int j, int level) = 0;
  virtual std::unique_ptr<Chain> start_chain(const Eigen::VectorXd& p, int j) = 0;

  Counter& counter() { return counter_; }
  const Counter& counter() const { return counter_; }

 protected:
  Counter counter_;
};

enum class Fidelity { Surrogate, FE0, FE1, FE2 };

/// Outcome of the hybrid decision for one sample point.
struct ClassificationRecord {
  bool accepted = false;
  bool forced_at_max = false;  // verdict taken from the finest mesh directly
  bool outside_box = false;    // bypassed the surrogate entirely
  std::array<long, 3> fe_calls{0, 0, 0};
  struct FreqStep {
    int freq = 0;
    Fidelity highest = Fidelity::Surrogate;
  };
  std::vector<FreqStep> path;  // in evaluation order; stops at the rejecting frequency
};

struct YieldEstimate {
  double yield = 0.0;
  double sigma_y = 0.0;
  long n = 0;
  std::array<long, 3> hf_mc{0, 0, 0};  // MC-phase factorizations per level
  long build_l0 = 0, build_l1 = 0;     // surrogate-build factorizations
  long oracle_evals = 0;               // closed-form evaluations (not in effort)
  double effort = 0.0;
};

struct SampleEstimate {
  YieldEstimate est;
  std::vector<char> verdicts;  // one per point
};

struct HybridEstimate {
  YieldEstimate est;
  std::vector<char> verdicts;
  std::vector<ClassificationRecord> records;
};

/// Plain point evaluator (model at a fixed level, a surrogate, or the closed
/// form). `count_level` in 0..2 attributes each visited (point, frequency) to
/// that mesh level; -1 marks an uncounted oracle.
struct LeveledEvaluator {
  std::function<Complex(const Eigen::VectorXd&, int)> f;
  int count_level = -1;
};

/// Monte Carlo yield over realized points (rows). A point is accepted when
/// |S| <= c at every frequency; frequencies are abandoned at the first
/// violation.
SampleEstimate estimate_mc(const LeveledEvaluator& eval, const Eigen::MatrixXd& points,
                           const PerfSpec& spec, const EffortWeights& weights = {});

/// Surrogate-only estimator (no high-fidelity calls beyond the build).
SampleEstimate estimate_sc(const surrogate::SparseSurrogate& sur,
                           const Eigen::MatrixXd& points, const PerfSpec& spec,
                           const EffortWeights& weights = {});

/// Hybrid decision for a single point (Algorithm: interval tests against the
/// combined indicator, escalating critical frequencies through the mesh
/// ladder; the finest mesh forces a verdict when still critical).
ClassificationRecord classify_hybrid(const Eigen::VectorXd& p,
                                     const surrogate::SparseSurrogate& sur,
                                     const surrogate::CollocationModel& residual_model,
                                     MultilevelModel& model, const PerfSpec& spec,
                                     const SafetyFactor& safety);

/// Hybrid estimator over a realized sample.
HybridEstimate estimate_hybrid(const surrogate::SparseSurrogate& sur,
                               const surrogate::CollocationModel& residual_model,
                               MultilevelModel& model, const Eigen::MatrixXd& points,
                               const PerfSpec& spec, const SafetyFactor& safety,
                               const EffortWeights& weights = {});

/// Monte Carlo with per-point mesh escalation driven by the FE indicator but
/// no surrogate (the refinement baseline).
SampleEstimate estimate_mc_refine(MultilevelModel& model, const Eigen::MatrixXd& points,
                                  const PerfSpec& spec, const SafetyFactor& safety,
                                  const EffortWeights& weights = {});

/// Calibrates the safety factor from a small sample: the max over points and
/// frequencies of |Q_level2 - Q_tilde| / (sc + fe indicator), floored at 1.
/// Point/frequency pairs with a vanishing indicator but nonzero error are
/// excluded and flagged.
struct CalibrationRow {
  int point = 0, freq = 0;
  double true_error = 0, indicator = 0, ratio = 0;
};
struct CalibrationResult {
  SafetyFactor factor;
  std::vector<CalibrationRow> rows;
};
CalibrationResult calibrate_safety(const surrogate::SparseSurrogate& sur,
                                   const surrogate::CollocationModel& residual_model,
                                   MultilevelModel& model, const UncertainInput& input,
                                   const Eigen::VectorXd& mean, const PerfSpec& spec,
                                   int n_cal = 20, std::uint64_t seed = 1);

}  // namespace yieldopt::estimator
