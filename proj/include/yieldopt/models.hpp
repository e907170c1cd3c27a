#pragma once

#include <functional>
#include <memory>

#include "yieldopt/distributions.hpp"
#include "yieldopt/estimator.hpp"
#include "yieldopt/optimizer.hpp"
#include "yieldopt/surrogate.hpp"
#include "yieldopt/waveguide.hpp"

namespace yieldopt::models {

using Complex = std::complex<double>;

enum class Variant { FourParam, TwelveParam };

/// Binds a design-parameter vector to the waveguide benchmark: p[0], p[1] are
/// the inlay and offset lengths (mm), the rest select the material model.
/// The level-0 mesh layout is frozen from an anchor geometry so dof vectors
/// vary smoothly with p and stay interpolable.
struct WaveguideProblem {
  Variant variant = Variant::FourParam;
  double a_mm = 30.0, b_mm = 15.0;
  double e0 = 1.0;
  int base_elements = 64;
  Eigen::VectorXd omegas;
  waveguide::LayerCounts counts;

  static WaveguideProblem create(Variant v, const Eigen::VectorXd& anchor,
                                 const Eigen::VectorXd& omegas, double a_mm = 30.0,
                                 double b_mm = 15.0, int base_elements = 64);

  int dim() const { return variant == Variant::FourParam ? 4 : 12; }
  waveguide::Geometry geometry_of(const Eigen::VectorXd& p) const;
  waveguide::Material material_of(const Eigen::VectorXd& p) const;
  waveguide::Mesh1D mesh_of(const Eigen::VectorXd& p) const;
  Complex closed_form(const Eigen::VectorXd& p, int j) const;
};

/// Nominal parameter points. `start` is the optimization starting
/// point, `estimate` the reference design used in estimation studies.
Eigen::VectorXd default_start(Variant v);
Eigen::VectorXd default_estimate_point(Variant v);
/// Per-component standard deviations (0.7 mm geometric, 0.3 material) and
/// truncation offsets (3 mm geometric, 0.3 material).
UncertainInput default_uncertainty(Variant v, const Eigen::VectorXd& mean);

/// Multilevel FE model plus collocation services for the waveguide benchmark.
class WaveguideBenchmarkModel final : public estimator::MultilevelModel,
                                      public surrogate::CollocationModel {
 public:
  explicit WaveguideBenchmarkModel(WaveguideProblem prob);

  const WaveguideProblem& problem() const { return prob_; }

  // MultilevelModel
  int num_levels() const override { return 3; }
  Complex eval(const Eigen::VectorXd& p, int j, int level) override;
  std::unique_ptr<Chain> start_chain(const Eigen::VectorXd& p, int j) override;

  // CollocationModel
  int num_freqs() const override { return static_cast<int>(prob_.omegas.size()); }
  surrogate::NodePayload evaluate_node(const Eigen::VectorXd& p) override;
  double residual_indicator(const Eigen::VectorXd& p, int j, const Eigen::VectorXcd& u_tilde,
                            const Eigen::VectorXcd& z_tilde) const override;
  NodeCost cost_per_node() const override {
    return {num_freqs(), num_freqs()};
  }

 private:
  WaveguideProblem prob_;
};

/// Analytic stand-in model for tests: a single-level evaluator with an exact
/// scalar "solution" (A = 1, f = value), so the adjoint residual indicator
/// reduces to |Q - Q_tilde|.
class ManufacturedModel final : public estimator::MultilevelModel,
                                public surrogate::CollocationModel {
 public:
  using Fn = std::function<Complex(const Eigen::VectorXd&, int)>;
  ManufacturedModel(int num_freqs, Fn f) : nf_(num_freqs), f_(std::move(f)) {}

  int num_levels() const override { return 1; }
  Complex eval(const Eigen::VectorXd& p, int j, int level) override;
  std::unique_ptr<Chain> start_chain(const Eigen::VectorXd& p, int j) override;

  int num_freqs() const override { return nf_; }
  surrogate::NodePayload evaluate_node(const Eigen::VectorXd& p) override;
  double residual_indicator(const Eigen::VectorXd& p, int j, const Eigen::VectorXcd& u_tilde,
                            const Eigen::VectorXcd& z_tilde) const override;
  NodeCost cost_per_node() const override { return {0, 0}; }

 private:
  int nf_ = 0;
  Fn f_;
};

/// Builds the benchmark surrogate box (mean +- trunc, uniform weight).
surrogate::SparseSurrogate build_benchmark_surrogate(surrogate::CollocationModel& model,
                                                     const UncertainInput& input,
                                                     const Eigen::VectorXd& anchor, int budget);

/// Maps a (possibly reduced) optimization vector into the full model
/// parameter vector; identity by default.
using ParameterEmbed = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Common-random-numbers pool shared by the yield oracles.
class SampledYieldOracle : public optimizer::YieldOracle {
 public:
  SampledYieldOracle(UncertainInput input, std::uint64_t seed, ParameterEmbed embed = nullptr);
  int dim() const override { return static_cast<int>(input_.dim()); }
  const Eigen::MatrixXd& offsets(long n) override;
  long point_evals() const override { return point_evals_; }

 protected:
  Eigen::VectorXd embed(const Eigen::VectorXd& p) const { return embed_ ? embed_(p) : p; }
  UncertainInput input_;
  SampleSet pool_;
  ParameterEmbed embed_;
  long point_evals_ = 0;
};

/// Verdicts straight from the transfer-matrix solution (oracle runs).
class ClosedFormYieldOracle final : public SampledYieldOracle {
 public:
  ClosedFormYieldOracle(WaveguideProblem prob, estimator::PerfSpec spec, UncertainInput input,
                        std::uint64_t seed, ParameterEmbed embed = nullptr);
  std::vector<char> classify(const Eigen::VectorXd& mean, long begin, long end) override;
  double effort() const override { return 0.0; }

 private:
  WaveguideProblem prob_;
  estimator::PerfSpec spec_;
};

/// Verdicts from plain FE evaluation at a fixed mesh level.
class FixedLevelYieldOracle final : public SampledYieldOracle {
 public:
  FixedLevelYieldOracle(estimator::MultilevelModel& model, estimator::PerfSpec spec,
                        UncertainInput input, std::uint64_t seed, int level,
                        estimator::EffortWeights weights = {}, ParameterEmbed embed = nullptr);
  std::vector<char> classify(const Eigen::VectorXd& mean, long begin, long end) override;
  double effort() const override;

 private:
  estimator::MultilevelModel& model_;
  estimator::PerfSpec spec_;
  int level_;
  estimator::EffortWeights weights_;
};

/// Verdicts from the hybrid classifier; the surrogate is built once at the
/// anchor and reused across means (rebuild behind a flag).
class HybridYieldOracle final : public SampledYieldOracle {
 public:
  HybridYieldOracle(WaveguideBenchmarkModel& model, estimator::PerfSpec spec,
                    UncertainInput input, std::uint64_t seed, const Eigen::VectorXd& anchor,
                    int budget, estimator::SafetyFactor safety,
                    estimator::EffortWeights weights = {}, bool rebuild_each_mean = false);
  std::vector<char> classify(const Eigen::VectorXd& mean, long begin, long end) override;
  double effort() const override;
  const surrogate::SparseSurrogate& surrogate_model() const { return sur_; }

 private:
  WaveguideBenchmarkModel& model_;
  estimator::PerfSpec spec_;
  surrogate::SparseSurrogate sur_;
  estimator::SafetyFactor safety_;
  estimator::EffortWeights weights_;
  bool rebuild_each_mean_;
  Eigen::VectorXd build_mean_;
  int budget_;
  double retired_build_effort_ = 0.0;
};

}  // namespace yieldopt::models
