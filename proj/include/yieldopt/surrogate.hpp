#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace yieldopt::surrogate {

using Complex = std::complex<double>;

/// Univariate weight for Leja node selection, in standardized coordinates
/// (node 0 sits at the origin). Gaussian support is cut at +-10 sigma for the
/// candidate search.
struct WeightSpec {
  enum class Kind { Uniform, Gaussian };
  Kind kind = Kind::Uniform;
  double lo = -1.0, hi = 1.0;  // uniform support
  double sigma = 1.0;          // gaussian std

  double support_lo() const { return kind == Kind::Uniform ? lo : -10.0 * sigma; }
  double support_hi() const { return kind == Kind::Uniform ? hi : 10.0 * sigma; }
  double sqrt_weight(double x) const;
};

/// Nested sequence of weighted Leja nodes. The sequence grows on demand and a
/// prefix of length k is always the length-k sequence.
class LejaSequence {
 public:
  explicit LejaSequence(WeightSpec w) : weight_(w), nodes_{0.0} {}

  const WeightSpec& weight() const { return weight_; }
  int size() const { return static_cast<int>(nodes_.size()); }
  double node(int k);                         // grows as needed
  const std::vector<double>& nodes() const { return nodes_; }

 private:
  WeightSpec weight_;
  std::vector<double> nodes_;
};

/// argmax over the support of sqrt(w(p)) * prod |p - p_i|, located on a
/// 10^4-point equispaced candidate grid and polished by golden-section search;
/// near-ties resolve toward the smallest abscissa.
double next_leja_node(const LejaSequence& seq);

using MultiIndex = std::vector<int>;

/// Downward-closed set of multi-indices kept in admission order.
class MultiIndexSet {
 public:
  bool contains(const MultiIndex& mi) const { return pos_.count(mi) > 0; }
  int size() const { return static_cast<int>(order_.size()); }
  const MultiIndex& at(int i) const { return order_[i]; }
  const std::vector<MultiIndex>& indices() const { return order_; }
  void insert(const MultiIndex& mi);  // throws if insertion breaks downward closure
  bool downward_closed() const;
  /// Forward neighbours mi + e_j whose insertion keeps the set downward closed.
  std::vector<MultiIndex> admissible_neighbors(const MultiIndex& mi) const;

 private:
  std::vector<MultiIndex> order_;
  std::map<MultiIndex, int> pos_;
};

/// Everything the surrogate stores per collocation node, for all frequency
/// points at once.
struct NodePayload {
  Eigen::VectorXcd qoi;                 // per frequency
  std::vector<Eigen::VectorXcd> primal; // per frequency, level-0 dof vectors
  std::vector<Eigen::VectorXcd> dual;   // per frequency
  Eigen::VectorXd fe_error;             // per frequency
};

/// Model interface for the adaptive build. evaluate_node performs the
/// high-fidelity solves at one parameter point (all frequencies) and is
/// charged for them; residual_indicator only assembles.
class CollocationModel {
 public:
  /// Factorization counts one node evaluation charges, per mesh level.
  struct NodeCost {
    long level0 = 0;
    long level1 = 0;
  };

  virtual ~CollocationModel() = default;
  virtual int num_freqs() const = 0;
  virtual NodePayload evaluate_node(const Eigen::VectorXd& p) = 0;
  /// |<z_tilde, f(p) - A(p) u_tilde>| for frequency j.
  virtual double residual_indicator(const Eigen::VectorXd& p, int j,
                                    const Eigen::VectorXcd& u_tilde,
                                    const Eigen::VectorXcd& z_tilde) const = 0;
  virtual NodeCost cost_per_node() const = 0;
};

/// Adaptive sparse-grid interpolant in the hierarchical Newton basis on
/// weighted Leja nodes: per multi-index nu the basis is
/// prod_j prod_{i<nu_j} (x_j - t_j^{(i)}) and surpluses solve the (triangular)
/// collocation system in admission order.
class SparseSurrogate {
 public:
  int dim() const { return static_cast<int>(anchor_.size()); }
  int num_freqs() const { return num_freqs_; }
  int node_count() const { return set_.size(); }
  const MultiIndexSet& index_set() const { return set_; }
  const Eigen::VectorXd& anchor() const { return anchor_; }
  const Eigen::VectorXd& scale() const { return scale_; }
  int budget() const { return budget_; }
  double achieved_indicator() const { return achieved_indicator_; }
  long build_calls_level0() const { return build_calls_l0_; }
  long build_calls_level1() const { return build_calls_l1_; }

  /// Parameter-space collocation node of multi-index i.
  Eigen::VectorXd node_parameter(int i) const;
  /// True when p lies inside the build box (all standardized coords within
  /// the weight support, with a small tolerance).
  bool in_box(const Eigen::VectorXd& p) const;

  Complex eval_qoi(const Eigen::VectorXd& p, int j) const;
  Eigen::VectorXcd eval_primal(const Eigen::VectorXd& p, int j) const;
  Eigen::VectorXcd eval_dual(const Eigen::VectorXd& p, int j) const;
  /// Interpolated finite-element error, clamped below at zero.
  double fe_error_surrogate(const Eigen::VectorXd& p, int j) const;
  /// Stored model payload of node i (used by tests and calibration).
  const NodePayload& payload_surplus(int i) const { return surplus_[i]; }

  /// Basis weights b_nu(p) for every admitted index (shared by all payloads).
  Eigen::VectorXd basis_weights(const Eigen::VectorXd& p) const;

  void save(std::ostream& os) const;
  static SparseSurrogate load(std::istream& is);
  void save_file(const std::string& path) const;
  static SparseSurrogate load_file(const std::string& path);

  friend SparseSurrogate build_adaptive(CollocationModel& model,
                                        const Eigen::VectorXd& anchor,
                                        const Eigen::VectorXd& half_width,
                                        int budget, WeightSpec::Kind weight_kind,
                                        const Eigen::VectorXd* gaussian_sigma);

 private:
  Eigen::VectorXd standardize(const Eigen::VectorXd& p) const;

  int num_freqs_ = 0;
  Eigen::VectorXd anchor_, scale_;
  std::vector<WeightSpec> weights_;
  std::vector<std::vector<double>> leja_;  // per-dim standardized nodes
  MultiIndexSet set_;
  std::vector<NodePayload> surplus_;       // per admitted index
  int budget_ = 0;
  double achieved_indicator_ = 0.0;
  long build_calls_l0_ = 0, build_calls_l1_ = 0;
};

/// Greedy dimension-adaptive build: forward-neighbour candidates are scored by
/// the max-over-frequency adjoint residual indicator at their node and admitted
/// best-first until `budget` model evaluations have been spent. All evaluated
/// candidates end up in the surrogate.
SparseSurrogate build_adaptive(CollocationModel& model, const Eigen::VectorXd& anchor,
                               const Eigen::VectorXd& half_width, int budget,
                               WeightSpec::Kind weight_kind = WeightSpec::Kind::Uniform,
                               const Eigen::VectorXd* gaussian_sigma = nullptr);

/// Adjoint SC error indicator at p: assembles the system through the model and
/// pairs the interpolated dual with the residual of the interpolated primal.
double sc_error_indicator(const SparseSurrogate& sur, const CollocationModel& model,
                          const Eigen::VectorXd& p, int j);

}  // namespace yieldopt::surrogate
