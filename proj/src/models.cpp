#include "yieldopt/models.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace yieldopt::models {

using waveguide::AssembledSystem;
using waveguide::Geometry;
using waveguide::Material;
using waveguide::Mesh1D;
using waveguide::PortSystemSolver;

WaveguideProblem WaveguideProblem::create(Variant v, const Eigen::VectorXd& anchor,
                                          const Eigen::VectorXd& omegas, double a_mm,
                                          double b_mm, int base_elements) {
  WaveguideProblem p;
  p.variant = v;
  p.a_mm = a_mm;
  p.b_mm = b_mm;
  p.base_elements = base_elements;
  p.omegas = omegas;
  if (anchor.size() != p.dim())
    throw std::invalid_argument("WaveguideProblem: anchor dimension mismatch");
  p.counts = waveguide::LayerCounts::allocate(p.geometry_of(anchor), base_elements);
  return p;
}

Geometry WaveguideProblem::geometry_of(const Eigen::VectorXd& p) const {
  Geometry g;
  g.a_mm = a_mm;
  g.b_mm = b_mm;
  g.inlay_mm = p[0];
  g.offset_mm = p[1];
  return g;
}

Material WaveguideProblem::material_of(const Eigen::VectorXd& p) const {
  if (p.size() != dim()) throw std::invalid_argument("WaveguideProblem: parameter dimension mismatch");
  if (variant == Variant::FourParam) {
    waveguide::Dispersive4 m;
    m.p13 = p[2];
    m.p14 = p[3];
    return m;
  }
  waveguide::Dispersive12 m;
  m.p3 = p[2];
  m.p4 = p[3];
  m.p5 = p[4];
  m.p6 = p[5];
  m.p7 = p[6];
  m.p8 = p[7];
  m.p9 = p[8];
  m.p10 = p[9];
  m.p11 = p[10];
  m.p12 = p[11];
  return m;
}

Mesh1D WaveguideProblem::mesh_of(const Eigen::VectorXd& p) const {
  return Mesh1D::base_mesh(geometry_of(p), counts);
}

Complex WaveguideProblem::closed_form(const Eigen::VectorXd& p, int j) const {
  return waveguide::s11_closed_form(geometry_of(p), material_of(p), omegas[j]);
}

Eigen::VectorXd default_start(Variant v) {
  if (v == Variant::FourParam) {
    Eigen::VectorXd p(4);
    p << 9, 5, 1, 1;
    return p;
  }
  Eigen::VectorXd p(12);
  p << 9, 5, 2, 0.5, 1, 1, 1.1, 2.5, 1, 1, 1, 2;
  return p;
}

Eigen::VectorXd default_estimate_point(Variant v) {
  if (v == Variant::FourParam) {
    Eigen::VectorXd p(4);
    p << 10.36, 4.76, 0.58, 0.64;
    return p;
  }
  Eigen::VectorXd p(12);
  p << 8.6, 3.8, 2, 0.5, 0.7, 0.6, 1.4, 2.8, 1.7, 0.8, 0.3, 1.4;
  return p;
}

UncertainInput default_uncertainty(Variant v, const Eigen::VectorXd& mean) {
  const int d = (v == Variant::FourParam) ? 4 : 12;
  if (mean.size() != d) throw std::invalid_argument("default_uncertainty: mean dimension mismatch");
  UncertainInput u;
  u.mean = mean;
  u.std.resize(d);
  u.trunc.resize(d);
  for (int j = 0; j < d; ++j) {
    const bool geometric = j < 2;
    u.std[j] = geometric ? 0.7 : 0.3;
    u.trunc[j] = geometric ? 3.0 : 0.3;
  }
  return u;
}

// ---------------------------------------------------------------------------
// WaveguideBenchmarkModel

WaveguideBenchmarkModel::WaveguideBenchmarkModel(WaveguideProblem prob) : prob_(std::move(prob)) {}

namespace {

class WaveguideChain final : public estimator::MultilevelModel::Chain {
 public:
  WaveguideChain(const WaveguideProblem& prob, estimator::MultilevelModel::Counter& counter,
                 Eigen::VectorXd p, double omega)
      : prob_(prob), counter_(counter), p_(std::move(p)), omega_(omega) {}

  int level() const override { return level_; }

  estimator::MultilevelModel::Step advance() override {
    if (level_ >= 2) throw std::logic_error("WaveguideChain: beyond max refinement");
    const Geometry g = prob_.geometry_of(p_);
    const Material m = prob_.material_of(p_);
    const Mesh1D mesh = (level_ < 0) ? Mesh1D::base_mesh(g, prob_.counts) : waveguide::refine(mesh_);
    PortSystemSolver solver(g, m, omega_, mesh, prob_.e0);
    ++counter_.fact[mesh.level];
    const Eigen::VectorXcd u = solver.solve_primal();
    estimator::MultilevelModel::Step step;
    step.value = u[0] / prob_.e0 - 1.0;
    if (level_ >= 0) {
      const Eigen::VectorXcd z = solver.solve_dual();
      const Eigen::VectorXcd residual =
          solver.system().f - solver.system().A * waveguide::inject(mesh_, u_);
      step.indicator = std::abs(z.dot(residual));
    } else {
      step.indicator = std::numeric_limits<double>::quiet_NaN();
    }
    mesh_ = mesh;
    u_ = u;
    level_ = mesh.level;
    return step;
  }

 private:
  const WaveguideProblem& prob_;
  estimator::MultilevelModel::Counter& counter_;
  Eigen::VectorXd p_;
  double omega_;
  int level_ = -1;
  Mesh1D mesh_;
  Eigen::VectorXcd u_;
};

}  // namespace

Complex WaveguideBenchmarkModel::eval(const Eigen::VectorXd& p, int j, int level) {
  const Geometry g = prob_.geometry_of(p);
  const Material m = prob_.material_of(p);
  Mesh1D mesh = Mesh1D::base_mesh(g, prob_.counts);
  for (int l = 0; l < level; ++l) mesh = waveguide::refine(mesh);
  PortSystemSolver solver(g, m, prob_.omegas[j], mesh, prob_.e0);
  ++counter_.fact[level];
  return solver.solve_primal()[0] / prob_.e0 - 1.0;
}

std::unique_ptr<estimator::MultilevelModel::Chain> WaveguideBenchmarkModel::start_chain(
    const Eigen::VectorXd& p, int j) {
  return std::make_unique<WaveguideChain>(prob_, counter_, p, prob_.omegas[j]);
}

surrogate::NodePayload WaveguideBenchmarkModel::evaluate_node(const Eigen::VectorXd& p) {
  const Geometry g = prob_.geometry_of(p);
  const Material m = prob_.material_of(p);
  const Mesh1D mesh0 = Mesh1D::base_mesh(g, prob_.counts);
  const Mesh1D mesh1 = waveguide::refine(mesh0);
  const int nf = num_freqs();
  surrogate::NodePayload out;
  out.qoi.resize(nf);
  out.fe_error.resize(nf);
  out.primal.resize(nf);
  out.dual.resize(nf);
  for (int j = 0; j < nf; ++j) {
    const double omega = prob_.omegas[j];
    PortSystemSolver s0(g, m, omega, mesh0, prob_.e0);
    out.primal[j] = s0.solve_primal();
    out.dual[j] = s0.solve_dual();
    out.qoi[j] = out.primal[j][0] / prob_.e0 - 1.0;
    // FE-error payload: dual one level finer weighted by the level-0 residual.
    PortSystemSolver s1(g, m, omega, mesh1, prob_.e0);
    const Eigen::VectorXcd z1 = s1.solve_dual();
    const Eigen::VectorXcd r1 =
        s1.system().f - s1.system().A * waveguide::inject(mesh0, out.primal[j]);
    out.fe_error[j] = std::abs(z1.dot(r1));
  }
  return out;
}

double WaveguideBenchmarkModel::residual_indicator(const Eigen::VectorXd& p, int j,
                                                   const Eigen::VectorXcd& u_tilde,
                                                   const Eigen::VectorXcd& z_tilde) const {
  const AssembledSystem sys =
      waveguide::assemble(prob_.geometry_of(p), prob_.material_of(p), prob_.omegas[j],
                          Mesh1D::base_mesh(prob_.geometry_of(p), prob_.counts), prob_.e0);
  return std::abs(z_tilde.dot(sys.f - sys.A * u_tilde));
}

// ---------------------------------------------------------------------------
// ManufacturedModel

namespace {

class ManufacturedChain final : public estimator::MultilevelModel::Chain {
 public:
  ManufacturedChain(Complex value) : value_(value) {}
  int level() const override { return level_; }
  estimator::MultilevelModel::Step advance() override {
    if (level_ >= 0) throw std::logic_error("ManufacturedChain: single level");
    level_ = 0;
    return {value_, std::numeric_limits<double>::quiet_NaN()};
  }

 private:
  Complex value_;
  int level_ = -1;
};

}  // namespace

Complex ManufacturedModel::eval(const Eigen::VectorXd& p, int j, int level) {
  if (level != 0) throw std::invalid_argument("ManufacturedModel: only level 0 exists");
  ++counter_.fact[0];
  return f_(p, j);
}

std::unique_ptr<estimator::MultilevelModel::Chain> ManufacturedModel::start_chain(
    const Eigen::VectorXd& p, int j) {
  ++counter_.fact[0];
  return std::make_unique<ManufacturedChain>(f_(p, j));
}

surrogate::NodePayload ManufacturedModel::evaluate_node(const Eigen::VectorXd& p) {
  surrogate::NodePayload out;
  out.qoi.resize(nf_);
  out.fe_error = Eigen::VectorXd::Zero(nf_);
  out.primal.resize(nf_);
  out.dual.resize(nf_);
  for (int j = 0; j < nf_; ++j) {
    out.qoi[j] = f_(p, j);
    out.primal[j] = Eigen::VectorXcd::Constant(1, out.qoi[j]);
    out.dual[j] = Eigen::VectorXcd::Constant(1, 1.0);
  }
  return out;
}

double ManufacturedModel::residual_indicator(const Eigen::VectorXd& p, int j,
                                             const Eigen::VectorXcd& u_tilde,
                                             const Eigen::VectorXcd& z_tilde) const {
  // A = 1 and f = Q(p), so the weighted residual is z^H (Q - u).
  return std::abs(std::conj(z_tilde[0]) * (f_(p, j) - u_tilde[0]));
}

surrogate::SparseSurrogate build_benchmark_surrogate(surrogate::CollocationModel& model,
                                                     const UncertainInput& input,
                                                     const Eigen::VectorXd& anchor, int budget) {
  return surrogate::build_adaptive(model, anchor, input.trunc, budget,
                                   surrogate::WeightSpec::Kind::Uniform, nullptr);
}

// ---------------------------------------------------------------------------
// Yield oracles

SampledYieldOracle::SampledYieldOracle(UncertainInput input, std::uint64_t seed,
                                       ParameterEmbed embed)
    : input_(std::move(input)), embed_(std::move(embed)) {
  pool_ = draw_offsets(input_, 0, seed);
}

const Eigen::MatrixXd& SampledYieldOracle::offsets(long n) {
  if (pool_.count() < n) pool_ = extend_offsets(input_, pool_, n);
  return pool_.offsets;
}

ClosedFormYieldOracle::ClosedFormYieldOracle(WaveguideProblem prob, estimator::PerfSpec spec,
                                             UncertainInput input, std::uint64_t seed,
                                             ParameterEmbed embed)
    : SampledYieldOracle(std::move(input), seed, std::move(embed)),
      prob_(std::move(prob)),
      spec_(std::move(spec)) {}

std::vector<char> ClosedFormYieldOracle::classify(const Eigen::VectorXd& mean, long begin,
                                                  long end) {
  offsets(end);
  const double c = spec_.c_lin();
  std::vector<char> verdicts(end - begin, 0);
  for (long i = begin; i < end; ++i) {
    const Eigen::VectorXd p = embed(mean + pool_.offsets.row(i).transpose());
    bool ok = true;
    for (int j = 0; j < spec_.num_freqs() && ok; ++j)
      ok = std::abs(prob_.closed_form(p, j)) <= c;
    verdicts[i - begin] = ok ? 1 : 0;
  }
  point_evals_ += end - begin;
  return verdicts;
}

FixedLevelYieldOracle::FixedLevelYieldOracle(estimator::MultilevelModel& model,
                                             estimator::PerfSpec spec, UncertainInput input,
                                             std::uint64_t seed, int level,
                                             estimator::EffortWeights weights,
                                             ParameterEmbed embed)
    : SampledYieldOracle(std::move(input), seed, std::move(embed)),
      model_(model),
      spec_(std::move(spec)),
      level_(level),
      weights_(weights) {}

std::vector<char> FixedLevelYieldOracle::classify(const Eigen::VectorXd& mean, long begin,
                                                  long end) {
  offsets(end);
  const double c = spec_.c_lin();
  std::vector<char> verdicts(end - begin, 0);
  for (long i = begin; i < end; ++i) {
    const Eigen::VectorXd p = embed(mean + pool_.offsets.row(i).transpose());
    bool ok = true;
    for (int j = 0; j < spec_.num_freqs() && ok; ++j)
      ok = std::abs(model_.eval(p, j, level_)) <= c;
    verdicts[i - begin] = ok ? 1 : 0;
  }
  point_evals_ += end - begin;
  return verdicts;
}

double FixedLevelYieldOracle::effort() const {
  return estimator::effort(model_.counter().fact, weights_);
}

HybridYieldOracle::HybridYieldOracle(WaveguideBenchmarkModel& model, estimator::PerfSpec spec,
                                     UncertainInput input, std::uint64_t seed,
                                     const Eigen::VectorXd& anchor, int budget,
                                     estimator::SafetyFactor safety,
                                     estimator::EffortWeights weights, bool rebuild_each_mean)
    : SampledYieldOracle(std::move(input), seed, nullptr),
      model_(model),
      spec_(std::move(spec)),
      sur_(build_benchmark_surrogate(model, input_, anchor, budget)),
      safety_(safety),
      weights_(weights),
      rebuild_each_mean_(rebuild_each_mean),
      build_mean_(anchor),
      budget_(budget) {}

std::vector<char> HybridYieldOracle::classify(const Eigen::VectorXd& mean, long begin, long end) {
  if (rebuild_each_mean_ && mean != build_mean_) {
    retired_build_effort_ += weights_.w[0] * static_cast<double>(sur_.build_calls_level0()) +
                             weights_.w[1] * static_cast<double>(sur_.build_calls_level1());
    sur_ = build_benchmark_surrogate(model_, input_, mean, budget_);
    build_mean_ = mean;
  }
  offsets(end);
  std::vector<char> verdicts(end - begin, 0);
  for (long i = begin; i < end; ++i) {
    const Eigen::VectorXd p = mean + pool_.offsets.row(i).transpose();
    const estimator::ClassificationRecord rec =
        estimator::classify_hybrid(p, sur_, model_, model_, spec_, safety_);
    verdicts[i - begin] = rec.accepted ? 1 : 0;
  }
  point_evals_ += end - begin;
  return verdicts;
}

double HybridYieldOracle::effort() const {
  return estimator::effort(model_.counter().fact, weights_) + retired_build_effort_ +
         weights_.w[0] * static_cast<double>(sur_.build_calls_level0()) +
         weights_.w[1] * static_cast<double>(sur_.build_calls_level1());
}

}  // namespace yieldopt::models
