#include "yieldopt/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace yieldopt::estimator {

void PerfSpec::validate() const {
  if (omegas.size() < 1) throw std::invalid_argument("PerfSpec: empty frequency grid");
  for (int j = 1; j < omegas.size(); ++j)
    if (!(omegas[j] > omegas[j - 1]))
      throw std::invalid_argument("PerfSpec: frequency grid must be strictly increasing");
  const double c = c_lin();
  if (!(c > 0.0 && c < 1.0)) throw std::invalid_argument("PerfSpec: threshold outside (0,1) linear");
}

PerfSpec PerfSpec::benchmark() {
  PerfSpec s;
  s.threshold_db = -24.0;
  s.omegas.resize(11);
  for (int j = 0; j < 11; ++j) s.omegas[j] = 2.0 * M_PI * (6.5e9 + 1e8 * j);
  return s;
}

double mc_std(double yield, long n) {
  if (n < 1) throw std::invalid_argument("mc_std: sample size must be >= 1");
  if (yield < 0.0 || yield > 1.0) throw std::invalid_argument("mc_std: yield outside [0,1]");
  return std::sqrt(yield * (1.0 - yield) / static_cast<double>(n));
}

double effort(const std::array<long, 3>& counts, const EffortWeights& weights) {
  double e = 0.0;
  for (int l = 0; l < 3; ++l) e += weights.w[l] * static_cast<double>(counts[l]);
  return e;
}

namespace {

void finalize(YieldEstimate& est, long accepted, long n, const EffortWeights& w) {
  est.n = n;
  est.yield = n > 0 ? static_cast<double>(accepted) / static_cast<double>(n) : 0.0;
  est.sigma_y = n > 0 ? mc_std(est.yield, n) : 0.0;
  est.effort = effort(est.hf_mc, w) + w.w[0] * static_cast<double>(est.build_l0) +
               w.w[1] * static_cast<double>(est.build_l1);
}

}  // namespace

SampleEstimate estimate_mc(const LeveledEvaluator& eval, const Eigen::MatrixXd& points,
                           const PerfSpec& spec, const EffortWeights& weights) {
  spec.validate();
  if (points.rows() < 1) throw std::invalid_argument("estimate_mc: empty sample");
  const double c = spec.c_lin();
  SampleEstimate out;
  out.verdicts.resize(points.rows());
  long accepted = 0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const Eigen::VectorXd p = points.row(i);
    bool ok = true;
    for (int j = 0; j < spec.num_freqs(); ++j) {
      const Complex s = eval.f(p, j);
      if (eval.count_level >= 0)
        ++out.est.hf_mc[eval.count_level];
      else
        ++out.est.oracle_evals;
      if (std::abs(s) > c) {
        ok = false;
        break;
      }
    }
    out.verdicts[i] = ok ? 1 : 0;
    accepted += ok;
  }
  finalize(out.est, accepted, points.rows(), weights);
  return out;
}

SampleEstimate estimate_sc(const surrogate::SparseSurrogate& sur,
                           const Eigen::MatrixXd& points, const PerfSpec& spec,
                           const EffortWeights& weights) {
  spec.validate();
  if (points.rows() < 1) throw std::invalid_argument("estimate_sc: empty sample");
  const double c = spec.c_lin();
  SampleEstimate out;
  out.verdicts.resize(points.rows());
  long accepted = 0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const Eigen::VectorXd p = points.row(i);
    bool ok = true;
    for (int j = 0; j < spec.num_freqs(); ++j) {
      if (std::abs(sur.eval_qoi(p, j)) > c) {
        ok = false;
        break;
      }
    }
    out.verdicts[i] = ok ? 1 : 0;
    accepted += ok;
  }
  // A surrogate-only run needs no error-indicator payload, so only the
  // level-0 build solves enter its effort.
  out.est.build_l0 = sur.build_calls_level0();
  out.est.build_l1 = 0;
  finalize(out.est, accepted, points.rows(), weights);
  return out;
}

namespace {

enum class IntervalState { Reject, Pass, Critical };

IntervalState interval_test(double q, double eps, double s, double c) {
  if (q - s * eps > c) return IntervalState::Reject;
  if (q + s * eps <= c) return IntervalState::Pass;
  return IntervalState::Critical;
}

/// Escalation without a surrogate stage: the coarse value is tested against
/// the directly computed indicator, refining until a verdict or the forced
/// finest-mesh comparison. Also used for points outside the build box.
IntervalState ladder_no_surrogate(MultilevelModel& model, const Eigen::VectorXd& p, int j,
                                  double s, double c, ClassificationRecord& rec,
                                  Fidelity& highest, bool& forced) {
  auto chain = model.start_chain(p, j);
  MultilevelModel::Step cur = chain->advance();
  ++rec.fe_calls[0];
  highest = Fidelity::FE0;
  const int top = model.num_levels() - 1;
  // Single-level models decide by value alone.
  while (chain->level() < top) {
    const MultilevelModel::Step next = chain->advance();
    ++rec.fe_calls[chain->level()];
    highest = static_cast<Fidelity>(static_cast<int>(Fidelity::FE0) + chain->level());
    const IntervalState st = interval_test(std::abs(cur.value), next.indicator, s, c);
    if (st != IntervalState::Critical) return st;
    cur = next;
  }
  highest = static_cast<Fidelity>(static_cast<int>(Fidelity::FE0) + chain->level());
  forced = true;
  return std::abs(cur.value) <= c ? IntervalState::Pass : IntervalState::Reject;
}

}  // namespace

ClassificationRecord classify_hybrid(const Eigen::VectorXd& p,
                                     const surrogate::SparseSurrogate& sur,
                                     const surrogate::CollocationModel& residual_model,
                                     MultilevelModel& model, const PerfSpec& spec,
                                     const SafetyFactor& safety) {
  const double c = spec.c_lin();
  const double s = safety.s;
  const int nf = spec.num_freqs();
  ClassificationRecord rec;

  if (!sur.in_box(p)) {
    // No validity guarantee for the extrapolated indicator; escalate directly.
    rec.outside_box = true;
    for (int j = 0; j < nf; ++j) {
      Fidelity highest = Fidelity::FE0;
      bool forced = false;
      const IntervalState st = ladder_no_surrogate(model, p, j, s, c, rec, highest, forced);
      rec.forced_at_max |= forced;
      rec.path.push_back({j, highest});
      if (st == IntervalState::Reject) return rec;
    }
    rec.accepted = true;
    return rec;
  }

  // Examine frequencies in descending surrogate magnitude: likely violations
  // first, so rejected points exit cheaply.
  std::vector<double> qtil(nf);
  for (int j = 0; j < nf; ++j) qtil[j] = std::abs(sur.eval_qoi(p, j));
  std::vector<int> order(nf);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return qtil[a] > qtil[b]; });

  const int top = model.num_levels() - 1;
  for (int j : order) {
    Fidelity highest = Fidelity::Surrogate;
    double q = qtil[j];
    double eps = surrogate::sc_error_indicator(sur, residual_model, p, j) +
                 sur.fe_error_surrogate(p, j);
    std::unique_ptr<MultilevelModel::Chain> chain;
    MultilevelModel::Step cur{};
    bool decided = false;
    IntervalState st = IntervalState::Critical;
    while (!decided) {
      st = interval_test(q, eps, s, c);
      if (st != IntervalState::Critical) {
        decided = true;
      } else if (!chain) {
        // First escalation: high-fidelity value, surrogate error gone.
        chain = model.start_chain(p, j);
        cur = chain->advance();
        ++rec.fe_calls[0];
        highest = Fidelity::FE0;
        q = std::abs(cur.value);
        eps = sur.fe_error_surrogate(p, j);
      } else if (chain->level() < top) {
        cur = chain->advance();
        ++rec.fe_calls[chain->level()];
        highest = static_cast<Fidelity>(static_cast<int>(Fidelity::FE0) + chain->level());
        q = std::abs(cur.value);
        eps = cur.indicator;
      } else {
        rec.forced_at_max = true;
        st = q <= c ? IntervalState::Pass : IntervalState::Reject;
        decided = true;
      }
    }
    rec.path.push_back({j, highest});
    if (st == IntervalState::Reject) return rec;
  }
  rec.accepted = true;
  return rec;
}

HybridEstimate estimate_hybrid(const surrogate::SparseSurrogate& sur,
                               const surrogate::CollocationModel& residual_model,
                               MultilevelModel& model, const Eigen::MatrixXd& points,
                               const PerfSpec& spec, const SafetyFactor& safety,
                               const EffortWeights& weights) {
  spec.validate();
  if (points.rows() < 1) throw std::invalid_argument("estimate_hybrid: empty sample");
  HybridEstimate out;
  out.verdicts.resize(points.rows());
  out.records.reserve(points.rows());
  long accepted = 0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    ClassificationRecord rec =
        classify_hybrid(points.row(i), sur, residual_model, model, spec, safety);
    for (int l = 0; l < 3; ++l) out.est.hf_mc[l] += rec.fe_calls[l];
    out.verdicts[i] = rec.accepted ? 1 : 0;
    accepted += rec.accepted;
    out.records.push_back(std::move(rec));
  }
  out.est.build_l0 = sur.build_calls_level0();
  out.est.build_l1 = sur.build_calls_level1();
  finalize(out.est, accepted, points.rows(), weights);
  return out;
}

SampleEstimate estimate_mc_refine(MultilevelModel& model, const Eigen::MatrixXd& points,
                                  const PerfSpec& spec, const SafetyFactor& safety,
                                  const EffortWeights& weights) {
  spec.validate();
  if (points.rows() < 1) throw std::invalid_argument("estimate_mc_refine: empty sample");
  const double c = spec.c_lin();
  SampleEstimate out;
  out.verdicts.resize(points.rows());
  long accepted = 0;
  ClassificationRecord scratch;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const Eigen::VectorXd p = points.row(i);
    bool ok = true;
    for (int j = 0; j < spec.num_freqs() && ok; ++j) {
      Fidelity highest = Fidelity::FE0;
      bool forced = false;
      const IntervalState st =
          ladder_no_surrogate(model, p, j, safety.s, c, scratch, highest, forced);
      if (st == IntervalState::Reject) ok = false;
    }
    out.verdicts[i] = ok ? 1 : 0;
    accepted += ok;
  }
  out.est.hf_mc = scratch.fe_calls;
  finalize(out.est, accepted, points.rows(), weights);
  return out;
}

CalibrationResult calibrate_safety(const surrogate::SparseSurrogate& sur,
                                   const surrogate::CollocationModel& residual_model,
                                   MultilevelModel& model, const UncertainInput& input,
                                   const Eigen::VectorXd& mean, const PerfSpec& spec,
                                   int n_cal, std::uint64_t seed) {
  if (n_cal < 2) throw std::invalid_argument("calibrate_safety: need at least 2 points");
  spec.validate();
  const SampleSet cal = draw_offsets(input, n_cal, seed);
  const Eigen::MatrixXd points = realize(cal, mean);
  const int top_level = model.num_levels() - 1;

  CalibrationResult res;
  double worst = 1.0;
  for (int i = 0; i < n_cal; ++i) {
    const Eigen::VectorXd p = points.row(i);
    for (int j = 0; j < spec.num_freqs(); ++j) {
      const Complex truth = model.eval(p, j, top_level);
      const Complex approx = sur.eval_qoi(p, j);
      const double err = std::abs(truth - approx);
      const double ind = surrogate::sc_error_indicator(sur, residual_model, p, j) +
                         sur.fe_error_surrogate(p, j);
      CalibrationRow row{i, j, err, ind, 0.0};
      if (ind > 0.0) {
        row.ratio = err / ind;
        worst = std::max(worst, row.ratio);
      } else if (err > 0.0) {
        res.factor.warned_zero_indicator = true;
        row.ratio = std::numeric_limits<double>::quiet_NaN();
      }
      res.rows.push_back(row);
    }
  }
  res.factor.s = worst;
  return res;
}

}  // namespace yieldopt::estimator
