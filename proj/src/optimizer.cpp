#include "yieldopt/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace yieldopt::optimizer {

void NewtonParams::validate() const {
  if (!(beta > 0 && beta < 1)) throw std::invalid_argument("NewtonParams: beta in (0,1)");
  if (!(gamma > 0 && gamma < 1)) throw std::invalid_argument("NewtonParams: gamma in (0,1)");
  if (!(phi1 > 0 && phi2 > 0 && q > 0)) throw std::invalid_argument("NewtonParams: phi1, phi2, q > 0");
  if (max_backsteps < 0 || max_iterations < 1 || n_start < 2 || inc < 1)
    throw std::invalid_argument("NewtonParams: invalid caps");
  if (!(sigma_y_max > 0)) throw std::invalid_argument("NewtonParams: sigma_y_max > 0");
}

ConditionalMoments conditional_moments(const Eigen::MatrixXd& points,
                                       const std::vector<char>& verdicts) {
  if (points.rows() != static_cast<Eigen::Index>(verdicts.size()))
    throw std::invalid_argument("conditional_moments: verdict count mismatch");
  if (points.rows() < 1) throw std::invalid_argument("conditional_moments: empty sample");
  const Eigen::Index d = points.cols();
  ConditionalMoments m;
  m.safe_mean = Eigen::VectorXd::Zero(d);
  m.safe_cov = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    if (verdicts[i]) {
      ++m.n_safe;
      m.safe_mean += points.row(i).transpose();
    }
  if (m.n_safe == 0) return m;
  m.safe_mean /= static_cast<double>(m.n_safe);
  if (m.n_safe >= 2) {
    for (Eigen::Index i = 0; i < points.rows(); ++i)
      if (verdicts[i]) {
        const Eigen::VectorXd r = points.row(i).transpose() - m.safe_mean;
        m.safe_cov += r * r.transpose();
      }
    m.safe_cov /= static_cast<double>(m.n_safe - 1);
    m.cov_available = true;
  }
  return m;
}

Eigen::VectorXd yield_gradient(double yield, const Eigen::VectorXd& mean,
                               const Eigen::VectorXd& sigma2_diag,
                               const ConditionalMoments& m) {
  if ((sigma2_diag.array() <= 0).any())
    throw std::invalid_argument("yield_gradient: variances must be positive");
  if (m.n_safe == 0 || yield == 0.0) return Eigen::VectorXd::Zero(mean.size());
  return yield * (m.safe_mean - mean).cwiseQuotient(sigma2_diag);
}

Eigen::MatrixXd yield_hessian(double yield, const Eigen::VectorXd& mean,
                              const Eigen::VectorXd& sigma2_diag,
                              const ConditionalMoments& m) {
  if (!m.cov_available)
    throw std::invalid_argument("yield_hessian: needs at least two accepted points");
  const Eigen::VectorXd d = m.safe_mean - mean;
  const Eigen::MatrixXd inner =
      m.safe_cov + d * d.transpose() - Eigen::MatrixXd(sigma2_diag.asDiagonal());
  const Eigen::VectorXd inv = sigma2_diag.cwiseInverse();
  return yield * inv.asDiagonal() * inner * inv.asDiagonal();
}

NewtonDirection newton_direction(const Eigen::VectorXd& grad,
                                 const std::optional<Eigen::MatrixXd>& hess,
                                 const NewtonParams& params) {
  if (hess) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(*hess);
    if (lu.isInvertible()) {
      const Eigen::VectorXd d = lu.solve(-grad);
      const double dn = d.norm();
      if (dn > 0 &&
          grad.dot(d) >= std::min(params.phi1, params.phi2 * std::pow(dn, params.q)) * dn * dn)
        return {d, true};
    }
  }
  return {grad, false};
}

YieldEvaluation evaluate_yield(YieldOracle& oracle, const Eigen::VectorXd& mean, long n) {
  YieldEvaluation ev;
  ev.mean = mean;
  ev.n = n;
  ev.verdicts = oracle.classify(mean, 0, n);
  const Eigen::MatrixXd points = oracle.offsets(n).topRows(n).rowwise() + mean.transpose();
  ev.moments = conditional_moments(points, ev.verdicts);
  ev.yield = static_cast<double>(ev.moments.n_safe) / static_cast<double>(n);
  return ev;
}

YieldEvaluation extend_yield(YieldOracle& oracle, YieldEvaluation ev, long n_new) {
  if (n_new < ev.n) throw std::invalid_argument("extend_yield: shrinking not supported");
  std::vector<char> tail = oracle.classify(ev.mean, ev.n, n_new);
  ev.verdicts.insert(ev.verdicts.end(), tail.begin(), tail.end());
  ev.n = n_new;
  const Eigen::MatrixXd points = oracle.offsets(n_new).topRows(n_new).rowwise() + ev.mean.transpose();
  ev.moments = conditional_moments(points, ev.verdicts);
  ev.yield = static_cast<double>(ev.moments.n_safe) / static_cast<double>(n_new);
  return ev;
}

ArmijoResult armijo_step(YieldOracle& oracle, const YieldEvaluation& current,
                         const Eigen::VectorXd& direction, const Eigen::VectorXd& grad,
                         const NewtonParams& params) {
  const double slope = grad.dot(direction);
  ArmijoResult res;
  double sigma = 1.0;
  for (int k = 0; k <= params.max_backsteps; ++k) {
    res.trial = evaluate_yield(oracle, current.mean + sigma * direction, current.n);
    ++res.evaluations;
    res.sigma = sigma;
    if (res.trial.yield - current.yield >= sigma * params.gamma * slope) {
      res.satisfied = true;
      return res;
    }
    sigma *= params.beta;
  }
  // None qualified: the last trial (smallest sigma) stands as the forced step.
  return res;
}

namespace {

enum class StopReason { GradTol, StepTol, Stagnation, EmptySafe, IterationCap };

struct LoopState {
  YieldEvaluation cur;
  int iterations = 0;
  long yield_evals = 0;
  std::vector<IterationRecord> history;
};

StopReason newton_loop(YieldOracle& oracle, LoopState& st, const Eigen::VectorXd& sigma2,
                       const NewtonParams& params) {
  while (true) {
    if (st.iterations >= params.max_iterations) return StopReason::IterationCap;
    if (st.cur.moments.n_safe == 0) return StopReason::EmptySafe;
    const Eigen::VectorXd grad =
        yield_gradient(st.cur.yield, st.cur.mean, sigma2, st.cur.moments);
    if (grad.norm() <= params.grad_tol) return StopReason::GradTol;
    std::optional<Eigen::MatrixXd> hess;
    if (st.cur.moments.cov_available)
      hess = yield_hessian(st.cur.yield, st.cur.mean, sigma2, st.cur.moments);
    const NewtonDirection dir = newton_direction(grad, hess, params);

    const ArmijoResult ar = armijo_step(oracle, st.cur, dir.s, grad, params);
    st.yield_evals += ar.evaluations;
    if (!ar.satisfied && ar.trial.yield <= st.cur.yield) {
      // No sufficient increase and the forced step does not improve either:
      // the iterate stays put and the run is stagnant.
      return StopReason::Stagnation;
    }
    const double step_norm = ar.sigma * dir.s.norm();
    st.cur = ar.trial;
    ++st.iterations;
    st.history.push_back({st.iterations, st.cur.mean, st.cur.yield,
                          estimator::mc_std(st.cur.yield, st.cur.n), st.cur.n, oracle.effort(),
                          dir.newton ? 'n' : 'g', ar.sigma});
    if (step_norm <= params.step_tol) return StopReason::StepTol;
  }
}

}  // namespace

OptState globalized_newton(YieldOracle& oracle, const Eigen::VectorXd& start,
                           const Eigen::VectorXd& sigma2_diag, const NewtonParams& params,
                           long n_fixed) {
  params.validate();
  if (n_fixed < 1) throw std::invalid_argument("globalized_newton: sample size must be >= 1");
  LoopState st;
  st.cur = evaluate_yield(oracle, start, n_fixed);
  st.yield_evals = 1;
  const StopReason why = newton_loop(oracle, st, sigma2_diag, params);

  OptState out;
  out.mean = st.cur.mean;
  out.yield = st.cur.yield;
  out.sigma_y = estimator::mc_std(st.cur.yield, st.cur.n);
  out.n = st.cur.n;
  out.iterations = st.iterations;
  out.yield_evaluations = st.yield_evals;
  out.history = std::move(st.history);
  out.empty_safe_set = (why == StopReason::EmptySafe);
  out.converged = (why != StopReason::IterationCap && why != StopReason::EmptySafe);
  return out;
}

OptState adaptive_newton_mc(YieldOracle& oracle, const Eigen::VectorXd& start,
                            const Eigen::VectorXd& sigma2_diag, const NewtonParams& params) {
  params.validate();
  LoopState st;
  long n = params.n_start;
  st.cur = evaluate_yield(oracle, start, n);
  st.yield_evals = 1;

  bool converged = false;
  bool empty_safe = false;
  int growth_cycles = 0;
  constexpr int kMaxGrowthCycles = 10000;
  while (true) {
    const StopReason why = newton_loop(oracle, st, sigma2_diag, params);
    n = st.cur.n;
    if (why == StopReason::IterationCap) break;
    empty_safe = (why == StopReason::EmptySafe && st.cur.moments.n_safe == 0);
    const double sigma_y = estimator::mc_std(st.cur.yield, n);
    if (sigma_y <= params.sigma_y_max && !empty_safe) {
      converged = true;
      break;
    }
    if (empty_safe && n >= 100 * params.n_start) break;  // nothing accepted; give up
    // Accuracy target not met at stagnation: enlarge the sample, evaluating
    // only the new points, until sigma_Y' meets the target or the yield moves
    // by more than the target accuracy.
    const double yield_before = st.cur.yield;
    while (true) {
      if (++growth_cycles > kMaxGrowthCycles) break;
      const long n_new = n + static_cast<long>(params.inc) * params.n_start;
      st.cur = extend_yield(oracle, st.cur, n_new);
      ++st.yield_evals;
      n = n_new;
      const double sigma_new = estimator::mc_std(st.cur.yield, n);
      if (sigma_new <= params.sigma_y_max) break;
      if (std::abs(yield_before - st.cur.yield) >= params.sigma_y_max) break;
    }
    if (growth_cycles > kMaxGrowthCycles) break;
  }

  OptState out;
  out.mean = st.cur.mean;
  out.yield = st.cur.yield;
  out.sigma_y = estimator::mc_std(st.cur.yield, st.cur.n);
  out.n = st.cur.n;
  out.iterations = st.iterations;
  out.yield_evaluations = st.yield_evals;
  out.history = std::move(st.history);
  out.converged = converged;
  out.empty_safe_set = empty_safe && st.cur.moments.n_safe == 0;
  return out;
}

GradientCheckReport gradient_quality_check(YieldOracle& oracle, const Eigen::VectorXd& mean,
                                           const Eigen::VectorXd& sigma2_diag, double delta,
                                           double eta, const std::vector<long>& n_schedule) {
  if (!(delta > 0)) throw std::invalid_argument("gradient_quality_check: delta must be > 0");
  if (n_schedule.empty()) throw std::invalid_argument("gradient_quality_check: empty schedule");
  const int d = static_cast<int>(mean.size());
  GradientCheckReport report;
  for (long n : n_schedule) {
    const YieldEvaluation ev = evaluate_yield(oracle, mean, n);
    GradientCheckRow row;
    row.n = n;
    row.grad_analytic = yield_gradient(ev.yield, mean, sigma2_diag, ev.moments);
    row.grad_fd.resize(d);
    row.fd_stderr.resize(d);
    for (int j = 0; j < d; ++j) {
      Eigen::VectorXd mp = mean, mm = mean;
      mp[j] += delta;
      mm[j] -= delta;
      const std::vector<char> vp = oracle.classify(mp, 0, n);
      const std::vector<char> vm = oracle.classify(mm, 0, n);
      double sum = 0, sumsq = 0;
      for (long i = 0; i < n; ++i) {
        const double x = static_cast<double>(vp[i]) - static_cast<double>(vm[i]);
        sum += x;
        sumsq += x * x;
      }
      const double mean_x = sum / static_cast<double>(n);
      const double var_x =
          n > 1 ? (sumsq - sum * mean_x) / static_cast<double>(n - 1) : 0.0;
      row.grad_fd[j] = mean_x / (2.0 * delta);
      row.fd_stderr[j] = std::sqrt(std::max(0.0, var_x) / static_cast<double>(n)) / (2.0 * delta);
    }
    row.max_abs_diff = (row.grad_fd - row.grad_analytic).cwiseAbs().maxCoeff();
    report.rows.push_back(std::move(row));
    if (report.rows.back().max_abs_diff <= eta) {
      report.satisfied = true;
      break;
    }
  }
  return report;
}

}  // namespace yieldopt::optimizer
