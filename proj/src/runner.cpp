#include "yieldopt/runner.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "yieldopt/estimator.hpp"
#include "yieldopt/models.hpp"
#include "yieldopt/optimizer.hpp"

namespace yieldopt::cli {

namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << content;
}

struct Workspace {
  models::WaveguideProblem problem;
  std::unique_ptr<models::WaveguideBenchmarkModel> model;
  estimator::PerfSpec spec;
  estimator::EffortWeights weights;
};

Workspace make_workspace(const RunConfig& c, const Eigen::VectorXd& anchor) {
  Workspace w;
  w.spec = c.perf_spec();
  w.spec.validate();
  w.weights = c.weights();
  w.problem = models::WaveguideProblem::create(c.variant_enum(), anchor, w.spec.omegas, c.a_mm,
                                               c.b_mm, c.base_elements);
  w.model = std::make_unique<models::WaveguideBenchmarkModel>(w.problem);
  return w;
}

void write_run_record(const fs::path& dir, const RunConfig& c, const std::string& command,
                      const nlohmann::json& results) {
  nlohmann::json j;
  j["command"] = command;
  j["version"] = kVersion;
  j["config"] = nlohmann::json::parse(config_json(c));
  j["results"] = results;
  write_file(dir / "run_record.json", j.dump(2) + "\n");
}

struct EstimateRow {
  std::string approach;
  long leja = 0;  // 0 means '-'
  const estimator::YieldEstimate* est;
};

std::string estimate_csv(const std::vector<EstimateRow>& rows, double y_ref) {
  std::ostringstream os;
  os << "approach,leja,hf_h_surr,hf_h_mc,hf_h2_mc,hf_h4_mc,eff,err_pct\n";
  for (const auto& r : rows) {
    const double err_pct =
        y_ref > 0 ? 100.0 * std::abs(y_ref - r.est->yield) / y_ref : 0.0;
    os << r.approach << ',' << (r.leja > 0 ? std::to_string(r.leja) : "-") << ','
       << r.est->build_l0 << ',' << r.est->hf_mc[0] << ',' << r.est->hf_mc[1] << ','
       << r.est->hf_mc[2] << ',' << fmt(r.est->effort) << ',' << fmt(err_pct) << '\n';
  }
  return os.str();
}

}  // namespace

int run_estimate(const RunConfig& config, const RunOptions& opts) {
  const fs::path dir(opts.out_dir);
  fs::create_directories(dir);
  Workspace w = make_workspace(config, config.mean);
  const UncertainInput input = config.uncertainty(config.mean);

  const SampleSet sample = draw_offsets(input, config.n_mc, config.seed_sample);
  const Eigen::MatrixXd points = realize(sample, config.mean);

  // Closed-form reference yield on the same sample.
  estimator::LeveledEvaluator closed{
      [&](const Eigen::VectorXd& p, int j) { return w.problem.closed_form(p, j); }, -1};
  const estimator::SampleEstimate ref = estimator::estimate_mc(closed, points, w.spec, w.weights);

  surrogate::SparseSurrogate sur =
      opts.load_surrogate.empty()
          ? models::build_benchmark_surrogate(*w.model, input, config.mean, config.budget)
          : surrogate::SparseSurrogate::load_file(opts.load_surrogate);
  if (!opts.save_surrogate.empty()) sur.save_file(opts.save_surrogate);

  estimator::SafetyFactor safety{config.safety};
  if (config.calibrate) {
    safety = estimator::calibrate_safety(sur, *w.model, *w.model, input, config.mean, w.spec,
                                         config.n_cal, config.seed_calibration)
                 .factor;
  }

  const estimator::SampleEstimate sc = estimator::estimate_sc(sur, points, w.spec, w.weights);
  const estimator::HybridEstimate hyb =
      estimator::estimate_hybrid(sur, *w.model, *w.model, points, w.spec, safety, w.weights);
  estimator::LeveledEvaluator fine{
      [&](const Eigen::VectorXd& p, int j) { return w.model->eval(p, j, 2); }, 2};
  const estimator::SampleEstimate mc_fine = estimator::estimate_mc(fine, points, w.spec, w.weights);
  const estimator::SampleEstimate mc_refine =
      estimator::estimate_mc_refine(*w.model, points, w.spec, safety, w.weights);

  long mismatches = 0;
  for (size_t i = 0; i < hyb.verdicts.size(); ++i)
    mismatches += hyb.verdicts[i] != mc_fine.verdicts[i];

  std::vector<EstimateRow> rows{{"MC_fine", 0, &mc_fine.est},
                                {"MC_refine", 0, &mc_refine.est},
                                {"SC", sur.node_count(), &sc.est},
                                {"Hybrid", sur.node_count(), &hyb.est}};
  write_file(dir / "estimate_table.csv", estimate_csv(rows, ref.est.yield));

  std::ostringstream sum;
  sum << "reference yield (closed form, N=" << config.n_mc << "): " << fmt(ref.est.yield)
      << " +- " << fmt(ref.est.sigma_y) << "\n"
      << "safety factor: " << fmt(safety.s) << (config.calibrate ? " (calibrated)" : "") << "\n"
      << "yields: MC_fine=" << fmt(mc_fine.est.yield) << " MC_refine=" << fmt(mc_refine.est.yield)
      << " SC=" << fmt(sc.est.yield) << " Hybrid=" << fmt(hyb.est.yield) << "\n"
      << "hybrid vs MC_fine verdict mismatches: " << mismatches << " of " << config.n_mc << "\n"
      << "effort: Hybrid=" << fmt(hyb.est.effort) << " MC_refine=" << fmt(mc_refine.est.effort)
      << " MC_fine=" << fmt(mc_fine.est.effort) << "\n"
      << "effort ordering Hybrid <= MC_refine <= MC_fine: "
      << ((hyb.est.effort <= mc_refine.est.effort &&
           mc_refine.est.effort <= mc_fine.est.effort)
              ? "yes"
              : "NO")
      << "\n";
  write_file(dir / "estimate_summary.txt", sum.str());

  nlohmann::json results;
  results["reference_yield"] = ref.est.yield;
  results["safety_factor"] = safety.s;
  results["mismatches_hybrid_vs_mc_fine"] = mismatches;
  results["yields"] = {{"mc_fine", mc_fine.est.yield},
                       {"mc_refine", mc_refine.est.yield},
                       {"sc", sc.est.yield},
                       {"hybrid", hyb.est.yield}};
  results["efforts"] = {{"mc_fine", mc_fine.est.effort},
                        {"mc_refine", mc_refine.est.effort},
                        {"sc", sc.est.effort},
                        {"hybrid", hyb.est.effort}};
  write_run_record(dir, config, "estimate", results);
  return 0;
}

namespace {

std::unique_ptr<optimizer::YieldOracle> make_oracle(const RunConfig& config, Workspace& w,
                                                    const UncertainInput& input,
                                                    const Eigen::VectorXd& anchor) {
  if (config.evaluator == "closed_form")
    return std::make_unique<models::ClosedFormYieldOracle>(w.problem, w.spec, input,
                                                           config.seed_sample);
  if (config.evaluator == "mc_fine")
    return std::make_unique<models::FixedLevelYieldOracle>(*w.model, w.spec, input,
                                                           config.seed_sample, 2, w.weights);
  return std::make_unique<models::HybridYieldOracle>(
      *w.model, w.spec, input, config.seed_sample, anchor, config.budget,
      estimator::SafetyFactor{config.safety}, w.weights, config.rebuild_surrogate);
}

std::string iterations_csv(const optimizer::OptState& st) {
  std::ostringstream os;
  os << "iteration,n_mc,yield,sigma_y,effort,step_kind,step_size\n";
  for (const auto& r : st.history)
    os << r.iteration << ',' << r.n << ',' << fmt(r.yield) << ',' << fmt(r.sigma_y) << ','
       << fmt(r.effort) << ',' << r.step_kind << ',' << fmt(r.step_size) << '\n';
  return os.str();
}

}  // namespace

int run_optimize(const RunConfig& config, const RunOptions& opts, bool adaptive) {
  const fs::path dir(opts.out_dir);
  fs::create_directories(dir);
  Workspace w = make_workspace(config, config.start);
  const UncertainInput input = config.uncertainty(config.start);
  std::unique_ptr<optimizer::YieldOracle> oracle = make_oracle(config, w, input, config.start);

  const Eigen::VectorXd sigma2 = config.std.array().square();
  const optimizer::OptState st =
      adaptive ? optimizer::adaptive_newton_mc(*oracle, config.start, sigma2, config.newton)
               : optimizer::globalized_newton(*oracle, config.start, sigma2, config.newton,
                                              config.n_mc);

  write_file(dir / "optimize_iterations.csv", iterations_csv(st));

  std::ostringstream sum;
  sum << "method,iterations,yield_evals,point_evals,effort,final_yield,final_sigma_y,converged\n"
      << (adaptive ? "adaptive_newton_mc" : "globalized_newton") << ',' << st.iterations << ','
      << st.yield_evaluations << ',' << oracle->point_evals() << ',' << fmt(oracle->effort())
      << ',' << fmt(st.yield) << ',' << fmt(st.sigma_y) << ',' << (st.converged ? 1 : 0) << '\n';
  write_file(dir / "optimize_summary.csv", sum.str());

  nlohmann::json results;
  results["adaptive"] = adaptive;
  results["iterations"] = st.iterations;
  results["yield_evaluations"] = st.yield_evaluations;
  results["point_evaluations"] = oracle->point_evals();
  results["effort"] = oracle->effort();
  results["final_yield"] = st.yield;
  results["final_sigma_y"] = st.sigma_y;
  results["final_n"] = st.n;
  results["final_mean"] = std::vector<double>(st.mean.data(), st.mean.data() + st.mean.size());
  results["converged"] = st.converged;
  results["empty_safe_set"] = st.empty_safe_set;
  write_run_record(dir, config, adaptive ? "optimize --adaptive" : "optimize", results);
  return st.converged ? 0 : 4;
}

int run_gradcheck(const RunConfig& config, const RunOptions& opts) {
  const fs::path dir(opts.out_dir);
  fs::create_directories(dir);
  Workspace w = make_workspace(config, config.mean);
  const UncertainInput input = config.uncertainty(config.mean);
  std::unique_ptr<optimizer::YieldOracle> oracle = make_oracle(config, w, input, config.mean);

  const Eigen::VectorXd sigma2 = config.std.array().square();
  const optimizer::GradientCheckReport report = optimizer::gradient_quality_check(
      *oracle, config.mean, sigma2, config.gradcheck_delta, config.gradcheck_eta,
      config.gradcheck_schedule);

  std::ostringstream os;
  os << "n,component,grad_analytic,grad_fd,abs_diff,fd_stderr\n";
  for (const auto& row : report.rows)
    for (int jc = 0; jc < row.grad_analytic.size(); ++jc)
      os << row.n << ',' << jc << ',' << fmt(row.grad_analytic[jc]) << ',' << fmt(row.grad_fd[jc])
         << ',' << fmt(std::abs(row.grad_analytic[jc] - row.grad_fd[jc])) << ','
         << fmt(row.fd_stderr[jc]) << '\n';
  write_file(dir / "gradcheck_trace.csv", os.str());

  nlohmann::json results;
  results["satisfied"] = report.satisfied;
  results["eta"] = config.gradcheck_eta;
  results["delta"] = config.gradcheck_delta;
  std::vector<double> diffs;
  for (const auto& row : report.rows) diffs.push_back(row.max_abs_diff);
  results["max_abs_diff_trace"] = diffs;
  write_run_record(dir, config, "gradcheck", results);
  // An unmet bound is a flagged outcome: the caller may continue with the
  // finite-difference gradient or restart from the current point.
  return report.satisfied ? 0 : 4;
}

int run_calibrate(const RunConfig& config, const RunOptions& opts) {
  const fs::path dir(opts.out_dir);
  fs::create_directories(dir);
  Workspace w = make_workspace(config, config.mean);
  const UncertainInput input = config.uncertainty(config.mean);

  surrogate::SparseSurrogate sur =
      opts.load_surrogate.empty()
          ? models::build_benchmark_surrogate(*w.model, input, config.mean, config.budget)
          : surrogate::SparseSurrogate::load_file(opts.load_surrogate);
  if (!opts.save_surrogate.empty()) sur.save_file(opts.save_surrogate);

  const estimator::CalibrationResult cal = estimator::calibrate_safety(
      sur, *w.model, *w.model, input, config.mean, w.spec, config.n_cal, config.seed_calibration);

  std::ostringstream os;
  os << "point,freq,true_error,indicator,ratio\n";
  for (const auto& r : cal.rows)
    os << r.point << ',' << r.freq << ',' << fmt(r.true_error) << ',' << fmt(r.indicator) << ','
       << fmt(r.ratio) << '\n';
  write_file(dir / "calibrate_ratios.csv", os.str());

  nlohmann::json results;
  results["safety_factor"] = cal.factor.s;
  results["warned_zero_indicator"] = cal.factor.warned_zero_indicator;
  results["n_cal"] = config.n_cal;
  write_run_record(dir, config, "calibrate", results);
  return 0;
}

}  // namespace yieldopt::cli
