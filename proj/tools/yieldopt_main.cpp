#include <CLI11.hpp>

#include <cstdio>
#include <exception>

#include "yieldopt/config.hpp"
#include "yieldopt/runner.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::string save_surrogate, load_surrogate;
  long seed = -1;
  int budget = -1;
  double safety = -1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "configuration file (key = value lines)");
  cmd->add_option("--out", args.out_dir, "output directory")->capture_default_str();
  cmd->add_option("--seed", args.seed, "override the sample seed");
  cmd->add_option("--budget", args.budget, "override the surrogate node budget");
  cmd->add_option("--safety", args.safety, "override the safety factor");
  cmd->add_option("--save-surrogate", args.save_surrogate, "write the built surrogate to a file");
  cmd->add_option("--load-surrogate", args.load_surrogate, "reuse a previously built surrogate");
}

yieldopt::cli::RunConfig resolve(const CommonArgs& args) {
  yieldopt::cli::RunConfig config;
  if (!args.config_path.empty()) {
    config = yieldopt::cli::parse_config_file(args.config_path);
  } else {
    config.resolve_defaults();
    config.validate();
  }
  if (args.seed >= 0) config.seed_sample = static_cast<std::uint64_t>(args.seed);
  if (args.budget > 0) config.budget = args.budget;
  if (args.safety > 0) config.safety = args.safety;
  config.validate();
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Yield estimation and optimization for the dielectric-inset waveguide benchmark"};
  app.require_subcommand(1);

  CommonArgs est_args, opt_args, grad_args, cal_args;
  bool adaptive = false;

  CLI::App* est = app.add_subcommand("estimate", "compare MC, SC and hybrid yield estimators");
  add_common(est, est_args);
  CLI::App* opt = app.add_subcommand("optimize", "maximize the yield over the design mean");
  add_common(opt, opt_args);
  opt->add_flag("--adaptive", adaptive, "adaptive Newton-MC instead of fixed-sample Newton");
  CLI::App* grad = app.add_subcommand("gradcheck", "compare analytic and finite-difference yield gradients");
  add_common(grad, grad_args);
  CLI::App* cal = app.add_subcommand("calibrate", "calibrate the indicator safety factor");
  add_common(cal, cal_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (est->parsed()) {
      const auto config = resolve(est_args);
      return yieldopt::cli::run_estimate(
          config, {est_args.out_dir, est_args.save_surrogate, est_args.load_surrogate});
    }
    if (opt->parsed()) {
      const auto config = resolve(opt_args);
      return yieldopt::cli::run_optimize(
          config, {opt_args.out_dir, opt_args.save_surrogate, opt_args.load_surrogate}, adaptive);
    }
    if (grad->parsed()) {
      const auto config = resolve(grad_args);
      return yieldopt::cli::run_gradcheck(
          config, {grad_args.out_dir, grad_args.save_surrogate, grad_args.load_surrogate});
    }
    const auto config = resolve(cal_args);
    return yieldopt::cli::run_calibrate(
        config, {cal_args.out_dir, cal_args.save_surrogate, cal_args.load_surrogate});
  } catch (const yieldopt::cli::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "solver error: %s\n", e.what());
    return 3;
  }
}
