#include "yieldopt/config.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace yieldopt::cli {

models::Variant RunConfig::variant_enum() const {
  if (variant == "4param") return models::Variant::FourParam;
  if (variant == "12param") return models::Variant::TwelveParam;
  throw ConfigError("unknown variant: " + variant);
}

void RunConfig::resolve_defaults() {
  const models::Variant v = variant_enum();
  const int d = (v == models::Variant::FourParam) ? 4 : 12;
  if (mean.size() == 0) mean = models::default_estimate_point(v);
  if (start.size() == 0) start = models::default_start(v);
  if (std.size() == 0) {
    const UncertainInput u = models::default_uncertainty(v, models::default_estimate_point(v));
    std = u.std;
  }
  if (trunc.size() == 0) {
    const UncertainInput u = models::default_uncertainty(v, models::default_estimate_point(v));
    trunc = u.trunc;
  }
  if (mean.size() != d || start.size() != d || std.size() != d || trunc.size() != d)
    throw ConfigError("parameter vector length does not match variant dimension");
}

void RunConfig::validate() const {
  variant_enum();
  if (!(a_mm > 0 && b_mm > 0)) throw ConfigError("waveguide dimensions must be positive");
  if (base_elements < 4) throw ConfigError("base_elements must be at least 4");
  if ((std.array() <= 0).any() || (trunc.array() <= 0).any())
    throw ConfigError("std and trunc must be strictly positive");
  if (!(threshold_db < 0)) throw ConfigError("threshold_db must be negative");
  if (!(freq_hi_ghz > freq_lo_ghz) || num_freqs < 1) throw ConfigError("invalid frequency band");
  if (budget < 1) throw ConfigError("budget must be >= 1");
  if (!(safety >= 1.0)) throw ConfigError("safety factor must be >= 1");
  if (n_mc < 1) throw ConfigError("n_mc must be >= 1");
  if (n_cal < 2) throw ConfigError("n_cal must be >= 2");
  if ((effort_weights.array() <= 0).any()) throw ConfigError("effort weights must be positive");
  if (evaluator != "hybrid" && evaluator != "closed_form" && evaluator != "mc_fine")
    throw ConfigError("unknown evaluator: " + evaluator);
  if (!(gradcheck_delta > 0) || !(gradcheck_eta > 0) || gradcheck_schedule.empty())
    throw ConfigError("invalid gradient-check settings");
  try {
    newton.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

estimator::PerfSpec RunConfig::perf_spec() const {
  estimator::PerfSpec s;
  s.threshold_db = threshold_db;
  s.omegas.resize(num_freqs);
  for (int j = 0; j < num_freqs; ++j) {
    const double f =
        num_freqs == 1 ? freq_lo_ghz
                       : freq_lo_ghz + (freq_hi_ghz - freq_lo_ghz) * j / (num_freqs - 1);
    s.omegas[j] = 2.0 * M_PI * f * 1e9;
  }
  return s;
}

estimator::EffortWeights RunConfig::weights() const {
  estimator::EffortWeights w;
  w.w = {effort_weights[0], effort_weights[1], effort_weights[2]};
  return w;
}

UncertainInput RunConfig::uncertainty(const Eigen::VectorXd& about) const {
  UncertainInput u;
  u.mean = about;
  u.std = std;
  u.trunc = trunc;
  u.validate();
  return u;
}

namespace {

Eigen::VectorXd parse_vector(const std::string& s) {
  std::vector<double> vals;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.find_first_not_of(" \t") == std::string::npos) continue;
    vals.push_back(std::stod(tok));
  }
  Eigen::VectorXd v(vals.size());
  for (size_t i = 0; i < vals.size(); ++i) v[i] = vals[i];
  return v;
}

std::vector<long> parse_longs(const std::string& s) {
  std::vector<long> vals;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) vals.push_back(std::stol(tok));
  return vals;
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("invalid boolean value: " + s);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  RunConfig c;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    try {
      if (key == "variant") c.variant = val;
      else if (key == "a_mm") c.a_mm = std::stod(val);
      else if (key == "b_mm") c.b_mm = std::stod(val);
      else if (key == "base_elements") c.base_elements = std::stoi(val);
      else if (key == "mean") c.mean = parse_vector(val);
      else if (key == "start") c.start = parse_vector(val);
      else if (key == "std") c.std = parse_vector(val);
      else if (key == "trunc") c.trunc = parse_vector(val);
      else if (key == "threshold_db") c.threshold_db = std::stod(val);
      else if (key == "freq_lo_ghz") c.freq_lo_ghz = std::stod(val);
      else if (key == "freq_hi_ghz") c.freq_hi_ghz = std::stod(val);
      else if (key == "num_freqs") c.num_freqs = std::stoi(val);
      else if (key == "budget") c.budget = std::stoi(val);
      else if (key == "safety") c.safety = std::stod(val);
      else if (key == "calibrate") c.calibrate = parse_bool(val);
      else if (key == "n_cal") c.n_cal = std::stoi(val);
      else if (key == "n_mc") c.n_mc = std::stol(val);
      else if (key == "seed_sample") c.seed_sample = std::stoull(val);
      else if (key == "seed_calibration") c.seed_calibration = std::stoull(val);
      else if (key == "effort_weights") {
        const Eigen::VectorXd w = parse_vector(val);
        if (w.size() != 3) throw ConfigError("effort_weights needs three entries");
        c.effort_weights = w;
      } else if (key == "beta") c.newton.beta = std::stod(val);
      else if (key == "gamma") c.newton.gamma = std::stod(val);
      else if (key == "phi1") c.newton.phi1 = std::stod(val);
      else if (key == "phi2") c.newton.phi2 = std::stod(val);
      else if (key == "q") c.newton.q = std::stod(val);
      else if (key == "max_backsteps") c.newton.max_backsteps = std::stoi(val);
      else if (key == "sigma_y_max") c.newton.sigma_y_max = std::stod(val);
      else if (key == "n_start") c.newton.n_start = std::stol(val);
      else if (key == "inc") c.newton.inc = std::stoi(val);
      else if (key == "grad_tol") c.newton.grad_tol = std::stod(val);
      else if (key == "step_tol") c.newton.step_tol = std::stod(val);
      else if (key == "max_iterations") c.newton.max_iterations = std::stoi(val);
      else if (key == "evaluator") c.evaluator = val;
      else if (key == "rebuild_surrogate") c.rebuild_surrogate = parse_bool(val);
      else if (key == "gradcheck_delta") c.gradcheck_delta = std::stod(val);
      else if (key == "gradcheck_eta") c.gradcheck_eta = std::stod(val);
      else if (key == "gradcheck_schedule") c.gradcheck_schedule = parse_longs(val);
      else throw ConfigError("unknown key: " + key);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError("line " + std::to_string(lineno) + " (" + key + "): " + e.what());
    }
  }
  c.resolve_defaults();
  c.validate();
  return c;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_config_text(buf.str());
}

std::string config_json(const RunConfig& c) {
  nlohmann::json j;
  auto vec = [](const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  j["variant"] = c.variant;
  j["a_mm"] = c.a_mm;
  j["b_mm"] = c.b_mm;
  j["base_elements"] = c.base_elements;
  j["mean"] = vec(c.mean);
  j["start"] = vec(c.start);
  j["std"] = vec(c.std);
  j["trunc"] = vec(c.trunc);
  j["threshold_db"] = c.threshold_db;
  j["freq_lo_ghz"] = c.freq_lo_ghz;
  j["freq_hi_ghz"] = c.freq_hi_ghz;
  j["num_freqs"] = c.num_freqs;
  j["budget"] = c.budget;
  j["safety"] = c.safety;
  j["calibrate"] = c.calibrate;
  j["n_cal"] = c.n_cal;
  j["n_mc"] = c.n_mc;
  j["seed_sample"] = c.seed_sample;
  j["seed_calibration"] = c.seed_calibration;
  j["effort_weights"] = {c.effort_weights[0], c.effort_weights[1], c.effort_weights[2]};
  j["newton"] = {{"beta", c.newton.beta},
                 {"gamma", c.newton.gamma},
                 {"phi1", c.newton.phi1},
                 {"phi2", c.newton.phi2},
                 {"q", c.newton.q},
                 {"max_backsteps", c.newton.max_backsteps},
                 {"sigma_y_max", c.newton.sigma_y_max},
                 {"n_start", c.newton.n_start},
                 {"inc", c.newton.inc},
                 {"grad_tol", c.newton.grad_tol},
                 {"step_tol", c.newton.step_tol},
                 {"max_iterations", c.newton.max_iterations}};
  j["evaluator"] = c.evaluator;
  j["rebuild_surrogate"] = c.rebuild_surrogate;
  j["gradcheck_delta"] = c.gradcheck_delta;
  j["gradcheck_eta"] = c.gradcheck_eta;
  j["gradcheck_schedule"] = c.gradcheck_schedule;
  return j.dump(2);
}

}  // namespace yieldopt::cli
