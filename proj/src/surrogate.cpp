#include "yieldopt/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace yieldopt::surrogate {

double WeightSpec::sqrt_weight(double x) const {
  if (kind == Kind::Uniform) {
    if (x < lo || x > hi) return 0.0;
    return 1.0 / std::sqrt(hi - lo);
  }
  const double s2 = sigma * sigma;
  return std::pow(2.0 * M_PI * s2, -0.25) * std::exp(-x * x / (4.0 * s2));
}

namespace {

double leja_objective(const WeightSpec& w, const std::vector<double>& nodes, double x) {
  double v = w.sqrt_weight(x);
  for (double t : nodes) v *= std::abs(x - t);
  return v;
}

double golden_max(const WeightSpec& w, const std::vector<double>& nodes, double lo, double hi) {
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = leja_objective(w, nodes, c), fd = leja_objective(w, nodes, d);
  for (int it = 0; it < 200 && (b - a) > 1e-14 * std::max(1.0, std::abs(a) + std::abs(b)); ++it) {
    if (fc > fd) {
      b = d; d = c; fd = fc;
      c = b - gr * (b - a);
      fc = leja_objective(w, nodes, c);
    } else {
      a = c; c = d; fc = fd;
      d = a + gr * (b - a);
      fd = leja_objective(w, nodes, d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

double next_leja_node(const LejaSequence& seq) {
  const WeightSpec& w = seq.weight();
  const std::vector<double>& nodes = seq.nodes();
  const double lo = w.support_lo(), hi = w.support_hi();
  constexpr int kGrid = 10000;
  const double dx = (hi - lo) / (kGrid - 1);

  std::vector<double> vals(kGrid);
  for (int i = 0; i < kGrid; ++i) vals[i] = leja_objective(w, nodes, lo + i * dx);
  const double vmax = *std::max_element(vals.begin(), vals.end());
  if (!(vmax > 0)) throw std::runtime_error("next_leja_node: objective vanished on the grid");

  // Grid local maxima within a tie window of the global max; the smallest
  // abscissa among them wins. The window absorbs sampling error so symmetric
  // twin peaks resolve the same way on any grid density.
  const double cutoff = vmax * (1.0 - 1e-5);
  int pick = -1;
  for (int i = 0; i < kGrid; ++i) {
    const bool left_ok = (i == 0) || vals[i] >= vals[i - 1];
    const bool right_ok = (i == kGrid - 1) || vals[i] >= vals[i + 1];
    if (left_ok && right_ok && vals[i] >= cutoff) {
      pick = i;
      break;
    }
  }
  if (pick < 0) throw std::logic_error("next_leja_node: no candidate above cutoff");
  const double xl = std::max(lo, lo + pick * dx - dx);
  const double xr = std::min(hi, lo + pick * dx + dx);
  return golden_max(w, nodes, xl, xr);
}

double LejaSequence::node(int k) {
  while (static_cast<int>(nodes_.size()) <= k) nodes_.push_back(next_leja_node(*this));
  return nodes_[k];
}

void MultiIndexSet::insert(const MultiIndex& mi) {
  if (contains(mi)) throw std::logic_error("MultiIndexSet: duplicate index");
  for (size_t j = 0; j < mi.size(); ++j) {
    if (mi[j] < 0) throw std::invalid_argument("MultiIndexSet: negative index entry");
    if (mi[j] > 0) {
      MultiIndex pred = mi;
      --pred[j];
      if (!contains(pred))
        throw std::logic_error("MultiIndexSet: insertion would break downward closure");
    }
  }
  pos_[mi] = static_cast<int>(order_.size());
  order_.push_back(mi);
}

bool MultiIndexSet::downward_closed() const {
  for (const auto& mi : order_) {
    for (size_t j = 0; j < mi.size(); ++j) {
      if (mi[j] > 0) {
        MultiIndex pred = mi;
        --pred[j];
        if (!contains(pred)) return false;
      }
    }
  }
  return true;
}

std::vector<MultiIndex> MultiIndexSet::admissible_neighbors(const MultiIndex& mi) const {
  std::vector<MultiIndex> out;
  for (size_t j = 0; j < mi.size(); ++j) {
    MultiIndex fwd = mi;
    ++fwd[j];
    if (contains(fwd)) continue;
    bool ok = true;
    for (size_t k = 0; k < fwd.size() && ok; ++k) {
      if (fwd[k] > 0) {
        MultiIndex pred = fwd;
        --pred[k];
        ok = contains(pred);
      }
    }
    if (ok) out.push_back(std::move(fwd));
  }
  return out;
}

Eigen::VectorXd SparseSurrogate::standardize(const Eigen::VectorXd& p) const {
  if (p.size() != anchor_.size())
    throw std::invalid_argument("SparseSurrogate: parameter dimension mismatch");
  return (p - anchor_).cwiseQuotient(scale_);
}

Eigen::VectorXd SparseSurrogate::node_parameter(int i) const {
  const MultiIndex& mi = set_.at(i);
  Eigen::VectorXd p(dim());
  for (int j = 0; j < dim(); ++j) p[j] = anchor_[j] + scale_[j] * leja_[j][mi[j]];
  return p;
}

bool SparseSurrogate::in_box(const Eigen::VectorXd& p) const {
  const Eigen::VectorXd x = standardize(p);
  for (int j = 0; j < dim(); ++j) {
    const double tol = 1e-12 * std::max(1.0, std::abs(weights_[j].support_hi()));
    if (x[j] < weights_[j].support_lo() - tol || x[j] > weights_[j].support_hi() + tol)
      return false;
  }
  return true;
}

Eigen::VectorXd SparseSurrogate::basis_weights(const Eigen::VectorXd& p) const {
  const Eigen::VectorXd x = standardize(p);
  // Per-dimension Newton products B[j][k] = prod_{i<k} (x_j - t_i).
  std::vector<std::vector<double>> table(dim());
  for (int j = 0; j < dim(); ++j) {
    int maxo = 0;
    for (const auto& mi : set_.indices()) maxo = std::max(maxo, mi[j]);
    table[j].resize(maxo + 1);
    table[j][0] = 1.0;
    for (int k = 1; k <= maxo; ++k) table[j][k] = table[j][k - 1] * (x[j] - leja_[j][k - 1]);
  }
  Eigen::VectorXd w(set_.size());
  for (int i = 0; i < set_.size(); ++i) {
    const MultiIndex& mi = set_.at(i);
    double v = 1.0;
    for (int j = 0; j < dim(); ++j) v *= table[j][mi[j]];
    w[i] = v;
  }
  return w;
}

Complex SparseSurrogate::eval_qoi(const Eigen::VectorXd& p, int j) const {
  const Eigen::VectorXd w = basis_weights(p);
  Complex acc = 0.0;
  for (int i = 0; i < set_.size(); ++i) acc += w[i] * surplus_[i].qoi[j];
  return acc;
}

Eigen::VectorXcd SparseSurrogate::eval_primal(const Eigen::VectorXd& p, int j) const {
  const Eigen::VectorXd w = basis_weights(p);
  Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(surplus_[0].primal[j].size());
  for (int i = 0; i < set_.size(); ++i) acc += w[i] * surplus_[i].primal[j];
  return acc;
}

Eigen::VectorXcd SparseSurrogate::eval_dual(const Eigen::VectorXd& p, int j) const {
  const Eigen::VectorXd w = basis_weights(p);
  Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(surplus_[0].dual[j].size());
  for (int i = 0; i < set_.size(); ++i) acc += w[i] * surplus_[i].dual[j];
  return acc;
}

double SparseSurrogate::fe_error_surrogate(const Eigen::VectorXd& p, int j) const {
  const Eigen::VectorXd w = basis_weights(p);
  double acc = 0.0;
  for (int i = 0; i < set_.size(); ++i) acc += w[i] * surplus_[i].fe_error[j];
  return std::max(0.0, acc);
}

namespace {

struct Candidate {
  NodePayload payload;
  double score = 0.0;
};

NodePayload interpolant_at(const std::vector<NodePayload>& surplus,
                           const Eigen::VectorXd& weights, int nf) {
  NodePayload v;
  v.qoi = Eigen::VectorXcd::Zero(nf);
  v.fe_error = Eigen::VectorXd::Zero(nf);
  v.primal.resize(nf);
  v.dual.resize(nf);
  for (int j = 0; j < nf; ++j) {
    v.primal[j] = Eigen::VectorXcd::Zero(surplus[0].primal[j].size());
    v.dual[j] = Eigen::VectorXcd::Zero(surplus[0].dual[j].size());
  }
  for (int i = 0; i < weights.size(); ++i) {
    const double w = weights[i];
    if (w == 0.0) continue;
    v.qoi += w * surplus[i].qoi;
    v.fe_error += w * surplus[i].fe_error;
    for (int j = 0; j < nf; ++j) {
      v.primal[j] += w * surplus[i].primal[j];
      v.dual[j] += w * surplus[i].dual[j];
    }
  }
  return v;
}

}  // namespace

SparseSurrogate build_adaptive(CollocationModel& model, const Eigen::VectorXd& anchor,
                               const Eigen::VectorXd& half_width, int budget,
                               WeightSpec::Kind weight_kind,
                               const Eigen::VectorXd* gaussian_sigma) {
  if (budget < 1) throw std::invalid_argument("build_adaptive: budget must be >= 1");
  const int dim = static_cast<int>(anchor.size());
  if (half_width.size() != dim || (half_width.array() <= 0).any())
    throw std::invalid_argument("build_adaptive: invalid half widths");

  SparseSurrogate sur;
  sur.num_freqs_ = model.num_freqs();
  sur.anchor_ = anchor;
  sur.scale_ = half_width;
  sur.budget_ = budget;
  sur.weights_.resize(dim);
  std::vector<LejaSequence> seqs;
  seqs.reserve(dim);
  for (int j = 0; j < dim; ++j) {
    WeightSpec w;
    w.kind = weight_kind;
    if (weight_kind == WeightSpec::Kind::Gaussian)
      w.sigma = gaussian_sigma ? (*gaussian_sigma)[j] / half_width[j] : 1.0;
    sur.weights_[j] = w;
    seqs.emplace_back(w);
  }
  sur.leja_.assign(dim, {0.0});

  const int nf = sur.num_freqs_;
  auto node_param = [&](const MultiIndex& mi) {
    Eigen::VectorXd p(dim);
    for (int j = 0; j < dim; ++j) {
      seqs[j].node(mi[j]);
      while (sur.leja_[j].size() <= static_cast<size_t>(mi[j]))
        sur.leja_[j].push_back(seqs[j].nodes()[sur.leja_[j].size()]);
      p[j] = anchor[j] + half_width[j] * sur.leja_[j][mi[j]];
    }
    return p;
  };

  long evals = 0;
  std::map<MultiIndex, Candidate> pool;

  // Root node: surplus equals the model value.
  const MultiIndex root(dim, 0);
  sur.set_.insert(root);
  sur.surplus_.push_back(model.evaluate_node(node_param(root)));
  ++evals;

  auto admit = [&](const MultiIndex& mi, NodePayload payload) {
    const Eigen::VectorXd p = node_param(mi);
    const Eigen::VectorXd w = sur.basis_weights(p);
    NodePayload below = interpolant_at(sur.surplus_, w, nf);
    // Self-weight of the new index at its own node.
    double bself = 1.0;
    {
      Eigen::VectorXd x = (p - anchor).cwiseQuotient(half_width);
      for (int j = 0; j < dim; ++j)
        for (int k = 0; k < mi[j]; ++k) bself *= (x[j] - sur.leja_[j][k]);
    }
    NodePayload c;
    c.qoi = (payload.qoi - below.qoi) / bself;
    c.fe_error = (payload.fe_error - below.fe_error) / bself;
    c.primal.resize(nf);
    c.dual.resize(nf);
    for (int j = 0; j < nf; ++j) {
      c.primal[j] = (payload.primal[j] - below.primal[j]) / bself;
      c.dual[j] = (payload.dual[j] - below.dual[j]) / bself;
    }
    sur.set_.insert(mi);
    sur.surplus_.push_back(std::move(c));
  };

  auto spawn_candidates = [&](const MultiIndex& mi) {
    for (const MultiIndex& nb : sur.set_.admissible_neighbors(mi)) {
      if (pool.count(nb) || evals >= budget) continue;
      const Eigen::VectorXd p = node_param(nb);
      Candidate cand;
      cand.payload = model.evaluate_node(p);
      ++evals;
      // Score once: later admissions cannot change the interpolant at this
      // node (every index <= nb is already admitted).
      double score = 0.0;
      const Eigen::VectorXd w = sur.basis_weights(p);
      NodePayload tilde = interpolant_at(sur.surplus_, w, nf);
      for (int j = 0; j < nf; ++j)
        score = std::max(score, model.residual_indicator(p, j, tilde.primal[j], tilde.dual[j]));
      cand.score = score;
      pool.emplace(nb, std::move(cand));
    }
  };

  spawn_candidates(root);
  while (!pool.empty() && evals < budget) {
    auto best = pool.begin();
    for (auto it = std::next(pool.begin()); it != pool.end(); ++it)
      if (it->second.score > best->second.score) best = it;
    const MultiIndex mi = best->first;
    NodePayload payload = std::move(best->second.payload);
    pool.erase(best);
    admit(mi, std::move(payload));
    spawn_candidates(mi);
  }

  // Spend-through: every evaluated candidate joins the surrogate. Lexicographic
  // order is a linear extension of the componentwise partial order.
  double remaining = 0.0;
  for (auto& [mi, cand] : pool) remaining = std::max(remaining, cand.score);
  for (auto& [mi, cand] : pool) admit(mi, std::move(cand.payload));
  sur.achieved_indicator_ = remaining;

  const CollocationModel::NodeCost cost = model.cost_per_node();
  sur.build_calls_l0_ = evals * cost.level0;
  sur.build_calls_l1_ = evals * cost.level1;
  return sur;
}

double sc_error_indicator(const SparseSurrogate& sur, const CollocationModel& model,
                          const Eigen::VectorXd& p, int j) {
  return model.residual_indicator(p, j, sur.eval_primal(p, j), sur.eval_dual(p, j));
}

// ---------------------------------------------------------------------------
// Serialization: little-endian binary, magic "YOSG", version 1.

namespace {

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T get(std::istream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("surrogate load: truncated stream");
  return v;
}
void put_vec(std::ostream& os, const Eigen::VectorXd& v) {
  put<std::int64_t>(os, v.size());
  os.write(reinterpret_cast<const char*>(v.data()), sizeof(double) * v.size());
}
Eigen::VectorXd get_vec(std::istream& is) {
  const auto n = get<std::int64_t>(is);
  Eigen::VectorXd v(n);
  is.read(reinterpret_cast<char*>(v.data()), sizeof(double) * n);
  if (!is) throw std::runtime_error("surrogate load: truncated stream");
  return v;
}
void put_cvec(std::ostream& os, const Eigen::VectorXcd& v) {
  put<std::int64_t>(os, v.size());
  os.write(reinterpret_cast<const char*>(v.data()), sizeof(Complex) * v.size());
}
Eigen::VectorXcd get_cvec(std::istream& is) {
  const auto n = get<std::int64_t>(is);
  Eigen::VectorXcd v(n);
  is.read(reinterpret_cast<char*>(v.data()), sizeof(Complex) * n);
  if (!is) throw std::runtime_error("surrogate load: truncated stream");
  return v;
}

}  // namespace

void SparseSurrogate::save(std::ostream& os) const {
  os.write("YOSG", 4);
  put<std::uint32_t>(os, 1u);
  put<std::int32_t>(os, dim());
  put<std::int32_t>(os, num_freqs_);
  put<std::int32_t>(os, set_.size());
  put<std::int32_t>(os, budget_);
  put<double>(os, achieved_indicator_);
  put<std::int64_t>(os, build_calls_l0_);
  put<std::int64_t>(os, build_calls_l1_);
  put_vec(os, anchor_);
  put_vec(os, scale_);
  for (const auto& w : weights_) {
    put<std::uint8_t>(os, w.kind == WeightSpec::Kind::Uniform ? 0 : 1);
    put<double>(os, w.lo);
    put<double>(os, w.hi);
    put<double>(os, w.sigma);
  }
  for (const auto& nodes : leja_) {
    put<std::int64_t>(os, static_cast<std::int64_t>(nodes.size()));
    os.write(reinterpret_cast<const char*>(nodes.data()), sizeof(double) * nodes.size());
  }
  for (const auto& mi : set_.indices())
    for (int v : mi) put<std::int32_t>(os, v);
  for (const auto& s : surplus_) {
    put_cvec(os, s.qoi);
    put_vec(os, s.fe_error);
    for (int j = 0; j < num_freqs_; ++j) put_cvec(os, s.primal[j]);
    for (int j = 0; j < num_freqs_; ++j) put_cvec(os, s.dual[j]);
  }
}

SparseSurrogate SparseSurrogate::load(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "YOSG", 4) != 0)
    throw std::runtime_error("surrogate load: bad magic");
  if (get<std::uint32_t>(is) != 1u) throw std::runtime_error("surrogate load: unknown version");
  SparseSurrogate sur;
  const int dim = get<std::int32_t>(is);
  sur.num_freqs_ = get<std::int32_t>(is);
  const int count = get<std::int32_t>(is);
  sur.budget_ = get<std::int32_t>(is);
  sur.achieved_indicator_ = get<double>(is);
  sur.build_calls_l0_ = get<std::int64_t>(is);
  sur.build_calls_l1_ = get<std::int64_t>(is);
  sur.anchor_ = get_vec(is);
  sur.scale_ = get_vec(is);
  sur.weights_.resize(dim);
  for (auto& w : sur.weights_) {
    w.kind = get<std::uint8_t>(is) == 0 ? WeightSpec::Kind::Uniform : WeightSpec::Kind::Gaussian;
    w.lo = get<double>(is);
    w.hi = get<double>(is);
    w.sigma = get<double>(is);
  }
  sur.leja_.resize(dim);
  for (auto& nodes : sur.leja_) {
    nodes.resize(get<std::int64_t>(is));
    is.read(reinterpret_cast<char*>(nodes.data()), sizeof(double) * nodes.size());
  }
  for (int i = 0; i < count; ++i) {
    MultiIndex mi(dim);
    for (int j = 0; j < dim; ++j) mi[j] = get<std::int32_t>(is);
    sur.set_.insert(mi);
  }
  sur.surplus_.resize(count);
  for (auto& s : sur.surplus_) {
    s.qoi = get_cvec(is);
    s.fe_error = get_vec(is);
    s.primal.resize(sur.num_freqs_);
    s.dual.resize(sur.num_freqs_);
    for (int j = 0; j < sur.num_freqs_; ++j) s.primal[j] = get_cvec(is);
    for (int j = 0; j < sur.num_freqs_; ++j) s.dual[j] = get_cvec(is);
  }
  if (!is) throw std::runtime_error("surrogate load: truncated stream");
  return sur;
}

void SparseSurrogate::save_file(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("surrogate save: cannot open " + path);
  save(os);
}

SparseSurrogate SparseSurrogate::load_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("surrogate load: cannot open " + path);
  return load(is);
}

}  // namespace yieldopt::surrogate
