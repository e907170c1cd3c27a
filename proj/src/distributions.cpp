#include "yieldopt/distributions.hpp"

#include <cmath>
#include <stdexcept>

namespace yieldopt {

void UncertainInput::validate() const {
  const Eigen::Index n = mean.size();
  if (std.size() != n || trunc.size() != n)
    throw std::invalid_argument("UncertainInput: mean/std/trunc length mismatch");
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!(std[j] > 0.0)) throw std::invalid_argument("UncertainInput: std must be > 0");
    if (!(trunc[j] > 0.0)) throw std::invalid_argument("UncertainInput: trunc must be > 0");
  }
}

namespace {

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Uniform in the open interval (0, 1) from the counter (seed, i, j).
double uniform01(std::uint64_t seed, std::uint64_t i, std::uint64_t j) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ mix64(i + 1));
  h = mix64(h ^ mix64(j + 1));
  return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  // Wichura (1988), algorithm AS 241, routine PPND16.
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("normal_quantile: p must be in (0,1)");
  static constexpr double a[8] = {
      3.3871328727963666080e0,  1.3314166789178437745e2, 1.9715909503065514427e3,
      1.3731693765509461125e4,  4.5921953931549871457e4, 6.7265770927008700853e4,
      3.3430575583588128105e4,  2.5090809287301226727e3};
  static constexpr double b[8] = {
      1.0,                      4.2313330701600911252e1, 6.8718700749205790830e2,
      5.3941960214247511077e3,  2.1213794301586595867e4, 3.9307895800092710610e4,
      2.8729085735721942674e4,  5.2264952788528545610e3};
  static constexpr double c[8] = {
      1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
      3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4};
  static constexpr double d[8] = {
      1.0,                      2.05319162663775882187e0, 1.67638483018380384940e0,
      6.89767334985100004550e-1, 1.48103976427480074590e-1, 1.51986665636164571966e-2,
      5.47593808499534494600e-4, 1.05075007164441684324e-9};
  static constexpr double e[8] = {
      6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
      2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7};
  static constexpr double f[8] = {
      1.0,                      5.99832206555887937690e-1, 1.36929880922735805310e-1,
      1.48753612908506148525e-2, 7.86869131145613259100e-4, 1.84631831751005468180e-5,
      1.42151175831644588870e-7, 2.04426310338993978564e-15};
  auto horner = [](const double (&k)[8], double x) {
    double r = k[7];
    for (int i = 6; i >= 0; --i) r = r * x + k[i];
    return r;
  };
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q * horner(a, r) / horner(b, r);
  }
  double r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double x;
  if (r <= 5.0) {
    r -= 1.6;
    x = horner(c, r) / horner(d, r);
  } else {
    r -= 5.0;
    x = horner(e, r) / horner(f, r);
  }
  return (q < 0.0) ? -x : x;
}

SampleSet draw_offsets(const UncertainInput& input, Eigen::Index n, std::uint64_t seed) {
  input.validate();
  if (n < 0) throw std::invalid_argument("draw_offsets: n must be >= 0");
  const Eigen::Index d = input.dim();
  SampleSet s;
  s.seed = seed;
  s.offsets.resize(n, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double sigma = input.std[j];
    const double t = input.trunc[j];
    // Map the uniform into [Phi(-t/sigma), Phi(t/sigma)] before inverting, so
    // the truncation bound holds by construction.
    const double plo = normal_cdf(-t / sigma);
    const double phi = normal_cdf(t / sigma);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double u = uniform01(seed, static_cast<std::uint64_t>(i),
                                 static_cast<std::uint64_t>(j));
      double xi = sigma * normal_quantile(plo + u * (phi - plo));
      if (xi > t) xi = t;
      if (xi < -t) xi = -t;
      s.offsets(i, j) = xi;
    }
  }
  return s;
}

SampleSet extend_offsets(const UncertainInput& input, const SampleSet& s, Eigen::Index n_new) {
  if (n_new < s.count()) throw std::invalid_argument("extend_offsets: n_new smaller than current count");
  SampleSet grown = draw_offsets(input, n_new, s.seed);
  grown.offsets.topRows(s.count()) = s.offsets;
  return grown;
}

Eigen::MatrixXd realize(const SampleSet& s, const Eigen::VectorXd& mean) {
  if (mean.size() != s.dim())
    throw std::invalid_argument("realize: mean length does not match sample dimension");
  return s.offsets.rowwise() + mean.transpose();
}

double pdf(const UncertainInput& input, const Eigen::VectorXd& p) {
  input.validate();
  if (p.size() != input.dim())
    throw std::invalid_argument("pdf: parameter length mismatch");
  const Eigen::Index d = input.dim();
  double logdet = 0.0, quad = 0.0;
  for (Eigen::Index j = 0; j < d; ++j) {
    const double s2 = input.std[j] * input.std[j];
    logdet += std::log(s2);
    const double r = p[j] - input.mean[j];
    quad += r * r / s2;
  }
  const double log2pi = std::log(2.0 * M_PI);
  return std::exp(-0.5 * (d * log2pi + logdet + quad));
}

}  // namespace yieldopt
