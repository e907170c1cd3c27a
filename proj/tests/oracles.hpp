// Test-only reference computations, independent of the library code paths
// they check.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

namespace testoracle {

/// Standard deviation of the zero-mean normal truncated to [-t, t], by
/// Simpson quadrature of the truncated density.
inline double truncated_normal_std(double sigma, double t, int n = 20001) {
  if (n % 2 == 0) ++n;
  const double h = 2.0 * t / (n - 1);
  auto phi = [&](double x) { return std::exp(-0.5 * x * x / (sigma * sigma)); };
  double mass = 0.0, second = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = -t + i * h;
    const double w = (i == 0 || i == n - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    mass += w * phi(x);
    second += w * x * x * phi(x);
  }
  return std::sqrt(second / mass);
}

/// Brute-force weighted Leja argmax on a dense grid with the same
/// local-maxima/smallest-abscissa tie rule as the implementation.
inline double leja_bruteforce_next(const std::function<double(double)>& sqrt_weight,
                                   const std::vector<double>& nodes, double lo, double hi,
                                   int grid_points) {
  std::vector<double> vals(grid_points);
  const double dx = (hi - lo) / (grid_points - 1);
  double vmax = 0.0;
  for (int i = 0; i < grid_points; ++i) {
    const double x = lo + i * dx;
    double v = sqrt_weight(x);
    for (double t : nodes) v *= std::abs(x - t);
    vals[i] = v;
    if (v > vmax) vmax = v;
  }
  const double cutoff = vmax * (1.0 - 1e-5);
  for (int i = 0; i < grid_points; ++i) {
    const bool left_ok = (i == 0) || vals[i] >= vals[i - 1];
    const bool right_ok = (i == grid_points - 1) || vals[i] >= vals[i + 1];
    if (left_ok && right_ok && vals[i] >= cutoff) return lo + i * dx;
  }
  return lo;
}

/// Dense multivariate polynomial interpolation through the given nodes in the
/// monomial basis (naive route; small sets only).
inline std::complex<double> lagrange_eval(const std::vector<Eigen::VectorXd>& nodes,
                                          const std::vector<std::vector<int>>& exponents,
                                          const Eigen::VectorXcd& values,
                                          const Eigen::VectorXd& p) {
  const int n = static_cast<int>(nodes.size());
  Eigen::MatrixXcd V(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      double m = 1.0;
      for (size_t j = 0; j < exponents[c].size(); ++j)
        m *= std::pow(nodes[r][j], exponents[c][j]);
      V(r, c) = m;
    }
  const Eigen::VectorXcd coef = V.fullPivLu().solve(values);
  std::complex<double> acc = 0.0;
  for (int c = 0; c < n; ++c) {
    double m = 1.0;
    for (size_t j = 0; j < exponents[c].size(); ++j) m *= std::pow(p[j], exponents[c][j]);
    acc += coef[c] * m;
  }
  return acc;
}

}  // namespace testoracle
