#include "yieldopt/waveguide.hpp"

#include <Eigen/SparseLU>
#include <cmath>
#include <stdexcept>

namespace yieldopt::waveguide {

namespace {
constexpr Complex kJ{0.0, 1.0};
}

Complex Dispersive12::eps_r(double omega) const {
  const double tau = 1.0 / omega0;
  return p5 + (p3 - p5) / (1.0 + kJ * omega * p6 * tau) +
         (p4 - p5) / (1.0 + kJ * omega * p7 * tau);
}

Complex Dispersive12::mu_r(double omega) const {
  const double tau = 1.0 / omega0;
  return p10 + (p8 - p10) / (1.0 + kJ * omega * p11 * tau) +
         (p9 - p10) / (1.0 + kJ * omega * p12 * tau);
}

Complex Dispersive4::eps_r(double omega) const {
  return 1.0 + p13 + (1.0 - p13) / (1.0 + kJ * omega / (2.0 * M_PI * 5e9));
}

Complex Dispersive4::mu_r(double omega) const {
  return 1.0 + p14 + (2.0 - p14) / (1.0 + kJ * omega / (1.1 * 2.0 * M_PI * 20e9));
}

std::pair<Complex, Complex> eps_mu(const Material& m, double omega) {
  if (!(omega > 0)) throw std::invalid_argument("eps_mu: omega must be positive");
  return std::visit(
      [omega](const auto& mat) { return std::pair<Complex, Complex>{mat.eps_r(omega), mat.mu_r(omega)}; },
      m);
}

void Geometry::validate(double omega) const {
  if (!(a_mm > 0) || !(b_mm > 0)) throw std::domain_error("Geometry: a, b must be positive");
  if (inlay_mm < 0 || !(offset_mm > 0))
    throw std::domain_error("Geometry: inlay length must be >= 0 and offset > 0");
  const double a = a_mm * 1e-3;
  const double k2 = omega * omega * kMu0 * kEps0 - std::pow(M_PI / a, 2);
  if (!(k2 > 0)) throw std::domain_error("Geometry: operating frequency at or below TE10 cutoff");
}

Complex kz(double omega, double a_m, Complex eps_r, Complex mu_r) {
  const Complex k2 = omega * omega * kMu0 * kEps0 * eps_r * mu_r - std::pow(M_PI / a_m, 2);
  Complex k = std::sqrt(k2);
  if (k.imag() > 0) k = -k;
  return k;
}

LayerCounts LayerCounts::allocate(const Geometry& g, int base_elements) {
  if (base_elements < 4) throw std::invalid_argument("LayerCounts: need at least 4 base elements");
  LayerCounts c;
  if (g.inlay_mm <= 0) {
    c.inlay = 0;
    c.offset = base_elements / 2;
    return c;
  }
  const double L = g.length_mm();
  int ni = static_cast<int>(std::llround(base_elements * g.inlay_mm / L));
  ni = std::max(1, std::min(base_elements - 2, ni));
  if ((base_elements - ni) % 2 != 0) ++ni;
  c.inlay = ni;
  c.offset = (base_elements - ni) / 2;
  return c;
}

Mesh1D Mesh1D::base_mesh(const Geometry& g, const LayerCounts& counts) {
  Mesh1D m;
  m.level = 0;
  m.base = counts;
  m.interface_lo_mm = g.offset_mm;
  m.interface_hi_mm = g.offset_mm + g.inlay_mm;
  const int ne = counts.total();
  m.nodes_mm.resize(ne + 1);
  int k = 0;
  auto fill = [&](double z0, double z1, int n) {
    for (int i = 0; i < n; ++i) m.nodes_mm[k++] = z0 + (z1 - z0) * i / n;
  };
  fill(0.0, g.offset_mm, counts.offset);
  fill(g.offset_mm, g.offset_mm + g.inlay_mm, counts.inlay);
  fill(g.offset_mm + g.inlay_mm, g.length_mm(), counts.offset);
  m.nodes_mm[k] = g.length_mm();
  return m;
}

Mesh1D Mesh1D::base_mesh(const Geometry& g, int base_elements) {
  return base_mesh(g, LayerCounts::allocate(g, base_elements));
}

double Mesh1D::dof_coord_m(int k) const {
  if (k % 2 == 0) return nodes_mm[k / 2] * 1e-3;
  return 0.5 * (nodes_mm[k / 2] + nodes_mm[k / 2 + 1]) * 1e-3;
}

Mesh1D refine(const Mesh1D& mesh) {
  if (mesh.level >= 2) throw std::domain_error("refine: max refinement level reached");
  Mesh1D fine;
  fine.level = mesh.level + 1;
  fine.base = mesh.base;
  fine.interface_lo_mm = mesh.interface_lo_mm;
  fine.interface_hi_mm = mesh.interface_hi_mm;
  const int ne = mesh.element_count();
  fine.nodes_mm.resize(2 * ne + 1);
  for (int e = 0; e < ne; ++e) {
    fine.nodes_mm[2 * e] = mesh.nodes_mm[e];
    fine.nodes_mm[2 * e + 1] = 0.5 * (mesh.nodes_mm[e] + mesh.nodes_mm[e + 1]);
  }
  fine.nodes_mm[2 * ne] = mesh.nodes_mm[ne];
  return fine;
}

AssembledSystem assemble(const Geometry& g, const Material& m, double omega,
                         const Mesh1D& mesh, double e0) {
  g.validate(omega);
  const auto [eps_in, mu_in] = eps_mu(m, omega);
  const double a = g.a_mm * 1e-3;
  const double pa2 = std::pow(M_PI / a, 2);
  const double w2m0e0 = omega * omega * kMu0 * kEps0;

  const int ne = mesh.element_count();
  const int n = mesh.dof_count();

  // Reference quadratic Lagrange element matrices on [0, h]:
  //   stiffness (1/h) * Kref, mass h * Mref.
  static const double Kref[3][3] = {{7.0 / 3, -8.0 / 3, 1.0 / 3},
                                    {-8.0 / 3, 16.0 / 3, -8.0 / 3},
                                    {1.0 / 3, -8.0 / 3, 7.0 / 3}};
  static const double Mref[3][3] = {{4.0 / 30, 2.0 / 30, -1.0 / 30},
                                    {2.0 / 30, 16.0 / 30, 2.0 / 30},
                                    {-1.0 / 30, 2.0 / 30, 4.0 / 30}};

  std::vector<Eigen::Triplet<Complex>> trips;
  trips.reserve(9 * ne + 2);
  const double zlo = mesh.interface_lo_mm, zhi = mesh.interface_hi_mm;
  for (int e = 0; e < ne; ++e) {
    const double h = (mesh.nodes_mm[e + 1] - mesh.nodes_mm[e]) * 1e-3;
    const double zm = 0.5 * (mesh.nodes_mm[e] + mesh.nodes_mm[e + 1]);
    const bool inside = (zm > zlo && zm < zhi);
    const Complex er = inside ? eps_in : Complex(1.0);
    const Complex mr = inside ? mu_in : Complex(1.0);
    const Complex inv_mr = 1.0 / mr;
    const int base = 2 * e;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const Complex v = inv_mr * (Kref[i][j] / h + pa2 * Mref[i][j] * h) -
                          w2m0e0 * er * Mref[i][j] * h;
        trips.emplace_back(base + i, base + j, v);
      }
  }
  const Complex k0 = kz(omega, a);
  trips.emplace_back(0, 0, kJ * k0);
  trips.emplace_back(n - 1, n - 1, kJ * k0);

  AssembledSystem sys;
  sys.e0 = e0;
  sys.A.resize(n, n);
  sys.A.setFromTriplets(trips.begin(), trips.end());
  sys.f = Eigen::VectorXcd::Zero(n);
  sys.f[0] = 2.0 * kJ * k0 * e0;
  sys.q = Eigen::VectorXcd::Zero(n);
  sys.q[0] = 1.0 / e0;
  return sys;
}

PortSystemSolver::PortSystemSolver(const Geometry& g, const Material& m, double omega,
                                   const Mesh1D& mesh, double e0)
    : sys_(assemble(g, m, omega, mesh, e0)) {
  lu_.compute(sys_.A);
  if (lu_.info() != Eigen::Success)
    throw std::runtime_error("waveguide solve: singular or ill-posed system");
}

Eigen::VectorXcd PortSystemSolver::solve(const Eigen::VectorXcd& rhs) const {
  Eigen::VectorXcd x = lu_.solve(rhs);
  if (lu_.info() != Eigen::Success) throw std::runtime_error("waveguide solve failed");
  return x;
}

Eigen::VectorXcd PortSystemSolver::solve_primal() const { return solve(sys_.f); }

Eigen::VectorXcd PortSystemSolver::solve_dual() const {
  // A^T = A, hence A^H z = q  <=>  A conj(z) = conj(q).
  return solve(sys_.q.conjugate()).conjugate();
}

FEField solve_primal(const Geometry& g, const Material& m, double omega,
                     const Mesh1D& mesh, double e0) {
  PortSystemSolver fac(g, m, omega, mesh, e0);
  return FEField{fac.solve_primal(), mesh, omega, e0};
}

FEField solve_dual(const Geometry& g, const Material& m, double omega,
                   const Mesh1D& mesh, double e0) {
  PortSystemSolver fac(g, m, omega, mesh, e0);
  return FEField{fac.solve_dual(), mesh, omega, e0};
}

LevelSolve solve_level(const Geometry& g, const Material& m, double omega,
                       const Mesh1D& mesh, double e0) {
  PortSystemSolver fac(g, m, omega, mesh, e0);
  LevelSolve out;
  out.primal = FEField{fac.solve_primal(), mesh, omega, e0};
  out.dual = FEField{fac.solve_dual(), mesh, omega, e0};
  out.s = qoi_s(out.primal);
  return out;
}

Complex qoi_s(const FEField& field) {
  // Affine functional: q^H e minus the incident contribution q^H e_inc = 1.
  return field.dofs[0] / field.e0 - 1.0;
}

Eigen::VectorXcd inject(const Mesh1D& coarse, const Eigen::VectorXcd& dofs) {
  const int ne = coarse.element_count();
  if (dofs.size() != coarse.dof_count())
    throw std::invalid_argument("inject: dof count does not match mesh");
  Eigen::VectorXcd out(4 * ne + 1);
  for (int e = 0; e < ne; ++e) {
    const Complex a = dofs[2 * e], b = dofs[2 * e + 1], c = dofs[2 * e + 2];
    out[4 * e + 0] = a;
    out[4 * e + 1] = 0.375 * a + 0.75 * b - 0.125 * c;   // parent value at xi = -1/2
    out[4 * e + 2] = b;
    out[4 * e + 3] = -0.125 * a + 0.75 * b + 0.375 * c;  // parent value at xi = +1/2
  }
  out[4 * ne] = dofs[2 * ne];
  return out;
}

double fe_error_indicator(const Geometry& g, const Material& m, double omega,
                          const FEField& primal_at_h) {
  if (primal_at_h.mesh.level >= 2)
    throw std::domain_error("fe_error_indicator: indicator unavailable at max level");
  const Mesh1D fine = refine(primal_at_h.mesh);
  PortSystemSolver fac(g, m, omega, fine, primal_at_h.e0);
  const Eigen::VectorXcd z = fac.solve_dual();
  const Eigen::VectorXcd residual =
      fac.system().f - fac.system().A * inject(primal_at_h.mesh, primal_at_h.dofs);
  return std::abs(z.dot(residual));
}

PortWaves closed_form_waves(const Geometry& g, const Material& m, double omega) {
  g.validate(omega);
  const double a = g.a_mm * 1e-3;
  const Complex k0 = kz(omega, a);
  if (std::abs(k0) == 0.0) throw std::domain_error("closed_form: evaluation exactly at cutoff");
  const auto [eps_in, mu_in] = eps_mu(m, omega);

  // Transfer of (e, mu_r^{-1} e') across each homogeneous layer.
  Eigen::Matrix2cd M = Eigen::Matrix2cd::Identity();
  const double layers[3] = {g.offset_mm, g.inlay_mm, g.offset_mm};
  for (int i = 0; i < 3; ++i) {
    const double d = layers[i] * 1e-3;
    if (d <= 0) continue;
    const Complex er = (i == 1) ? eps_in : Complex(1.0);
    const Complex mr = (i == 1) ? mu_in : Complex(1.0);
    const Complex k = kz(omega, a, er, mr);
    const Complex cd = std::cos(k * d), sd = std::sin(k * d);
    Eigen::Matrix2cd Ml;
    Ml << cd, mr * sd / k, -k * sd / mr, cd;
    M = Ml * M;
  }
  const Complex rho = (k0 * k0 * M(0, 1) - kJ * k0 * M(1, 1)) /
                      (-kJ * k0 * M(0, 0) - M(1, 0));
  PortWaves w;
  w.s11 = (rho - 1.0) / (rho + 1.0);
  w.s21 = M(0, 0) * (1.0 + w.s11) - kJ * k0 * M(0, 1) * (1.0 - w.s11);
  return w;
}

Complex s11_closed_form(const Geometry& g, const Material& m, double omega) {
  return closed_form_waves(g, m, omega).s11;
}

}  // namespace yieldopt::waveguide
