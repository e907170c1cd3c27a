#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <complex>
#include <variant>

namespace yieldopt::waveguide {

using Complex = std::complex<double>;

inline constexpr double kSpeedOfLight = 299792458.0;       // m/s
inline constexpr double kMu0 = 4.0e-7 * M_PI;              // H/m
inline constexpr double kEps0 = 1.0 / (kMu0 * kSpeedOfLight * kSpeedOfLight);

/// Debye-type dispersive inlay material with ten coefficients (twelve-parameter
/// problem variant; p3..p12 in the design vector).
struct Dispersive12 {
  double p3 = 0, p4 = 0, p5 = 0, p6 = 0, p7 = 0;       // permittivity coefficients
  double p8 = 0, p9 = 0, p10 = 0, p11 = 0, p12 = 0;    // permeability coefficients
  static constexpr double omega0 = 2.0 * M_PI * 20e9;  // rad/s
  Complex eps_r(double omega) const;
  Complex mu_r(double omega) const;
};

/// Two-coefficient inlay material (four-parameter problem variant; p13, p14).
struct Dispersive4 {
  double p13 = 0, p14 = 0;
  Complex eps_r(double omega) const;
  Complex mu_r(double omega) const;
};

using Material = std::variant<Dispersive12, Dispersive4>;

/// Evaluates (eps_r, mu_r) of the inlay at angular frequency omega.
std::pair<Complex, Complex> eps_mu(const Material& m, double omega);

/// Rectangular waveguide with a dielectric inset: vacuum offset of length
/// offset_mm on both sides of an inlay of length inlay_mm. All lengths in mm.
struct Geometry {
  double a_mm = 30.0;    // width
  double b_mm = 15.0;    // height
  double inlay_mm = 0;   // p1
  double offset_mm = 0;  // p2

  double length_mm() const { return inlay_mm + 2.0 * offset_mm; }
  void validate(double omega) const;  // also checks omega is above the TE10 cutoff
};

/// TE10 propagation constant sqrt(omega^2 mu0 eps0 eps_r mu_r - (pi/a)^2),
/// principal branch flipped so that Im k <= 0 (decay of e^{-jkz} waves).
Complex kz(double omega, double a_m, Complex eps_r = 1.0, Complex mu_r = 1.0);

/// Per-layer element counts of the level-0 mesh: (offset, inlay, offset).
/// Proportional allocation of `base_elements` with the two offsets equal, so
/// interfaces always land on element boundaries.
struct LayerCounts {
  int offset = 0, inlay = 0;
  int total() const { return 2 * offset + inlay; }
  static LayerCounts allocate(const Geometry& g, int base_elements = 64);
};

/// Nested 1D mesh over [0, L]. `nodes_mm` holds element boundaries, always
/// including the two material interfaces. Levels 0..2 mean h, h/2, h/4.
struct Mesh1D {
  int level = 0;
  LayerCounts base;               // level-0 per-layer counts
  Eigen::VectorXd nodes_mm;       // element boundaries, sorted
  double interface_lo_mm = 0, interface_hi_mm = 0;

  int element_count() const { return static_cast<int>(nodes_mm.size()) - 1; }
  int dof_count() const { return 2 * element_count() + 1; }  // quadratic nodal basis
  /// z-coordinate (meters) of global dof k (vertices and edge midpoints).
  double dof_coord_m(int k) const;

  static Mesh1D base_mesh(const Geometry& g, const LayerCounts& counts);
  static Mesh1D base_mesh(const Geometry& g, int base_elements = 64);
};

/// Nested bisection; level increases by one. Throws at level 2.
Mesh1D refine(const Mesh1D& mesh);

/// Discrete field (primal or dual) on a mesh at one angular frequency.
struct FEField {
  Eigen::VectorXcd dofs;
  Mesh1D mesh;
  double omega = 0;
  double e0 = 1.0;  // excitation amplitude the solve used
};

/// Assembled port-terminated system A e = f with the S-parameter extraction
/// vector q (S_h = q^H e - q^H e_inc = e(0)/E0 - 1).
struct AssembledSystem {
  Eigen::SparseMatrix<Complex> A;
  Eigen::VectorXcd f;
  Eigen::VectorXcd q;
  double e0 = 1.0;
};

AssembledSystem assemble(const Geometry& g, const Material& m, double omega,
                         const Mesh1D& mesh, double e0 = 1.0);

/// One assembled and factorized port system; primal and dual share the
/// factorization (A is complex symmetric, so A^H z = q solves via conjugation).
class PortSystemSolver {
 public:
  PortSystemSolver(const Geometry& g, const Material& m, double omega,
                   const Mesh1D& mesh, double e0 = 1.0);
  const AssembledSystem& system() const { return sys_; }
  Eigen::VectorXcd solve_primal() const;
  Eigen::VectorXcd solve_dual() const;
  Eigen::VectorXcd solve(const Eigen::VectorXcd& rhs) const;

 private:
  AssembledSystem sys_;
  Eigen::SparseLU<Eigen::SparseMatrix<Complex>> lu_;
};

/// Solves the 1D TE10 reduction of the curl-curl problem with waveguide-port
/// boundary terms. Throws on a singular system.
FEField solve_primal(const Geometry& g, const Material& m, double omega,
                     const Mesh1D& mesh, double e0 = 1.0);

/// Solves A^H z = q (dual problem). A is complex symmetric, so the primal
/// factorization is reused through conjugation.
FEField solve_dual(const Geometry& g, const Material& m, double omega,
                   const Mesh1D& mesh, double e0 = 1.0);

/// Primal and dual from one factorization (what the escalation ladder uses).
struct LevelSolve {
  FEField primal;
  FEField dual;
  Complex s;  // qoi of the primal
};
LevelSolve solve_level(const Geometry& g, const Material& m, double omega,
                       const Mesh1D& mesh, double e0 = 1.0);

/// Fundamental-mode reflection coefficient extracted from a primal solve.
Complex qoi_s(const FEField& field);

/// Embeds a coarse-mesh dof vector into the once-refined mesh. Exact for the
/// quadratic basis (children span the parent polynomial).
Eigen::VectorXcd inject(const Mesh1D& coarse, const Eigen::VectorXcd& dofs);

/// Dual-weighted residual estimate of the QoI error of `primal_at_h`:
/// |<z_{h/2}, f_{h/2} - A_{h/2} P u_h>| with the dual solved one level finer.
/// Throws when the field is already at the maximum level.
double fe_error_indicator(const Geometry& g, const Material& m, double omega,
                          const FEField& primal_at_h);

/// Port reflection and transmission from 2x2 wave-amplitude transfer matrices
/// across the three layers (closed-form reference).
struct PortWaves {
  Complex s11;
  Complex s21;
};
PortWaves closed_form_waves(const Geometry& g, const Material& m, double omega);
Complex s11_closed_form(const Geometry& g, const Material& m, double omega);

}  // namespace yieldopt::waveguide
