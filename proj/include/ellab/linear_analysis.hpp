/// @file linear_analysis.hpp
/// @brief Principal symbols, Schur reduction, generalized Stokes symbol,
/// Lopatinskii-Shapiro determinant and the equilibrium spectrum of the
/// discrete linearization. Symbol algebra is dimension generic (n = 2 or 3).
///
/// Unknown ordering in every symbol and ODE system: (u_1..u_n, theta, d_1..d_n).
#pragma once

#include <complex>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "ellab/simulator.hpp"
#include "ellab/thermo_model.hpp"

namespace ellab {

using cplx = std::complex<double>;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

struct FrozenCoefficients {
  int n = 2;
  double rho = 1, kappa = 1, alpha = 1, gamma = 1, lambda = 1, lambda1 = 0, b = 0, theta0 = 1;
  double tau0 = 0;  // frozen tau, used for the lambda + 2 tau lambda1 > 0 check
  RVec d0;          // unit vector
  RMat grad_d0;     // grad_d0(a, j) = d_a d0_j, so a(xi) = grad_d0^T xi
  double mu_s = 1, mu_V = 0, mu_D = 0, mu_P = 0, mu_L = 0, mu_0 = 0;
  /// Sign of the b a(xi) coupling entries: +1 for the parabolic symbol form,
  /// -1 for the form carried by the pressure symbol.
  double coupling_sign = 1.0;

  static FrozenCoefficients isotropic(int n);  // all of rho..theta0, mu_s = 1; d0 = e_1
  static FrozenCoefficients from_model(const CoefficientSet& c, const FreeEnergyModel& m, double theta, double tau,
                                       const RVec& d0, const RMat& grad_d0);
  /// Throws ErrorKind::Model naming the first violated requirement.
  void validate() const;
};

struct SymbolBlocks {
  CMat M_u;
  cplx m_theta;
  cplx m_d;
  CMat M_d;
  RMat R0, R1, R, R_mu;
  RVec a;
};

SymbolBlocks symbol_blocks(const FrozenCoefficients& fc, cplx z, const RVec& xi);
/// Parabolic symbol L(z, i xi) of size 2n+1. xi may be complex (polynomial
/// continuation, no conjugation), which the half-line ODE needs.
CMat symbol_L(const FrozenCoefficients& fc, cplx z, const CVec& xi);
CMat symbol_L(const FrozenCoefficients& fc, cplx z, const RVec& xi);
/// Full symbol with pressure, size 2n+2, ordering (u, pi, theta, d).
CMat symbol_L_pi(const FrozenCoefficients& fc, cplx z, const RVec& xi);

/// Largest |z| / |xi|^2 over roots of det L(z, xi) = 0, sampled over
/// `directions` unit vectors: the effective diffusivity bounding explicit steps.
double max_diffusivity(const FrozenCoefficients& fc, int directions = 8);

struct AccretivityResult {
  double lhs = 0;         // Re (L v | J v), J = diag(I, 1/theta0, z I)
  double re_z_part = 0;   // Re z (|u|^2 + |theta|^2 + |xi|^2 |d|^2)
  double xi_part = 0;     // |xi|^2 (|u|^2 + |theta|^2)
  double coupling_part = 0;  // (2 gamma |z| |d| - |R_mu u|)^2
  double bound() const { return re_z_part + xi_part + coupling_part; }
};
AccretivityResult accretivity(const FrozenCoefficients& fc, cplx z, const RVec& xi, const CVec& v);

struct SchurResult {
  cplx theta, delta, det;
  CVec d;
};
/// Solves the (theta, d) block for given right-hand sides and velocity. Throws
/// ErrorKind::Singular when |det| < 1e-14 * scale.
SchurResult schur_theta_d(const FrozenCoefficients& fc, cplx z, const RVec& xi, cplx f_theta, const CVec& f_d,
                          const CVec& u);

struct StokesResult {
  CMat M;
  double margin = 0;  // lambda_min(Herm M) - (rho Re z + mu_s |xi|^2)
};
StokesResult stokes_symbol(const FrozenCoefficients& fc, cplx z, const RVec& xi);

enum class StableBasis { Schur, Eigenvectors };

struct LopatinskiiResult {
  cplx value;               // normalized determinant
  int stable_dim = 0;
  std::vector<cplx> exponents;  // all 2(2n+1) exponents mu of e^{mu y}
};
/// Boundary determinant of L(z, xi_t + nu (-i d/dy)) v = 0 on y > 0 with
/// u(0) = 0, theta'(0) = 0, d'(0) = 0, on the decaying solution space.
LopatinskiiResult lopatinskii_determinant(const FrozenCoefficients& fc, cplx z, const RVec& xi_t, const RVec& nu,
                                          StableBasis basis = StableBasis::Schur);

// ---------------------------------------------------------------------------
// Discrete equilibrium spectrum.
// ---------------------------------------------------------------------------

struct Linearization {
  RMat A;        // Jacobian of the full tendency in the (u, theta, d) cell ordering
  RMat basis;    // columns: orthonormal basis of the state space with divergence-free u
  RMat reduced;  // basis^T A basis
};

/// Central finite-difference Jacobian of Simulator::full_rhs at (0, theta_star, d_star).
Linearization linearize_at_equilibrium(const Simulator& sim, double theta_star, const RVec& d_star,
                                       double rel_step = 1e-6);

struct SpectrumResult {
  std::vector<cplx> eigenvalues;  // of the reduced matrix, sorted by decreasing real part
  int kernel_dim = 0;
  double spectral_gap = 0;        // -max Re over the non-kernel eigenvalues
  cplx slowest;                   // non-kernel eigenvalue attaining the gap
  bool semisimple = false;
  int nullity_A = 0, nullity_A2 = 0;
  double norm = 0;
  bool stable() const { return spectral_gap > 0.0; }
};

SpectrumResult spectrum_check(const RMat& A, double kernel_rel_tol = 1e-6);

}  // namespace ellab
