/// @file thermo_model.hpp
/// @brief Pointwise constitutive and thermodynamic relations of the
/// non-isothermal isotropic Ericksen-Leslie model.
///
/// Everything here is a pure function of its arguments. Conventions used
/// throughout the project:
///   - (grad u)_{ab} = d_b u_a, so D = (grad u + grad u^T)/2 and V = (grad u - grad u^T)/2.
///   - (grad d)_{aj} = d_a d_j, so a(xi) = xi . grad d and |grad d|^2 is the Frobenius norm.
///   - a (x) b denotes the dyad a b^T.
#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace ellab {

/// Bivariate polynomial c_{pq} theta^p tau^q with p, q <= 2.
struct Poly2 {
  std::array<std::array<double, 3>, 3> c{};

  static Poly2 constant(double v) {
    Poly2 p;
    p.c[0][0] = v;
    return p;
  }

  double operator()(double theta, double tau) const {
    double result = 0.0;
    double tp = 1.0;
    for (int p = 0; p < 3; ++p) {
      result += tp * (c[p][0] + tau * (c[p][1] + tau * c[p][2]));
      tp *= theta;
    }
    return result;
  }

  bool operator==(const Poly2&) const = default;
};

/// Material functions evaluated at one (theta, tau).
struct CoeffValues {
  double mu_s = 0, mu_V = 0, mu_D = 0, mu_P = 0, mu_L = 0, mu_0 = 0, gamma = 0, alpha = 0;
};

struct CoefficientSet {
  double rho = 1.0;
  Poly2 mu_s = Poly2::constant(1.0);
  Poly2 mu_V = Poly2::constant(0.0);
  Poly2 mu_D = Poly2::constant(0.0);
  Poly2 mu_P = Poly2::constant(0.0);
  Poly2 mu_L = Poly2::constant(0.0);
  Poly2 mu_0 = Poly2::constant(0.0);
  Poly2 gamma = Poly2::constant(1.0);
  Poly2 alpha = Poly2::constant(1.0);

  CoeffValues at(double theta, double tau) const {
    return {mu_s(theta, tau), mu_V(theta, tau), mu_D(theta, tau), mu_P(theta, tau),
            mu_L(theta, tau), mu_0(theta, tau), gamma(theta, tau), alpha(theta, tau)};
  }

  bool operator==(const CoefficientSet&) const = default;
};

/// Free energy per unit mass
///   psi(theta, tau) = -c_v theta (log(theta/theta_ref) - 1) - (c_v_slope/2) theta^2
///                     + lambda(theta) tau / rho,
/// with Ericksen tension lambda(theta) = lambda_0 + b (theta - theta_ref).
/// The thermal heat capacity is kappa = c_v + c_v_slope * theta.
struct FreeEnergyModel {
  double c_v = 1.0;
  double lambda_0 = 1.0;
  double b = 0.0;
  double theta_ref = 1.0;
  double c_v_slope = 0.0;

  double lambda(double theta) const { return lambda_0 + b * (theta - theta_ref); }
  /// lambda - theta d(lambda)/d(theta); constant for the affine tension.
  double elastic_coefficient() const { return lambda_0 - b * theta_ref; }
  double thermal_energy(double theta) const { return c_v * theta + 0.5 * c_v_slope * theta * theta; }
  double thermal_entropy(double theta) const;
  double heat_capacity(double theta) const { return c_v + c_v_slope * theta; }

  bool operator==(const FreeEnergyModel&) const = default;
};

struct ThermoPoint {
  double theta = 0, tau = 0;
  double psi = 0, eta = 0, eps = 0, kappa = 0;
  double lambda = 0, dlambda_dtheta = 0, dlambda_dtau = 0;
};

/// Free energy closures at (theta, tau). Quantities are per unit mass except
/// lambda = rho d(psi)/d(tau). Throws ErrorKind::Domain for theta <= 0 or tau < 0.
ThermoPoint closures(const FreeEnergyModel& model, double theta, double tau, double rho = 1.0);

/// Closed (theta, tau) rectangle used for parameter validation.
struct OperatingBox {
  double theta_min = 0.5, theta_max = 2.0;
  double tau_min = 0.0, tau_max = 2.0;
};

struct ConditionMargin {
  std::string name;  // e.g. "mu_s>0"
  bool strict = true;
  double worst = 0;  // minimum of the left-hand side over the lattice
  double theta = 0, tau = 0;
  bool ok() const { return strict ? worst > 0.0 : worst >= 0.0; }
};

struct ConditionReport {
  bool pass = false;
  std::vector<ConditionMargin> margins;
  const ConditionMargin* find(const std::string& name) const;
};

/// Samples the positivity conditions on a samples x samples lattice of the box.
ConditionReport validate_condition_P(const CoefficientSet& coeffs, const FreeEnergyModel& model,
                                     const OperatingBox& box, int samples = 9);

/// alpha_2 + alpha_3 - alpha_6 + alpha_5 for Leslie coefficients alpha_1..alpha_6
/// (index 0 holds alpha_1). Diagnostic only.
double parodi_residual(const std::array<double, 6>& alpha);

/// (lambda_1, lambda_2) = (-gamma/lambda, mu_D/lambda) of the simplified isothermal model.
std::pair<double, double> simplified_coefficients(double gamma, double lambda, double mu_D);

/// Leslie coefficients alpha_1..alpha_6 reproducing the Newtonian plus Leslie
/// stress when mu_V == gamma, obtained by matching S_N + S_L term by term against
/// the classical Leslie stress. Throws ErrorKind::Argument if mu_V != gamma.
std::array<double, 6> leslie_alphas(const CoeffValues& c);

/// Unique theta_* > 0 with eps(theta_*, 0) = E0 / (rho * volume).
double equilibrium_temperature(const FreeEnergyModel& model, double E0, double rho, double volume);

// ---------------------------------------------------------------------------
// Pointwise tensor algebra (fixed dimension N).
// ---------------------------------------------------------------------------

template <int N>
using Vec = Eigen::Matrix<double, N, 1>;
template <int N>
using Mat = Eigen::Matrix<double, N, N>;

/// n = -(div(lambda grad d) + lambda |grad d|^2 d), with the weighted squared
/// gradient supplied directly (the discrete solver provides its own).
template <int N>
Vec<N> director_exchange_n(const Vec<N>& div_lambda_grad_d, double lambda_grad_sq, const Vec<N>& d) {
  return -(div_lambda_grad_d + lambda_grad_sq * d);
}

template <int N>
Vec<N> director_exchange_n(const Vec<N>& div_lambda_grad_d, double lambda, const Mat<N>& grad_d,
                           const Vec<N>& d) {
  return director_exchange_n<N>(div_lambda_grad_d, lambda * grad_d.squaredNorm(), d);
}

template <int N>
struct StressParts {
  Mat<N> newtonian = Mat<N>::Zero();
  Mat<N> ericksen = Mat<N>::Zero();
  Mat<N> stretch = Mat<N>::Zero();
  Mat<N> dissipative = Mat<N>::Zero();

  Mat<N> total() const { return newtonian + ericksen + stretch + dissipative; }
  Mat<N> leslie() const { return stretch + dissipative; }
};

[[noreturn]] void throw_zero_gamma();

/// Leslie stress (stretch + dissipative) only; the hot path of the solver.
template <int N>
void leslie_stress(const Mat<N>& D, const Vec<N>& d, const Vec<N>& n, const CoeffValues& c,
                   Mat<N>& stretch, Mat<N>& dissipative) {
  if (c.gamma == 0.0) throw_zero_gamma();
  const double inv2g = 0.5 / c.gamma;
  const Vec<N> Dd = D * d;
  const double dDd = d.dot(Dd);
  const Vec<N> p = Dd - dDd * d;  // P_d D d
  const Mat<N> nd = n * d.transpose();
  const Mat<N> dn = d * n.transpose();
  stretch = ((c.mu_D + c.mu_V) * inv2g) * nd + ((c.mu_D - c.mu_V) * inv2g) * dn;
  dissipative = (c.mu_P / c.gamma) * (nd + dn) +
                ((c.gamma * c.mu_L + c.mu_P * c.mu_P) * inv2g) * (p * d.transpose() + d * p.transpose()) +
                (c.mu_0 * dDd) * (d * d.transpose());
}

/// Full stress S = S_N + S_E + S_L^stretch + S_L^diss for an incompressible flow
/// (the bulk viscosity term vanishes with div u = 0).
template <int N>
StressParts<N> stress_assemble(const Mat<N>& D, const Mat<N>& /*V*/, const Vec<N>& d, const Vec<N>& n,
                               const Mat<N>& grad_d, const CoeffValues& c, double lambda) {
  StressParts<N> s;
  s.newtonian = 2.0 * c.mu_s * D;
  s.ericksen = -lambda * grad_d * grad_d.transpose();
  leslie_stress<N>(D, d, n, c, s.stretch, s.dissipative);
  return s;
}

template <int N>
Vec<N> heat_flux(double alpha, const Vec<N>& grad_theta) {
  return -alpha * grad_theta;
}

}  // namespace ellab
