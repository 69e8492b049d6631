#include "ellab/thermo_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ellab/errors.hpp"

namespace ellab {

double FreeEnergyModel::thermal_entropy(double theta) const {
  return c_v * std::log(theta / theta_ref) + c_v_slope * theta;
}

ThermoPoint closures(const FreeEnergyModel& model, double theta, double tau, double rho) {
  if (!(theta > 0.0)) throw Error(ErrorKind::Domain, "closures: theta must be positive");
  if (!(tau >= 0.0)) throw Error(ErrorKind::Domain, "closures: tau must be non-negative");
  if (!(rho > 0.0)) throw Error(ErrorKind::Domain, "closures: rho must be positive");
  ThermoPoint p;
  p.theta = theta;
  p.tau = tau;
  p.lambda = model.lambda(theta);
  p.dlambda_dtheta = model.b;
  p.dlambda_dtau = 0.0;
  const double log_ratio = std::log(theta / model.theta_ref);
  p.psi = -model.c_v * theta * (log_ratio - 1.0) - 0.5 * model.c_v_slope * theta * theta + p.lambda * tau / rho;
  p.eta = model.thermal_entropy(theta) - model.b * tau / rho;
  p.eps = p.psi + theta * p.eta;
  p.kappa = model.heat_capacity(theta);
  return p;
}

const ConditionMargin* ConditionReport::find(const std::string& name) const {
  for (const auto& m : margins)
    if (m.name == name) return &m;
  return nullptr;
}

ConditionReport validate_condition_P(const CoefficientSet& coeffs, const FreeEnergyModel& model,
                                     const OperatingBox& box, int samples) {
  if (!(box.theta_min <= box.theta_max) || !(box.tau_min <= box.tau_max))
    throw Error(ErrorKind::Argument, "validate_condition_P: empty operating box");
  if (!(box.theta_min > 0.0) || !(box.tau_min >= 0.0))
    throw Error(ErrorKind::Argument, "validate_condition_P: box must lie in theta > 0, tau >= 0");
  if (samples < 2) throw Error(ErrorKind::Argument, "validate_condition_P: need at least 2 samples per axis");

  struct Check {
    const char* name;
    bool strict;
  };
  static constexpr Check checks[] = {
      {"rho>0", true},   {"mu_s>0", true},   {"alpha>0", true},  {"gamma>0", true},
      {"kappa>0", true}, {"lambda>0", true}, {"lambda+2tau*lambda1>0", true},
      {"mu_0>=0", false}, {"mu_L>=0", false},
  };
  ConditionReport rep;
  for (const auto& c : checks) {
    ConditionMargin m;
    m.name = c.name;
    m.strict = c.strict;
    m.worst = std::numeric_limits<double>::infinity();
    rep.margins.push_back(m);
  }

  for (int i = 0; i < samples; ++i) {
    const double theta = box.theta_min + (box.theta_max - box.theta_min) * i / (samples - 1);
    for (int j = 0; j < samples; ++j) {
      const double tau = box.tau_min + (box.tau_max - box.tau_min) * j / (samples - 1);
      const CoeffValues c = coeffs.at(theta, tau);
      const ThermoPoint tp = closures(model, theta, tau, coeffs.rho > 0 ? coeffs.rho : 1.0);
      const double values[] = {coeffs.rho, c.mu_s, c.alpha, c.gamma, tp.kappa, tp.lambda,
                               tp.lambda + 2.0 * tau * tp.dlambda_dtau, c.mu_0, c.mu_L};
      for (std::size_t k = 0; k < rep.margins.size(); ++k) {
        auto& m = rep.margins[k];
        if (values[k] < m.worst) {
          m.worst = values[k];
          m.theta = theta;
          m.tau = tau;
        }
      }
    }
  }
  rep.pass = std::all_of(rep.margins.begin(), rep.margins.end(), [](const auto& m) { return m.ok(); });
  return rep;
}

double parodi_residual(const std::array<double, 6>& a) { return a[1] + a[2] - a[5] + a[4]; }

std::pair<double, double> simplified_coefficients(double gamma, double lambda, double mu_D) {
  if (lambda == 0.0) throw Error(ErrorKind::Domain, "simplified_coefficients: lambda == 0");
  return {-gamma / lambda, mu_D / lambda};
}

std::array<double, 6> leslie_alphas(const CoeffValues& c) {
  if (c.gamma <= 0.0) throw Error(ErrorKind::Model, "leslie_alphas: gamma must be positive");
  if (std::abs(c.mu_V - c.gamma) > 1e-12 * std::max(1.0, std::abs(c.gamma)))
    throw Error(ErrorKind::Argument, "leslie_alphas: map defined only for mu_V == gamma");
  const double g = c.gamma;
  const double c1 = (c.mu_D + g) / (2 * g) + c.mu_P / g;
  const double c2 = (c.mu_D - g) / (2 * g) + c.mu_P / g;
  const double k = (g * c.mu_L + c.mu_P * c.mu_P) / (2 * g);
  std::array<double, 6> a{};
  a[0] = c.mu_0 - c.mu_D * (c1 + c2) - 2 * k;
  a[1] = -(c.mu_D + g) / 2 - c.mu_P;
  a[2] = -(c.mu_D - g) / 2 - c.mu_P;
  a[3] = 2 * c.mu_s;
  a[4] = c.mu_D * c1 + k;
  a[5] = c.mu_D * c2 + k;
  return a;
}

double equilibrium_temperature(const FreeEnergyModel& model, double E0, double rho, double volume) {
  if (!(rho > 0.0) || !(volume > 0.0))
    throw Error(ErrorKind::Argument, "equilibrium_temperature: rho and volume must be positive");
  const double target = E0 / (rho * volume);
  auto f = [&](double t) { return model.thermal_energy(t) - target; };
  // eps(0+, 0) = 0 and eps increases while kappa > 0.
  if (!(target > 0.0)) throw Error(ErrorKind::Domain, "equilibrium_temperature: no root (target <= 0)");
  double cap = std::numeric_limits<double>::infinity();
  if (model.c_v_slope < 0.0) cap = -model.c_v / model.c_v_slope;
  double lo = 0.0;
  double hi = std::min(model.theta_ref, cap);
  int guard = 0;
  while (f(hi) < 0.0) {
    if (hi >= cap || ++guard > 2000) throw Error(ErrorKind::Domain, "equilibrium_temperature: no root (target above range)");
    lo = hi;
    hi = std::min(2.0 * hi, cap);
  }
  for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  double t = 0.5 * (lo + hi);
  for (int it = 0; it < 4; ++it) {
    const double k = model.heat_capacity(t);
    if (!(k > 0.0)) break;
    const double next = t - f(t) / k;
    if (!(next >= lo && next <= hi)) break;
    t = next;
  }
  return t;
}

void throw_zero_gamma() { throw Error(ErrorKind::Model, "stress_assemble: gamma == 0"); }

}  // namespace ellab
