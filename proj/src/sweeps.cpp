#include "ellab/sweeps.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>

#include "ellab/errors.hpp"

namespace ellab {

namespace {

RVec gaussian(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> N(0.0, 1.0);
  RVec v(n);
  for (int i = 0; i < n; ++i) v(i) = N(rng);
  return v;
}

CVec complex_unit(int n, std::mt19937_64& rng) {
  CVec v(n);
  const RVec re = gaussian(n, rng), im = gaussian(n, rng);
  for (int i = 0; i < n; ++i) v(i) = cplx(re(i), im(i));
  return v / v.norm();
}

// Re z >= 0; every eighth sample lies on the imaginary axis.
cplx sample_z(double zmax, int k, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const double r = zmax * U(rng);
  double phi = std::numbers::pi * (U(rng) - 0.5);
  if (k % 8 == 7) phi = phi < 0 ? -0.5 * std::numbers::pi : 0.5 * std::numbers::pi;
  return std::polar(r, phi);
}

RVec sample_xi(int n, double ximax, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  RVec xi = gaussian(n, rng);
  return xi * (ximax * U(rng) / xi.norm());
}

// (z, xi) away from the origin, where the parabolic estimates degenerate.
void sample_point(const SweepSpec& spec, int k, std::mt19937_64& rng, cplx& z, RVec& xi) {
  do {
    z = sample_z(spec.z_max, k, rng);
    xi = sample_xi(spec.n, spec.xi_max, rng);
  } while (std::abs(z) + xi.squaredNorm() < 1e-3);
}

void finish(SweepReport& r) {
  r.worst_margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < static_cast<int>(r.rows.size()); ++i)
    if (r.rows[i].margin < r.worst_margin) {
      r.worst_margin = r.rows[i].margin;
      r.worst_index = i;
    }
  r.pass = !r.rows.empty() && r.worst_margin >= 0.0;
}

}  // namespace

FrozenCoefficients sample_frozen(const CoefficientSet& c, const FreeEnergyModel& m, const OperatingBox& box,
                                 double coupling_sign, int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const double theta = box.theta_min + (box.theta_max - box.theta_min) * U(rng);
  const double tau = box.tau_min + (box.tau_max - box.tau_min) * U(rng);
  RVec d0 = gaussian(n, rng);
  d0 /= d0.norm();
  RVec perp = gaussian(n, rng);
  perp -= perp.dot(d0) * d0;
  perp /= perp.norm();
  RVec g = gaussian(n, rng);
  g *= std::sqrt(2.0 * tau) / g.norm();
  FrozenCoefficients fc = FrozenCoefficients::from_model(c, m, theta, tau, d0, g * perp.transpose());
  fc.coupling_sign = coupling_sign;
  fc.validate();
  return fc;
}

std::string SweepReport::summary() const {
  std::ostringstream os;
  os.precision(4);
  os << name << ' ' << (pass ? "PASS" : "FAIL") << " samples " << rows.size() << " worst margin " << worst_margin;
  if (worst_index >= 0) {
    const SweepRow& w = rows[worst_index];
    os << " (" << quantity << ' ' << w.quantity << " at z=" << w.z.real() << (w.z.imag() < 0 ? "" : "+")
       << w.z.imag() << "i, |xi|=" << w.xi.norm() << ")";
  }
  if (constant != 0.0) os << " constant " << constant;
  return os.str();
}

SweepReport accretivity_sweep(const CoefficientSet& c, const FreeEnergyModel& m, const OperatingBox& box,
                              const SweepSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  SweepReport r;
  r.name = "accretivity";
  r.quantity = "lhs";
  double cmin = std::numeric_limits<double>::infinity();
  for (int k = 0; k < spec.samples; ++k) {
    const FrozenCoefficients fc = sample_frozen(c, m, box, spec.coupling_sign, spec.n, rng);
    cplx z;
    RVec xi;
    sample_point(spec, k, rng, z, xi);
    const AccretivityResult a = accretivity(fc, z, xi, complex_unit(2 * spec.n + 1, rng));
    if (a.bound() > 1e-12) cmin = std::min(cmin, a.lhs / a.bound());
    r.rows.push_back({z, xi, a.lhs, a.lhs + 1e-12});
  }
  finish(r);
  r.constant = cmin;
  r.pass = r.pass && cmin > 0.0;
  return r;
}

SweepReport stokes_sweep(const CoefficientSet& c, const FreeEnergyModel& m, const OperatingBox& box,
                         const SweepSpec& spec) {
  std::mt19937_64 rng(spec.seed + 1);
  SweepReport r;
  r.name = "stokes";
  r.quantity = "ellipticity_margin";
  for (int k = 0; k < spec.samples; ++k) {
    const FrozenCoefficients fc = sample_frozen(c, m, box, spec.coupling_sign, spec.n, rng);
    cplx z;
    RVec xi;
    sample_point(spec, k, rng, z, xi);
    const StokesResult s = stokes_symbol(fc, z, xi);
    r.rows.push_back({z, xi, s.margin, s.margin + 1e-10});
  }
  finish(r);
  return r;
}

SweepReport schur_sweep(const CoefficientSet& c, const FreeEnergyModel& m, const OperatingBox& box,
                        const SweepSpec& spec) {
  std::mt19937_64 rng(spec.seed + 2);
  const int n = spec.n;
  SweepReport r;
  r.name = "schur";
  r.quantity = "residual";
  for (int k = 0; k < spec.samples; ++k) {
    const FrozenCoefficients fc = sample_frozen(c, m, box, spec.coupling_sign, n, rng);
    cplx z;
    RVec xi;
    sample_point(spec, k, rng, z, xi);
    const CVec f = complex_unit(n + 1, rng), u = complex_unit(n, rng);
    const SchurResult s = schur_theta_d(fc, z, xi, f(0), f.tail(n), u);
    CVec x(2 * n + 1);
    x << u, s.theta, s.d;
    const CMat rows = symbol_L(fc, z, xi).bottomRows(n + 1);
    const double res = (rows * x - f).norm() / (f.norm() + rows.norm() * x.norm());
    r.rows.push_back({z, xi, res, 1e-10 - res});
  }
  finish(r);
  return r;
}

SweepReport det_bound_sweep(const CoefficientSet& c, const FreeEnergyModel& m, const OperatingBox& box,
                            const SweepSpec& spec) {
  std::mt19937_64 rng(spec.seed + 3);
  const int n = spec.n;
  SweepReport r;
  r.name = "det_bound";
  r.quantity = "det_ratio";
  for (int k = 0; k < spec.samples; ++k) {
    const FrozenCoefficients fc = sample_frozen(c, m, box, spec.coupling_sign, n, rng);
    cplx z;
    RVec xi;
    sample_point(spec, k, rng, z, xi);
    const SchurResult s = schur_theta_d(fc, z, xi, 0.0, CVec::Zero(n), CVec::Zero(n));
    const double ratio = std::abs(s.det) / std::norm(z + xi.squaredNorm());
    r.rows.push_back({z, xi, ratio, ratio});
  }
  finish(r);
  r.constant = r.worst_margin;
  r.pass = r.pass && r.worst_margin > 0.0;
  return r;
}

SweepReport lopatinskii_sweep(const CoefficientSet& c, const FreeEnergyModel& m, const OperatingBox& box,
                              const SweepSpec& spec) {
  std::mt19937_64 rng(spec.seed + 4);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const int n = spec.n;
  SweepReport r;
  r.name = "lopatinskii";
  r.quantity = "abs_det";
  for (int k = 0; k < spec.samples; ++k) {
    const FrozenCoefficients fc = sample_frozen(c, m, box, spec.coupling_sign, n, rng);
    RVec nu = gaussian(n, rng);
    nu /= nu.norm();
    RVec t = gaussian(n, rng);
    t -= t.dot(nu) * nu;
    t /= t.norm();
    // |z| = s, |xi_t|^2 = 1 - s
    const double s = U(rng);
    double phi = std::numbers::pi * (U(rng) - 0.5);
    if (k % 8 == 7) phi = phi < 0 ? -0.5 * std::numbers::pi : 0.5 * std::numbers::pi;
    const cplx z = std::polar(s, phi);
    RVec xi = std::sqrt(1.0 - s) * t;
    xi -= xi.dot(nu) * nu;
    const LopatinskiiResult L = lopatinskii_determinant(fc, z, xi, nu);
    const double v = std::abs(L.value);
    r.rows.push_back({z, xi, v, v - 1e-6});
  }
  finish(r);
  return r;
}

void write_sweep_csv(const std::string& path, const SweepReport& r) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error(ErrorKind::Io, "cannot write " + path);
  const int n = r.rows.empty() ? 0 : static_cast<int>(r.rows.front().xi.size());
  std::fprintf(f, "re_z,im_z");
  for (int i = 1; i <= n; ++i) std::fprintf(f, ",xi_%d", i);
  std::fprintf(f, ",%s,margin\n", r.quantity.c_str());
  for (const auto& row : r.rows) {
    std::fprintf(f, "%.17g,%.17g", row.z.real(), row.z.imag());
    for (int i = 0; i < n; ++i) std::fprintf(f, ",%.17g", row.xi(i));
    std::fprintf(f, ",%.17g,%.17g\n", row.quantity, row.margin);
  }
  if (std::fclose(f) != 0) throw Error(ErrorKind::Io, "error writing " + path);
}

}  // namespace ellab
