#include "ellab/linear_analysis.hpp"

#include <cmath>
#include <numbers>

#include "ellab/errors.hpp"

namespace ellab {

namespace {

const cplx I1(0.0, 1.0);

struct Blocks {
  CMat M_u, M_d, R0, R1, R, Rmu;
  CVec a;
  cplx m_theta, m_d, s, xx;
};

// All symbol blocks as polynomials of a possibly complex co-variable; no
// complex conjugation is applied to xi.
Blocks make_blocks(const FrozenCoefficients& fc, cplx z, const CVec& xi) {
  const int n = fc.n;
  if (xi.size() != n || fc.d0.size() != n || fc.grad_d0.rows() != n || fc.grad_d0.cols() != n)
    throw Error(ErrorKind::Argument, "symbol: dimension mismatch");
  Blocks B;
  const CVec d0 = fc.d0.cast<cplx>();
  const CMat P0 = CMat::Identity(n, n) - d0 * d0.transpose();
  const CMat Id = CMat::Identity(n, n);
  // Bilinear products: xi may be complex and must not be conjugated.
  B.s = (xi.array() * d0.array()).sum();
  B.xx = (xi.array() * xi.array()).sum();
  const CVec P0xi = P0 * xi;
  B.a = fc.grad_d0.cast<cplx>().transpose() * xi;

  const double half_p = 0.5 * (fc.mu_D + fc.mu_V), half_m = 0.5 * (fc.mu_D - fc.mu_V);
  B.R0 = half_p * P0xi * d0.transpose() + half_m * B.s * P0;
  B.R1 = (half_p + fc.mu_P) * P0xi * d0.transpose() + (half_m + fc.mu_P) * B.s * P0;
  B.R = B.s * P0 + P0xi * d0.transpose();
  const double mu_plus = fc.mu_D + fc.mu_V + fc.mu_P, mu_minus = fc.mu_D - fc.mu_V + fc.mu_P;
  B.Rmu = mu_minus * B.s * P0 + mu_plus * P0xi * d0.transpose();

  B.M_u = (fc.rho * z + fc.mu_s * B.xx) * Id + fc.mu_0 * B.s * B.s * d0 * d0.transpose() +
          (fc.mu_L / 4.0) * B.R.transpose() * B.R + (1.0 / (4.0 * fc.gamma)) * B.Rmu.transpose() * B.Rmu +
          (fc.mu_P * fc.mu_V / (2.0 * fc.gamma)) * B.s * (B.R - B.R.transpose());
  B.m_theta = fc.rho * fc.kappa * z + fc.alpha * B.xx;
  B.m_d = fc.gamma * z + fc.lambda * B.xx;
  B.M_d = B.m_d * Id + fc.lambda1 * B.a * B.a.transpose();
  return B;
}

CMat assemble_L(const FrozenCoefficients& fc, cplx z, const Blocks& B, double sign) {
  const int n = fc.n, m = 2 * n + 1;
  CMat L = CMat::Zero(m, m);
  L.block(0, 0, n, n) = B.M_u;
  L.block(0, n + 1, n, n) = I1 * z * B.R1.transpose();
  L(n, n) = B.m_theta;
  L.block(n, n + 1, 1, n) = sign * I1 * z * fc.theta0 * fc.b * B.a.transpose();
  L.block(n + 1, 0, n, n) = -I1 * B.R0;
  L.block(n + 1, n, n, 1) = sign * I1 * fc.b * B.a;
  L.block(n + 1, n + 1, n, n) = B.M_d;
  return L;
}

}  // namespace

FrozenCoefficients FrozenCoefficients::isotropic(int n) {
  FrozenCoefficients fc;
  fc.n = n;
  fc.d0 = RVec::Zero(n);
  fc.d0(0) = 1.0;
  fc.grad_d0 = RMat::Zero(n, n);
  return fc;
}

FrozenCoefficients FrozenCoefficients::from_model(const CoefficientSet& c, const FreeEnergyModel& m, double theta,
                                                  double tau, const RVec& d0, const RMat& grad_d0) {
  const ThermoPoint tp = closures(m, theta, tau, c.rho);
  const CoeffValues cv = c.at(theta, tau);
  FrozenCoefficients fc;
  fc.n = static_cast<int>(d0.size());
  fc.rho = c.rho;
  fc.kappa = tp.kappa;
  fc.alpha = cv.alpha;
  fc.gamma = cv.gamma;
  fc.lambda = tp.lambda;
  fc.lambda1 = tp.dlambda_dtau;
  fc.b = tp.dlambda_dtheta;
  fc.theta0 = theta;
  fc.tau0 = tau;
  fc.d0 = d0;
  fc.grad_d0 = grad_d0;
  fc.mu_s = cv.mu_s;
  fc.mu_V = cv.mu_V;
  fc.mu_D = cv.mu_D;
  fc.mu_P = cv.mu_P;
  fc.mu_L = cv.mu_L;
  fc.mu_0 = cv.mu_0;
  return fc;
}

void FrozenCoefficients::validate() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorKind::Model, std::string("frozen coefficients violate ") + what);
  };
  need(n >= 1 && d0.size() == n && grad_d0.rows() == n && grad_d0.cols() == n, "dimension consistency");
  need(rho > 0, "rho>0");
  need(kappa > 0, "kappa>0");
  need(alpha > 0, "alpha>0");
  need(gamma > 0, "gamma>0");
  need(lambda > 0, "lambda>0");
  need(lambda + 2 * tau0 * lambda1 > 0, "lambda+2tau*lambda1>0");
  need(theta0 > 0, "theta0>0");
  need(mu_s > 0, "mu_s>0");
  need(mu_0 >= 0, "mu_0>=0");
  need(mu_L >= 0, "mu_L>=0");
  need(std::abs(d0.norm() - 1.0) <= 1e-8, "|d0|=1");
}

SymbolBlocks symbol_blocks(const FrozenCoefficients& fc, cplx z, const RVec& xi) {
  const Blocks B = make_blocks(fc, z, xi.cast<cplx>());
  SymbolBlocks out;
  out.M_u = B.M_u;
  out.m_theta = B.m_theta;
  out.m_d = B.m_d;
  out.M_d = B.M_d;
  out.R0 = B.R0.real();
  out.R1 = B.R1.real();
  out.R = B.R.real();
  out.R_mu = B.Rmu.real();
  out.a = B.a.real();
  return out;
}

CMat symbol_L(const FrozenCoefficients& fc, cplx z, const CVec& xi) {
  return assemble_L(fc, z, make_blocks(fc, z, xi), fc.coupling_sign);
}

CMat symbol_L(const FrozenCoefficients& fc, cplx z, const RVec& xi) { return symbol_L(fc, z, CVec(xi.cast<cplx>())); }

CMat symbol_L_pi(const FrozenCoefficients& fc, cplx z, const RVec& xi) {
  const int n = fc.n;
  const CMat L = assemble_L(fc, z, make_blocks(fc, z, xi.cast<cplx>()), -1.0);
  const int m = 2 * n + 2;
  CMat Lp = CMat::Zero(m, m);
  // Map (u, theta, d) indices into (u, pi, theta, d).
  auto to = [n](int k) { return k < n ? k : k + 1; };
  for (int r = 0; r < 2 * n + 1; ++r)
    for (int c = 0; c < 2 * n + 1; ++c) Lp(to(r), to(c)) = L(r, c);
  for (int a = 0; a < n; ++a) {
    Lp(a, n) = I1 * xi(a);
    Lp(n, a) = I1 * xi(a);
  }
  return Lp;
}

double max_diffusivity(const FrozenCoefficients& fc, int directions) {
  const int n = fc.n;
  double dmax = 0.0;
  for (int k = 0; k < directions; ++k) {
    const double ang = std::numbers::pi * k / directions;
    RVec xi = RVec::Zero(n);
    xi(0) = std::cos(ang);
    if (n > 1) xi(1) = std::sin(ang);
    const Blocks B0 = make_blocks(fc, 0.0, xi.cast<cplx>());
    const Blocks B1 = make_blocks(fc, 1.0, xi.cast<cplx>());
    const CMat K = assemble_L(fc, 0.0, B0, fc.coupling_sign);
    const CMat Bm = assemble_L(fc, 1.0, B1, fc.coupling_sign) - K;
    const CMat A = -Bm.partialPivLu().solve(K);
    Eigen::ComplexEigenSolver<CMat> es(A, false);
    for (int i = 0; i < A.rows(); ++i) dmax = std::max(dmax, std::abs(es.eigenvalues()(i)));
  }
  return dmax;
}

AccretivityResult accretivity(const FrozenCoefficients& fc, cplx z, const RVec& xi, const CVec& v) {
  const int n = fc.n;
  if (v.size() != 2 * n + 1) throw Error(ErrorKind::Argument, "accretivity: vector size must be 2n+1");
  const Blocks B = make_blocks(fc, z, xi.cast<cplx>());
  const CVec w = assemble_L(fc, z, B, fc.coupling_sign) * v;
  cplx acc = 0.0;
  for (int k = 0; k < n; ++k) acc += w(k) * std::conj(v(k));
  acc += w(n) * std::conj(v(n)) / fc.theta0;
  for (int k = n + 1; k < 2 * n + 1; ++k) acc += w(k) * std::conj(z * v(k));

  const CVec u = v.head(n), d = v.tail(n);
  const double uu = u.squaredNorm(), tt = std::norm(v(n)), dd = d.squaredNorm();
  const double xx = xi.squaredNorm();
  AccretivityResult r;
  r.lhs = acc.real();
  r.re_z_part = z.real() * (uu + tt + xx * dd);
  r.xi_part = xx * (uu + tt);
  const double c = 2.0 * fc.gamma * std::abs(z) * std::sqrt(dd) - (B.Rmu * u).norm();
  r.coupling_part = c * c;
  return r;
}

SchurResult schur_theta_d(const FrozenCoefficients& fc, cplx z, const RVec& xi, cplx f_theta, const CVec& f_d,
                          const CVec& u) {
  const int n = fc.n;
  if (f_d.size() != n || u.size() != n) throw Error(ErrorKind::Argument, "schur: vector size must be n");
  const Blocks B = make_blocks(fc, z, xi.cast<cplx>());
  const double sgn = fc.coupling_sign;
  const double aa = B.a.real().squaredNorm();
  const cplx cb = cplx(0.0, 1.0) * fc.b;  // i b
  SchurResult r;
  r.det = B.m_theta * (B.m_d + fc.lambda1 * aa) + z * fc.theta0 * fc.b * fc.b * aa;
  const double scale = std::abs(B.m_theta) * (std::abs(B.m_d) + std::abs(fc.lambda1) * aa) +
                       std::abs(z) * fc.theta0 * fc.b * fc.b * aa;
  const double md_scale = fc.gamma * std::abs(z) + fc.lambda * xi.squaredNorm();
  if (!(scale > 0.0) || std::abs(r.det) < 1e-14 * scale || !(std::abs(B.m_d) > 1e-14 * md_scale))
    throw Error(ErrorKind::Singular, "schur: singular (theta, d) block");

  const CVec g = f_d + I1 * (B.R0 * u);
  const cplx ag = (B.a.array() * g.array()).sum();
  // [m_theta, s i z theta0 b; s i b |a|^2, m_d + lambda1 |a|^2] (theta, delta) = (f_theta, a.g)
  r.theta = ((B.m_d + fc.lambda1 * aa) * f_theta - sgn * I1 * z * fc.theta0 * fc.b * ag) / r.det;
  r.delta = (B.m_theta * ag - sgn * cb * aa * f_theta) / r.det;
  r.d = (g - sgn * cb * B.a * r.theta - fc.lambda1 * B.a * r.delta) / B.m_d;
  return r;
}

StokesResult stokes_symbol(const FrozenCoefficients& fc, cplx z, const RVec& xi) {
  const int n = fc.n;
  const Blocks B = make_blocks(fc, z, xi.cast<cplx>());
  const double aa = B.a.real().squaredNorm();
  const cplx det = B.m_theta * (B.m_d + fc.lambda1 * aa) + z * fc.theta0 * fc.b * fc.b * aa;
  const double scale = std::abs(B.m_theta) * (std::abs(B.m_d) + std::abs(fc.lambda1) * aa) +
                       std::abs(z) * fc.theta0 * fc.b * fc.b * aa;
  if (!(scale > 0.0) || std::abs(det) < 1e-14 * scale) throw Error(ErrorKind::Singular, "stokes: det vanishes");

  CMat Q = CMat::Zero(n, n);
  if (aa > 0.0) {
    const CVec a0 = B.a / std::sqrt(aa);
    Q = a0 * a0.transpose();
  }
  const CMat P = CMat::Identity(n, n) - Q;
  StokesResult r;
  r.M = B.M_u - z * B.R1.transpose() * (P / B.m_d + (B.m_theta / det) * Q) * B.R0;
  const CMat H = 0.5 * (r.M + r.M.adjoint());
  Eigen::SelfAdjointEigenSolver<CMat> es(H, Eigen::EigenvaluesOnly);
  r.margin = es.eigenvalues().minCoeff() - (fc.rho * z.real() + fc.mu_s * xi.squaredNorm());
  return r;
}

}  // namespace ellab
