#include "ellab/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

#include "ellab/errors.hpp"
#include "ellab/linear_analysis.hpp"

namespace ellab {

namespace {

using M2 = Mat<2>;
using V2 = Vec<2>;

void axpy(Field& y, double a, const Field& x) {
  for (std::size_t k = 0; k < y.data.size(); ++k) y.data[k] += a * x.data[k];
}

M2 tensor_at(const Field& T, std::size_t k) {
  M2 m;
  m << T.comp(0)[k], T.comp(1)[k], T.comp(2)[k], T.comp(3)[k];
  return m;
}

V2 vector_at(const Field& v, std::size_t k) { return V2(v.comp(0)[k], v.comp(1)[k]); }

void scale_faces(FacePair& f, const FacePair& c) {
  for (std::size_t k = 0; k < f.x.size(); ++k) f.x[k] *= c.x[k];
  for (std::size_t k = 0; k < f.y.size(); ++k) f.y[k] *= c.y[k];
}

// div_c of the flux u * q (q scalar per cell); the product is odd at walls.
void advective_div(const Grid& g, const Field& u, const std::vector<double>& q, double* out) {
  const std::size_t n = g.size();
  std::vector<double> fx(n), fy(n), t(n);
  for (std::size_t k = 0; k < n; ++k) {
    fx[k] = u.comp(0)[k] * q[k];
    fy[k] = u.comp(1)[k] * q[k];
  }
  ddx(g, fx.data(), Parity::Odd, out);
  ddy(g, fy.data(), Parity::Odd, t.data());
  for (std::size_t k = 0; k < n; ++k) out[k] += t[k];
}

}  // namespace

State State::zeros(const Grid& g) {
  State s;
  s.u = Field::vector(g);
  s.theta = Field::scalar(g, 1.0);
  s.d = Field::vector(g);
  s.pi = Field::scalar(g);
  return s;
}

struct Simulator::Work {
  Field gu, gd;           // central gradients of u and d
  std::vector<double> lam, tau, lgs;
  std::vector<CoeffValues> cv;
  FacePair df[2], lamf;
  Field lap_d;            // compact Laplacian of d
  Field n, Dtd, adv, T;
};

Simulator::Simulator(SimParams params) : p_(std::move(params)), projector_(p_.grid, p_.poisson) {
  if (!(p_.coeffs.rho > 0.0)) throw Error(ErrorKind::Model, "simulator: rho must be positive");
}

void Simulator::assemble(const State& s, Work& w) const {
  const Grid& g = p_.grid;
  const std::size_t n = g.size();
  const auto& th = s.theta.data;
  for (std::size_t k = 0; k < n; ++k)
    if (!(th[k] > 0.0)) throw Error(ErrorKind::Positivity, "rhs: temperature must stay positive");

  w.gu = gradient(g, s.u, Parity::Odd);
  w.gd = gradient(g, s.d, Parity::Even);
  w.lam.resize(n);
  for (std::size_t k = 0; k < n; ++k) w.lam[k] = p_.model.lambda(th[k]);
  face_avg(g, w.lam.data(), Parity::Even, w.lamf);

  FacePair q(g);
  for (int c = 0; c < 2; ++c) {
    face_diff(g, s.d.comp(c), Parity::Even, w.df[c]);
    for (std::size_t k = 0; k < q.x.size(); ++k) q.x[k] += w.df[c].x[k] * w.df[c].x[k];
    for (std::size_t k = 0; k < q.y.size(); ++k) q.y[k] += w.df[c].y[k] * w.df[c].y[k];
  }
  w.tau.resize(n);
  face_to_cell(g, q, w.tau.data());
  for (double& t : w.tau) t *= 0.5;
  scale_faces(q, w.lamf);
  w.lgs.resize(n);
  face_to_cell(g, q, w.lgs.data());

  w.n = Field::vector(g);
  w.lap_d = Field::vector(g);
  for (int c = 0; c < 2; ++c) {
    FacePair flux = w.df[c];
    face_div(g, flux, w.lap_d.comp(c));
    scale_faces(flux, w.lamf);
    face_div(g, flux, w.n.comp(c));
    double* nc = w.n.comp(c);
    const double* dc = s.d.comp(c);
    for (std::size_t k = 0; k < n; ++k) nc[k] = -(nc[k] + w.lgs[k] * dc[k]);
  }

  w.cv.resize(n);
  for (std::size_t k = 0; k < n; ++k) w.cv[k] = p_.coeffs.at(th[k], w.tau[k]);

  w.Dtd = Field::vector(g);
  w.adv = Field::vector(g);
  w.T = Field::tensor(g);
  for (std::size_t k = 0; k < n; ++k) {
    const CoeffValues& c = w.cv[k];
    if (!(c.gamma > 0.0)) throw Error(ErrorKind::Model, "rhs: gamma must be positive");
    const M2 G = tensor_at(w.gu, k);  // G(a,b) = d_b u_a
    const M2 D = 0.5 * (G + G.transpose());
    const M2 V = G - D;
    const V2 d = vector_at(s.d, k);
    const V2 nv = vector_at(w.n, k);
    const V2 Dd = D * d;
    const V2 PDd = Dd - d.dot(Dd) * d;
    const V2 dt = (c.mu_V * (V * d) - nv + c.mu_D * PDd) / c.gamma;
    w.Dtd.comp(0)[k] = dt(0);
    w.Dtd.comp(1)[k] = dt(1);

    const M2 Gd = tensor_at(w.gd, k);  // Gd(j,a) = d_a d_j
    const V2 u = vector_at(s.u, k);
    V2 a = Gd * u;
    a -= d.dot(a) * d;
    w.adv.comp(0)[k] = a(0);
    w.adv.comp(1)[k] = a(1);

    M2 stretch, diss;
    leslie_stress<2>(D, d, nv, c, stretch, diss);
    const M2 T = c.mu_s * G.transpose() - w.lam[k] * (Gd.transpose() * Gd) + stretch + diss;
    for (int e = 0; e < 4; ++e) w.T.comp(e)[k] = T(e / 2, e % 2);
  }
}

Field Simulator::tau(const State& s) const {
  const Grid& g = p_.grid;
  FacePair q(g), df(g);
  for (int c = 0; c < 2; ++c) {
    face_diff(g, s.d.comp(c), Parity::Even, df);
    for (std::size_t k = 0; k < q.x.size(); ++k) q.x[k] += df.x[k] * df.x[k];
    for (std::size_t k = 0; k < q.y.size(); ++k) q.y[k] += df.y[k] * df.y[k];
  }
  Field t = Field::scalar(g);
  face_to_cell(g, q, t.comp(0));
  for (double& v : t.data) v *= 0.5;
  return t;
}

Field Simulator::exchange_field(const State& s) const {
  Work w;
  assemble(s, w);
  return w.n;
}

Field Simulator::director_rhs(const State& s) const {
  Work w;
  assemble(s, w);
  return w.Dtd;
}

Field Simulator::stress(const State& s, const Field& Dtd) const {
  Work w;
  assemble(s, w);
  (void)Dtd;  // the stress uses n, from which D_t d is formed; kept for the call contract
  return w.T;
}

Field Simulator::momentum_rhs(const State& s, const Field& T) const {
  Work w;
  assemble(s, w);
  return momentum_impl(s, w, T);
}

Field Simulator::momentum_impl(const State& s, const Work& w, const Field& T) const {
  const Grid& g = p_.grid;
  const std::size_t n = g.size();
  const double rho = p_.coeffs.rho;
  std::vector<double> mu(n);
  for (std::size_t k = 0; k < n; ++k) mu[k] = w.cv[k].mu_s;

  Field out = divergence(g, T, Parity::Even);
  std::vector<double> t(n), t2(n), uu(n);
  for (int a = 0; a < 2; ++a) {
    double* o = out.comp(a);
    flux_div(g, s.u.comp(a), Parity::Odd, mu.data(), t.data());
    for (std::size_t k = 0; k < n; ++k) o[k] = (o[k] + t[k]) / rho;
    // Skew-symmetric advection 1/2 [u_b d_b u_a + d_b (u_b u_a)].
    const double* ua = s.u.comp(a);
    for (int b = 0; b < 2; ++b) {
      const double* ub = s.u.comp(b);
      (b == 0 ? ddx : ddy)(g, ua, Parity::Odd, t.data());
      for (std::size_t k = 0; k < n; ++k) uu[k] = ub[k] * ua[k];
      (b == 0 ? ddx : ddy)(g, uu.data(), Parity::Even, t2.data());
      for (std::size_t k = 0; k < n; ++k) o[k] -= 0.5 * (ub[k] * t[k] + t2[k]);
    }
  }
  return out;
}

Field Simulator::temperature_rhs(const State& s, const Field& Dtd, const Field& T) const {
  if (p_.isothermal) return Field::scalar(p_.grid);
  Work w;
  assemble(s, w);
  return temperature_impl(s, w, Dtd, T);
}

Field Simulator::temperature_impl(const State& s, const Work& w, const Field& Dtd, const Field& T) const {
  const Grid& g = p_.grid;
  const std::size_t n = g.size();
  Field out = Field::scalar(g);
  if (p_.isothermal) return out;
  const auto& th = s.theta.data;
  const double rho = p_.coeffs.rho;
  const double c0 = p_.model.elastic_coefficient();
  const double b = p_.model.b;
  double* o = out.comp(0);
  std::vector<double> t(n), cell(n);

  // Transport of the thermal energy.
  for (std::size_t k = 0; k < n; ++k) cell[k] = rho * p_.model.thermal_energy(th[k]);
  advective_div(g, s.u, cell, t.data());
  for (std::size_t k = 0; k < n; ++k) o[k] = -t[k];

  // Heat conduction.
  for (std::size_t k = 0; k < n; ++k) cell[k] = w.cv[k].alpha;
  flux_div(g, s.theta.comp(0), Parity::Even, cell.data(), t.data());
  for (std::size_t k = 0; k < n; ++k) o[k] += t[k];

  // Compact viscous heating: mu_f |D_f u|^2 distributed to cells.
  for (std::size_t k = 0; k < n; ++k) cell[k] = w.cv[k].mu_s;
  FacePair muf(g), du(g), q(g);
  face_avg(g, cell.data(), Parity::Even, muf);
  for (int a = 0; a < 2; ++a) {
    face_diff(g, s.u.comp(a), Parity::Odd, du);
    for (std::size_t k = 0; k < q.x.size(); ++k) q.x[k] += du.x[k] * du.x[k];
    for (std::size_t k = 0; k < q.y.size(); ++k) q.y[k] += du.y[k] * du.y[k];
  }
  scale_faces(q, muf);
  face_to_cell(g, q, t.data());
  for (std::size_t k = 0; k < n; ++k) o[k] += t[k];

  // Stress power of the collocated stress.
  for (std::size_t k = 0; k < n; ++k) {
    double p = 0.0;
    for (int e = 0; e < 4; ++e) p += T.comp(e)[k] * w.gu.comp(e)[k];
    o[k] += p;
  }

  // Director work: c0 Lap d . (D_t d - adv) + c0 div(D_f d . avg adv) - c0 div(u tau)
  //                + b div(theta_f D_f d . avg D_t d).
  FacePair th_f(g), flux_b(g), flux_c(g), avg(g);
  face_avg(g, s.theta.comp(0), Parity::Even, th_f);
  for (int j = 0; j < 2; ++j) {
    const double* L = w.lap_d.comp(j);
    const double* dt = Dtd.comp(j);
    const double* ad = w.adv.comp(j);
    for (std::size_t k = 0; k < n; ++k) o[k] += c0 * L[k] * (dt[k] - ad[k]);
    face_avg(g, dt, Parity::Even, avg);
    for (std::size_t k = 0; k < avg.x.size(); ++k) flux_b.x[k] += w.df[j].x[k] * avg.x[k];
    for (std::size_t k = 0; k < avg.y.size(); ++k) flux_b.y[k] += w.df[j].y[k] * avg.y[k];
    face_avg(g, ad, Parity::Even, avg);
    for (std::size_t k = 0; k < avg.x.size(); ++k) flux_c.x[k] += w.df[j].x[k] * avg.x[k];
    for (std::size_t k = 0; k < avg.y.size(); ++k) flux_c.y[k] += w.df[j].y[k] * avg.y[k];
  }
  scale_faces(flux_b, th_f);
  face_div(g, flux_b, t.data());
  for (std::size_t k = 0; k < n; ++k) o[k] += b * t[k];
  face_div(g, flux_c, t.data());
  for (std::size_t k = 0; k < n; ++k) o[k] += c0 * t[k];
  advective_div(g, s.u, w.tau, t.data());
  for (std::size_t k = 0; k < n; ++k) o[k] -= c0 * t[k];

  for (std::size_t k = 0; k < n; ++k) {
    const double kappa = p_.model.heat_capacity(th[k]);
    if (!(kappa > 0.0)) throw Error(ErrorKind::Model, "rhs: heat capacity must be positive");
    o[k] /= rho * kappa;
  }
  return out;
}

Tendency Simulator::full_rhs(const State& s) const {
  Work w;
  assemble(s, w);
  Tendency r;
  r.u = momentum_impl(s, w, w.T);
  Field phi;
  projector_.project(r.u, &phi);
  r.pi = std::move(phi);
  for (double& v : r.pi.data) v *= p_.coeffs.rho;
  r.theta = temperature_impl(s, w, w.Dtd, w.T);
  r.d = w.Dtd;
  axpy(r.d, -1.0, w.adv);
  return r;
}

namespace {

State advance(const State& s, double a, const Tendency& k) {
  State r = s;
  axpy(r.u, a, k.u);
  axpy(r.theta, a, k.theta);
  axpy(r.d, a, k.d);
  return r;
}

// Conjugate gradients for (diag(m) - dt div(c grad)) x = b, warm-started from x.
void implicit_diffusion(const Grid& g, Parity p, const std::vector<double>& m, const std::vector<double>& c,
                        double dt, const std::vector<double>& b, double* x) {
  const std::size_t n = g.size();
  std::vector<double> r(n), q(n), Aq(n), t(n);
  auto apply = [&](const double* v, double* out) {
    flux_div(g, v, p, c.data(), t.data());
    for (std::size_t k = 0; k < n; ++k) out[k] = m[k] * v[k] - dt * t[k];
  };
  auto dot = [&](const std::vector<double>& a, const std::vector<double>& bb) {
    long double s = 0.0L;
    for (std::size_t k = 0; k < n; ++k) s += static_cast<long double>(a[k]) * bb[k];
    return static_cast<double>(s);
  };
  apply(x, Aq.data());
  for (std::size_t k = 0; k < n; ++k) r[k] = b[k] - Aq[k];
  q = r;
  double rr = dot(r, r);
  const double bn = std::sqrt(dot(b, b));
  const int max_iter = 10 * static_cast<int>(n);
  int it = 0;
  for (; it < max_iter && std::sqrt(rr) > 1e-13 * bn; ++it) {
    apply(q.data(), Aq.data());
    const double alpha = rr / dot(q, Aq);
    for (std::size_t k = 0; k < n; ++k) {
      x[k] += alpha * q[k];
      r[k] -= alpha * Aq[k];
    }
    const double rn = dot(r, r);
    const double beta = rn / rr;
    rr = rn;
    for (std::size_t k = 0; k < n; ++k) q[k] = r[k] + beta * q[k];
  }
  if (std::sqrt(rr) > 1e-10 * bn) throw Error(ErrorKind::Solver, "imex: diffusion solve did not converge");
}

}  // namespace

void Simulator::imex_step(State& s, double dt) const {
  const Grid& g = p_.grid;
  const std::size_t n = g.size();
  const double rho = p_.coeffs.rho;
  Work w;
  assemble(s, w);
  Tendency F = full_rhs(s);
  std::vector<double> m(n), c(n), b(n), t(n);

  // Velocity: viscous part implicit, then re-project.
  for (std::size_t k = 0; k < n; ++k) {
    m[k] = rho;
    c[k] = w.cv[k].mu_s;
  }
  for (int a = 0; a < 2; ++a) {
    flux_div(g, s.u.comp(a), Parity::Odd, c.data(), t.data());
    for (std::size_t k = 0; k < n; ++k) b[k] = rho * s.u.comp(a)[k] + dt * (rho * F.u.comp(a)[k] - t[k]);
    implicit_diffusion(g, Parity::Odd, m, c, dt, b, s.u.comp(a));
  }
  Field phi;
  projector_.project(s.u, &phi);

  if (!p_.isothermal) {
    for (std::size_t k = 0; k < n; ++k) {
      m[k] = rho * p_.model.heat_capacity(s.theta.data[k]);
      c[k] = w.cv[k].alpha;
    }
    flux_div(g, s.theta.comp(0), Parity::Even, c.data(), t.data());
    for (std::size_t k = 0; k < n; ++k) b[k] = m[k] * s.theta.data[k] + dt * (m[k] * F.theta.data[k] - t[k]);
    implicit_diffusion(g, Parity::Even, m, c, dt, b, s.theta.comp(0));
  }

  for (std::size_t k = 0; k < n; ++k) {
    m[k] = w.cv[k].gamma;
    c[k] = w.lam[k];
  }
  for (int a = 0; a < 2; ++a) {
    flux_div(g, s.d.comp(a), Parity::Even, c.data(), t.data());
    for (std::size_t k = 0; k < n; ++k) b[k] = m[k] * s.d.comp(a)[k] + dt * (m[k] * F.d.comp(a)[k] - t[k]);
    implicit_diffusion(g, Parity::Even, m, c, dt, b, s.d.comp(a));
  }
  s.pi = F.pi;
}

void Simulator::step(State& s, double dt, Scheme scheme) const {
  if (!(dt > 0.0)) throw Error(ErrorKind::Argument, "step: dt must be positive");
  State next;
  try {
    if (scheme == Scheme::RK4) {
      const Tendency k1 = full_rhs(s);
      const Tendency k2 = full_rhs(advance(s, 0.5 * dt, k1));
      const Tendency k3 = full_rhs(advance(s, 0.5 * dt, k2));
      const Tendency k4 = full_rhs(advance(s, dt, k3));
      next = s;
      for (const auto& [k, wgt] : {std::pair{&k1, 1.0}, {&k2, 2.0}, {&k3, 2.0}, {&k4, 1.0}}) {
        axpy(next.u, wgt * dt / 6.0, k->u);
        axpy(next.theta, wgt * dt / 6.0, k->theta);
        axpy(next.d, wgt * dt / 6.0, k->d);
      }
      next.pi = k1.pi;
      axpy(next.pi, 2.0, k2.pi);
      axpy(next.pi, 2.0, k3.pi);
      axpy(next.pi, 1.0, k4.pi);
      for (double& v : next.pi.data) v /= 6.0;
    } else {
      next = s;
      imex_step(next, dt);
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Positivity) throw StepError(ErrorKind::Positivity, e.what(), s.t);
    throw;
  }
  if (!next.u.all_finite() || !next.theta.all_finite() || !next.d.all_finite()) {
    std::ostringstream msg;
    msg << "step: non-finite value after t = " << s.t;
    throw StepError(ErrorKind::BlowUp, msg.str(), s.t);
  }
  const double tmin = *std::min_element(next.theta.data.begin(), next.theta.data.end());
  if (!(tmin > 0.0)) {
    std::ostringstream msg;
    msg << "step: temperature left (0, inf) after t = " << s.t << " (min " << tmin << ")";
    throw StepError(ErrorKind::Positivity, msg.str(), s.t);
  }
  if (p_.renormalize) {
    for (std::size_t k = 0; k < next.d.plane(); ++k) {
      const double nrm = std::hypot(next.d.comp(0)[k], next.d.comp(1)[k]);
      if (nrm > 0.0) {
        next.d.comp(0)[k] /= nrm;
        next.d.comp(1)[k] /= nrm;
      }
    }
  }
  next.t = s.t + dt;
  s = std::move(next);
}

double Simulator::stable_dt(const State& s, double c_cfl) const {
  const Grid& g = p_.grid;
  Work w;
  assemble(s, w);
  const std::size_t n = g.size();
  const std::size_t stride = std::max<std::size_t>(1, n / 4096);
  double dmax = 0.0;
  for (std::size_t k = 0; k < n; k += stride) {
    Eigen::VectorXd d0(2);
    d0 << s.d.comp(0)[k], s.d.comp(1)[k];
    if (d0.norm() > 0.0) d0.normalize();
    else d0 << 1.0, 0.0;
    Eigen::MatrixXd gd(2, 2);  // gd(a, j) = d_a d_j
    for (int j = 0; j < 2; ++j)
      for (int a = 0; a < 2; ++a) gd(a, j) = w.gd.comp(2 * j + a)[k];
    const auto fc = FrozenCoefficients::from_model(p_.coeffs, p_.model, s.theta.data[k], w.tau[k], d0, gd);
    dmax = std::max(dmax, max_diffusivity(fc));
  }
  const double h = std::min(g.hx(), g.hy());
  return c_cfl * h * h / dmax;
}

DiagnosticsRow Simulator::diagnostics(const State& s) const {
  const Grid& g = p_.grid;
  const std::size_t n = g.size();
  const double rho = p_.coeffs.rho;
  const double c0 = p_.model.elastic_coefficient();
  const Field tf = tau(s);
  std::vector<double> ke(n), ie(n), en(n), dv(n), t(n);
  DiagnosticsRow r;
  r.t = s.t;
  r.min_theta = *std::min_element(s.theta.data.begin(), s.theta.data.end());
  double drift = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double ux = s.u.comp(0)[k], uy = s.u.comp(1)[k];
    const double th = s.theta.data[k];
    ke[k] = 0.5 * rho * (ux * ux + uy * uy);
    ie[k] = rho * p_.model.thermal_energy(th) + c0 * tf.data[k];
    en[k] = th > 0.0 ? rho * p_.model.thermal_entropy(th) - p_.model.b * tf.data[k]
                     : -std::numeric_limits<double>::infinity();
    const double dx = s.d.comp(0)[k], dy = s.d.comp(1)[k];
    drift = std::max(drift, std::abs(dx * dx + dy * dy - 1.0));
  }
  r.kinetic = integrate(g, ke.data());
  r.internal = integrate(g, ie.data());
  r.E = r.kinetic + r.internal;
  r.N = integrate(g, en.data());
  r.unit_drift = drift;

  ddx(g, s.u.comp(0), Parity::Odd, dv.data());
  ddy(g, s.u.comp(1), Parity::Odd, t.data());
  for (std::size_t k = 0; k < n; ++k) dv[k] = (dv[k] + t[k]) * (dv[k] + t[k]);
  r.div_norm = std::sqrt(integrate(g, dv.data()));

  auto fluct = [&](const Field& f) {
    double s2 = 0.0;
    for (int c = 0; c < f.ncomp(); ++c) {
      const double mean = integrate(g, f.comp(c)) / g.volume();
      for (std::size_t k = 0; k < n; ++k) t[k] = (f.comp(c)[k] - mean) * (f.comp(c)[k] - mean);
      s2 += integrate(g, t.data());
    }
    return std::sqrt(s2);
  };
  r.dist_to_eq = l2_norm(g, s.u) + fluct(s.theta) + fluct(s.d);
  return r;
}

std::optional<double> fit_decay_rate(const std::vector<DiagnosticsRow>& rows, double t_from, double floor) {
  long double st = 0, sy = 0, stt = 0, sty = 0;
  long cnt = 0;
  for (const auto& r : rows) {
    if (r.t < t_from || !(r.dist_to_eq > floor)) continue;
    const long double y = std::log(r.dist_to_eq);
    st += r.t;
    sy += y;
    stt += static_cast<long double>(r.t) * r.t;
    sty += r.t * y;
    ++cnt;
  }
  if (cnt < 3) return std::nullopt;
  const long double den = cnt * stt - st * st;
  if (den <= 0) return std::nullopt;
  return static_cast<double>(-(cnt * sty - st * sy) / den);
}

RunResult run(const Simulator& sim, State s, const RunOptions& opt) {
  if (!(opt.t_final > 0.0)) throw Error(ErrorKind::Argument, "run: t_final must be positive");
  RunResult res;
  double dt = opt.dt > 0.0 ? opt.dt : opt.cfl_fraction * sim.stable_dt(s);
  const long steps = std::max(1L, static_cast<long>(std::ceil(opt.t_final / dt - 1e-9)));
  dt = opt.t_final / static_cast<double>(steps);
  res.dt = dt;
  const int every = std::max(1, opt.diag_every);
  const bool snaps = opt.snapshot_every > 0 && !opt.snapshot_dir.empty();
  if (snaps) std::filesystem::create_directories(opt.snapshot_dir);
  auto snapshot = [&](long k) {
    const std::string path = (std::filesystem::path(opt.snapshot_dir) / ("snap_" + std::to_string(k) + ".elf2")).string();
    write_snapshot(path, {&s.u, &s.theta, &s.d, &s.pi});
  };
  auto emit = [&](const DiagnosticsRow& r) {
    res.rows.push_back(r);
    if (opt.on_row) opt.on_row(r);
  };

  DiagnosticsRow prev = sim.diagnostics(s);
  emit(prev);
  if (snaps) snapshot(0);
  res.min_entropy_increment = std::numeric_limits<double>::infinity();
  for (long k = 1; k <= steps; ++k) {
    sim.step(s, dt, opt.scheme);
    s.t = k == steps ? opt.t_final : s.t;
    const DiagnosticsRow cur = sim.diagnostics(s);
    const double dN = cur.N - prev.N;
    res.min_entropy_increment = std::min(res.min_entropy_increment, dN);
    if (dN < -1e-8 && res.first_entropy_violation < 0) res.first_entropy_violation = k;
    if (prev.dist_to_eq > 1e-6 && !(dN > 0.0) && res.first_strictness_violation < 0)
      res.first_strictness_violation = k;
    if (k % every == 0 || k == steps) emit(cur);
    if (snaps && (k % opt.snapshot_every == 0 || k == steps)) snapshot(k);
    prev = cur;
  }
  res.steps = steps;
  if (opt.fit_window > 0.0)
    res.decay_rate = fit_decay_rate(res.rows, (1.0 - opt.fit_window) * opt.t_final, opt.fit_floor);
  res.final_state = std::move(s);
  return res;
}

}  // namespace ellab
