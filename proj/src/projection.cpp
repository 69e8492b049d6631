#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <sstream>

#include "ellab/errors.hpp"
#include "ellab/grid.hpp"

namespace ellab {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct Projector::Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  std::vector<double> eig;  // eigenvalues of div_c grad_c in the transform basis
  double norm = 1.0;
  std::size_t spec_size = 0;

  ~Plans() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
  }
};

Projector::Projector(const Grid& g, PoissonMethod method, double cg_tol, int cg_max_iter)
    : grid_(g), method_(method), cg_tol_(cg_tol), cg_max_iter_(cg_max_iter), plans_(std::make_unique<Plans>()) {
  if (g.periodic()) method_ = PoissonMethod::Spectral;
  if (cg_max_iter_ <= 0) cg_max_iter_ = 20 * static_cast<int>(g.size());
  if (method_ != PoissonMethod::Spectral) return;

  const int nx = g.nx, ny = g.ny;
  const double hx = g.hx(), hy = g.hy();
  const double pi = std::numbers::pi;
  auto& P = *plans_;
  std::lock_guard<std::mutex> lock(planner_mutex());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  if (g.periodic()) {
    const int nc = nx / 2 + 1;
    P.spec_size = static_cast<std::size_t>(ny) * nc;
    std::vector<double> r(g.size());
    std::vector<fftw_complex> c(P.spec_size);
    P.forward = fftw_plan_dft_r2c_2d(ny, nx, r.data(), c.data(), flags);
    P.backward = fftw_plan_dft_c2r_2d(ny, nx, c.data(), r.data(), flags);
    P.eig.resize(P.spec_size);
    for (int l = 0; l < ny; ++l)
      for (int m = 0; m < nc; ++m) {
        const double sx = std::sin(2.0 * pi * m / nx) / hx;
        const double sy = std::sin(2.0 * pi * l / ny) / hy;
        P.eig[static_cast<std::size_t>(l) * nc + m] = -(sx * sx + sy * sy);
      }
    P.norm = 1.0 / (static_cast<double>(nx) * ny);
  } else {
    P.spec_size = g.size();
    std::vector<double> a(g.size()), b(g.size());
    P.forward = fftw_plan_r2r_2d(ny, nx, a.data(), b.data(), FFTW_REDFT10, FFTW_REDFT10, flags);
    P.backward = fftw_plan_r2r_2d(ny, nx, a.data(), b.data(), FFTW_REDFT01, FFTW_REDFT01, flags);
    P.eig.resize(P.spec_size);
    for (int l = 0; l < ny; ++l)
      for (int m = 0; m < nx; ++m) {
        const double sx = std::sin(pi * m / nx) / hx;
        const double sy = std::sin(pi * l / ny) / hy;
        P.eig[static_cast<std::size_t>(l) * nx + m] = -(sx * sx + sy * sy);
      }
    P.norm = 1.0 / (4.0 * nx * ny);
  }
  if (!P.forward || !P.backward) throw Error(ErrorKind::Solver, "projector: FFT planning failed");
}

Projector::~Projector() = default;

void Projector::solve_spectral(std::vector<double>& rhs) const {
  const auto& P = *plans_;
  // Modes whose symbol vanishes (mean, and Nyquist combinations on periodic
  // grids) are absent from div u and are set to zero.
  const double cut = 1e-12 * std::abs(*std::min_element(P.eig.begin(), P.eig.end()));
  if (grid_.periodic()) {
    std::vector<fftw_complex> c(P.spec_size);
    fftw_execute_dft_r2c(P.forward, rhs.data(), c.data());
    for (std::size_t k = 0; k < P.spec_size; ++k) {
      const double e = P.eig[k];
      const double s = std::abs(e) > cut ? P.norm / e : 0.0;
      c[k][0] *= s;
      c[k][1] *= s;
    }
    fftw_execute_dft_c2r(P.backward, c.data(), rhs.data());
  } else {
    std::vector<double> c(P.spec_size);
    fftw_execute_r2r(P.forward, rhs.data(), c.data());
    for (std::size_t k = 0; k < P.spec_size; ++k) {
      const double e = P.eig[k];
      c[k] *= std::abs(e) > cut ? P.norm / e : 0.0;
    }
    fftw_execute_r2r(P.backward, c.data(), rhs.data());
  }
}

void Projector::solve_cg(std::vector<double>& rhs) const {
  const Grid& g = grid_;
  const std::size_t n = g.size();
  auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
    std::vector<double> gx(n), gy(n), t(n);
    ddx(g, x.data(), Parity::Even, gx.data());
    ddy(g, x.data(), Parity::Even, gy.data());
    ddx(g, gx.data(), Parity::Odd, y.data());
    ddy(g, gy.data(), Parity::Odd, t.data());
    for (std::size_t k = 0; k < n; ++k) y[k] = -(y[k] + t[k]);
  };
  auto dot = [&](const std::vector<double>& a, const std::vector<double>& b) {
    long double s = 0.0L;
    for (std::size_t k = 0; k < n; ++k) s += static_cast<long double>(a[k]) * b[k];
    return static_cast<double>(s);
  };
  auto demean = [&](std::vector<double>& v) {
    long double s = 0.0L;
    for (double x : v) s += x;
    const double m = static_cast<double>(s / static_cast<long double>(n));
    for (double& x : v) x -= m;
  };

  // Solve -div grad phi = -rhs on the mean-zero subspace.
  std::vector<double> b(n), x(n, 0.0), r, p, Ap(n);
  for (std::size_t k = 0; k < n; ++k) b[k] = -rhs[k];
  demean(b);
  const double bnorm = std::sqrt(dot(b, b));
  last_iterations_ = 0;
  if (bnorm == 0.0) {
    rhs.assign(n, 0.0);
    return;
  }
  r = b;
  p = r;
  double rr = dot(r, r);
  int it = 0;
  for (; it < cg_max_iter_ && std::sqrt(rr) > cg_tol_ * bnorm; ++it) {
    apply(p, Ap);
    const double alpha = rr / dot(p, Ap);
    for (std::size_t k = 0; k < n; ++k) {
      x[k] += alpha * p[k];
      r[k] -= alpha * Ap[k];
    }
    const double rr_new = dot(r, r);
    const double beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t k = 0; k < n; ++k) p[k] = r[k] + beta * p[k];
  }
  last_iterations_ = it;
  if (std::sqrt(rr) > cg_tol_ * bnorm) {
    std::ostringstream msg;
    msg << "projector: CG did not converge after " << it << " iterations, relative residual "
        << std::sqrt(rr) / bnorm;
    throw Error(ErrorKind::Solver, msg.str());
  }
  demean(x);
  rhs = std::move(x);
}

void Projector::project(Field& u, Field* phi) const {
  const Grid& g = grid_;
  if (u.rank != 1 || u.nx != g.nx || u.ny != g.ny) throw Error(ErrorKind::Argument, "project: vector field required");
  const std::size_t n = g.size();
  std::vector<double> rhs(n), t(n);
  ddx(g, u.comp(0), Parity::Odd, rhs.data());
  ddy(g, u.comp(1), Parity::Odd, t.data());
  for (std::size_t k = 0; k < n; ++k) rhs[k] += t[k];

  if (method_ == PoissonMethod::Spectral)
    solve_spectral(rhs);
  else
    solve_cg(rhs);

  ddx(g, rhs.data(), Parity::Even, t.data());
  double* ux = u.comp(0);
  for (std::size_t k = 0; k < n; ++k) ux[k] -= t[k];
  ddy(g, rhs.data(), Parity::Even, t.data());
  double* uy = u.comp(1);
  for (std::size_t k = 0; k < n; ++k) uy[k] -= t[k];
  if (phi) {
    *phi = Field::scalar(g);
    std::copy(rhs.begin(), rhs.end(), phi->data.begin());
  }
}

std::pair<Field, Field> helmholtz_project(const Grid& g, const Field& u, PoissonMethod method) {
  Projector P(g, method);
  Field us = u, pi;
  P.project(us, &pi);
  return {std::move(us), std::move(pi)};
}

}  // namespace ellab
