#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>

#include "ellab/errors.hpp"
#include "ellab/grid.hpp"

namespace ellab {

namespace {

std::atomic<int> g_workers{0};

template <class Fn>
void for_rows(int ny, Fn&& fn) {
  const int nt = worker_count();
#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1)
  for (int j = 0; j < ny; ++j) fn(j);
}

double sign_of(Parity p) { return p == Parity::Even ? 1.0 : -1.0; }

}  // namespace

Grid Grid::make(int nx, int ny, double lx, double ly, Boundary bc) {
  if (nx < 8 || ny < 8) throw Error(ErrorKind::Argument, "grid: nx and ny must be at least 8");
  if (!(lx > 0.0) || !(ly > 0.0)) throw Error(ErrorKind::Argument, "grid: domain lengths must be positive");
  return Grid{nx, ny, lx, ly, bc};
}

Field::Field(int rank_, int nx_, int ny_, double fill) : rank(rank_), nx(nx_), ny(ny_) {
  if (rank < 0 || rank > 2) throw Error(ErrorKind::Argument, "field: rank must be 0, 1 or 2");
  data.assign(static_cast<std::size_t>(ncomp()) * plane(), fill);
}

bool Field::all_finite() const {
  return std::all_of(data.begin(), data.end(), [](double v) { return std::isfinite(v); });
}

int worker_count() {
  int n = g_workers.load(std::memory_order_relaxed);
  if (n > 0) return n;
  n = 1;
  if (const char* env = std::getenv("EL_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) n = v;
  }
  g_workers.store(n, std::memory_order_relaxed);
  return n;
}

void set_worker_count(int n) { g_workers.store(std::max(1, n), std::memory_order_relaxed); }

void ddx(const Grid& g, const double* f, Parity p, double* out) {
  const int nx = g.nx;
  const double s = sign_of(p), inv = 0.5 / g.hx();
  const bool per = g.periodic();
  for_rows(g.ny, [&](int j) {
    const double* r = f + static_cast<std::size_t>(j) * nx;
    double* o = out + static_cast<std::size_t>(j) * nx;
    for (int i = 1; i + 1 < nx; ++i) o[i] = (r[i + 1] - r[i - 1]) * inv;
    const double left = per ? r[nx - 1] : s * r[0];
    const double right = per ? r[0] : s * r[nx - 1];
    o[0] = (r[1] - left) * inv;
    o[nx - 1] = (right - r[nx - 2]) * inv;
  });
}

void ddy(const Grid& g, const double* f, Parity p, double* out) {
  const int nx = g.nx, ny = g.ny;
  const double s = sign_of(p), inv = 0.5 / g.hy();
  const bool per = g.periodic();
  for_rows(ny, [&](int j) {
    const double* r = f + static_cast<std::size_t>(j) * nx;
    double* o = out + static_cast<std::size_t>(j) * nx;
    const double* up = j + 1 < ny ? r + nx : (per ? f : r);
    const double* dn = j > 0 ? r - nx : (per ? f + static_cast<std::size_t>(ny - 1) * nx : r);
    const double su = (j + 1 < ny || per) ? 1.0 : s;
    const double sd = (j > 0 || per) ? 1.0 : s;
    for (int i = 0; i < nx; ++i) o[i] = (su * up[i] - sd * dn[i]) * inv;
  });
}

namespace {

// Calls op(left_value, right_value) for every face; left/right are the cells
// on either side, with ghosts substituted at bounded walls.
template <class Op>
void each_face(const Grid& g, const double* f, Parity p, FacePair& out, Op op) {
  const int nx = g.nx, ny = g.ny;
  const double s = sign_of(p);
  const bool per = g.periodic();
  if (out.x.size() != static_cast<std::size_t>(nx + 1) * ny) out = FacePair(g);
  for_rows(ny, [&](int j) {
    const double* r = f + static_cast<std::size_t>(j) * nx;
    double* o = out.x.data() + static_cast<std::size_t>(j) * (nx + 1);
    for (int i = 1; i < nx; ++i) o[i] = op(r[i - 1], r[i], g.hx());
    o[0] = op(per ? r[nx - 1] : s * r[0], r[0], g.hx());
    o[nx] = per ? o[0] : op(r[nx - 1], s * r[nx - 1], g.hx());
  });
  for_rows(ny + 1, [&](int j) {
    double* o = out.y.data() + static_cast<std::size_t>(j) * nx;
    if (j > 0 && j < ny) {
      const double* a = f + static_cast<std::size_t>(j - 1) * nx;
      const double* b = a + nx;
      for (int i = 0; i < nx; ++i) o[i] = op(a[i], b[i], g.hy());
    } else if (per) {
      const double* a = f + static_cast<std::size_t>(ny - 1) * nx;
      const double* b = f;
      for (int i = 0; i < nx; ++i) o[i] = op(a[i], b[i], g.hy());
    } else if (j == 0) {
      for (int i = 0; i < nx; ++i) o[i] = op(s * f[i], f[i], g.hy());
    } else {
      const double* a = f + static_cast<std::size_t>(ny - 1) * nx;
      for (int i = 0; i < nx; ++i) o[i] = op(a[i], s * a[i], g.hy());
    }
  });
}

}  // namespace

void face_diff(const Grid& g, const double* f, Parity p, FacePair& out) {
  each_face(g, f, p, out, [](double a, double b, double h) { return (b - a) / h; });
}

void face_avg(const Grid& g, const double* f, Parity p, FacePair& out) {
  each_face(g, f, p, out, [](double a, double b, double) { return 0.5 * (a + b); });
}

void face_div(const Grid& g, const FacePair& q, double* out) {
  const int nx = g.nx;
  const double ihx = 1.0 / g.hx(), ihy = 1.0 / g.hy();
  for_rows(g.ny, [&](int j) {
    const double* fx = q.x.data() + static_cast<std::size_t>(j) * (nx + 1);
    const double* fy0 = q.y.data() + static_cast<std::size_t>(j) * nx;
    const double* fy1 = fy0 + nx;
    double* o = out + static_cast<std::size_t>(j) * nx;
    for (int i = 0; i < nx; ++i) o[i] = (fx[i + 1] - fx[i]) * ihx + (fy1[i] - fy0[i]) * ihy;
  });
}

void face_to_cell(const Grid& g, const FacePair& q, double* out) {
  const int nx = g.nx;
  for_rows(g.ny, [&](int j) {
    const double* fx = q.x.data() + static_cast<std::size_t>(j) * (nx + 1);
    const double* fy0 = q.y.data() + static_cast<std::size_t>(j) * nx;
    const double* fy1 = fy0 + nx;
    double* o = out + static_cast<std::size_t>(j) * nx;
    for (int i = 0; i < nx; ++i) o[i] = 0.5 * ((fx[i] + fx[i + 1]) + (fy0[i] + fy1[i]));
  });
}

void flux_div(const Grid& g, const double* f, Parity p, const double* c, double* out) {
  FacePair df(g);
  face_diff(g, f, p, df);
  if (c) {
    FacePair cf(g);
    face_avg(g, c, Parity::Even, cf);
    for (std::size_t k = 0; k < df.x.size(); ++k) df.x[k] *= cf.x[k];
    for (std::size_t k = 0; k < df.y.size(); ++k) df.y[k] *= cf.y[k];
  }
  face_div(g, df, out);
}

Field gradient(const Grid& g, const Field& f, Parity p) {
  if (f.rank > 1) throw Error(ErrorKind::Argument, "gradient: input rank must be 0 or 1");
  Field out(f.rank + 1, g.nx, g.ny);
  for (int a = 0; a < f.ncomp(); ++a) {
    ddx(g, f.comp(a), p, out.comp(2 * a));
    ddy(g, f.comp(a), p, out.comp(2 * a + 1));
  }
  return out;
}

Field divergence(const Grid& g, const Field& F, Parity p) {
  if (F.rank < 1) throw Error(ErrorKind::Argument, "divergence: input rank must be 1 or 2");
  Field out(F.rank - 1, g.nx, g.ny);
  std::vector<double> tmp(g.size());
  const int rows = F.rank == 1 ? 1 : 2;
  for (int a = 0; a < rows; ++a) {
    double* o = out.comp(a);
    ddx(g, F.comp(2 * a), p, o);
    ddy(g, F.comp(2 * a + 1), p, tmp.data());
    for (std::size_t k = 0; k < tmp.size(); ++k) o[k] += tmp[k];
  }
  return out;
}

Field laplacian(const Grid& g, const Field& f, Parity p) {
  Field out(f.rank, g.nx, g.ny);
  for (int c = 0; c < f.ncomp(); ++c) flux_div(g, f.comp(c), p, nullptr, out.comp(c));
  return out;
}

Field div_lambda_grad(const Grid& g, const Field& d, const Field& lambda) {
  if (lambda.rank != 0 || lambda.nx != d.nx || lambda.ny != d.ny)
    throw Error(ErrorKind::Argument, "div_lambda_grad: shape mismatch");
  Field out(d.rank, g.nx, g.ny);
  for (int c = 0; c < d.ncomp(); ++c) flux_div(g, d.comp(c), Parity::Even, lambda.comp(0), out.comp(c));
  return out;
}

std::pair<Field, Field> deformation_vorticity(const Field& grad_u) {
  if (grad_u.rank != 2) throw Error(ErrorKind::Argument, "deformation_vorticity: tensor field required");
  Field D(2, grad_u.nx, grad_u.ny), V(2, grad_u.nx, grad_u.ny);
  for (std::size_t k = 0; k < grad_u.plane(); ++k) {
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        const double gab = grad_u.comp(2 * a + b)[k], gba = grad_u.comp(2 * b + a)[k];
        // D + V must reproduce grad u exactly, so V is formed as the remainder.
        const double sym = 0.5 * (gab + gba);
        D.comp(2 * a + b)[k] = sym;
        V.comp(2 * a + b)[k] = gab - sym;
      }
  }
  return {std::move(D), std::move(V)};
}

double integrate(const Grid& g, const double* f) {
  const int nx = g.nx;
  std::vector<long double> rows(g.ny);
  for_rows(g.ny, [&](int j) {
    long double s = 0.0L;
    const double* r = f + static_cast<std::size_t>(j) * nx;
    for (int i = 0; i < nx; ++i) s += r[i];
    rows[j] = s;
  });
  long double total = 0.0L;
  for (long double r : rows) total += r;
  return static_cast<double>(total * g.cell_area());
}

double integrate(const Grid& g, const Field& f) {
  double s = 0.0;
  for (int c = 0; c < f.ncomp(); ++c) s += integrate(g, f.comp(c));
  return s;
}

double inner(const Grid& g, const Field& a, const Field& b) {
  if (!a.same_shape(b)) throw Error(ErrorKind::Argument, "inner: shape mismatch");
  std::vector<double> prod(a.plane());
  double s = 0.0;
  for (int c = 0; c < a.ncomp(); ++c) {
    const double* x = a.comp(c);
    const double* y = b.comp(c);
    for (std::size_t k = 0; k < prod.size(); ++k) prod[k] = x[k] * y[k];
    s += integrate(g, prod.data());
  }
  return s;
}

double l2_norm(const Grid& g, const Field& f) { return std::sqrt(std::max(0.0, inner(g, f, f))); }

double max_abs(const Field& f) {
  double m = 0.0;
  for (double v : f.data) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace ellab
