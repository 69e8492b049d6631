#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "ellab/errors.hpp"
#include "ellab/linear_analysis.hpp"

namespace ellab {

namespace {

// State vector ordering: u_x, u_y, theta, d_x, d_y, each a cell plane.
RVec pack(const Field& u, const Field& th, const Field& d) {
  const std::size_t N = th.plane();
  RVec x(5 * N);
  std::copy(u.data.begin(), u.data.end(), x.data());
  std::copy(th.data.begin(), th.data.end(), x.data() + 2 * N);
  std::copy(d.data.begin(), d.data.end(), x.data() + 3 * N);
  return x;
}

void unpack(const RVec& x, State& s) {
  const std::size_t N = s.theta.plane();
  std::copy(x.data(), x.data() + 2 * N, s.u.data.begin());
  std::copy(x.data() + 2 * N, x.data() + 3 * N, s.theta.data.begin());
  std::copy(x.data() + 3 * N, x.data() + 5 * N, s.d.data.begin());
}

}  // namespace

Linearization linearize_at_equilibrium(const Simulator& sim, double theta_star, const RVec& d_star, double rel_step) {
  const Grid& g = sim.grid();
  const std::size_t N = g.size();
  if (5 * N > 20000) throw Error(ErrorKind::Argument, "linearize: grid too large for a dense Jacobian");
  if (d_star.size() != 2) throw Error(ErrorKind::Argument, "linearize: d_star must have 2 components");
  State eq = State::zeros(g);
  std::fill(eq.theta.data.begin(), eq.theta.data.end(), theta_star);
  for (std::size_t k = 0; k < N; ++k) {
    eq.d.comp(0)[k] = d_star(0);
    eq.d.comp(1)[k] = d_star(1);
  }
  const RVec x0 = pack(eq.u, eq.theta, eq.d);
  const long dim = static_cast<long>(x0.size());

  Linearization lin;
  lin.A.resize(dim, dim);
  State s = eq;
  for (long j = 0; j < dim; ++j) {
    const double h = rel_step * std::max(1.0, std::abs(x0(j)));
    RVec x = x0;
    x(j) = x0(j) + h;
    unpack(x, s);
    const Tendency fp = sim.full_rhs(s);
    x(j) = x0(j) - h;
    unpack(x, s);
    const Tendency fm = sim.full_rhs(s);
    const RVec col = (pack(fp.u, fp.theta, fp.d) - pack(fm.u, fm.theta, fm.d)) / (2.0 * h);
    if (!col.allFinite()) throw Error(ErrorKind::BlowUp, "linearize: non-finite Jacobian column");
    lin.A.col(j) = col;
  }

  // Orthonormal basis of the range of the projection for the velocity block.
  const long nu = static_cast<long>(2 * N);
  RMat P(nu, nu);
  Field e = Field::vector(g);
  for (long j = 0; j < nu; ++j) {
    std::fill(e.data.begin(), e.data.end(), 0.0);
    e.data[j] = 1.0;
    sim.projector().project(e);
    P.col(j) = Eigen::Map<const RVec>(e.data.data(), nu);
  }
  Eigen::SelfAdjointEigenSolver<RMat> es(0.5 * (P + P.transpose()));
  std::vector<long> keep;
  for (long k = 0; k < nu; ++k)
    if (es.eigenvalues()(k) > 0.5) keep.push_back(k);
  const long r = static_cast<long>(keep.size());
  lin.basis = RMat::Zero(dim, r + 3 * static_cast<long>(N));
  for (long k = 0; k < r; ++k) lin.basis.block(0, k, nu, 1) = es.eigenvectors().col(keep[k]);
  for (long k = 0; k < 3 * static_cast<long>(N); ++k) lin.basis(nu + k, r + k) = 1.0;
  lin.reduced = lin.basis.transpose() * lin.A * lin.basis;
  return lin;
}

SpectrumResult spectrum_check(const RMat& A, double kernel_rel_tol) {
  if (A.rows() != A.cols() || A.rows() == 0) throw Error(ErrorKind::Argument, "spectrum: square matrix required");
  SpectrumResult r;
  Eigen::BDCSVD<RMat> svd(A);
  const RVec sv = svd.singularValues();
  r.norm = sv(0);
  const double tol = kernel_rel_tol * r.norm;
  r.nullity_A = static_cast<int>((sv.array() <= tol).count());
  const RMat A2 = A * A;
  Eigen::BDCSVD<RMat> svd2(A2);
  r.nullity_A2 = static_cast<int>((svd2.singularValues().array() <= kernel_rel_tol * r.norm * r.norm).count());

  Eigen::EigenSolver<RMat> es(A, false);
  if (es.info() != Eigen::Success) throw Error(ErrorKind::Solver, "spectrum: eigensolver failed");
  for (long k = 0; k < A.rows(); ++k) r.eigenvalues.push_back(es.eigenvalues()(k));
  std::sort(r.eigenvalues.begin(), r.eigenvalues.end(),
            [](cplx a, cplx b) { return a.real() != b.real() ? a.real() > b.real() : a.imag() > b.imag(); });
  double max_re = -std::numeric_limits<double>::infinity();
  for (const cplx& ev : r.eigenvalues) {
    if (std::abs(ev) <= tol) {
      ++r.kernel_dim;
    } else if (ev.real() > max_re) {
      max_re = ev.real();
      r.slowest = ev;
    }
  }
  r.spectral_gap = -max_re;
  r.semisimple = r.nullity_A == r.kernel_dim && r.nullity_A2 == r.nullity_A;
  return r;
}

}  // namespace ellab
