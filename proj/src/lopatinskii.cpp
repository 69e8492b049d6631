#include <cmath>

#include "ellab/errors.hpp"
#include "ellab/linear_analysis.hpp"

namespace ellab {

namespace {

// Swaps the adjacent diagonal entries k, k+1 of the upper triangular T,
// updating the Schur vectors U so that A = U T U^H is preserved.
void swap_diagonal(CMat& T, CMat& U, int k) {
  const cplx a = T(k, k), b = T(k + 1, k + 1), c = T(k, k + 1);
  const cplx v0 = c, v1 = b - a;
  const double nv = std::hypot(std::abs(v0), std::abs(v1));
  if (nv == 0.0) return;
  const cplx g0 = v0 / nv, g1 = v1 / nv;
  Eigen::Matrix2cd G;
  G << g0, -std::conj(g1), g1, std::conj(g0);
  const int m = static_cast<int>(T.rows());
  T.middleRows(k, 2) = G.adjoint() * T.middleRows(k, 2);
  T.middleCols(k, 2) = T.middleCols(k, 2) * G;
  U.middleCols(k, 2) = U.middleCols(k, 2) * G;
  T(k + 1, k) = 0.0;
  (void)m;
}

CMat stable_basis_schur(const CMat& A, int& dim) {
  Eigen::ComplexSchur<CMat> cs(A);
  if (cs.info() != Eigen::Success) throw Error(ErrorKind::Solver, "lopatinskii: Schur decomposition failed");
  CMat T = cs.matrixT();
  CMat U = cs.matrixU();
  const int m = static_cast<int>(A.rows());
  int placed = 0;
  for (int i = 0; i < m; ++i) {
    if (T(i, i).real() < 0.0) {
      for (int k = i - 1; k >= placed; --k) swap_diagonal(T, U, k);
      ++placed;
    }
  }
  dim = placed;
  return U.leftCols(placed);
}

CMat stable_basis_eigen(const CMat& A, int& dim) {
  Eigen::ComplexEigenSolver<CMat> es(A);
  if (es.info() != Eigen::Success) throw Error(ErrorKind::Solver, "lopatinskii: eigen decomposition failed");
  std::vector<int> keep;
  for (int i = 0; i < A.rows(); ++i)
    if (es.eigenvalues()(i).real() < 0.0) keep.push_back(i);
  dim = static_cast<int>(keep.size());
  CMat V(A.rows(), dim);
  for (int k = 0; k < dim; ++k) V.col(k) = es.eigenvectors().col(keep[k]);
  Eigen::HouseholderQR<CMat> qr(V);
  return qr.householderQ() * CMat::Identity(A.rows(), dim);
}

}  // namespace

LopatinskiiResult lopatinskii_determinant(const FrozenCoefficients& fc, cplx z, const RVec& xi_t, const RVec& nu,
                                          StableBasis basis) {
  const int n = fc.n, m = 2 * n + 1;
  if (xi_t.size() != n || nu.size() != n) throw Error(ErrorKind::Argument, "lopatinskii: dimension mismatch");
  if (std::abs(nu.norm() - 1.0) > 1e-12) throw Error(ErrorKind::Argument, "lopatinskii: nu must be a unit vector");
  if (std::abs(xi_t.dot(nu)) > 1e-12 * std::max(1.0, xi_t.norm()))
    throw Error(ErrorKind::Argument, "lopatinskii: xi must be tangential");
  if (std::abs(z) == 0.0 && xi_t.norm() == 0.0) throw Error(ErrorKind::Argument, "lopatinskii: (z, xi) = (0, 0)");

  // L(z, xi_t + eta nu) = C0 + eta C1 + eta^2 C2, recovered exactly from three samples.
  auto L_at = [&](double eta) { return symbol_L(fc, z, CVec((xi_t + eta * nu).cast<cplx>())); };
  const CMat Lm = L_at(-1.0), L0 = L_at(0.0), Lp = L_at(1.0);
  const CMat C0 = L0, C1 = 0.5 * (Lp - Lm), C2 = 0.5 * (Lp + Lm) - L0;

  // v = e^{mu y} w with eta = -i mu:  C0 w - i mu C1 w - mu^2 C2 w = 0, i.e.
  // w'' = C2^{-1} (C0 w - i C1 w').
  Eigen::PartialPivLU<CMat> lu(C2);
  if (!(std::abs(lu.determinant()) > 0.0)) throw Error(ErrorKind::Singular, "lopatinskii: leading symbol singular");
  CMat A = CMat::Zero(2 * m, 2 * m);
  A.block(0, m, m, m) = CMat::Identity(m, m);
  A.block(m, 0, m, m) = lu.solve(C0);
  A.block(m, m, m, m) = -cplx(0.0, 1.0) * lu.solve(C1);

  LopatinskiiResult res;
  Eigen::ComplexEigenSolver<CMat> all(A, false);
  for (int i = 0; i < 2 * m; ++i) res.exponents.push_back(all.eigenvalues()(i));

  int dim = 0;
  const CMat Y = basis == StableBasis::Schur ? stable_basis_schur(A, dim) : stable_basis_eigen(A, dim);
  res.stable_dim = dim;
  if (dim != m) {
    throw Error(ErrorKind::Structure, "lopatinskii: stable subspace has dimension " + std::to_string(dim) +
                                          ", expected " + std::to_string(m));
  }

  CMat E(m, m);
  for (int k = 0; k < n; ++k) E.row(k) = Y.row(k);           // u(0) = 0
  E.row(n) = Y.row(m + n);                                  // theta'(0) = 0
  for (int k = 0; k < n; ++k) E.row(n + 1 + k) = Y.row(m + n + 1 + k);  // d'(0) = 0

  const cplx detE = E.determinant();
  const double gram = std::sqrt(std::abs((Y.adjoint() * Y).determinant()));
  const cplx top = Y.topRows(m).determinant();
  const cplx phase = std::abs(top) > 0.0 ? std::abs(top) / top : cplx(1.0);
  res.value = detE / gram * phase;
  return res;
}

}  // namespace ellab
