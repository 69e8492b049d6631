/// @file grid.hpp
/// @brief Cell-centred 2D fields, stencils, Helmholtz projection and quadrature.
///
/// Layout: cell (i, j) sits at x = (i + 1/2) hx, y = (j + 1/2) hy and is stored at
/// index j * nx + i. Multi-component fields are stored as consecutive component
/// planes. Tensor component (a, b) is plane 2 * a + b.
///
/// Bounded grids use reflection ghosts: Parity::Odd for no-slip quantities
/// (the wall value interpolates to 0), Parity::Even for homogeneous Neumann.
#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace ellab {

enum class Boundary { Periodic, Bounded };
enum class Parity { Even, Odd };

inline Parity flip(Parity p) { return p == Parity::Even ? Parity::Odd : Parity::Even; }

struct Grid {
  int nx = 32, ny = 32;
  double lx = 6.283185307179586, ly = 6.283185307179586;
  Boundary bc = Boundary::Periodic;

  /// Throws ErrorKind::Argument for nx, ny < 8 or non-positive lengths.
  static Grid make(int nx, int ny, double lx, double ly, Boundary bc);

  double hx() const { return lx / nx; }
  double hy() const { return ly / ny; }
  double cell_area() const { return hx() * hy(); }
  double volume() const { return lx * ly; }
  std::size_t size() const { return static_cast<std::size_t>(nx) * ny; }
  double x(int i) const { return (i + 0.5) * hx(); }
  double y(int j) const { return (j + 0.5) * hy(); }
  bool periodic() const { return bc == Boundary::Periodic; }
  bool operator==(const Grid&) const = default;
};

struct Field {
  int rank = 0;  // 0 scalar, 1 vector, 2 tensor
  int nx = 0, ny = 0;
  std::vector<double> data;

  Field() = default;
  Field(int rank, int nx, int ny, double fill = 0.0);
  static Field scalar(const Grid& g, double fill = 0.0) { return Field(0, g.nx, g.ny, fill); }
  static Field vector(const Grid& g, double fill = 0.0) { return Field(1, g.nx, g.ny, fill); }
  static Field tensor(const Grid& g, double fill = 0.0) { return Field(2, g.nx, g.ny, fill); }

  int ncomp() const { return rank == 0 ? 1 : (rank == 1 ? 2 : 4); }
  std::size_t plane() const { return static_cast<std::size_t>(nx) * ny; }
  double* comp(int c) { return data.data() + c * plane(); }
  const double* comp(int c) const { return data.data() + c * plane(); }
  double& at(int c, int i, int j) { return data[c * plane() + static_cast<std::size_t>(j) * nx + i]; }
  double at(int c, int i, int j) const { return data[c * plane() + static_cast<std::size_t>(j) * nx + i]; }
  bool all_finite() const;
  bool same_shape(const Field& o) const { return rank == o.rank && nx == o.nx && ny == o.ny; }
};

/// Worker count for row-parallel loops, from EL_THREADS (default 1).
int worker_count();
void set_worker_count(int n);

// ---------------------------------------------------------------------------
// Plane-level stencils. `p` is the ghost parity of the input on bounded grids.
// ---------------------------------------------------------------------------

/// Central difference (f_{i+1} - f_{i-1}) / 2h.
void ddx(const Grid& g, const double* f, Parity p, double* out);
void ddy(const Grid& g, const double* f, Parity p, double* out);

/// Face arrays: x-faces hold (nx+1)*ny values, entry j*(nx+1)+i is the face
/// between cells i-1 and i; y-faces hold nx*(ny+1) values, entry j*nx+i is the
/// face between rows j-1 and j. Periodic grids duplicate the first face at the end.
struct FacePair {
  std::vector<double> x, y;
  FacePair() = default;
  explicit FacePair(const Grid& g, double fill = 0.0)
      : x(static_cast<std::size_t>(g.nx + 1) * g.ny, fill), y(static_cast<std::size_t>(g.nx) * (g.ny + 1), fill) {}
};

/// One-sided face difference (f_i - f_{i-1}) / h, including boundary faces.
void face_diff(const Grid& g, const double* f, Parity p, FacePair& out);
/// Arithmetic face average (f_{i-1} + f_i) / 2.
void face_avg(const Grid& g, const double* f, Parity p, FacePair& out);
/// Divergence of a face flux: (F_{i+1/2} - F_{i-1/2}) / hx + (G_{j+1/2} - G_{j-1/2}) / hy.
void face_div(const Grid& g, const FacePair& flux, double* out);
/// Cell value 1/2 * (sum of the four adjacent face values); boundary faces
/// therefore enter the domain total with weight 1/2.
void face_to_cell(const Grid& g, const FacePair& q, double* out);

/// Compact div(c grad f) with face-averaged c (c == nullptr means c = 1).
void flux_div(const Grid& g, const double* f, Parity p, const double* c, double* out);

// ---------------------------------------------------------------------------
// Field-level operators.
// ---------------------------------------------------------------------------

/// Central gradient. Scalar -> vector (d_x f, d_y f); vector -> tensor with
/// component (a, b) = d_b u_a.
Field gradient(const Grid& g, const Field& f, Parity p = Parity::Even);
/// Central divergence. Vector -> scalar; tensor -> vector (div T)_a = d_b T_ab.
Field divergence(const Grid& g, const Field& F, Parity p = Parity::Even);
/// Compact 5-point Laplacian per component.
Field laplacian(const Grid& g, const Field& f, Parity p = Parity::Even);
/// Conservative div(lambda grad d) per component, lambda averaged to faces.
Field div_lambda_grad(const Grid& g, const Field& d, const Field& lambda);
/// D = sym(grad u), V = skew(grad u).
std::pair<Field, Field> deformation_vorticity(const Field& grad_u);

/// Midpoint quadrature; row sums in long double, combined in fixed row order.
double integrate(const Grid& g, const double* f);
double integrate(const Grid& g, const Field& f);
/// sum_cells h^2 <a, b> over all components.
double inner(const Grid& g, const Field& a, const Field& b);
double l2_norm(const Grid& g, const Field& f);
double max_abs(const Field& f);

// ---------------------------------------------------------------------------
// Helmholtz projection onto the kernel of the central divergence.
// ---------------------------------------------------------------------------

enum class PoissonMethod { Spectral, CG };

struct PoissonFailure {
  int iterations = 0;
  double residual = 0;
};

/// P u = u - grad phi with div grad phi = div u. Periodic grids use the FFT;
/// bounded grids use the DCT-II (exact) or conjugate gradients. Both produce
/// an orthogonal projector for the discrete inner product.
class Projector {
 public:
  explicit Projector(const Grid& g, PoissonMethod method = PoissonMethod::Spectral, double cg_tol = 1e-10,
                     int cg_max_iter = 0);
  ~Projector();
  Projector(const Projector&) = delete;
  Projector& operator=(const Projector&) = delete;

  /// Projects u in place; stores the mean-zero potential in *phi when given.
  void project(Field& u, Field* phi = nullptr) const;
  const Grid& grid() const { return grid_; }
  PoissonMethod method() const { return method_; }
  /// Iterations used by the most recent CG solve (0 for spectral).
  int last_iterations() const { return last_iterations_; }

 private:
  void solve_spectral(std::vector<double>& rhs) const;
  void solve_cg(std::vector<double>& rhs) const;

  Grid grid_;
  PoissonMethod method_;
  double cg_tol_;
  int cg_max_iter_;
  mutable int last_iterations_ = 0;
  struct Plans;
  std::unique_ptr<Plans> plans_;
};

/// Convenience wrapper returning (u_sol, pi) with pi = phi (mean zero).
std::pair<Field, Field> helmholtz_project(const Grid& g, const Field& u,
                                          PoissonMethod method = PoissonMethod::Spectral);

// ---------------------------------------------------------------------------
// Snapshot format: 32-byte header ("ELF2", u32 version, u8 rank, u32 nx,
// u32 ny, zero pad) then little-endian float64 component planes.
// ---------------------------------------------------------------------------

void write_field(std::ostream& os, const Field& f);
Field read_field(std::istream& is);
void write_snapshot(const std::string& path, const std::vector<const Field*>& fields);
std::vector<Field> read_snapshot(const std::string& path);

}  // namespace ellab
