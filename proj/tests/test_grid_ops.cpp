#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>

#include "ellab/errors.hpp"
#include "ellab/grid.hpp"

using namespace ellab;

namespace {

constexpr double kPi = std::numbers::pi;

using Fn = std::function<double(double, double)>;

Field sample(const Grid& g, const Fn& f) {
  Field out = Field::scalar(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) out.at(0, i, j) = f(g.x(i), g.y(j));
  return out;
}

Field sample2(const Grid& g, const Fn& fx, const Fn& fy) {
  Field out = Field::vector(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      out.at(0, i, j) = fx(g.x(i), g.y(j));
      out.at(1, i, j) = fy(g.x(i), g.y(j));
    }
  return out;
}

double max_diff(const Field& a, const Field& b) {
  double m = 0;
  for (std::size_t k = 0; k < a.data.size(); ++k) m = std::max(m, std::abs(a.data[k] - b.data[k]));
  return m;
}

Field random_field(const Grid& g, int rank, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N(0.0, 1.0);
  Field f(rank, g.nx, g.ny);
  for (double& v : f.data) v = N(rng);
  return f;
}

// Smooth random field from a few low modes, compatible with either parity.
Field smooth_field(const Grid& g, int rank, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N(0.0, 1.0);
  Field f(rank, g.nx, g.ny);
  for (int c = 0; c < f.ncomp(); ++c)
    for (int m = 0; m <= 2; ++m)
      for (int l = 0; l <= 2; ++l) {
        const double a = N(rng), px = N(rng), py = N(rng);
        for (int j = 0; j < g.ny; ++j)
          for (int i = 0; i < g.nx; ++i)
            f.at(c, i, j) += a * std::cos(2 * kPi * m * g.x(i) / g.lx + px) * std::cos(2 * kPi * l * g.y(j) / g.ly + py);
      }
  return f;
}

double slope(double e_coarse, double e_fine) { return std::log2(e_coarse / e_fine); }

}  // namespace

TEST_CASE("grid construction") {
  const Grid g = Grid::make(16, 24, 2.0, 3.0, Boundary::Bounded);
  CHECK(g.hx() == doctest::Approx(0.125));
  CHECK(g.hy() == doctest::Approx(0.125));
  CHECK(g.size() == 16u * 24u);
  CHECK(g.x(0) == doctest::Approx(0.0625));
  CHECK_THROWS_AS(Grid::make(7, 16, 1.0, 1.0, Boundary::Periodic), Error);
  CHECK_THROWS_AS(Grid::make(16, 16, 0.0, 1.0, Boundary::Periodic), Error);
  Field f = Field::tensor(g);
  CHECK(f.ncomp() == 4);
  CHECK(f.data.size() == 4 * g.size());
  CHECK(f.all_finite());
  f.data[3] = std::nan("");
  CHECK_FALSE(f.all_finite());
}

TEST_CASE("gradient of a constant vanishes") {
  for (Boundary bc : {Boundary::Periodic, Boundary::Bounded}) {
    const Grid g = Grid::make(12, 10, 1.0, 2.0, bc);
    const Field c = Field::scalar(g, 3.5);
    CHECK(max_abs(gradient(g, c, Parity::Even)) == 0.0);
    CHECK(max_abs(laplacian(g, c, Parity::Even)) == 0.0);
  }
}

TEST_CASE("periodic gradient converges at second order") {
  double prev = 0;
  for (int n : {16, 32, 64, 128}) {
    const Grid g = Grid::make(n, n, 2.0, 3.0, Boundary::Periodic);
    const Field f = sample(g, [&](double x, double) { return std::sin(2 * kPi * x / g.lx); });
    const Field exact = sample2(
        g, [&](double x, double) { return 2 * kPi / g.lx * std::cos(2 * kPi * x / g.lx); },
        [](double, double) { return 0.0; });
    const double err = max_diff(gradient(g, f), exact);
    if (prev > 0) CHECK(slope(prev, err) >= 1.9);
    prev = err;
  }
}

TEST_CASE("bounded gradient of an even field converges at second order up to the wall") {
  double prev = 0;
  for (int n : {16, 32, 64, 128}) {
    const Grid g = Grid::make(n, n, 1.0, 1.0, Boundary::Bounded);
    // even about both walls: zero normal derivative
    auto f = [](double x, double y) { return std::cos(kPi * x) * (1.0 + 0.5 * std::cos(2 * kPi * y)); };
    const Field F = sample(g, f);
    const Field exact = sample2(
        g, [](double x, double y) { return -kPi * std::sin(kPi * x) * (1.0 + 0.5 * std::cos(2 * kPi * y)); },
        [](double x, double y) { return -kPi * std::cos(kPi * x) * std::sin(2 * kPi * y); });
    const double err = max_diff(gradient(g, F, Parity::Even), exact);
    if (prev > 0) CHECK(slope(prev, err) >= 1.9);
    prev = err;
  }
}

TEST_CASE("divergence is the negative adjoint of the gradient") {
  SUBCASE("periodic") {
    const Grid g = Grid::make(16, 12, 1.0, 1.5, Boundary::Periodic);
    const Field f = random_field(g, 0, 1), F = random_field(g, 1, 2);
    const double s = inner(g, gradient(g, f), F) + inner(g, f, divergence(g, F));
    CHECK(std::abs(s) <= 1e-12 * l2_norm(g, f) * l2_norm(g, F) * 100);
  }
  SUBCASE("bounded, even scalar against odd vector") {
    const Grid g = Grid::make(16, 12, 1.0, 1.5, Boundary::Bounded);
    const Field f = random_field(g, 0, 3), F = random_field(g, 1, 4);
    const double s = inner(g, gradient(g, f, Parity::Even), F) + inner(g, f, divergence(g, F, Parity::Odd));
    CHECK(std::abs(s) <= 1e-12 * l2_norm(g, f) * l2_norm(g, F) * 100);
  }
  SUBCASE("tensor divergence against vector gradient") {
    const Grid g = Grid::make(12, 12, 1.0, 1.0, Boundary::Periodic);
    const Field u = random_field(g, 1, 5), T = random_field(g, 2, 6);
    const double s = inner(g, gradient(g, u), T) + inner(g, u, divergence(g, T));
    CHECK(std::abs(s) <= 1e-10);
  }
}

TEST_CASE("divergence of constants and the discrete divergence theorem") {
  const Grid g = Grid::make(20, 16, 2.0, 1.0, Boundary::Periodic);
  CHECK(max_abs(divergence(g, Field::vector(g, 1.7))) == 0.0);
  const Field F = random_field(g, 1, 9);
  CHECK(std::abs(integrate(g, divergence(g, F))) <= 1e-13);
}

TEST_CASE("divergence of a gradient approximates the Laplacian") {
  double prev = 0;
  for (int n : {32, 64, 128}) {
    const Grid g = Grid::make(n, n, 1.0, 1.0, Boundary::Periodic);
    auto f = [](double x, double y) { return std::sin(2 * kPi * x) * std::cos(4 * kPi * y); };
    const Field lap = sample(g, [&](double x, double y) { return -20 * kPi * kPi * f(x, y); });
    const double err = max_diff(divergence(g, gradient(g, sample(g, f))), lap);
    if (prev > 0) CHECK(slope(prev, err) >= 1.9);
    prev = err;
  }
}

TEST_CASE("div(lambda grad d) with constant lambda is a scaled Laplacian") {
  const Grid g = Grid::make(16, 16, 1.0, 1.0, Boundary::Bounded);
  const Field d = random_field(g, 1, 12);
  const Field lam = Field::scalar(g, 2.5);
  const Field a = div_lambda_grad(g, d, lam), b = laplacian(g, d, Parity::Even);
  for (std::size_t k = 0; k < a.data.size(); ++k) CHECK(a.data[k] == doctest::Approx(2.5 * b.data[k]).epsilon(1e-13));
}

TEST_CASE("div(lambda grad d) of a harmonic director vanishes") {
  // periodic harmonic fields are constant
  const Grid g = Grid::make(32, 32, 1.0, 1.0, Boundary::Periodic);
  const Field d = Field::vector(g, 0.7);
  CHECK(max_abs(div_lambda_grad(g, d, Field::scalar(g, 1.0))) == 0.0);
}

TEST_CASE("div(lambda grad d) obeys the product rule to second order") {
  double prev = 0;
  for (int n : {16, 32, 64, 128}) {
    const Grid g = Grid::make(n, n, 1.0, 1.0, Boundary::Periodic);
    const double k = 2 * kPi;
    auto lam = [&](double x, double y) { return 1.0 + 0.5 * std::sin(k * x) * std::cos(k * y); };
    auto d1 = [&](double x, double y) { return std::cos(k * x + 0.3) * std::sin(2 * k * y); };
    auto d2 = [&](double x, double y) { return std::sin(k * y - 0.2); };
    // lambda Delta d + grad lambda . grad d
    auto lx = [&](double x, double y) { return 0.5 * k * std::cos(k * x) * std::cos(k * y); };
    auto ly = [&](double x, double y) { return -0.5 * k * std::sin(k * x) * std::sin(k * y); };
    auto e1 = [&](double x, double y) {
      const double dx = -k * std::sin(k * x + 0.3) * std::sin(2 * k * y);
      const double dy = 2 * k * std::cos(k * x + 0.3) * std::cos(2 * k * y);
      return lam(x, y) * (-5 * k * k * d1(x, y)) + lx(x, y) * dx + ly(x, y) * dy;
    };
    auto e2 = [&](double x, double y) { return lam(x, y) * (-k * k * d2(x, y)) + ly(x, y) * k * std::cos(k * y - 0.2); };
    const Field out = div_lambda_grad(g, sample2(g, d1, d2), sample(g, lam));
    const double err = max_diff(out, sample2(g, e1, e2));
    if (prev > 0) CHECK(slope(prev, err) >= 1.9);
    prev = err;
  }
}

TEST_CASE("face operators") {
  const Grid g = Grid::make(10, 8, 1.0, 1.0, Boundary::Bounded);
  const Field f = random_field(g, 0, 21);
  FacePair fd(g), fa(g);
  face_diff(g, f.comp(0), Parity::Odd, fd);
  face_avg(g, f.comp(0), Parity::Odd, fa);
  // odd ghosts: the wall average vanishes, the wall difference is 2 f / h
  CHECK(fa.x[0] == doctest::Approx(0.0));
  CHECK(fd.x[0] == doctest::Approx(2 * f.at(0, 0, 0) / g.hx()));
  face_diff(g, f.comp(0), Parity::Even, fd);
  CHECK(fd.x[0] == 0.0);
  CHECK(fd.y[0] == 0.0);
  // face_to_cell: boundary faces enter the total with weight 1/2
  FacePair one(g, 1.0);
  std::vector<double> cell(g.size());
  face_to_cell(g, one, cell.data());
  CHECK(cell[0] == doctest::Approx(2.0));
  // conservative flux: the total of a face divergence is the boundary flux
  FacePair q(g, 0.0);
  for (double& v : q.x) v = 1.0;
  face_div(g, q, cell.data());
  CHECK(integrate(g, cell.data()) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("integration") {
  const Grid g = Grid::make(16, 16, 2.0, 3.0, Boundary::Bounded);
  CHECK(integrate(g, Field::scalar(g, 2.0)) == doctest::Approx(12.0).epsilon(1e-15));
  // exact for cellwise constants
  Field f = Field::scalar(g);
  double sum = 0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    f.data[k] = static_cast<double>(k % 7);
    sum += f.data[k];
  }
  CHECK(integrate(g, f) == doctest::Approx(sum * g.cell_area()).epsilon(1e-15));
  // second order for smooth fields
  double prev = 0;
  for (int n : {16, 32, 64}) {
    const Grid h = Grid::make(n, n, 1.0, 1.0, Boundary::Bounded);
    const double err = std::abs(integrate(h, sample(h, [](double x, double y) { return x * x * y; })) - 1.0 / 6.0);
    if (prev > 0) CHECK(slope(prev, err) >= 1.9);
    prev = err;
  }
  const Field v = random_field(g, 1, 3);
  CHECK(l2_norm(g, v) == doctest::Approx(std::sqrt(inner(g, v, v))));
}

TEST_CASE("projection: idempotent, divergence free, orthogonal") {
  for (Boundary bc : {Boundary::Periodic, Boundary::Bounded}) {
    CAPTURE(static_cast<int>(bc));
    const Grid g = Grid::make(24, 20, 1.0, 1.3, bc);
    const Projector P(g);
    const Field u = random_field(g, 1, 31);
    Field pu = u, pi;
    P.project(pu, &pi);
    Field ppu = pu;
    P.project(ppu);
    CHECK(max_diff(ppu, pu) <= 1e-12 * max_abs(u));
    CHECK(l2_norm(g, divergence(g, pu, Parity::Odd)) <= 1e-10 * l2_norm(g, u));
    Field r = u;
    for (std::size_t k = 0; k < r.data.size(); ++k) r.data[k] -= pu.data[k];
    CHECK(std::abs(inner(g, pu, r)) <= 1e-12 * inner(g, u, u));
    CHECK(std::abs(integrate(g, pi)) <= 1e-12 * max_abs(pi) * g.volume());
  }
}

TEST_CASE("projection removes gradients and keeps solenoidal fields") {
  for (Boundary bc : {Boundary::Periodic, Boundary::Bounded}) {
    const Grid g = Grid::make(16, 16, 1.0, 1.0, bc);
    const Field psi = random_field(g, 0, 41);
    const auto [p1, phi] = helmholtz_project(g, gradient(g, psi, Parity::Even));
    CHECK(max_abs(p1) <= 1e-12 * max_abs(gradient(g, psi, Parity::Even)));
    const auto [sol, unused] = helmholtz_project(g, random_field(g, 1, 42));
    const auto [sol2, unused2] = helmholtz_project(g, sol);
    CHECK(max_diff(sol, sol2) <= 1e-12 * max_abs(sol));
  }
}

TEST_CASE("conjugate gradient projection agrees with the DCT solve") {
  const Grid g = Grid::make(20, 16, 1.0, 0.8, Boundary::Bounded);
  const Field u = smooth_field(g, 1, 50);
  const auto [a, pa] = helmholtz_project(g, u, PoissonMethod::Spectral);
  const auto [b, pb] = helmholtz_project(g, u, PoissonMethod::CG);
  CHECK(max_diff(a, b) <= 1e-8 * max_abs(u));
  CHECK(max_diff(pa, pb) <= 1e-8 * std::max(1.0, max_abs(pa)));
  const Projector P(g, PoissonMethod::CG);
  Field w = u;
  P.project(w);
  CHECK(P.last_iterations() > 0);
}

TEST_CASE("conjugate gradient reports non-convergence") {
  const Grid g = Grid::make(32, 32, 1.0, 1.0, Boundary::Bounded);
  const Projector P(g, PoissonMethod::CG, 1e-14, 2);
  Field u = random_field(g, 1, 60);
  try {
    P.project(u);
    FAIL("expected a solver error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Solver);
    CHECK(std::string(e.what()).find("residual") != std::string::npos);
  }
}

TEST_CASE("deformation and vorticity split the velocity gradient") {
  const Grid g = Grid::make(8, 8, 1.0, 1.0, Boundary::Periodic);
  const Field G = random_field(g, 2, 70);
  const auto [D, V] = deformation_vorticity(G);
  for (std::size_t k = 0; k < g.size(); ++k) {
    CHECK(D.comp(1)[k] == D.comp(2)[k]);
    CHECK(V.comp(1)[k] == doctest::Approx(-V.comp(2)[k]).epsilon(1e-15));
    CHECK(V.comp(0)[k] == 0.0);
    for (int c = 0; c < 4; ++c) CHECK(D.comp(c)[k] + V.comp(c)[k] == doctest::Approx(G.comp(c)[k]));
  }
}

TEST_CASE("snapshot round trip is bitwise") {
  const Grid g = Grid::make(9, 11, 1.0, 1.0, Boundary::Bounded);
  const Field s = random_field(g, 0, 1), v = random_field(g, 1, 2), t = random_field(g, 2, 3);
  std::stringstream ss;
  write_field(ss, v);
  const std::string bytes = ss.str();
  REQUIRE(bytes.size() == 32 + 8 * v.data.size());
  CHECK(bytes.substr(0, 4) == "ELF2");
  CHECK(static_cast<unsigned char>(bytes[8]) == 1);
  CHECK(static_cast<unsigned char>(bytes[9]) == 9);
  CHECK(static_cast<unsigned char>(bytes[13]) == 11);
  const Field back = read_field(ss);
  CHECK(back.rank == 1);
  CHECK(back.data == v.data);

  const std::string path = (std::filesystem::temp_directory_path() / "ellab_snap_test.elf2").string();
  write_snapshot(path, {&s, &v, &t});
  const auto all = read_snapshot(path);
  REQUIRE(all.size() == 3);
  CHECK(all[0].data == s.data);
  CHECK(all[2].data == t.data);
  CHECK(all[2].rank == 2);
  std::filesystem::remove(path);

  std::stringstream bad("XXXX0000000000000000000000000000");
  CHECK_THROWS_AS(read_field(bad), Error);
}

TEST_CASE("worker count does not change results") {
  const Grid g = Grid::make(32, 32, 1.0, 1.0, Boundary::Bounded);
  const Field d = random_field(g, 1, 80);
  const Field lam = Field::scalar(g, 1.5);
  set_worker_count(1);
  const Field a = div_lambda_grad(g, d, lam);
  const double ia = integrate(g, a);
  set_worker_count(4);
  const Field b = div_lambda_grad(g, d, lam);
  const double ib = integrate(g, b);
  set_worker_count(1);
  CHECK(a.data == b.data);
  CHECK(ia == ib);
}
