#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "ellab/errors.hpp"
#include "ellab/simulator.hpp"
#include "simplified_oracle.hpp"

using namespace ellab;

namespace {

constexpr double kPi = std::numbers::pi;

CoefficientSet coeffs() {
  CoefficientSet c;
  c.rho = 1.0;
  c.mu_s = Poly2::constant(0.9);
  c.mu_s.c[1][0] = 0.05;  // mild temperature dependence
  c.mu_s.c[0][1] = 0.1;
  c.mu_V = Poly2::constant(1.0);
  c.mu_D = Poly2::constant(0.5);
  c.mu_P = Poly2::constant(0.3);
  c.mu_L = Poly2::constant(0.2);
  c.mu_0 = Poly2::constant(0.1);
  c.gamma = Poly2::constant(1.0);
  c.alpha = Poly2::constant(1.0);
  return c;
}

FreeEnergyModel model(double b = 0.3) {
  FreeEnergyModel m;
  m.b = b;
  return m;
}

SimParams params(Boundary bc, int n = 16, double b = 0.3) {
  SimParams p;
  p.grid = Grid::make(n, n, 2.0 * kPi, 2.0 * kPi, bc);
  p.coeffs = coeffs();
  p.model = model(b);
  return p;
}

State equilibrium(const Grid& g, double theta, double angle) {
  State s = State::zeros(g);
  for (double& v : s.theta.data) v = theta;
  for (std::size_t k = 0; k < g.size(); ++k) {
    s.d.comp(0)[k] = std::cos(angle);
    s.d.comp(1)[k] = std::sin(angle);
  }
  return s;
}

double max_abs_all(const Tendency& t) { return std::max({max_abs(t.u), max_abs(t.theta), max_abs(t.d)}); }

State shifted(const State& s, double eps, const Tendency& F) {
  State r = s;
  for (std::size_t k = 0; k < r.u.data.size(); ++k) r.u.data[k] += eps * F.u.data[k];
  for (std::size_t k = 0; k < r.theta.data.size(); ++k) r.theta.data[k] += eps * F.theta.data[k];
  for (std::size_t k = 0; k < r.d.data.size(); ++k) r.d.data[k] += eps * F.d.data[k];
  return r;
}

double state_diff(const State& a, const State& b) {
  double m = 0;
  for (std::size_t k = 0; k < a.u.data.size(); ++k) m = std::max(m, std::abs(a.u.data[k] - b.u.data[k]));
  for (std::size_t k = 0; k < a.theta.data.size(); ++k) m = std::max(m, std::abs(a.theta.data[k] - b.theta.data[k]));
  for (std::size_t k = 0; k < a.d.data.size(); ++k) m = std::max(m, std::abs(a.d.data[k] - b.d.data[k]));
  return m;
}

State advance_to(const Simulator& sim, State s, double T, int steps, Scheme sc) {
  const double dt = T / steps;
  for (int k = 0; k < steps; ++k) sim.step(s, dt, sc);
  return s;
}

}  // namespace

TEST_CASE("uniform equilibria are fixed points") {
  for (Boundary bc : {Boundary::Periodic, Boundary::Bounded}) {
    Simulator sim(params(bc));
    const State s = equilibrium(sim.grid(), 1.3, 0.7);
    const Tendency F = sim.full_rhs(s);
    CHECK(max_abs_all(F) < 1e-13);
    CHECK(max_abs(F.pi) < 1e-13);
  }
}

TEST_CASE("director tendency is orthogonal to d") {
  for (Boundary bc : {Boundary::Periodic, Boundary::Bounded}) {
    Simulator sim(params(bc));
    const State s = initial_data(sim.grid(), sim.params().model, InitialKind::RandomSmooth, 0.4, 3);
    const Tendency F = sim.full_rhs(s);
    double worst = 0, scale = 0;
    for (std::size_t k = 0; k < s.d.plane(); ++k) {
      worst = std::max(worst, std::abs(s.d.comp(0)[k] * F.d.comp(0)[k] + s.d.comp(1)[k] * F.d.comp(1)[k]));
      scale = std::max(scale, std::hypot(F.d.comp(0)[k], F.d.comp(1)[k]));
    }
    CHECK(scale > 1e-3);
    CHECK(worst < 1e-12 * scale);
  }
}

TEST_CASE("velocity tendency is discretely divergence free") {
  for (Boundary bc : {Boundary::Periodic, Boundary::Bounded}) {
    Simulator sim(params(bc));
    const Grid& g = sim.grid();
    const State s = initial_data(g, sim.params().model, InitialKind::RandomSmooth, 0.4, 5);
    const Tendency F = sim.full_rhs(s);
    std::vector<double> a(g.size()), b(g.size());
    ddx(g, F.u.comp(0), Parity::Odd, a.data());
    ddy(g, F.u.comp(1), Parity::Odd, b.data());
    double worst = 0;
    for (std::size_t k = 0; k < g.size(); ++k) worst = std::max(worst, std::abs(a[k] + b[k]));
    CHECK(worst < 1e-11 * std::max(1.0, max_abs(F.u)));
    CHECK(std::abs(integrate(g, F.pi)) < 1e-11);
  }
}

TEST_CASE("semi-discrete energy is conserved along the tendency") {
  for (Boundary bc : {Boundary::Periodic, Boundary::Bounded}) {
    CAPTURE(static_cast<int>(bc));
    Simulator sim(params(bc));
    const State s = initial_data(sim.grid(), sim.params().model, InitialKind::RandomSmooth, 0.4, 11);
    const Tendency F = sim.full_rhs(s);
    const double eps = 1e-4;
    const double dE = (sim.diagnostics(shifted(s, eps, F)).E - sim.diagnostics(shifted(s, -eps, F)).E) / (2 * eps);
    const double dK =
        (sim.diagnostics(shifted(s, eps, F)).kinetic - sim.diagnostics(shifted(s, -eps, F)).kinetic) / (2 * eps);
    CAPTURE(dE);
    CAPTURE(dK);
    CHECK(std::abs(dK) > 1e-2);
    CHECK(std::abs(dE) < 1e-6 * std::abs(dK));
  }
}

TEST_CASE("entropy production is non-negative") {
  for (Boundary bc : {Boundary::Periodic, Boundary::Bounded})
    for (unsigned seed : {1u, 2u, 3u}) {
      Simulator sim(params(bc));
      const State s = initial_data(sim.grid(), sim.params().model, InitialKind::RandomSmooth, 0.4, seed);
      const Tendency F = sim.full_rhs(s);
      const double eps = 1e-5;
      const double dN = (sim.diagnostics(shifted(s, eps, F)).N - sim.diagnostics(shifted(s, -eps, F)).N) / (2 * eps);
      CAPTURE(dN);
      CHECK(dN > 0.0);
    }
}

TEST_CASE("isothermal director equation matches the simplified model") {
  // mu_V = gamma, b = 0, frozen temperature; l1 = -gamma/lambda, l2 = mu_D/lambda.
  for (Boundary bc : {Boundary::Periodic, Boundary::Bounded})
    for (bool smooth : {true, false}) {
      SimParams p = params(bc, 16, 0.0);
      p.isothermal = true;
      p.coeffs.mu_V = Poly2::constant(1.3);
      p.coeffs.gamma = Poly2::constant(1.3);
      p.model.lambda_0 = 0.7;
      Simulator sim(p);
      const Grid& g = sim.grid();
      const State s = smooth ? initial_data(g, p.model, InitialKind::RandomSmooth, 0.5, 21)
                             : oracle::random_state(g, 1.0, 21);
      const auto [l1, l2] = simplified_coefficients(1.3, 0.7, 0.5);
      CHECK(l1 == doctest::Approx(-1.3 / 0.7));
      CHECK(l2 == doctest::Approx(0.5 / 0.7));
      const auto [worst, scale] = oracle::mismatch(sim.director_rhs(s), oracle::simplified_director_rhs(g, s, l1, l2));
      CHECK(scale > 1e-2);
      CHECK(worst < 1e-12 * std::max(1.0, scale));
    }
}

TEST_CASE("rhs and stepping are deterministic") {
  Simulator sim(params(Boundary::Periodic));
  const State s = initial_data(sim.grid(), sim.params().model, InitialKind::RandomSmooth, 0.3, 4);
  State a = s, b = s;
  const double dt = 0.5 * sim.stable_dt(s);
  for (int k = 0; k < 5; ++k) {
    sim.step(a, dt, Scheme::RK4);
    sim.step(b, dt, Scheme::RK4);
  }
  CHECK(a.u.data == b.u.data);
  CHECK(a.theta.data == b.theta.data);
  CHECK(a.d.data == b.d.data);
}

TEST_CASE("worker count does not change the result") {
  Simulator sim(params(Boundary::Bounded));
  const State s = initial_data(sim.grid(), sim.params().model, InitialKind::RandomSmooth, 0.3, 4);
  const int saved = worker_count();
  set_worker_count(1);
  const Tendency a = sim.full_rhs(s);
  set_worker_count(4);
  const Tendency b = sim.full_rhs(s);
  set_worker_count(saved);
  CHECK(a.u.data == b.u.data);
  CHECK(a.theta.data == b.theta.data);
  CHECK(a.d.data == b.d.data);
}

TEST_CASE("blow-up and positivity raise StepError with the last valid time") {
  Simulator sim(params(Boundary::Periodic));
  State s = initial_data(sim.grid(), sim.params().model, InitialKind::RandomSmooth, 0.3, 4);
  s.t = 0.25;
  const State before = s;
  bool thrown = false;
  try {
    for (int k = 0; k < 50; ++k) sim.step(s, 1e3, Scheme::RK4);
  } catch (const StepError& e) {
    thrown = true;
    CHECK((e.kind() == ErrorKind::BlowUp || e.kind() == ErrorKind::Positivity));
    CHECK(e.last_valid_time() >= 0.25);
    CHECK(s.t == e.last_valid_time());
  }
  CHECK(thrown);

  State bad = before;
  bad.theta.data[7] = -0.1;
  try {
    sim.step(bad, 1e-3, Scheme::RK4);
    FAIL("expected StepError");
  } catch (const StepError& e) {
    CHECK(e.kind() == ErrorKind::Positivity);
    CHECK(e.last_valid_time() == 0.25);
  }
  CHECK(bad.theta.data[7] == -0.1);

  CHECK_THROWS_AS(sim.step(bad, 0.0, Scheme::RK4), Error);
}

TEST_CASE("RK4 is fourth order and IMEX first order in time") {
  Simulator sim(params(Boundary::Periodic, 12));
  const State s = initial_data(sim.grid(), sim.params().model, InitialKind::EqPerturb, 0.3, 9);
  const double dt0 = 0.5 * sim.stable_dt(s);
  const double T = 8 * dt0;
  const State a = advance_to(sim, s, T, 8, Scheme::RK4);
  const State b = advance_to(sim, s, T, 16, Scheme::RK4);
  const State c = advance_to(sim, s, T, 32, Scheme::RK4);
  const double r4 = state_diff(a, b) / state_diff(b, c);
  CAPTURE(r4);
  CHECK(r4 > 13.0);
  CHECK(r4 < 19.0);

  const State ia = advance_to(sim, s, T, 8, Scheme::IMEX);
  const State ib = advance_to(sim, s, T, 16, Scheme::IMEX);
  const State ic = advance_to(sim, s, T, 32, Scheme::IMEX);
  const double r1 = state_diff(ia, ib) / state_diff(ib, ic);
  CAPTURE(r1);
  CHECK(r1 > 1.7);
  CHECK(r1 < 2.3);
}

TEST_CASE("initial data properties") {
  for (Boundary bc : {Boundary::Periodic, Boundary::Bounded})
    for (InitialKind kind : {InitialKind::EqPerturb, InitialKind::TaylorGreenDirector, InitialKind::RandomSmooth}) {
      const Grid g = Grid::make(24, 24, 2.0 * kPi, 2.0 * kPi, bc);
      const FreeEnergyModel m = model();
      const State a = initial_data(g, m, kind, 0.4, 17, 0.3);
      const State b = initial_data(g, m, kind, 0.4, 17, 0.3);
      CHECK(a.u.data == b.u.data);
      CHECK(a.d.data == b.d.data);
      CHECK(a.theta.data == b.theta.data);
      for (std::size_t k = 0; k < g.size(); ++k) {
        CHECK(std::hypot(a.d.comp(0)[k], a.d.comp(1)[k]) == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(a.theta.data[k] >= 0.5 * m.theta_ref);
      }
      std::vector<double> dx(g.size()), dy(g.size());
      ddx(g, a.u.comp(0), Parity::Odd, dx.data());
      ddy(g, a.u.comp(1), Parity::Odd, dy.data());
      double div = 0;
      for (std::size_t k = 0; k < g.size(); ++k) div = std::max(div, std::abs(dx[k] + dy[k]));
      CHECK(div < 1e-12);
      CHECK(max_abs(a.u) > 0.0);
      if (bc == Boundary::Bounded) {
        // Wall-adjacent velocity relative to the maximum is O(h): halves under refinement.
        auto wall_ratio = [&](int n) {
          const Grid gg = Grid::make(n, n, 2.0 * kPi, 2.0 * kPi, bc);
          const State w = initial_data(gg, m, kind, 0.4, 17, 0.3);
          double wall = 0;
          for (int j = 0; j < gg.ny; ++j)
            for (int c = 0; c < 2; ++c)
              wall = std::max({wall, std::abs(w.u.at(c, 0, j)), std::abs(w.u.at(c, gg.nx - 1, j))});
          return wall / max_abs(w.u);
        };
        const double r24 = wall_ratio(24), r48 = wall_ratio(48);
        CAPTURE(r24);
        CAPTURE(r48);
        CHECK(r24 < 0.2);
        CHECK(r24 / r48 > 1.7);
      }
    }
  const Grid g = Grid::make(16, 16, 1.0, 1.0, Boundary::Periodic);
  const State z = initial_data(g, model(), InitialKind::RandomSmooth, 0.0, 1, 0.5);
  CHECK(max_abs(z.u) == 0.0);
  CHECK(z.d.comp(0)[3] == doctest::Approx(std::cos(0.5)));
  CHECK_THROWS_AS(initial_data(g, model(), InitialKind::RandomSmooth, -1.0, 1), Error);
}

TEST_CASE("decay rate fit recovers a synthetic exponential") {
  std::vector<DiagnosticsRow> rows;
  for (int k = 0; k <= 100; ++k) {
    DiagnosticsRow r;
    r.t = 0.1 * k;
    r.dist_to_eq = 3.0 * std::exp(-0.7 * r.t);
    rows.push_back(r);
  }
  const auto rate = fit_decay_rate(rows, 5.0);
  REQUIRE(rate.has_value());
  CHECK(*rate == doctest::Approx(0.7).epsilon(1e-10));
  CHECK_FALSE(fit_decay_rate(rows, 9.95).has_value());
  for (auto& r : rows) r.dist_to_eq = 0.0;
  CHECK_FALSE(fit_decay_rate(rows, 0.0).has_value());
}

TEST_CASE("stable time step for the decoupled isotropic case") {
  SimParams p = params(Boundary::Periodic, 16, 0.0);
  p.coeffs = CoefficientSet{};  // mu_s = gamma = alpha = 1, no Leslie terms
  p.coeffs.mu_s = Poly2::constant(2.0);
  p.model.lambda_0 = 0.5;
  Simulator sim(p);
  const State s = equilibrium(sim.grid(), 1.0, 0.0);
  const double h = sim.grid().hx();
  // Diffusivities: mu_s/rho = 2, alpha/(rho c_v) = 1, lambda/gamma = 0.5.
  CHECK(sim.stable_dt(s) == doctest::Approx(0.2 * h * h / 2.0).epsilon(1e-12));
  CHECK(sim.stable_dt(s, 0.1) == doctest::Approx(0.1 * h * h / 2.0).epsilon(1e-12));
}

TEST_CASE("run lands on t_final and reports entropy growth") {
  Simulator sim(params(Boundary::Bounded));
  const State s = initial_data(sim.grid(), sim.params().model, InitialKind::EqPerturb, 0.2, 2);
  RunOptions o;
  o.t_final = 0.3;
  o.diag_every = 4;
  int seen = 0;
  o.on_row = [&](const DiagnosticsRow&) { ++seen; };
  const RunResult r = run(sim, s, o);
  CHECK(r.final_state.t == 0.3);
  CHECK(r.rows.back().t == 0.3);
  CHECK(seen == static_cast<int>(r.rows.size()));
  CHECK(r.dt * r.steps == doctest::Approx(0.3));
  CHECK(r.first_entropy_violation == -1);
  CHECK(r.min_entropy_increment > 0.0);
  const double E0 = r.rows.front().E;
  for (const auto& row : r.rows) CHECK(std::abs(row.E - E0) < 1e-5 * std::abs(E0));
}
