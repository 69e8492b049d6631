// Acceptance suite: one PASS/FAIL line per criterion, all on the shipped
// Parodi-violating coefficient set (configs/default.json). Exit status is the
// number of failed criteria.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>

#include "ellab/config.hpp"
#include "ellab/errors.hpp"
#include "ellab/linear_analysis.hpp"
#include "ellab/simulator.hpp"
#include "ellab/sweeps.hpp"
#include "simplified_oracle.hpp"

using namespace ellab;

namespace {

struct Line {
  bool pass = false;
  std::string detail;
};

int failures = 0;
bool all_before_ten = true;

void report(int id, const char* name, const std::function<Line()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Line l;
  try {
    l = body();
  } catch (const std::exception& e) {
    l = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("criterion %2d %-28s %s  %s [%.1fs]\n", id, name, l.pass ? "PASS" : "FAIL", l.detail.c_str(), secs);
  std::fflush(stdout);
  if (!l.pass) {
    ++failures;
    if (id < 10) all_before_ten = false;
  }
}

std::string g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

RunConfig base() { return load_config(ELLAB_SOURCE_DIR "/configs/default.json"); }

RunConfig on_grid(RunConfig c, int n, Boundary bc) {
  c.grid = Grid::make(n, n, c.grid.lx, c.grid.ly, bc);
  return c;
}

double energy_drift(const RunResult& r) {
  double d = 0;
  for (const auto& row : r.rows) d = std::max(d, std::abs(row.E - r.rows.front().E) / std::abs(r.rows.front().E));
  return d;
}

double unit_drift(const RunResult& r) {
  double d = 0;
  for (const auto& row : r.rows) d = std::max(d, row.unit_drift);
  return d;
}

RunResult simulate(const RunConfig& c, double dt, double t_final) {
  const Simulator sim(sim_params(c));
  RunOptions o;
  o.t_final = t_final;
  o.dt = dt;
  o.cfl_fraction = c.time.cfl;
  o.diag_every = 1;
  o.fit_window = 0.5;
  return run(sim, initial_state(c), o);
}

// Spatial fluctuation sqrt(sum h^2 (f - mean)^2) over all components.
double fluctuation(const Grid& g, const Field& f) {
  double s2 = 0;
  std::vector<double> t(g.size());
  for (int c = 0; c < f.ncomp(); ++c) {
    const double mean = integrate(g, f.comp(c)) / g.volume();
    for (std::size_t k = 0; k < g.size(); ++k) t[k] = (f.comp(c)[k] - mean) * (f.comp(c)[k] - mean);
    s2 += integrate(g, t.data());
  }
  return std::sqrt(s2);
}

}  // namespace

int main() {
  const RunConfig primary = base();
  const CoeffValues cv0 = primary.coeffs.at(primary.model.theta_ref, 0.0);
  std::printf("coefficient set: configs/default.json, parodi residual %s, b = %s\n",
              g(parodi_residual(leslie_alphas(cv0))).c_str(), g(primary.model.b).c_str());

  report(1, "equilibrium fixed point", [&] {
    double worst = 0;
    for (Boundary bc : {Boundary::Periodic, Boundary::Bounded}) {
      const Simulator sim(sim_params(on_grid(primary, 64, bc)));
      for (double angle : {0.0, 0.7, 2.5}) {
        State s = State::zeros(sim.grid());
        for (double& v : s.theta.data) v = 1.3;
        for (std::size_t k = 0; k < sim.grid().size(); ++k) {
          s.d.comp(0)[k] = std::cos(angle);
          s.d.comp(1)[k] = std::sin(angle);
        }
        const Tendency F = sim.full_rhs(s);
        worst = std::max({worst, max_abs(F.u), max_abs(F.theta), max_abs(F.d)});
      }
    }
    return Line{worst <= 1e-13, "max |rhs| " + g(worst) + " (<= 1e-13)"};
  });

  // Criteria 2-4 share their runs.
  const RunConfig c32 = on_grid(primary, 32, Boundary::Periodic);
  const RunConfig c64 = on_grid(primary, 64, Boundary::Periodic);
  const double dt32 = c32.time.cfl * Simulator(sim_params(c32)).stable_dt(initial_state(c32));
  RunResult r32, r64;

  report(2, "energy conservation", [&] {
    r32 = simulate(c32, dt32, 1.0);
    r64 = simulate(c64, dt32 / 4.0, 1.0);
    const double e32 = energy_drift(r32), e64 = energy_drift(r64);
    const double ratio = e32 / std::max(e64, 1e-300);
    // Drift at round-off on both grids leaves nothing to refine away.
    const bool refine_ok = ratio >= 8.0 || e32 <= 1e-13;
    return Line{e64 <= 1e-5 && refine_ok,
                "drift 64^2 " + g(e64) + " (<= 1e-5), 32^2 " + g(e32) + ", ratio " + g(ratio) + " (>= 8)"};
  });

  report(3, "entropy monotone, strict", [&] {
    if (r32.rows.empty() || r64.rows.empty()) return Line{false, "runs of criterion 2 did not complete"};
    const bool ok = r32.first_entropy_violation < 0 && r64.first_entropy_violation < 0 &&
                    r32.first_strictness_violation < 0 && r64.first_strictness_violation < 0;
    return Line{ok, "min dN/step 32^2 " + g(r32.min_entropy_increment) + ", 64^2 " + g(r64.min_entropy_increment) +
                        " (>= -1e-8, > 0 while dist > 1e-6)"};
  });

  report(4, "unit norm preservation", [&] {
    if (r64.rows.empty()) return Line{false, "64^2 run of criterion 2 did not complete"};
    const RunConfig c128 = on_grid(primary, 128, Boundary::Periodic);
    const RunResult r128 = simulate(c128, dt32 / 16.0, 1.0);
    const double u64 = unit_drift(r64), u128 = unit_drift(r128);
    const bool refine_ok = u128 <= 0.5 * u64 || u128 <= 1e-13;
    return Line{u128 <= 1e-6 && refine_ok,
                "max ||d|^2-1| 128^2 " + g(u128) + " (<= 1e-6), 64^2 " + g(u64) + " (halves)"};
  });

  const RunConfig c16 = on_grid(primary, 16, Boundary::Bounded);
  SpectrumResult spec;
  report(5, "equilibrium spectrum", [&] {
    const Simulator sim(sim_params(c16));
    RVec dstar(2);
    dstar << std::cos(c16.initial.angle), std::sin(c16.initial.angle);
    spec = spectrum_check(linearize_at_equilibrium(sim, c16.model.theta_ref, dstar).reduced);
    double max_re = -1e300;
    for (const cplx& ev : spec.eigenvalues)
      if (std::abs(ev) > 1e-6 * spec.norm) max_re = std::max(max_re, ev.real());
    const bool ok = spec.kernel_dim == 3 && max_re < 0.0 && spec.semisimple;
    return Line{ok, "kernel " + std::to_string(spec.kernel_dim) + " (== 3), max Re nonzero " + g(max_re) +
                        " (< 0), semisimple " + (spec.semisimple ? "yes" : "no") + ", gap " + g(spec.spectral_gap)};
  });

  report(6, "decay rate vs spectral gap", [&] {
    if (!(spec.spectral_gap > 0.0)) return Line{false, "no positive spectral gap from criterion 5"};
    RunConfig c = c16;
    c.initial.kind = InitialKind::EqPerturb;
    c.initial.amplitude = 1e-3;
    const double T = 40.0;
    const RunResult r = simulate(c, 0.0, T);
    if (!r.decay_rate) return Line{false, "no decay rate could be fitted"};
    const double rel = std::abs(*r.decay_rate - spec.spectral_gap) / spec.spectral_gap;
    return Line{rel <= 0.2, "fitted rate " + g(*r.decay_rate) + ", gap " + g(spec.spectral_gap) +
                                ", relative difference " + g(rel) + " (<= 0.2)"};
  });

  report(7, "convergence to constants", [&] {
    RunConfig c = on_grid(primary, 32, Boundary::Bounded);
    c.initial.amplitude = 0.1;
    const RunResult r = simulate(c, 0.0, 120.0);
    const Grid& gr = c.grid;
    const State& s = r.final_state;
    const double theta_star =
        equilibrium_temperature(c.model, r.rows.front().E, c.coeffs.rho, gr.volume());
    double th_err = 0;
    for (double v : s.theta.data) th_err = std::max(th_err, std::abs(v - theta_star));
    const double d_fluct = fluctuation(gr, s.d) / std::sqrt(gr.volume());
    const double ud = unit_drift(r);
    const bool ok = th_err <= 1e-6 && d_fluct <= 1e-6 && ud <= 1e-6;
    return Line{ok, "max |theta - theta_*| " + g(th_err) + " (<= 1e-6), d fluctuation " + g(d_fluct) +
                        ", unit drift " + g(ud) + " (<= 1e-6)"};
  });

  report(8, "symbol suite", [&] {
    SweepSpec sp;
    sp.samples = 10000;
    sp.z_max = primary.sweep.z_max;
    sp.xi_max = primary.sweep.xi_max;
    sp.seed = primary.sweep.seed;
    std::string detail;
    bool ok = true;
    double acc_min = 1e300;
    for (double sign : {1.0, -1.0}) {
      sp.coupling_sign = sign;
      const SweepReport a = accretivity_sweep(primary.coeffs, primary.model, primary.box, sp);
      ok = ok && a.pass;
      acc_min = std::min(acc_min, a.worst_margin - 1e-12);
    }
    sp.coupling_sign = 1.0;
    const SweepReport st = stokes_sweep(primary.coeffs, primary.model, primary.box, sp);
    const SweepReport sc = schur_sweep(primary.coeffs, primary.model, primary.box, sp);
    const SweepReport de = det_bound_sweep(primary.coeffs, primary.model, primary.box, sp);
    const SweepReport ls = lopatinskii_sweep(primary.coeffs, primary.model, primary.box, sp);
    ok = ok && st.pass && sc.pass && de.pass && ls.pass;
    detail = "accretivity min " + g(acc_min) + ", Stokes margin " + g(st.worst_margin - 1e-10) +
             ", Schur residual " + g(1e-10 - sc.worst_margin) + ", det c " + g(de.constant) + ", LS min " +
             g(ls.worst_margin + 1e-6);
    return Line{ok, detail};
  });

  report(9, "simplified model", [&] {
    RunConfig c = primary;
    c.model.b = 0.0;
    c.flags.isothermal = true;
    const CoeffValues cv = c.coeffs.at(c.model.theta_ref, 0.0);
    if (cv.mu_V != cv.gamma) return Line{false, "coefficient set has mu_V != gamma"};
    const auto [l1, l2] = simplified_coefficients(cv.gamma, c.model.lambda(c.model.theta_ref), cv.mu_D);
    double worst_rel = 0;
    for (Boundary bc : {Boundary::Periodic, Boundary::Bounded})
      for (unsigned long long seed : {1ULL, 2ULL, 3ULL}) {
        const RunConfig cc = on_grid(c, 32, bc);
        const Simulator sim(sim_params(cc));
        const State s = oracle::random_state(cc.grid, c.model.theta_ref, seed);
        const auto [w, sc] = oracle::mismatch(sim.director_rhs(s), oracle::simplified_director_rhs(cc.grid, s, l1, l2));
        worst_rel = std::max(worst_rel, w / std::max(1.0, sc));
      }
    return Line{worst_rel <= 1e-12, "max relative mismatch " + g(worst_rel) + " (<= 1e-12), lambda1 " + g(l1) +
                                        ", lambda2 " + g(l2)};
  });

  report(10, "Parodi independence", [&] {
    const double res = parodi_residual(leslie_alphas(cv0));
    return Line{res != 0.0 && all_before_ten,
                "parodi residual " + g(res) + " (!= 0), criteria 1-9 " + (all_before_ten ? "pass" : "do not all pass")};
  });

  std::printf("%d of 10 criteria failed\n", failures);
  return failures;
}
