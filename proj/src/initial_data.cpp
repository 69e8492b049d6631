#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "ellab/errors.hpp"
#include "ellab/simulator.hpp"

namespace ellab {

namespace {

constexpr double kPi = std::numbers::pi;

struct Mode {
  int m, l;
  double a;
};

std::vector<Mode> draw_modes(std::mt19937_64& rng, int kmax, bool skip_zero) {
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<Mode> modes;
  for (int m = 0; m <= kmax; ++m)
    for (int l = 0; l <= kmax; ++l) {
      if (skip_zero && m == 0 && l == 0) continue;
      modes.push_back({m, l, nd(rng) / (1.0 + m * m + l * l)});
    }
  return modes;
}

// Smooth scalar: cosine modes (Neumann compatible) on bounded grids, a phase
// shifted Fourier series on periodic grids. Normalised to max |f| = 1.
Field smooth_scalar(const Grid& g, const std::vector<Mode>& modes, double phase) {
  Field f = Field::scalar(g);
  const double kx = g.periodic() ? 2.0 * kPi / g.lx : kPi / g.lx;
  const double ky = g.periodic() ? 2.0 * kPi / g.ly : kPi / g.ly;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      double v = 0.0;
      for (const auto& md : modes)
        v += md.a * std::cos(md.m * kx * g.x(i) + phase) * std::cos(md.l * ky * g.y(j) + phase * 0.5);
      f.at(0, i, j) = v;
    }
  const double mx = max_abs(f);
  if (mx > 0.0)
    for (double& v : f.data) v /= mx;
  return f;
}

// Velocity from a stream function. On bounded grids the stream function is
// multiplied by sin^2(pi x / lx) sin^2(pi y / ly), so u vanishes at the walls
// together with psi and the data is compatible with no-slip.
Field smooth_velocity(const Grid& g, const std::vector<Mode>& modes) {
  Field u = Field::vector(g);
  const bool per = g.periodic();
  const double kx = per ? 2.0 * kPi / g.lx : kPi / g.lx;
  const double ky = per ? 2.0 * kPi / g.ly : kPi / g.ly;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double x = g.x(i), y = g.y(j);
      double S = 0.0, Sx = 0.0, Sy = 0.0;
      for (const auto& md : modes) {
        const double cx = std::cos(md.m * kx * x + 0.4), sx = std::sin(md.m * kx * x + 0.4);
        const double cy = std::cos(md.l * ky * y + 0.9), sy = std::sin(md.l * ky * y + 0.9);
        S += md.a * cx * cy;
        Sx -= md.a * md.m * kx * sx * cy;
        Sy -= md.a * md.l * ky * cx * sy;
      }
      double B = 1.0, Bx = 0.0, By = 0.0;
      if (!per) {
        const double sx = std::sin(kx * x), sy = std::sin(ky * y);
        B = sx * sx * sy * sy;
        Bx = kx * std::sin(2.0 * kx * x) * sy * sy;
        By = ky * std::sin(2.0 * ky * y) * sx * sx;
      }
      // psi = B S; u = (d_y psi, -d_x psi)
      u.at(0, i, j) = By * S + B * Sy;
      u.at(1, i, j) = -(Bx * S + B * Sx);
    }
  const double mx = max_abs(u);
  if (mx > 0.0)
    for (double& v : u.data) v /= mx;
  return u;
}

}  // namespace

State initial_data(const Grid& g, const FreeEnergyModel& model, InitialKind kind, double amplitude,
                   unsigned long long seed, double director_angle) {
  if (!(amplitude >= 0.0)) throw Error(ErrorKind::Argument, "initial_data: amplitude must be non-negative");
  State s = State::zeros(g);
  std::mt19937_64 rng(seed);

  Field gu, gt, gp;
  switch (kind) {
    case InitialKind::TaylorGreenDirector: {
      const std::vector<Mode> one{{1, 1, 1.0}};  // single Taylor-Green cell
      gu = smooth_velocity(g, one);
      gt = smooth_scalar(g, one, 0.0);
      gp = smooth_scalar(g, one, 0.0);
      break;
    }
    case InitialKind::EqPerturb:
    case InitialKind::RandomSmooth: {
      const int kmax = kind == InitialKind::EqPerturb ? 1 : 3;
      gu = smooth_velocity(g, draw_modes(rng, kmax, true));
      gt = smooth_scalar(g, draw_modes(rng, kmax, true), 0.3);
      gp = smooth_scalar(g, draw_modes(rng, kmax, true), 0.7);
      break;
    }
  }

  if (amplitude > 0.0) {
    s.u = gu;
    for (double& v : s.u.data) v *= amplitude;
    Projector(g).project(s.u);
  }
  const double ta = std::min(amplitude, 0.5);
  for (std::size_t k = 0; k < g.size(); ++k) {
    s.theta.data[k] = model.theta_ref * (1.0 + ta * gt.data[k]);
    const double phi = director_angle + amplitude * gp.data[k];
    s.d.comp(0)[k] = std::cos(phi);
    s.d.comp(1)[k] = std::sin(phi);
  }
  return s;
}

}  // namespace ellab
