// Reference right-hand side of the isothermal, isotropic director equation
//   D_t d = V d - (l2/l1) D d - (1/l1)(Lap d + |grad d|^2 d) + (l2/l1)(d.Dd) d
// written with plain index loops. Laplacian: 5-point stencil; |grad d|^2: half
// the sum over the four cell faces of squared face differences; grad u: central
// differences. Bounded grids reflect d evenly and u oddly.
#pragma once

#include <algorithm>
#include <random>

#include "ellab/grid.hpp"
#include "ellab/simulator.hpp"

namespace oracle {

inline ellab::Field simplified_director_rhs(const ellab::Grid& g, const ellab::State& s, double l1, double l2) {
  const int nx = g.nx, ny = g.ny;
  const double hx = g.hx(), hy = g.hy();
  const bool per = g.periodic();
  auto get = [&](const ellab::Field& f, int c, int i, int j, double sgn) {
    double fac = 1.0;
    if (i < 0 || i >= nx) {
      if (per) {
        i = (i + nx) % nx;
      } else {
        i = i < 0 ? 0 : nx - 1;
        fac *= sgn;
      }
    }
    if (j < 0 || j >= ny) {
      if (per) {
        j = (j + ny) % ny;
      } else {
        j = j < 0 ? 0 : ny - 1;
        fac *= sgn;
      }
    }
    return fac * f.at(c, i, j);
  };
  ellab::Field out = ellab::Field::vector(g);
  const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
  const double hh[4] = {hx, hx, hy, hy};
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      double lap[2] = {0.0, 0.0}, grad2 = 0.0;
      for (int c = 0; c < 2; ++c)
        for (int f = 0; f < 4; ++f) {
          const double diff = get(s.d, c, i + di[f], j + dj[f], 1.0) - s.d.at(c, i, j);
          lap[c] += diff / (hh[f] * hh[f]);
          grad2 += 0.5 * diff * diff / (hh[f] * hh[f]);
        }
      double G[2][2];  // G[a][b] = d_b u_a
      for (int a = 0; a < 2; ++a) {
        G[a][0] = (get(s.u, a, i + 1, j, -1.0) - get(s.u, a, i - 1, j, -1.0)) / (2 * hx);
        G[a][1] = (get(s.u, a, i, j + 1, -1.0) - get(s.u, a, i, j - 1, -1.0)) / (2 * hy);
      }
      const double d[2] = {s.d.at(0, i, j), s.d.at(1, i, j)};
      double Dd[2], Vd[2];
      for (int a = 0; a < 2; ++a) {
        Dd[a] = Vd[a] = 0.0;
        for (int b = 0; b < 2; ++b) {
          Dd[a] += 0.5 * (G[a][b] + G[b][a]) * d[b];
          Vd[a] += 0.5 * (G[a][b] - G[b][a]) * d[b];
        }
      }
      const double dDd = d[0] * Dd[0] + d[1] * Dd[1];
      for (int a = 0; a < 2; ++a)
        out.at(a, i, j) = Vd[a] - l2 / l1 * Dd[a] - (lap[a] + grad2 * d[a]) / l1 + l2 / l1 * dDd * d[a];
    }
  return out;
}

/// Cell-wise random velocity and random unit director, theta = theta_ref.
inline ellab::State random_state(const ellab::Grid& g, double theta, unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N(0.0, 1.0);
  std::uniform_real_distribution<double> A(0.0, 6.283185307179586);
  ellab::State s = ellab::State::zeros(g);
  for (double& v : s.u.data) v = N(rng);
  for (double& v : s.theta.data) v = theta;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double a = A(rng);
    s.d.comp(0)[k] = std::cos(a);
    s.d.comp(1)[k] = std::sin(a);
  }
  return s;
}

/// max |a - b| and max |b| over all entries.
inline std::pair<double, double> mismatch(const ellab::Field& a, const ellab::Field& b) {
  double worst = 0, scale = 0;
  for (std::size_t k = 0; k < a.data.size(); ++k) {
    worst = std::max(worst, std::abs(a.data[k] - b.data[k]));
    scale = std::max(scale, std::abs(b.data[k]));
  }
  return {worst, scale};
}

}  // namespace oracle
