/// @file sweeps.hpp
/// @brief Randomized checks of the symbol estimates over frozen coefficients
/// drawn from an operating box. Every sample has Re z >= 0.
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ellab/linear_analysis.hpp"

namespace ellab {

struct SweepSpec {
  int samples = 10000;
  double z_max = 10.0;
  double xi_max = 10.0;
  std::uint64_t seed = 1;
  double coupling_sign = 1.0;
  int n = 2;
};

struct SweepRow {
  cplx z;
  RVec xi;
  double quantity = 0;
  double margin = 0;  // >= 0 means the sample passes
};

struct SweepReport {
  std::string name;
  std::string quantity;  // column label
  std::vector<SweepRow> rows;
  double worst_margin = 0;
  int worst_index = -1;
  double constant = 0;  // empirical constant where the estimate has one, else 0
  bool pass = false;

  std::string summary() const;
};

/// Frozen coefficients at a random (theta, tau) of the box with a random unit
/// d0 and grad d0 = g (x) d0_perp scaled so that |grad d0|^2 / 2 = tau.
FrozenCoefficients sample_frozen(const CoefficientSet& c, const FreeEnergyModel& m, const OperatingBox& box,
                                 double coupling_sign, int n, std::mt19937_64& rng);

/// lhs = Re(L v | J v) on unit v; margin lhs + 1e-12; constant inf lhs / bound.
SweepReport accretivity_sweep(const CoefficientSet& c, const FreeEnergyModel& m, const OperatingBox& box,
                              const SweepSpec& spec);
/// margin = Stokes ellipticity margin + 1e-10.
SweepReport stokes_sweep(const CoefficientSet& c, const FreeEnergyModel& m, const OperatingBox& box,
                         const SweepSpec& spec);
/// Relative residual of the closed-form (theta, d) solve in the block system; margin 1e-10 - residual.
SweepReport schur_sweep(const CoefficientSet& c, const FreeEnergyModel& m, const OperatingBox& box,
                        const SweepSpec& spec);
/// |det| / |z + |xi|^2|^2; the sweep passes when the infimum is positive.
SweepReport det_bound_sweep(const CoefficientSet& c, const FreeEnergyModel& m, const OperatingBox& box,
                            const SweepSpec& spec);
/// |normalized Lopatinskii determinant| on the parabolic sphere |z| + |xi_t|^2 = 1
/// (the value degenerates towards (0, 0) because derivative rows scale with
/// the exponents); margin |value| - 1e-6.
SweepReport lopatinskii_sweep(const CoefficientSet& c, const FreeEnergyModel& m, const OperatingBox& box,
                              const SweepSpec& spec);

/// Writes "re_z,im_z,xi_1..xi_n,<quantity>,margin" with %.17g values.
void write_sweep_csv(const std::string& path, const SweepReport& r);

}  // namespace ellab
