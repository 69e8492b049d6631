/// @file config.hpp
/// @brief JSON run configuration: schema, defaults, validation, round trip.
///
/// Schema (every key optional except "grid" and "model"):
///   grid         {nx, ny, lx, ly, bc: "periodic" | "bounded"}
///   model        {c_v, lambda_0, b, theta_ref, c_v_slope}
///   rho          number
///   coefficients {mu_s, mu_V, mu_D, mu_P, mu_L, mu_0, gamma, alpha}; each a
///                number (constant) or a 3x3 table c[p][q] of theta^p tau^q
///   box          {theta_min, theta_max, tau_min, tau_max}
///   time         {dt: number | "auto", cfl, t_final, scheme: "rk4" | "imex", diag_every}
///   initial      {kind: "eq_perturb" | "taylor_green" | "random", amplitude, seed, angle}
///   outputs      {dir, snapshots, snapshot_every}
///   flags        {renormalize_d, isothermal, coupling_sign, projection: "spectral" | "cg"}
///   sweep        {samples, z_max, xi_max, seed}
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ellab/grid.hpp"
#include "ellab/simulator.hpp"
#include "ellab/thermo_model.hpp"

namespace ellab {

struct TimeConfig {
  double dt = 0.0;  // 0 = auto
  double cfl = 0.5;
  double t_final = 1.0;
  Scheme scheme = Scheme::RK4;
  int diag_every = 1;
  bool operator==(const TimeConfig&) const = default;
};

struct InitialConfig {
  InitialKind kind = InitialKind::RandomSmooth;
  double amplitude = 0.1;
  std::uint64_t seed = 1;
  double angle = 0.0;
  bool operator==(const InitialConfig&) const = default;
};

struct OutputConfig {
  std::string dir = "out";
  bool snapshots = false;
  int snapshot_every = 100;
  bool operator==(const OutputConfig&) const = default;
};

struct FlagConfig {
  bool renormalize_d = false;
  bool isothermal = false;
  double coupling_sign = 1.0;
  PoissonMethod projection = PoissonMethod::Spectral;
  bool operator==(const FlagConfig&) const = default;
};

struct SweepConfig {
  int samples = 10000;
  double z_max = 10.0;
  double xi_max = 10.0;
  std::uint64_t seed = 1;
  bool operator==(const SweepConfig&) const = default;
};

struct RunConfig {
  Grid grid;
  FreeEnergyModel model;
  CoefficientSet coeffs;
  OperatingBox box;
  TimeConfig time;
  InitialConfig initial;
  OutputConfig outputs;
  FlagConfig flags;
  SweepConfig sweep;

  bool operator==(const RunConfig& o) const;
};

/// Parses without validating. Throws ErrorKind::Config with "line L, column C"
/// for syntax errors and the offending key path for schema errors.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
/// Canonical JSON text; parse_config(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& c);

/// Every violated constraint, empty when valid: grid limits, condition (P)
/// names from validate_condition_P, and "dt above CFL limit <value>".
std::vector<std::string> validate_config(const RunConfig& c);
/// parse + validate; throws ErrorKind::Config listing all violations.
RunConfig parse_and_validate(const std::string& path);

/// FNV-1a 64 over the canonical serialization.
std::uint64_t config_hash(const RunConfig& c);

SimParams sim_params(const RunConfig& c);
State initial_state(const RunConfig& c);

}  // namespace ellab
