#include "ellab/commands.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "ellab/linear_analysis.hpp"
#include "ellab/sweeps.hpp"

namespace ellab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

std::string full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_atomic(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw Error(ErrorKind::Io, "error writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

SweepSpec sweep_spec(const RunConfig& c) {
  SweepSpec s;
  s.samples = c.sweep.samples;
  s.z_max = c.sweep.z_max;
  s.xi_max = c.sweep.xi_max;
  s.seed = c.sweep.seed;
  s.coupling_sign = c.flags.coupling_sign;
  return s;
}

void require_valid(const RunConfig& c) {
  const auto errs = validate_config(c);
  if (errs.empty()) return;
  std::string msg = "invalid configuration";
  for (const auto& e : errs) msg += "\n  - " + e;
  throw Error(ErrorKind::Config, msg);
}

}  // namespace

int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::Config:
      return kExitConfig;
    case ErrorKind::BlowUp:
    case ErrorKind::Positivity:
      return kExitBlowUp;
    case ErrorKind::Property:
    case ErrorKind::Structure:
      return kExitProperty;
    default:
      return kExitInternal;
  }
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

const char* code_version() { return "0.1.0"; }

int run_command(const std::string& name, const RunConfig* c, const std::string& out_dir,
                const std::function<CommandOutcome()>& body, std::ostream& out, std::ostream& err) {
  const std::string start = utc_now();
  CommandOutcome oc;
  std::optional<double> last_valid;
  try {
    oc = body();
  } catch (const StepError& e) {
    oc.exit_code = exit_code_for(e.kind());
    oc.verdict = name + " FAIL: " + e.what() + " (last valid t=" + fmt(e.last_valid_time(), 10) + ")";
    last_valid = e.last_valid_time();
  } catch (const Error& e) {
    oc.exit_code = exit_code_for(e.kind());
    oc.verdict = name + " FAIL: " + e.what();
  } catch (const std::exception& e) {
    oc.exit_code = kExitInternal;
    oc.verdict = name + " FAIL: internal error: " + e.what();
  }
  (oc.exit_code == kExitOk ? out : err) << oc.verdict << '\n';

  if (!out_dir.empty()) {
    try {
      fs::create_directories(out_dir);
      json m;
      m["command"] = name;
      m["code_version"] = code_version();
      m["config_hash"] = c ? hash_hex(config_hash(*c)) : "";
      m["start_time"] = start;
      m["end_time"] = utc_now();
      m["exit_status"] = oc.exit_code;
      m["verdict"] = oc.verdict;
      if (last_valid) m["last_valid_time"] = *last_valid;
      json s = json::object();
      for (const auto& [k, v] : oc.summary) s[k] = v;
      m["summary"] = s;
      write_atomic(fs::path(out_dir) / "run_manifest.json", m.dump(2) + "\n");
    } catch (const std::exception& e) {
      err << "manifest: " << e.what() << '\n';
      if (oc.exit_code == kExitOk) oc.exit_code = kExitInternal;
    }
  }
  return oc.exit_code;
}

// ---------------------------------------------------------------------------

DiagnosticsWriter::DiagnosticsWriter(const std::string& path) {
  file_ = std::fopen(path.c_str(), "w");
  if (!file_) throw Error(ErrorKind::Io, "cannot write " + path);
  std::fprintf(file_, "%s\n", kDiagnosticsHeader);
  worker_ = std::thread([this] { consume(); });
}

DiagnosticsWriter::~DiagnosticsWriter() {
  try {
    close();
  } catch (...) {
  }
}

void DiagnosticsWriter::push(const DiagnosticsRow& r) {
  {
    std::lock_guard<std::mutex> lk(mu_);
    queue_.push_back(r);
  }
  cv_.notify_one();
}

void DiagnosticsWriter::consume() {
  std::unique_lock<std::mutex> lk(mu_);
  for (;;) {
    cv_.wait(lk, [this] { return done_ || !queue_.empty(); });
    while (!queue_.empty()) {
      const DiagnosticsRow r = queue_.front();
      queue_.pop_front();
      lk.unlock();
      const int rc = std::fprintf(file_, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.t, r.E, r.N,
                                  r.kinetic, r.internal, r.unit_drift, r.div_norm, r.min_theta, r.dist_to_eq);
      lk.lock();
      if (rc < 0) failed_ = true;
    }
    if (done_) return;
  }
}

void DiagnosticsWriter::close() {
  if (!file_) return;
  {
    std::lock_guard<std::mutex> lk(mu_);
    done_ = true;
  }
  cv_.notify_one();
  if (worker_.joinable()) worker_.join();
  const bool bad = std::fclose(file_) != 0 || failed_;
  file_ = nullptr;
  if (bad) throw Error(ErrorKind::Io, "error writing diagnostics");
}

std::vector<DiagnosticsRow> read_diagnostics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != kDiagnosticsHeader)
    throw Error(ErrorKind::Io, path + ": unexpected header");
  std::vector<DiagnosticsRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    DiagnosticsRow r;
    double* dst[] = {&r.t, &r.E, &r.N, &r.kinetic, &r.internal, &r.unit_drift, &r.div_norm, &r.min_theta,
                     &r.dist_to_eq};
    std::istringstream ss(line);
    std::string cell;
    int k = 0;
    while (std::getline(ss, cell, ',')) {
      if (k >= 9) break;
      char* end = nullptr;
      *dst[k] = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) throw Error(ErrorKind::Io, path + ": bad number on line " + std::to_string(lineno));
      ++k;
    }
    if (k != 9) throw Error(ErrorKind::Io, path + ": expected 9 columns on line " + std::to_string(lineno));
    rows.push_back(r);
  }
  return rows;
}

// ---------------------------------------------------------------------------

CommandOutcome cmd_validate(const RunConfig& c) {
  const auto errs = validate_config(c);
  CommandOutcome oc;
  if (!errs.empty()) {
    oc.exit_code = kExitConfig;
    oc.verdict = "validate-params FAIL:";
    for (const auto& e : errs) oc.verdict += "\n  - " + e;
    return oc;
  }
  const ConditionReport rep = validate_condition_P(c.coeffs, c.model, c.box);
  double worst = std::numeric_limits<double>::infinity();
  std::string worst_name;
  for (const auto& m : rep.margins) {
    oc.summary.emplace_back("margin." + m.name, full(m.worst));
    if (m.worst < worst && m.strict) {
      worst = m.worst;
      worst_name = m.name;
    }
  }
  oc.verdict = "validate-params PASS (smallest strict margin " + worst_name + " = " + fmt(worst) + ")";
  return oc;
}

CommandOutcome cmd_simulate(const RunConfig& c) {
  require_valid(c);
  fs::create_directories(c.outputs.dir);
  const Simulator sim(sim_params(c));
  RunOptions o;
  o.t_final = c.time.t_final;
  o.dt = c.time.dt;
  o.cfl_fraction = c.time.cfl;
  o.scheme = c.time.scheme;
  o.diag_every = c.time.diag_every;
  if (c.outputs.snapshots) {
    o.snapshot_every = c.outputs.snapshot_every;
    o.snapshot_dir = c.outputs.dir;
  }
  o.fit_window = 0.5;
  DiagnosticsWriter writer((fs::path(c.outputs.dir) / "diagnostics.csv").string());
  o.on_row = [&writer](const DiagnosticsRow& r) { writer.push(r); };
  RunResult res;
  try {
    res = run(sim, initial_state(c), o);
  } catch (...) {
    writer.close();
    throw;
  }
  writer.close();

  const DiagnosticsRow& first = res.rows.front();
  double drift = 0, unit = 0;
  for (const auto& r : res.rows) {
    drift = std::max(drift, std::abs(r.E - first.E) / std::abs(first.E));
    unit = std::max(unit, r.unit_drift);
  }
  CommandOutcome oc;
  oc.summary = {{"steps", std::to_string(res.steps)},
                {"dt", full(res.dt)},
                {"energy_drift", full(drift)},
                {"max_unit_drift", full(unit)},
                {"min_entropy_increment", full(res.min_entropy_increment)},
                {"first_entropy_violation", std::to_string(res.first_entropy_violation)},
                {"final_dist_to_eq", full(res.rows.back().dist_to_eq)}};
  if (res.decay_rate) oc.summary.emplace_back("decay_rate", full(*res.decay_rate));

  // The discrete conservation laws are asserted for the explicit scheme only;
  // the first-order IMEX step dissipates energy at O(dt).
  std::vector<std::string> failed;
  if (c.time.scheme == Scheme::RK4) {
    if (!(drift <= 1e-5)) failed.push_back("energy drift " + fmt(drift));
    if (res.first_entropy_violation >= 0)
      failed.push_back("entropy decreased at step " + std::to_string(res.first_entropy_violation));
    if (!c.flags.renormalize_d && !(unit <= 1e-6)) failed.push_back("unit drift " + fmt(unit));
  }
  std::ostringstream v;
  v << "simulate " << (failed.empty() ? "PASS" : "FAIL") << " steps " << res.steps << " energy drift " << fmt(drift)
    << " unit drift " << fmt(unit) << " final dist " << fmt(res.rows.back().dist_to_eq);
  for (const auto& f : failed) v << "; " << f;
  oc.verdict = v.str();
  oc.exit_code = failed.empty() ? kExitOk : kExitProperty;
  return oc;
}

CommandOutcome cmd_symbols(const RunConfig& c) {
  require_valid(c);
  fs::create_directories(c.outputs.dir);
  const SweepSpec spec = sweep_spec(c);
  SweepSpec alt = spec;
  alt.coupling_sign = -spec.coupling_sign;
  std::vector<std::pair<std::string, SweepReport>> reps;
  reps.emplace_back("accretivity", accretivity_sweep(c.coeffs, c.model, c.box, spec));
  reps.emplace_back("accretivity_alt_sign", accretivity_sweep(c.coeffs, c.model, c.box, alt));
  reps.emplace_back("stokes", stokes_sweep(c.coeffs, c.model, c.box, spec));
  reps.emplace_back("schur", schur_sweep(c.coeffs, c.model, c.box, spec));
  reps.emplace_back("det_bound", det_bound_sweep(c.coeffs, c.model, c.box, spec));
  CommandOutcome oc;
  bool pass = true;
  std::string worst;
  for (auto& [file, r] : reps) {
    write_sweep_csv((fs::path(c.outputs.dir) / ("symbols_" + file + ".csv")).string(), r);
    oc.summary.emplace_back(file, r.summary());
    if (!r.pass) {
      pass = false;
      worst += "; " + r.summary();
    }
  }
  oc.exit_code = pass ? kExitOk : kExitProperty;
  oc.verdict = pass ? "symbols PASS " + std::to_string(reps.size()) + " sweeps, accretivity constant " +
                          fmt(reps[0].second.constant) + ", det constant " + fmt(reps[4].second.constant)
                    : "symbols FAIL" + worst;
  return oc;
}

CommandOutcome cmd_ls_check(const RunConfig& c) {
  require_valid(c);
  fs::create_directories(c.outputs.dir);
  const SweepReport r = lopatinskii_sweep(c.coeffs, c.model, c.box, sweep_spec(c));
  write_sweep_csv((fs::path(c.outputs.dir) / "ls_check.csv").string(), r);
  CommandOutcome oc;
  oc.summary.emplace_back("lopatinskii", r.summary());
  oc.exit_code = r.pass ? kExitOk : kExitProperty;
  oc.verdict = "ls-check " + r.summary();
  return oc;
}

CommandOutcome cmd_spectrum(const RunConfig& c) {
  require_valid(c);
  fs::create_directories(c.outputs.dir);
  const Simulator sim(sim_params(c));
  RVec dstar(2);
  dstar << std::cos(c.initial.angle), std::sin(c.initial.angle);
  const Linearization lin = linearize_at_equilibrium(sim, c.model.theta_ref, dstar);
  const SpectrumResult sr = spectrum_check(lin.reduced);

  const std::string csv = (fs::path(c.outputs.dir) / "eigenvalues.csv").string();
  std::FILE* f = std::fopen(csv.c_str(), "w");
  if (!f) throw Error(ErrorKind::Io, "cannot write " + csv);
  std::fprintf(f, "re,im\n");
  for (const auto& e : sr.eigenvalues) std::fprintf(f, "%.17g,%.17g\n", e.real(), e.imag());
  if (std::fclose(f) != 0) throw Error(ErrorKind::Io, "error writing " + csv);

  const int expected = c.grid.bc == Boundary::Bounded ? 3 : 5;
  json s;
  s["kernel_dim"] = sr.kernel_dim;
  s["expected_kernel_dim"] = expected;
  s["spectral_gap"] = sr.spectral_gap;
  s["slowest_re"] = sr.slowest.real();
  s["slowest_im"] = sr.slowest.imag();
  s["semisimple"] = sr.semisimple;
  s["nullity_A"] = sr.nullity_A;
  s["nullity_A2"] = sr.nullity_A2;
  s["size"] = static_cast<int>(sr.eigenvalues.size());
  write_atomic(fs::path(c.outputs.dir) / "spectrum_summary.json", s.dump(2) + "\n");

  CommandOutcome oc;
  for (auto it = s.begin(); it != s.end(); ++it) oc.summary.emplace_back(it.key(), it.value().dump());
  const bool pass = sr.kernel_dim == expected && sr.stable() && sr.semisimple;
  std::ostringstream v;
  v << "spectrum " << (pass ? "PASS" : "FAIL") << "\n  kernel_dim " << sr.kernel_dim << " (expected " << expected
    << ")\n  spectral_gap " << fmt(sr.spectral_gap, 10) << "\n  slowest " << fmt(sr.slowest.real(), 10) << " + "
    << fmt(sr.slowest.imag(), 10) << "i\n  semisimple " << (sr.semisimple ? "yes" : "no") << " (nullity A "
    << sr.nullity_A << ", A^2 " << sr.nullity_A2 << ")";
  oc.verdict = v.str();
  oc.exit_code = pass ? kExitOk : kExitProperty;
  return oc;
}

}  // namespace ellab
