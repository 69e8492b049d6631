#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "ellab/commands.hpp"

namespace ellab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::optional<json> read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) return std::nullopt;
  try {
    return json::parse(in);
  } catch (const json::exception&) {
    throw Error(ErrorKind::Io, p.string() + ": malformed JSON");
  }
}

std::optional<double> number_from(const json& j, const char* section, const char* key) {
  if (!j.contains(section) || !j[section].contains(key)) return std::nullopt;
  const json& v = j[section][key];
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    try {
      return std::stod(v.get<std::string>());
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  return std::nullopt;
}

std::string g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

ReportResult emit_report(const std::string& dir) {
  const fs::path base(dir);
  const auto rows = read_diagnostics((base / "diagnostics.csv").string());
  if (rows.empty()) throw Error(ErrorKind::Io, dir + ": diagnostics.csv has no rows");
  ReportResult rep;

  std::optional<double> dt;
  if (auto m = read_json(base / "run_manifest.json")) dt = number_from(*m, "summary", "dt");
  if (auto s = read_json(base / "spectrum_summary.json"))
    if (s->contains("spectral_gap") && (*s)["spectral_gap"].is_number()) rep.spectral_gap = (*s)["spectral_gap"].get<double>();

  const double E0 = rows.front().E;
  for (const auto& r : rows) {
    rep.energy_drift = std::max(rep.energy_drift, std::abs(r.E - E0) / std::abs(E0));
    rep.max_unit_drift = std::max(rep.max_unit_drift, r.unit_drift);
  }
  const bool e_ok = rep.energy_drift <= 1e-5;
  rep.lines.push_back("energy drift " + g(rep.energy_drift) + (e_ok ? " PASS" : " FAIL"));

  long bad_row = -1;
  for (std::size_t k = 1; k < rows.size(); ++k)
    if (rows[k].N < rows[k - 1].N - 1e-8) {
      bad_row = static_cast<long>(k);
      break;
    }
  if (bad_row < 0) {
    rep.lines.push_back("entropy monotone PASS");
  } else {
    // Rows are sampled; with dt known the sample time identifies the step.
    const double t = rows[bad_row].t;
    rep.first_entropy_violation = dt ? std::lround(t / *dt) : bad_row;
    rep.lines.push_back("entropy monotone FAIL first violation at step " + std::to_string(rep.first_entropy_violation) +
                        " (t=" + g(t) + ", dN=" + g(rows[bad_row].N - rows[bad_row - 1].N) + ")");
  }
  rep.lines.push_back("unit drift max " + g(rep.max_unit_drift));

  rep.decay_rate = fit_decay_rate(rows, 0.5 * rows.back().t);
  if (rep.decay_rate && rep.spectral_gap) {
    rep.lines.push_back("decay rate " + g(*rep.decay_rate) + " spectral gap " + g(*rep.spectral_gap) + " ratio " +
                        g(*rep.decay_rate / *rep.spectral_gap));
  } else if (rep.decay_rate) {
    rep.lines.push_back("decay rate " + g(*rep.decay_rate) + " (no spectrum_summary.json for the gap)");
  }
  rep.pass = e_ok && bad_row < 0;

  const char* names[] = {"E", "N", "kinetic", "internal", "unit_drift", "div_norm", "min_theta", "dist_to_eq"};
  for (int c = 0; c < 8; ++c) {
    const std::string path = (base / ("plot_" + std::string(names[c]) + ".dat")).string();
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw Error(ErrorKind::Io, "cannot write " + path);
    for (const auto& r : rows) {
      const double vals[] = {r.E, r.N, r.kinetic, r.internal, r.unit_drift, r.div_norm, r.min_theta, r.dist_to_eq};
      std::fprintf(f, "%.17g %.17g\n", r.t, vals[c]);
    }
    if (std::fclose(f) != 0) throw Error(ErrorKind::Io, "error writing " + path);
  }
  return rep;
}

CommandOutcome cmd_report(const std::string& dir) {
  const ReportResult rep = emit_report(dir);
  CommandOutcome oc;
  std::string text = std::string("report ") + (rep.pass ? "PASS" : "FAIL");
  for (const auto& l : rep.lines) text += "\n  " + l;
  oc.verdict = text;
  oc.exit_code = rep.pass ? kExitOk : kExitProperty;
  return oc;
}

}  // namespace ellab
