/// @file commands.hpp
/// @brief Subcommand pipelines behind the command-line tool, the run manifest
/// and the diagnostics report.
///
/// Every command writes its artifacts into the configured output directory and
/// returns a one-line verdict. Exit codes: 0 all asserted properties hold,
/// 1 configuration error, 2 blow-up or loss of temperature positivity,
/// 3 property violation, 4 anything else.
#pragma once

#include <condition_variable>
#include <cstdio>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "ellab/config.hpp"
#include "ellab/errors.hpp"
#include "ellab/simulator.hpp"

namespace ellab {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitBlowUp = 2, kExitProperty = 3, kExitInternal = 4 };

int exit_code_for(ErrorKind k);

struct CommandOutcome {
  int exit_code = kExitOk;
  std::string verdict;
  std::vector<std::pair<std::string, std::string>> summary;  // written to the manifest
};

CommandOutcome cmd_validate(const RunConfig& c);
CommandOutcome cmd_simulate(const RunConfig& c);
CommandOutcome cmd_symbols(const RunConfig& c);
CommandOutcome cmd_ls_check(const RunConfig& c);
CommandOutcome cmd_spectrum(const RunConfig& c);

/// Runs `body`, maps exceptions to exit codes, prints the verdict to `out`
/// (errors to `err`) and writes run_manifest.json atomically into `out_dir`
/// when it is non-empty. Returns the exit code.
int run_command(const std::string& name, const RunConfig* c, const std::string& out_dir,
                const std::function<CommandOutcome()>& body, std::ostream& out, std::ostream& err);

/// FNV-1a hash rendered as 16 hex digits.
std::string hash_hex(std::uint64_t h);
const char* code_version();

// ---------------------------------------------------------------------------
// Diagnostics CSV
// ---------------------------------------------------------------------------

inline constexpr const char* kDiagnosticsHeader = "t,E,N,kinetic,internal,unit_drift,div_norm,min_theta,dist_to_eq";

/// Appends diagnostics rows from the stepping thread; a single consumer thread
/// formats and writes them in order with %.17g.
class DiagnosticsWriter {
 public:
  explicit DiagnosticsWriter(const std::string& path);
  ~DiagnosticsWriter();
  DiagnosticsWriter(const DiagnosticsWriter&) = delete;
  DiagnosticsWriter& operator=(const DiagnosticsWriter&) = delete;

  void push(const DiagnosticsRow& r);
  /// Drains the queue and closes the file; throws ErrorKind::Io on write failure.
  void close();

 private:
  void consume();

  std::FILE* file_ = nullptr;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<DiagnosticsRow> queue_;
  bool done_ = false;
  bool failed_ = false;
  std::thread worker_;
};

std::vector<DiagnosticsRow> read_diagnostics(const std::string& path);

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

struct ReportResult {
  std::vector<std::string> lines;
  bool pass = true;
  double energy_drift = 0;
  long first_entropy_violation = -1;  // step index, -1 if none
  double max_unit_drift = 0;
  std::optional<double> decay_rate, spectral_gap;
};

/// Reads diagnostics.csv (and, when present, run_manifest.json for dt and
/// spectrum_summary.json for the gap) from `dir`, evaluates the conservation
/// and monotonicity verdicts and writes plot_<column>.dat files.
ReportResult emit_report(const std::string& dir);
CommandOutcome cmd_report(const std::string& dir);

}  // namespace ellab
