#pragma once

// Experiment driver behind the `fkcp` executable. Every command writes its
// outputs plus a manifest.json into --out; `replay` re-runs a manifest and
// checks the outputs are reproduced.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "fkcp/fkcp.hpp"

namespace fkcp::cli {

struct DataSource {
  std::string data_path;       // long-format CSV; empty selects the simulator
  std::string basis;           // "", "none", "bspline:K", "fourier:K[:P]"
  int scenario = 1;
  std::vector<double> eta{0.1};
  std::vector<double> c{0.1};
  std::size_t n_sites = 100;
  std::size_t n_time = 101;
  double noise_sd = 1.0;
};

struct MethodOptions {
  double alpha = 0.25;
  std::string case_label = "\xCE\x94" "50,Ssqrt,Dsup";
  double solver_tol = 1e-10;
  std::optional<double> epsilon_floor;
  bool squared_denominator = false;
  std::string family = "exponential";
  std::size_t n_bins = 15;
  double max_lag = 0.0;

  CaseConfig to_case() const;
};

struct RunOptions {
  std::string out;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  bool verbose = false;
};

/// Files written by a command (relative to --out) and what goes into its manifest.
struct CommandOutput {
  std::vector<std::string> files;
  std::vector<std::string> inputs;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json timings = nlohmann::json::object();
};

/// Dataset named by a source: the CSV (smoothed with the requested basis,
/// Fourier(65) by default) or one simulated cell (B-spline(30) by default).
Dataset load_source(const DataSource& src, std::uint64_t seed, double eta, double c);

CommandOutput cmd_simulate(const DataSource& src, const RunOptions& run);
CommandOutput cmd_ingest(const DataSource& src, const RunOptions& run);
CommandOutput cmd_variogram(const DataSource& src, const MethodOptions& m, const RunOptions& run);
CommandOutput cmd_predict(const DataSource& src, const std::string& target, const std::string& target_id,
                          const MethodOptions& m, const RunOptions& run);
CommandOutput cmd_sweep(const DataSource& src, const std::vector<double>& alphas, const MethodOptions& m,
                        const RunOptions& run);
CommandOutput cmd_loocv(const DataSource& src, const MethodOptions& m, bool all_cases, bool with_bootstrap,
                        std::size_t bootstrap_B, const RunOptions& run);
CommandOutput cmd_bootstrap(const DataSource& src, const std::string& target, const std::string& target_id,
                            bool loocv, std::size_t B, const MethodOptions& m, const RunOptions& run);

/// Digest of a file's contents with timing data removed (CSV columns tt, mt and
/// seconds; JSON keys "timings").
std::string stable_digest(const std::string& path);
std::string file_sha256(const std::string& path);

/// Parses argv (without the program name) and runs the selected command.
/// Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fkcp::cli
