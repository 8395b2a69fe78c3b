#pragma once

#include "mixlin/altmin.hpp"
#include "mixlin/init.hpp"
#include "mixlin/model.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace mixlin {

/// Estimation error at or below this counts as exact recovery.
inline constexpr double kExactRecoveryThreshold = 1e-10;

enum class InitMode { tensor, random, oracle };

std::string_view to_string(InitMode mode);
InitMode init_mode_from_string(std::string_view name);

struct GridCell {
  Eigen::Index n = 0;
  Eigen::Index p = 0;
  Eigen::Index k = 0;
};

/// I/O failure with the offending path in the message.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::vector<GridCell> cells;
  int trials = 1;
  double delta = 1.2;
  InitMode init_mode = InitMode::tensor;
  AltMinConfig altmin;
  InitConfig init;
  // Power-method overrides; unset means L = 200 k^2 and N = ceil(20 ln k) for each cell's k.
  std::optional<int> restarts;
  std::optional<int> iterations;
  Seed seed = 0;
  int threads = 1;
  double trial_timeout_seconds = 60.0;
  bool record_timing = false;  // wall-clock columns; off keeps output byte-stable
  std::string output;

  void validate() const;
};

/// Builds a config from a JSON object whose keys mirror the CLI flags
/// (p, k, n, delta, trials, seed, init, resample, split, L, N, T, tol, out,
/// threads, timeout, timing, refit). p, k and n may be scalars or arrays; n
/// entries may be integers or expressions "<c>p" (c * p) and "<c>k^3"
/// (c * k^3). The grid is the product of the p, k and n lists.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& cfg);

/// Evaluates one n-expression for a given (p, k).
Eigen::Index evaluate_sample_count(std::string_view expr, Eigen::Index p, Eigen::Index k);

/// FNV-1a 64 of the canonical config JSON, hex encoded.
std::string config_hash(const ExperimentConfig& cfg);

/// Seed for trial `trial` of cell (n, p, k); independent of cell order and scheduling.
Seed trial_seed(Seed master, const GridCell& cell, int trial);

struct TrialOutcome {
  GridCell cell;
  int trial = 0;
  Seed seed = 0;
  double init_error = 0.0;
  double final_error = 0.0;
  int iterations = 0;
  bool recovered = false;
  std::string status;  // termination reason, or the numerical failure that stopped the trial
  RunTrace trace;
  double seconds = 0.0;
};

/// One trial: fresh Delta-spaced params and dataset, initialization per mode,
/// AltMin to termination. Numerical failures are recorded, not thrown.
TrialOutcome run_trial(const ExperimentConfig& cfg, const GridCell& cell, int trial);

struct CellResult {
  GridCell cell;
  int trials = 0;
  int successes = 0;
  double recovery_probability = 0.0;
  double median_final_error = 0.0;
  double median_iterations = 0.0;
  double wall_seconds = 0.0;
};

/// All trials for every cell, ordered by (cell, trial).
std::vector<TrialOutcome> run_trace(const ExperimentConfig& cfg);

/// Aggregated recovery statistics per cell. `on_cell` fires as each cell completes, in cell order.
std::vector<CellResult> run_grid(const ExperimentConfig& cfg,
                                 const std::function<void(const CellResult&)>& on_cell = {});

CellResult summarize(const GridCell& cell, const std::vector<TrialOutcome>& outcomes, double wall_seconds);

inline constexpr std::string_view kGridCsvHeader = "n,p,k,trials,recovery_prob,median_error,median_iters,seconds";
inline constexpr std::string_view kTraceCsvHeader =
    "n,p,k,trial,seed,iteration,error,label_changes,cluster_sizes,residual,status";

std::string grid_csv_row(const CellResult& r, bool record_timing);
void write_trace_csv(std::ostream& out, const std::vector<TrialOutcome>& outcomes);

/// Writes the grid CSV to `path` and a JSON sidecar (config, hash, seeds) to
/// `path` + ".json". Throws std::invalid_argument on empty results, IoError on
/// unwritable paths.
void emit_report(const std::vector<CellResult>& results, const ExperimentConfig& cfg,
                 const std::filesystem::path& path);

/// Trace CSV plus a JSON sidecar with config, hash and per-trial summaries.
void emit_trace_report(const std::vector<TrialOutcome>& outcomes, const ExperimentConfig& cfg,
                       const std::filesystem::path& path);

nlohmann::json sidecar_json(const ExperimentConfig& cfg);

/// Shortest round-trip decimal form used in every CSV cell.
std::string format_number(double v);

}  // namespace mixlin
