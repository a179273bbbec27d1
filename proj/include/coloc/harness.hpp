#pragma once

// Monte-Carlo experiment runner: per-trial instance generation, solver
// dispatch, record/trace files and summary statistics.

#include "coloc/las.hpp"
#include "coloc/metaheuristics.hpp"
#include "coloc/scenario.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace coloc {

enum class Algorithm { CrlbLas, Cso, SA, GA, Tabu };

/// "crlb-las", "cso", "sa", "ga", "tabu" (case-insensitive on parse).
std::string algorithm_name(Algorithm a);
Algorithm parse_algorithm(const std::string& name);

struct ExperimentConfig {
  std::string scenario = "cabin";  // built-in name or scenario file
  Algorithm algorithm = Algorithm::CrlbLas;
  std::vector<double> sigmas{3.0};
  int runs = 1;
  std::uint64_t seed = 0;
  /// Wall-clock budget for the baselines; <= 0 disables it.
  double time_budget_seconds = 0.0;
  /// Deterministic baseline budget in full-cost evaluations; <= 0 disables it.
  double max_evaluations = 0.0;
  std::filesystem::path output_dir;  // empty: nothing written
  int workers = 1;
  bool strict_paper_fim = false;
  bool write_traces = true;

  void validate() const;
};

struct TrialRecord {
  std::string scenario;
  std::string algorithm;
  int sigma_index = 0;
  int run = 0;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  double final_cost = 0.0;
  double evaluations = 0.0;
  int iterations = 0;
  double wall_time_seconds = 0.0;
  std::string trace_file;  // relative to the output directory, may be empty
  std::string error;       // empty on success

  std::vector<TracePoint> trace;  // in memory only

  bool operator==(const TrialRecord& other) const;  // ignores trace
};

/// One generated problem instance.
struct TrialInstance {
  Assignment truth;
  RssMatrix rss;
  PathLossParams params;
};

/// Per-trial seed: a deterministic function of (master, sigma_index, run).
std::uint64_t trial_seed(std::uint64_t master, int sigma_index, int run);

/// Random truth permutation and simulated measurements for one trial.
TrialInstance make_trial(const ScenarioConfig& scenario, double sigma, std::uint64_t seed);

struct SolveOptions {
  std::uint64_t seed = 0;  // baselines' random initialisation
  double time_budget_seconds = 0.0;
  double max_evaluations = 0.0;
  bool strict_paper_fim = false;
  const Assignment* truth = nullptr;
};

SearchResult solve(Algorithm algorithm, const RssMatrix& rss, const DeviceNetwork& network,
                   const PathLossParams& params, const SolveOptions& options = {});

/// Runs every (sigma, run) trial.  A failing trial is recorded with its
/// error message and the batch continues.  Records are ordered by
/// (sigma_index, run) regardless of the worker count.
std::vector<TrialRecord> run_experiment(const ExperimentConfig& config);

// Files written to the output directory.
inline constexpr const char* kRecordsFile = "records.csv";
inline constexpr const char* kTimingsFile = "timings.csv";

/// records.csv holds only deterministic fields; wall times go to timings.csv.
void write_records(const std::vector<TrialRecord>& records, const std::filesystem::path& dir);
/// Reads records.csv and, if present, merges timings.csv.
std::vector<TrialRecord> read_records(const std::filesystem::path& dir);

std::string format_records(const std::vector<TrialRecord>& records);
std::string format_timings(const std::vector<TrialRecord>& records);
std::vector<TrialRecord> parse_records(const std::string& text);

std::string format_trace(const std::vector<TracePoint>& trace);
void write_trace(const std::vector<TracePoint>& trace, const std::filesystem::path& path);
std::vector<TracePoint> read_trace(const std::filesystem::path& path);

/// Nearest-rank quantile of a non-empty sample: the ceil(q * n)-th smallest
/// value (the smallest for q = 0).
double nearest_rank(std::vector<double> values, double q);

struct SummaryRow {
  std::string algorithm;
  double sigma = 0.0;
  int count = 0;     // successful trials
  int failures = 0;
  double median = 0.0;
  double p25 = 0.0;
  double p75 = 0.0;
  double min = 0.0;
  double max = 0.0;
  double mean_accuracy = 0.0;
  double perfect_fraction = 0.0;  // share of trials with accuracy 1
  double mean_wall_time = 0.0;
};

/// Groups by (algorithm, sigma) in first-appearance order.  Throws
/// std::invalid_argument on empty input.
std::vector<SummaryRow> aggregate(const std::vector<TrialRecord>& records);
std::string format_summary(const std::vector<SummaryRow>& rows);

}  // namespace coloc
