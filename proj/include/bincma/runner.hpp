#ifndef BINCMA_RUNNER_HPP
#define BINCMA_RUNNER_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "bincma/optimizer.hpp"
#include "bincma/problems.hpp"

namespace bincma::bench {

/// One completed optimization run. Everything except wall_seconds is
/// reproducible from (problem, config, seed) and round-trips through the
/// per-run CSV; wall_seconds is measured and deliberately kept out of it.
struct RunRecord {
  std::string problem;
  std::uint64_t seed = 0;
  std::string config_digest;  // 16 hex chars over (problem, config, seed)
  double target_f = std::numeric_limits<double>::quiet_NaN();
  std::vector<optimizer::HistoryRow> history;
  long total_evaluations = 0;
  std::vector<int> best_x;
  double best_f = std::numeric_limits<double>::quiet_NaN();
  double wall_seconds = 0.0;
  long evals_to_target = 0;  // censored runs carry their full budget here
  bool censored = true;
};

/// Median / quartiles of evaluations-to-target across the seeds of one
/// problem; censored runs enter the statistics at their budget value.
struct SummaryRow {
  std::string problem;
  int runs = 0;
  int solved = 0;
  double median_evaluations = 0.0;
  double q1_evaluations = 0.0;
  double q3_evaluations = 0.0;
};

/// FNV-1a digest of the canonical (problem, finalized config, seed) string.
std::string config_digest(const std::string& problem_name,
                          const optimizer::OptimizerConfig& config,
                          std::uint64_t seed);

/// Runs the problem once with the given seed. When config.target_f is unset
/// and the problem has a known optimum, that optimum becomes the target.
RunRecord run_single(const Problem& problem, optimizer::OptimizerConfig config,
                     std::uint64_t seed);

/// One RunRecord per seed. When out_dir is non-empty, writes
/// <problem>_seed<seed>.csv per run into it (created if missing).
std::vector<RunRecord> run_experiment(const Problem& problem,
                                      const optimizer::OptimizerConfig& config,
                                      const std::vector<std::uint64_t>& seeds,
                                      const std::string& out_dir = "");

/// Serialization. Numbers use %.17g so parsing restores the exact doubles.
std::string run_csv_header();
std::string run_csv(const RunRecord& record);
std::vector<RunRecord> parse_runs_csv(const std::string& text);

/// Aggregation: one SummaryRow per problem, in first-seen order. Median of
/// an even count averages the two middle values; quartiles are the
/// nearest-rank values at ceil(N/4) and ceil(3N/4).
std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records);
std::string summary_csv(const std::vector<SummaryRow>& rows);

/// Runs a named suite ("quick" or "full"), writes per-run CSVs plus
/// summary.csv under out_dir, and returns the summary CSV text.
std::string run_suite(const std::string& suite, std::uint64_t seed,
                      const std::string& out_dir);

}  // namespace bincma::bench

#endif  // BINCMA_RUNNER_HPP
