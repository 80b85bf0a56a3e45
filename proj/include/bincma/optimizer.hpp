#ifndef BINCMA_OPTIMIZER_HPP
#define BINCMA_OPTIMIZER_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "bincma/rng.hpp"
#include "bincma/sampling.hpp"

namespace bincma::optimizer {

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct LengthMismatchError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct NonFiniteFitnessError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Learning rates and recombination weights of the update rules. Defaults
/// follow the usual CMA-ES formulas in the dimension d and are overridable
/// field by field through OptimizerConfig.
struct StrategyConstants {
  int lambda = 0;             // population size per generation
  int mu = 0;                 // parents used for recombination
  Eigen::VectorXd weights;    // mu positive weights, decreasing, sum 1
  double mu_eff = 0.0;        // 1 / sum w_i^2
  double c_sigma = 0.0;       // isotropic path smoothing
  double d_sigma = 0.0;       // step-size damping
  double c_c = 0.0;           // anisotropic path smoothing
  double c_1 = 0.0;           // rank-one covariance rate
  double c_mu = 0.0;          // rank-mu covariance rate
  double chi = 0.0;           // E||N(0, I_d)||
  double eps = 1e-8;          // mean-movement termination threshold
  int max_iterations = 1000;  // generation budget
  bool use_hsig = true;       // stall indicator on the rank-one update
  double margin = 0.0;        // per-trial success-probability floor in ask

  /// Standard defaults for dimension d: lambda = 4 + floor(3 ln d),
  /// mu = lambda/2, log-linear weights, and the textbook rate formulas.
  /// Pass lambda/mu overrides as 0 to accept the default.
  static StrategyConstants defaults(int d, int lambda_override = 0,
                                    int mu_override = 0);

  /// Enforces the type invariants (weight ordering and normalization, rate
  /// ranges, c_1 + c_mu <= 1). Throws ConfigError naming the bad field.
  void validate(int d) const;
};

/// Everything needed to reproduce a run: problem geometry, population
/// shape, seed, budget, and sampler choice. NaN / 0 fields mean "use the
/// default derived from d".
struct OptimizerConfig {
  int d = 0;                 // number of coordinates
  std::vector<int> dims;     // cardinality per coordinate (scalar broadcast ok)
  int lambda = 0;            // 0: default 4 + floor(3 ln d)
  int mu = 0;                // 0: default lambda / 2
  double sigma0 = 0.0;       // 0: default sqrt(max_j n_j) / 2
  std::uint64_t seed = 0;
  int max_iterations = 1000;
  double eps = 1e-8;
  sampling::SamplerKind sampler = sampling::SamplerKind::kCopula;
  bool disable_hsig = false;
  double target_f = std::numeric_limits<double>::quiet_NaN();  // optional

  // Keeps every coordinate's sampling variance at or above the variance of
  // a Binomial(n_j, margin) trial, so converged coordinates retain a minimal
  // mutation rate instead of freezing. 0 (the default) disables the floor;
  // the step-size path can then drive flip probabilities to zero.
  double margin = 0.0;

  // Optional rate overrides; NaN keeps the formula default.
  double c_sigma = std::numeric_limits<double>::quiet_NaN();
  double d_sigma = std::numeric_limits<double>::quiet_NaN();
  double c_c = std::numeric_limits<double>::quiet_NaN();
  double c_1 = std::numeric_limits<double>::quiet_NaN();
  double c_mu = std::numeric_limits<double>::quiet_NaN();

  /// Fills dims from a scalar, checks ranges, and resolves all defaulted
  /// fields. Throws ConfigError with the offending field in the message.
  void finalize();
};

struct Candidate {
  std::vector<int> x;
  double fitness = 0.0;
  int index = 0;  // sampling order, used as the stable tie-break
};

/// Immutable-by-convention optimizer state; ask() reads it, tell() returns
/// the successor. best_f is NaN until the first tell.
struct OptimizerState {
  sampling::SearchDistribution sd;
  Eigen::VectorXd p_sigma;
  Eigen::VectorXd p_c;
  int generation = 0;
  StrategyConstants constants;
  sampling::SamplerKind sampler = sampling::SamplerKind::kCopula;
  std::vector<int> best_x;
  double best_f = std::numeric_limits<double>::quiet_NaN();
};

struct HistoryRow {
  int generation = 0;       // 1-based, after the corresponding tell
  long evaluations = 0;     // cumulative objective calls
  double best_f = 0.0;      // best fitness seen so far
  double mean_f = 0.0;      // mean fitness of this population
  double sigma = 0.0;       // step size after the update
  double mean_step = 0.0;   // ||m - m'|| of this generation
};

struct OptimizeResult {
  std::vector<int> best_x;
  double best_f = std::numeric_limits<double>::quiet_NaN();
  std::vector<HistoryRow> history;
  long evaluations = 0;
};

/// Mean at the box center, C = I, paths at zero. Calls config.finalize().
OptimizerState make_initial_state(OptimizerConfig config);

/// Draws lambda candidate vectors from the current search distribution,
/// with the margin floor (if any) applied to the per-coordinate variances.
/// Pure in the state; all randomness comes from rng.
std::vector<std::vector<int>> ask(const OptimizerState& state, RngStream& rng);

/// Ascending by fitness, ties broken by sampling index. Rejects any
/// non-finite fitness.
std::vector<Candidate> rank(std::vector<Candidate> candidates);

/// One full CMA-ES update from a ranked population: recombination mean,
/// both evolution paths, covariance (rank-one + rank-mu, symmetrized and
/// eigenvalue-floored at 1e-12), and the step size.
OptimizerState tell(const OptimizerState& state,
                    const std::vector<Candidate>& ranked);

/// True once the generation budget is spent or, after the first tell, the
/// mean moved less than eps.
bool terminated(const OptimizerState& state, const Eigen::VectorXd& m_prev);

/// Full ask/evaluate/rank/tell loop. Stops on terminated() or when best_f
/// reaches config.target_f. Returns the best evaluated point, never the
/// rounded mean.
OptimizeResult optimize(
    const std::function<double(const std::vector<int>&)>& objective,
    const OptimizerConfig& config, RngStream& rng);

}  // namespace bincma::optimizer

#endif  // BINCMA_OPTIMIZER_HPP
