#ifndef BINCMA_EXPFAM_HPP
#define BINCMA_EXPFAM_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

namespace bincma::expfam {

/// Largest dimension for which the full 2^k table is materialized.
/// Operations on larger k throw DimensionTooLargeError instead of
/// silently approximating.
inline constexpr int kMaxDimension = 16;

struct ZeroProbabilityError : std::domain_error {
  using std::domain_error::domain_error;
};
struct OverflowError : std::domain_error {
  using std::domain_error::domain_error;
};
struct EmptySubsetError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct ZeroConditioningEventError : std::domain_error {
  using std::domain_error::domain_error;
};
struct InfeasibleMomentsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DimensionTooLargeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Full probability table of a k-variate Bernoulli vector.
/// Entry `mask` is P(X = x) where bit j of `mask` set means x_j = 1.
class JointTable {
 public:
  JointTable(int k, std::vector<double> probs);

  static JointTable uniform(int k);
  /// Independent coordinates with the given success probabilities.
  static JointTable product(const std::vector<double>& marginals);

  int dimension() const { return k_; }
  std::uint32_t size() const { return static_cast<std::uint32_t>(probs_.size()); }
  double operator[](std::uint32_t mask) const { return probs_[mask]; }
  const std::vector<double>& probs() const { return probs_; }

 private:
  int k_;
  std::vector<double> probs_;
};

/// Natural parameters of the exponential-family form. theta(S) is indexed
/// by the non-empty subset bitmask S of {0..k-1}; log_partition() is A(theta),
/// which equals -log P(0,...,0).
class CanonicalParams {
 public:
  /// theta has 2^k - 1 entries; entry mask-1 holds theta_mask.
  /// The log partition is computed from the thetas on construction.
  CanonicalParams(int k, std::vector<double> theta);

  int dimension() const { return k_; }
  double theta(std::uint32_t mask) const { return theta_[mask - 1]; }
  const std::vector<double>& thetas() const { return theta_; }
  double log_partition() const { return log_partition_; }

 private:
  int k_;
  std::vector<double> theta_;
  double log_partition_;
};

/// Pairwise-only restriction: singleton parameters h and a symmetric,
/// zero-diagonal coupling matrix J; all higher-order thetas are zero.
struct IsingParams {
  Eigen::VectorXd h;
  Eigen::MatrixXd coupling;

  int dimension() const { return static_cast<int>(h.size()); }
  CanonicalParams to_canonical() const;
  /// Fails if any theta_S with |S| >= 3 exceeds `tol` in magnitude.
  static IsingParams from_canonical(const CanonicalParams& c, double tol = 1e-9);
};

/// Moment -> canonical map. Requires a strictly positive table.
CanonicalParams canonical_from_moment(const JointTable& t);

/// Canonical -> moment map; inverse of canonical_from_moment.
JointTable moment_from_canonical(const CanonicalParams& c);

/// Marginal table over the coordinates in `keep` (non-empty bitmask).
/// Kept coordinates are re-indexed in increasing order of original index.
JointTable marginal(const JointTable& t, std::uint32_t keep);

/// Conditional law of the target coordinate given fixed values of other
/// coordinates; returns a univariate table (P(X=0), P(X=1)).
JointTable conditional(const JointTable& t, int target,
                       const std::vector<std::pair<int, int>>& given);

/// True iff every theta_S with |S| >= 2 is within tol of zero.
bool is_independent(const CanonicalParams& c, double tol);

Eigen::VectorXd mean_vector(const JointTable& t);

/// Exact covariance of the table: entry (i,j) = E[X_i X_j] - E[X_i] E[X_j].
Eigen::MatrixXd covariance_matrix(const JointTable& t);

/// Shannon entropy in nats; zero entries contribute zero.
double entropy(const JointTable& t);

struct FitIsingOptions {
  int max_iterations = 500;
  double tolerance = 1e-9;       // residual target for the moment map
  double accept_tolerance = 1e-6;  // required match before declaring success
};

/// Moment-matching fit of an Ising model: finds (h, J) whose induced table
/// reproduces the given means and off-diagonal covariances. Damped Newton
/// iteration on the exact moment map of the expanded table.
IsingParams fit_ising(const Eigen::VectorXd& means, const Eigen::MatrixXd& cov,
                      const FitIsingOptions& options = {});

}  // namespace bincma::expfam

#endif  // BINCMA_EXPFAM_HPP
