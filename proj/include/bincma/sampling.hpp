#ifndef BINCMA_SAMPLING_HPP
#define BINCMA_SAMPLING_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "bincma/expfam.hpp"
#include "bincma/rng.hpp"

namespace bincma::sampling {

struct VarianceTooLargeError : std::domain_error {
  using std::domain_error::domain_error;
};
struct BadDimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Sampling state of the optimizer: real-valued mean (interpreted modulo the
/// per-coordinate cardinality), global step size, covariance shape, and the
/// cardinality of every coordinate. Coordinate j takes values in
/// {0..dims[j]-1}; its binomial trial count is n_j = dims[j] - 1.
struct SearchDistribution {
  Eigen::VectorXd mean;
  double sigma = 1.0;
  Eigen::MatrixXd cov;
  std::vector<int> dims;

  int dimension() const { return static_cast<int>(mean.size()); }
  void validate() const;
};

enum class SamplerKind { kCopula, kExact };

/// Minimal root of n p (1-p) = variance; lies in [0, 1/2] and increases
/// with the variance. Strict about the n/4 cap: callers clamp.
double p_from_variance(int n, double variance);

/// One draw of round(mu + B - n p) mod (n+1) with B ~ Binomial(n, p).
/// Wrapping keeps the value in {0..n} while the mean tracks mu mod (n+1)
/// and the variance tracks n p (1-p).
int sample_shifted_binomial(double mu, int n, double p, RngStream& rng);

/// Draws `count` integer vectors from the search distribution. Marginals are
/// variance-controlled shifted binomials; cross-coordinate dependence comes
/// from a Gaussian copula (default, any d) or from summed draws of an exact
/// Ising-fitted multivariate Bernoulli (d <= expfam::kMaxDimension).
std::vector<std::vector<int>> sample_candidates(const SearchDistribution& sd,
                                                int count, RngStream& rng,
                                                SamplerKind kind = SamplerKind::kCopula);

/// Sums independent multivariate-Bernoulli draws from the exact joint table:
/// coordinate j accumulates the first trials[j] draws, so its marginal is
/// Binomial(trials[j], p_j).
std::vector<int> exact_joint_sampler(const expfam::CanonicalParams& params,
                                     const std::vector<int>& trials, RngStream& rng);
std::vector<int> exact_joint_sampler(const expfam::IsingParams& params,
                                     const std::vector<int>& trials, RngStream& rng);

}  // namespace bincma::sampling

#endif  // BINCMA_SAMPLING_HPP
