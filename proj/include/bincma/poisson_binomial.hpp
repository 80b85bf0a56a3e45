#ifndef BINCMA_POISSON_BINOMIAL_HPP
#define BINCMA_POISSON_BINOMIAL_HPP

#include <stdexcept>
#include <vector>

namespace bincma::pbinom {

struct OutOfSupportError : std::domain_error {
  using std::domain_error::domain_error;
};
struct MeanOutOfRangeError : std::domain_error {
  using std::domain_error::domain_error;
};
struct DegeneratePError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Probability mass function on a contiguous integer range
/// {offset, ..., offset + size - 1}.
class DiscretePMF {
 public:
  DiscretePMF(int offset, std::vector<double> probs);

  int offset() const { return offset_; }
  int size() const { return static_cast<int>(probs_.size()); }
  int max_value() const { return offset_ + size() - 1; }
  const std::vector<double>& probs() const { return probs_; }
  /// Probability of the integer value v (0 outside the stored range).
  double at(int v) const;
  double mean() const;

 private:
  int offset_;
  std::vector<double> probs_;
};

/// Sum of independent, not necessarily identical Bernoulli trials.
class PoissonBinomial {
 public:
  explicit PoissonBinomial(std::vector<double> trial_probs);

  int trials() const { return static_cast<int>(p_.size()); }
  const std::vector<double>& trial_probs() const { return p_; }
  double mean() const;

 private:
  std::vector<double> p_;
};

/// Exact PMF over {0..n} by adding one trial at a time (O(n^2) DP).
DiscretePMF pmf(const PoissonBinomial& pb);

/// Binomial point mass, evaluated in log space.
double binomial_pmf(int n, double p, int k);

/// Shannon entropy in nats, with 0 log 0 = 0.
double entropy(const DiscretePMF& d);

/// The entropy maximizer among Poisson binomials with n trials and mean mu:
/// the constant vector p_i = mu / n.
PoissonBinomial max_entropy_binomial(int n, double mu);

struct TruncatedGeometric {
  DiscretePMF pmf;
  double rho;
};

/// Max-entropy distribution on {0..n} with mean mu: p(i) proportional to
/// rho^i, rho solved from the mean constraint by bisection. mu = n/2 gives
/// the uniform distribution (rho = 1).
TruncatedGeometric solve_truncated_geometric(int n, double mu);
DiscretePMF truncated_geometric(int n, double mu);

/// Normal approximation to the binomial point mass at k.
double moivre_laplace_approx(int n, double p, int k);

/// Poisson point mass, evaluated in log space.
double poisson_pmf(double lambda, int k);

}  // namespace bincma::pbinom

#endif  // BINCMA_POISSON_BINOMIAL_HPP
