#include "bincma/poisson_binomial.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace bincma::pbinom {

namespace {

/// Neumaier-compensated sum; the PMFs here feed long summations (means,
/// entropies, tail masses) where plain accumulation loses digits.
double compensated_sum(const std::vector<double>& v) {
  double sum = 0.0, comp = 0.0;
  for (double x : v) {
    const double t = sum + x;
    comp += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  return sum + comp;
}

double log_choose(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace

DiscretePMF::DiscretePMF(int offset, std::vector<double> probs)
    : offset_(offset), probs_(std::move(probs)) {
  if (probs_.empty()) throw std::invalid_argument("PMF must have at least one entry");
  for (double p : probs_)
    if (!(p >= 0.0)) throw std::invalid_argument("PMF entries must be non-negative");
  const double total = compensated_sum(probs_);
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("PMF must sum to 1 (got " + std::to_string(total) + ")");
}

double DiscretePMF::at(int v) const {
  const int i = v - offset_;
  return (i >= 0 && i < size()) ? probs_[i] : 0.0;
}

double DiscretePMF::mean() const {
  std::vector<double> terms(probs_.size());
  for (std::size_t i = 0; i < probs_.size(); ++i)
    terms[i] = static_cast<double>(offset_ + static_cast<int>(i)) * probs_[i];
  return compensated_sum(terms);
}

PoissonBinomial::PoissonBinomial(std::vector<double> trial_probs)
    : p_(std::move(trial_probs)) {
  if (p_.empty()) throw std::invalid_argument("need at least one trial");
  for (double p : p_)
    if (!(p >= 0.0 && p <= 1.0))
      throw std::invalid_argument("trial probabilities must lie in [0,1]");
}

double PoissonBinomial::mean() const { return compensated_sum(p_); }

DiscretePMF pmf(const PoissonBinomial& pb) {
  const auto& p = pb.trial_probs();
  std::vector<double> dp(p.size() + 1, 0.0);
  dp[0] = 1.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t k = i + 1; k-- > 0;)
      dp[k + 1] = dp[k + 1] * (1.0 - p[i]) + dp[k] * p[i];
    dp[0] *= 1.0 - p[i];
  }
  const double total = compensated_sum(dp);
  for (double& x : dp) x /= total;
  return DiscretePMF(0, std::move(dp));
}

double binomial_pmf(int n, double p, int k) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p must lie in [0,1]");
  if (k < 0 || k > n)
    throw OutOfSupportError("k=" + std::to_string(k) + " outside {0.." +
                            std::to_string(n) + "}");
  if (p == 0.0) return k == 0 ? 1.0 : 0.0;
  if (p == 1.0) return k == n ? 1.0 : 0.0;
  return std::exp(log_choose(n, k) + k * std::log(p) + (n - k) * std::log1p(-p));
}

double entropy(const DiscretePMF& d) {
  std::vector<double> terms;
  terms.reserve(d.probs().size());
  for (double p : d.probs())
    if (p > 0.0) terms.push_back(-p * std::log(p));
  return terms.empty() ? 0.0 : std::max(compensated_sum(terms), 0.0);
}

PoissonBinomial max_entropy_binomial(int n, double mu) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (!(mu >= 0.0 && mu <= n))
    throw MeanOutOfRangeError("mean " + std::to_string(mu) + " outside [0," +
                              std::to_string(n) + "]");
  return PoissonBinomial(std::vector<double>(n, mu / n));
}

namespace {

/// Mean of the rho-geometric law on {0..n}; strictly increasing in rho.
double geometric_mean_on_range(int n, double rho) {
  double norm = 0.0, first = 0.0, power = 1.0;
  for (int i = 0; i <= n; ++i) {
    norm += power;
    first += i * power;
    power *= rho;
  }
  return first / norm;
}

}  // namespace

TruncatedGeometric solve_truncated_geometric(int n, double mu) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (!(mu > 0.0 && mu < n))
    throw MeanOutOfRangeError("mean " + std::to_string(mu) + " outside (0," +
                              std::to_string(n) + ")");

  const double half = 0.5 * n;
  // Solve on the rho < 1 side and mirror: p_i(1/rho) = p_{n-i}(rho) exactly,
  // so mean(1/rho) = n - mean(rho).
  const bool mirrored = mu > half;
  const double mu_low = mirrored ? n - mu : mu;

  double rho;
  if (mu_low == half) {
    rho = 1.0;
  } else {
    double lo = 0.0, hi = 1.0;  // mean(0+) = 0 < mu_low < n/2 = mean(1)
    for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (geometric_mean_on_range(n, mid) < mu_low ? lo : hi) = mid;
    }
    rho = 0.5 * (lo + hi);
  }

  std::vector<double> probs(n + 1);
  double power = 1.0;
  for (int i = 0; i <= n; ++i) {
    probs[i] = power;
    power *= rho;
  }
  const double norm = compensated_sum(probs);
  for (double& p : probs) p /= norm;
  if (mirrored) {
    std::reverse(probs.begin(), probs.end());
    rho = 1.0 / rho;
  }
  return TruncatedGeometric{DiscretePMF(0, std::move(probs)), rho};
}

DiscretePMF truncated_geometric(int n, double mu) {
  return solve_truncated_geometric(n, mu).pmf;
}

double moivre_laplace_approx(int n, double p, int k) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (!(p > 0.0 && p < 1.0))
    throw DegeneratePError("normal approximation requires p strictly inside (0,1)");
  const double var = n * p * (1.0 - p);
  const double z = k - n * p;
  return std::exp(-z * z / (2.0 * var)) / std::sqrt(2.0 * std::numbers::pi * var);
}

double poisson_pmf(double lambda, int k) {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
  if (k < 0) throw std::invalid_argument("k must be >= 0");
  return std::exp(-lambda + k * std::log(lambda) - std::lgamma(k + 1.0));
}

}  // namespace bincma::pbinom
