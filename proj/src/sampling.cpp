#include "bincma/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "bincma/poisson_binomial.hpp"

namespace bincma::sampling {

namespace {

long long euclid_mod(long long a, long long m) {
  const long long r = a % m;
  return r < 0 ? r + m : r;
}

double standard_normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

/// Cumulative distribution of Binomial(n, p) as a table of n+1 entries,
/// last entry forced to 1.
std::vector<double> binomial_cdf_table(int n, double p) {
  std::vector<double> cdf(n + 1);
  double acc = 0.0;
  for (int k = 0; k <= n; ++k) {
    acc += pbinom::binomial_pmf(n, p, k);
    cdf[k] = std::min(acc, 1.0);
  }
  cdf[n] = 1.0;
  return cdf;
}

int inverse_cdf(const std::vector<double>& cdf, double u) {
  const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
  return static_cast<int>(it - cdf.begin());
}

int shift_and_wrap(double mu, int n, double p, int b) {
  const long long v = std::llround(mu + b - n * p);
  return static_cast<int>(euclid_mod(v, n + 1));
}

struct CoordinatePlan {
  int n;         // dims - 1
  double p;      // binomial success probability after variance clamping
  double mu;     // target mean
  std::vector<double> cdf;
};

std::vector<CoordinatePlan> plan_coordinates(const SearchDistribution& sd) {
  const int d = sd.dimension();
  std::vector<CoordinatePlan> plan(d);
  for (int j = 0; j < d; ++j) {
    const int n = sd.dims[j] - 1;
    const double cap = 0.25 * n;
    const double var = std::clamp(sd.sigma * sd.sigma * sd.cov(j, j), 0.0, cap);
    plan[j].n = n;
    plan[j].p = p_from_variance(n, var);
    plan[j].mu = sd.mean[j];
    plan[j].cdf = binomial_cdf_table(n, plan[j].p);
  }
  return plan;
}

/// Lower-triangular-ish factor L with L L^T = correlation(C). Falls back to
/// an eigenvalue square root when the matrix is only semi-definite.
Eigen::MatrixXd correlation_factor(const Eigen::MatrixXd& cov) {
  const int d = static_cast<int>(cov.rows());
  Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (i == j) continue;
      const double denom = std::sqrt(cov(i, i) * cov(j, j));
      corr(i, j) = denom > 0.0 ? std::clamp(cov(i, j) / denom, -1.0, 1.0) : 0.0;
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(corr);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(corr);
  const Eigen::VectorXd roots = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * roots.asDiagonal();
}

/// Cumulative table over the 2^k outcomes of a joint Bernoulli law.
std::vector<double> joint_cdf_table(const expfam::JointTable& table) {
  std::vector<double> cdf(table.size());
  double acc = 0.0;
  for (std::uint32_t mask = 0; mask < table.size(); ++mask) {
    acc += table[mask];
    cdf[mask] = std::min(acc, 1.0);
  }
  cdf.back() = 1.0;
  return cdf;
}

std::vector<int> sum_joint_draws(const std::vector<double>& cdf,
                                 const std::vector<int>& trials, RngStream& rng) {
  const int k = static_cast<int>(trials.size());
  const int max_trials = *std::max_element(trials.begin(), trials.end());
  std::vector<int> counts(k, 0);
  for (int t = 0; t < max_trials; ++t) {
    const auto mask = static_cast<std::uint32_t>(inverse_cdf(cdf, rng.uniform01()));
    for (int j = 0; j < k; ++j)
      if (t < trials[j] && ((mask >> j) & 1u)) ++counts[j];
  }
  return counts;
}

/// Admissible covariance range of a Bernoulli pair (Frechet bounds), shrunk
/// slightly so the Ising fit stays off the boundary.
std::pair<double, double> feasible_pair_cov(double pi, double pj) {
  const double lo = std::max(0.0, pi + pj - 1.0) - pi * pj;
  const double hi = std::min(pi, pj) - pi * pj;
  return {0.95 * lo, 0.95 * hi};
}

std::vector<std::vector<int>> sample_candidates_copula(
    const SearchDistribution& sd, int count, RngStream& rng) {
  const int d = sd.dimension();
  const auto plan = plan_coordinates(sd);
  const Eigen::MatrixXd factor = correlation_factor(sd.cov);

  std::vector<std::vector<int>> out(count, std::vector<int>(d));
  Eigen::VectorXd z(d);
  for (int c = 0; c < count; ++c) {
    for (int j = 0; j < d; ++j) z[j] = rng.normal();
    const Eigen::VectorXd w = factor * z;
    for (int j = 0; j < d; ++j) {
      const int b = inverse_cdf(plan[j].cdf, standard_normal_cdf(w[j]));
      out[c][j] = shift_and_wrap(plan[j].mu, plan[j].n, plan[j].p, b);
    }
  }
  return out;
}

std::vector<std::vector<int>> sample_candidates_exact(
    const SearchDistribution& sd, int count, RngStream& rng) {
  const int d = sd.dimension();
  if (d > expfam::kMaxDimension)
    throw expfam::DimensionTooLargeError(
        "exact sampler limited to dimension <= " +
        std::to_string(expfam::kMaxDimension));
  const auto plan = plan_coordinates(sd);

  // Coordinates with p on the boundary are deterministic (B = 0) and stay
  // out of the Ising fit.
  std::vector<int> active;
  for (int j = 0; j < d; ++j)
    if (plan[j].p > 0.0 && plan[j].p < 1.0) active.push_back(j);

  expfam::JointTable table = expfam::JointTable::uniform(std::max<int>(1, d));
  bool have_table = false;
  if (!active.empty()) {
    const int ka = static_cast<int>(active.size());
    Eigen::VectorXd means(ka);
    for (int a = 0; a < ka; ++a) means[a] = plan[active[a]].p;
    Eigen::MatrixXd target = Eigen::MatrixXd::Zero(ka, ka);
    for (int a = 0; a < ka; ++a)
      target(a, a) = means[a] * (1.0 - means[a]);
    for (int a = 0; a < ka; ++a) {
      for (int b = a + 1; b < ka; ++b) {
        const int i = active[a], j = active[b];
        const int shared = std::min(plan[i].n, plan[j].n);
        double c = sd.sigma * sd.sigma * sd.cov(i, j) / shared;
        const auto [lo, hi] = feasible_pair_cov(means[a], means[b]);
        target(a, b) = target(b, a) = std::clamp(c, lo, hi);
      }
    }
    // A pairwise-feasible target can still be jointly infeasible for k >= 3;
    // shrink the couplings toward independence until the fit succeeds.
    for (int attempt = 0; attempt < 6 && !have_table; ++attempt) {
      try {
        table = expfam::moment_from_canonical(
            expfam::fit_ising(means, target).to_canonical());
        have_table = true;
      } catch (const expfam::InfeasibleMomentsError&) {
        for (int a = 0; a < ka; ++a)
          for (int b = 0; b < ka; ++b)
            if (a != b) target(a, b) *= 0.5;
      }
    }
    if (!have_table) {
      std::vector<double> marginals(ka);
      for (int a = 0; a < ka; ++a) marginals[a] = means[a];
      table = expfam::JointTable::product(marginals);
      have_table = true;
    }
  }

  std::vector<double> cdf;
  std::vector<int> active_trials(active.size());
  if (!active.empty()) {
    cdf = joint_cdf_table(table);
    for (std::size_t a = 0; a < active.size(); ++a)
      active_trials[a] = plan[active[a]].n;
  }

  std::vector<std::vector<int>> out(count, std::vector<int>(d));
  for (int c = 0; c < count; ++c) {
    std::vector<int> counts(active.size(), 0);
    if (!active.empty()) counts = sum_joint_draws(cdf, active_trials, rng);
    std::vector<int> b(d, 0);
    for (std::size_t a = 0; a < active.size(); ++a) b[active[a]] = counts[a];
    for (int j = 0; j < d; ++j)
      out[c][j] = shift_and_wrap(plan[j].mu, plan[j].n, plan[j].p, b[j]);
  }
  return out;
}

}  // namespace

void SearchDistribution::validate() const {
  const int d = dimension();
  if (d < 1) throw std::invalid_argument("search distribution needs d >= 1");
  if (cov.rows() != d || cov.cols() != d)
    throw std::invalid_argument("covariance must be d x d");
  if (static_cast<int>(dims.size()) != d)
    throw std::invalid_argument("dims must have one entry per coordinate");
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be > 0");
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument("covariance must be symmetric");
  for (int j = 0; j < d; ++j) {
    if (cov(j, j) < 0.0) throw std::invalid_argument("covariance diagonal must be >= 0");
    if (dims[j] < 2)
      throw BadDimensionError("coordinate " + std::to_string(j) +
                              " has cardinality " + std::to_string(dims[j]) +
                              "; need >= 2");
  }
}

double p_from_variance(int n, double variance) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (variance < 0.0) throw std::invalid_argument("variance must be >= 0");
  if (variance > 0.25 * n)
    throw VarianceTooLargeError("variance " + std::to_string(variance) +
                                " exceeds n/4 = " + std::to_string(0.25 * n));
  // Minimal root of p^2 - p + variance/n = 0, written to avoid cancellation
  // as variance -> 0.
  const double x = 4.0 * variance / n;
  const double disc = std::sqrt(std::max(0.0, 1.0 - x));
  return (2.0 * variance / n) / (1.0 + disc);
}

int sample_shifted_binomial(double mu, int n, double p, RngStream& rng) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p must lie in [0,1]");
  const auto cdf = binomial_cdf_table(n, p);
  const int b = inverse_cdf(cdf, rng.uniform01());
  return shift_and_wrap(mu, n, p, b);
}

std::vector<std::vector<int>> sample_candidates(const SearchDistribution& sd,
                                                int count, RngStream& rng,
                                                SamplerKind kind) {
  sd.validate();
  if (count < 1) throw std::invalid_argument("count must be >= 1");
  return kind == SamplerKind::kCopula ? sample_candidates_copula(sd, count, rng)
                                      : sample_candidates_exact(sd, count, rng);
}

std::vector<int> exact_joint_sampler(const expfam::CanonicalParams& params,
                                     const std::vector<int>& trials, RngStream& rng) {
  if (static_cast<int>(trials.size()) != params.dimension())
    throw std::invalid_argument("need one trial count per coordinate");
  for (int t : trials)
    if (t < 1) throw std::invalid_argument("trial counts must be >= 1");
  const auto cdf = joint_cdf_table(expfam::moment_from_canonical(params));
  return sum_joint_draws(cdf, trials, rng);
}

std::vector<int> exact_joint_sampler(const expfam::IsingParams& params,
                                     const std::vector<int>& trials, RngStream& rng) {
  return exact_joint_sampler(params.to_canonical(), trials, rng);
}

}  // namespace bincma::sampling
