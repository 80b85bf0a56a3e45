#include "bincma/expfam.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

namespace bincma::expfam {

namespace {

void check_dimension(int k) {
  if (k < 1) throw std::invalid_argument("dimension must be >= 1");
  if (k > kMaxDimension)
    throw DimensionTooLargeError("dimension " + std::to_string(k) +
                                 " exceeds exact-table limit " +
                                 std::to_string(kMaxDimension));
}

/// In-place subset-sum (zeta) transform: f[S] <- sum of f[T] over T subset S.
void zeta_transform(std::vector<double>& f, int k) {
  for (int j = 0; j < k; ++j) {
    const std::uint32_t bit = 1u << j;
    for (std::uint32_t mask = 0; mask < f.size(); ++mask) {
      if (mask & bit) f[mask] += f[mask ^ bit];
    }
  }
}

/// In-place Moebius transform, the inverse of zeta_transform:
/// f[S] <- sum over T subset S of (-1)^{|S\T|} f[T].
void moebius_transform(std::vector<double>& f, int k) {
  for (int j = 0; j < k; ++j) {
    const std::uint32_t bit = 1u << j;
    for (std::uint32_t mask = 0; mask < f.size(); ++mask) {
      if (mask & bit) f[mask] -= f[mask ^ bit];
    }
  }
}

/// Sum of thetas over all non-empty submasks of each mask (S^mask of the
/// exponential form), with S^empty = 0.
std::vector<double> subset_sums(int k, const std::vector<double>& theta) {
  std::vector<double> s(std::size_t{1} << k, 0.0);
  for (std::uint32_t mask = 1; mask < s.size(); ++mask) s[mask] = theta[mask - 1];
  zeta_transform(s, k);
  return s;
}

double log_sum_exp(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - m);
  return m + std::log(acc);
}

}  // namespace

JointTable::JointTable(int k, std::vector<double> probs) : k_(k), probs_(std::move(probs)) {
  check_dimension(k_);
  if (probs_.size() != (std::size_t{1} << k_))
    throw std::invalid_argument("probability table must have exactly 2^k entries");
  double total = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0)) throw std::invalid_argument("probabilities must be non-negative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("probability table must sum to 1 (got " +
                                std::to_string(total) + ")");
}

JointTable JointTable::uniform(int k) {
  check_dimension(k);
  const std::size_t n = std::size_t{1} << k;
  return JointTable(k, std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

JointTable JointTable::product(const std::vector<double>& marginals) {
  const int k = static_cast<int>(marginals.size());
  check_dimension(k);
  std::vector<double> probs(std::size_t{1} << k, 1.0);
  for (std::uint32_t mask = 0; mask < probs.size(); ++mask) {
    for (int j = 0; j < k; ++j)
      probs[mask] *= (mask >> j) & 1u ? marginals[j] : 1.0 - marginals[j];
  }
  // Renormalize away rounding from the k-fold products.
  double total = 0.0;
  for (double p : probs) total += p;
  for (double& p : probs) p /= total;
  return JointTable(k, std::move(probs));
}

CanonicalParams::CanonicalParams(int k, std::vector<double> theta)
    : k_(k), theta_(std::move(theta)) {
  check_dimension(k_);
  if (theta_.size() != (std::size_t{1} << k_) - 1)
    throw std::invalid_argument("theta must have exactly 2^k - 1 entries");
  for (double t : theta_)
    if (!std::isfinite(t)) throw std::invalid_argument("theta entries must be finite");
  log_partition_ = log_sum_exp(subset_sums(k_, theta_));
}

CanonicalParams canonical_from_moment(const JointTable& t) {
  const int k = t.dimension();
  std::vector<double> logp(t.size());
  for (std::uint32_t mask = 0; mask < t.size(); ++mask) {
    if (!(t[mask] > 0.0))
      throw ZeroProbabilityError(
          "moment parameterization lies on the simplex boundary (entry " +
          std::to_string(mask) + " is not strictly positive)");
    logp[mask] = std::log(t[mask]);
  }
  // theta_S is the signed even/odd product ratio, i.e. the Moebius transform
  // of log p over subset masks.
  moebius_transform(logp, k);
  return CanonicalParams(k, std::vector<double>(logp.begin() + 1, logp.end()));
}

JointTable moment_from_canonical(const CanonicalParams& c) {
  const int k = c.dimension();
  std::vector<double> s = subset_sums(k, c.thetas());
  for (double v : s)
    if (!std::isfinite(v))
      throw OverflowError("subset sums of theta exceed the representable range");
  const double lse = log_sum_exp(s);
  std::vector<double> probs(s.size());
  double total = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    probs[i] = std::exp(s[i] - lse);
    total += probs[i];
  }
  for (double& p : probs) p /= total;
  return JointTable(k, std::move(probs));
}

JointTable marginal(const JointTable& t, std::uint32_t keep) {
  const int k = t.dimension();
  const std::uint32_t full = (k == 32 ? ~0u : (1u << k) - 1u);
  if (keep == 0) throw EmptySubsetError("marginal requires a non-empty subset");
  if (keep & ~full) throw std::invalid_argument("keep mask has bits outside {0..k-1}");

  std::vector<int> kept_bits;
  for (int j = 0; j < k; ++j)
    if ((keep >> j) & 1u) kept_bits.push_back(j);

  std::vector<double> out(std::size_t{1} << kept_bits.size(), 0.0);
  for (std::uint32_t mask = 0; mask < t.size(); ++mask) {
    std::uint32_t compressed = 0;
    for (std::size_t b = 0; b < kept_bits.size(); ++b)
      compressed |= ((mask >> kept_bits[b]) & 1u) << b;
    out[compressed] += t[mask];
  }
  return JointTable(static_cast<int>(kept_bits.size()), std::move(out));
}

JointTable conditional(const JointTable& t, int target,
                       const std::vector<std::pair<int, int>>& given) {
  const int k = t.dimension();
  if (target < 0 || target >= k) throw std::invalid_argument("target out of range");
  std::uint32_t fixed_mask = 0, fixed_values = 0;
  for (auto [coord, value] : given) {
    if (coord < 0 || coord >= k) throw std::invalid_argument("conditioning coordinate out of range");
    if (coord == target)
      throw std::invalid_argument("target may not appear among the conditioned coordinates");
    if (value != 0 && value != 1) throw std::invalid_argument("conditioning values must be 0 or 1");
    fixed_mask |= 1u << coord;
    if (value) fixed_values |= 1u << coord;
  }

  double p0 = 0.0, p1 = 0.0;
  for (std::uint32_t mask = 0; mask < t.size(); ++mask) {
    if ((mask & fixed_mask) != fixed_values) continue;
    ((mask >> target) & 1u ? p1 : p0) += t[mask];
  }
  const double total = p0 + p1;
  if (!(total > 0.0))
    throw ZeroConditioningEventError("conditioning event has probability zero");
  return JointTable(1, {p0 / total, p1 / total});
}

bool is_independent(const CanonicalParams& c, double tol) {
  if (tol < 0.0) throw std::invalid_argument("tolerance must be >= 0");
  for (std::uint32_t mask = 1; mask < (1u << c.dimension()); ++mask) {
    if (std::popcount(mask) >= 2 && std::abs(c.theta(mask)) > tol) return false;
  }
  return true;
}

Eigen::VectorXd mean_vector(const JointTable& t) {
  const int k = t.dimension();
  Eigen::VectorXd m = Eigen::VectorXd::Zero(k);
  for (std::uint32_t mask = 0; mask < t.size(); ++mask)
    for (int j = 0; j < k; ++j)
      if ((mask >> j) & 1u) m[j] += t[mask];
  return m;
}

Eigen::MatrixXd covariance_matrix(const JointTable& t) {
  const int k = t.dimension();
  const Eigen::VectorXd m = mean_vector(t);
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(k, k);
  for (std::uint32_t mask = 0; mask < t.size(); ++mask) {
    for (int i = 0; i < k; ++i) {
      if (!((mask >> i) & 1u)) continue;
      for (int j = i; j < k; ++j)
        if ((mask >> j) & 1u) second(i, j) += t[mask];
    }
  }
  Eigen::MatrixXd cov = second.selfadjointView<Eigen::Upper>();
  cov -= m * m.transpose();
  return cov;
}

double entropy(const JointTable& t) {
  double h = 0.0;
  for (std::uint32_t mask = 0; mask < t.size(); ++mask) {
    const double p = t[mask];
    if (p > 0.0) h -= p * std::log(p);
  }
  return std::max(h, 0.0);
}

CanonicalParams IsingParams::to_canonical() const {
  const int k = dimension();
  check_dimension(k);
  std::vector<double> theta((std::size_t{1} << k) - 1, 0.0);
  for (int i = 0; i < k; ++i) theta[(1u << i) - 1] = h[i];
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j)
      theta[((1u << i) | (1u << j)) - 1] = coupling(i, j);
  return CanonicalParams(k, std::move(theta));
}

IsingParams IsingParams::from_canonical(const CanonicalParams& c, double tol) {
  const int k = c.dimension();
  IsingParams p{Eigen::VectorXd::Zero(k), Eigen::MatrixXd::Zero(k, k)};
  for (std::uint32_t mask = 1; mask < (1u << k); ++mask) {
    const int order = std::popcount(mask);
    if (order == 1) {
      p.h[std::countr_zero(mask)] = c.theta(mask);
    } else if (order == 2) {
      const int i = std::countr_zero(mask);
      const int j = 31 - std::countl_zero(mask);
      p.coupling(i, j) = p.coupling(j, i) = c.theta(mask);
    } else if (std::abs(c.theta(mask)) > tol) {
      throw std::invalid_argument(
          "canonical parameters carry an order->=3 interaction; not an Ising model");
    }
  }
  return p;
}

namespace {

/// Index layout of the Ising sufficient statistic: k singletons followed by
/// the k(k-1)/2 pairs (i,j), i<j, in row-major order.
int pair_index(int k, int i, int j) {
  return k + (i * (2 * k - i - 1)) / 2 + (j - i - 1);
}

Eigen::VectorXd ising_moments(const JointTable& t, int k, int n_params) {
  Eigen::VectorXd mom = Eigen::VectorXd::Zero(n_params);
  for (std::uint32_t mask = 0; mask < t.size(); ++mask) {
    const double p = t[mask];
    if (p == 0.0) continue;
    for (int i = 0; i < k; ++i) {
      if (!((mask >> i) & 1u)) continue;
      mom[i] += p;
      for (int j = i + 1; j < k; ++j)
        if ((mask >> j) & 1u) mom[pair_index(k, i, j)] += p;
    }
  }
  return mom;
}

/// Covariance of the sufficient statistic (x_i, x_i x_j) under the table.
/// This is the exact Jacobian of the moment map in the natural parameters.
Eigen::MatrixXd ising_stat_covariance(const JointTable& t, int k, int n_params,
                                      const Eigen::VectorXd& mom) {
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(n_params, n_params);
  Eigen::VectorXd stat(n_params);
  for (std::uint32_t mask = 0; mask < t.size(); ++mask) {
    const double p = t[mask];
    if (p == 0.0) continue;
    for (int i = 0; i < k; ++i) {
      const double xi = (mask >> i) & 1u;
      stat[i] = xi;
      for (int j = i + 1; j < k; ++j)
        stat[pair_index(k, i, j)] = xi * ((mask >> j) & 1u);
    }
    second.selfadjointView<Eigen::Lower>().rankUpdate(stat, p);
  }
  Eigen::MatrixXd cov = second.selfadjointView<Eigen::Lower>();
  cov -= mom * mom.transpose();
  return cov;
}

IsingParams params_from_vector(int k, const Eigen::VectorXd& v) {
  IsingParams p{v.head(k), Eigen::MatrixXd::Zero(k, k)};
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j)
      p.coupling(i, j) = p.coupling(j, i) = v[pair_index(k, i, j)];
  return p;
}

}  // namespace

IsingParams fit_ising(const Eigen::VectorXd& means, const Eigen::MatrixXd& cov,
                      const FitIsingOptions& options) {
  const int k = static_cast<int>(means.size());
  check_dimension(k);
  if (cov.rows() != k || cov.cols() != k)
    throw std::invalid_argument("covariance must be k x k");
  if (!cov.isApprox(cov.transpose(), 1e-10))
    throw std::invalid_argument("covariance must be symmetric");
  for (int i = 0; i < k; ++i) {
    if (!(means[i] > 0.0 && means[i] < 1.0))
      throw InfeasibleMomentsError("means must lie strictly inside (0,1)");
    if (std::abs(cov(i, i) - means[i] * (1.0 - means[i])) > 1e-6)
      throw InfeasibleMomentsError(
          "diagonal covariance inconsistent with Bernoulli means");
  }

  const int n_params = k + k * (k - 1) / 2;
  Eigen::VectorXd target(n_params);
  for (int i = 0; i < k; ++i) target[i] = means[i];
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j)
      target[pair_index(k, i, j)] = cov(i, j) + means[i] * means[j];

  // Start from the independent fit.
  Eigen::VectorXd theta(n_params);
  for (int i = 0; i < k; ++i) theta[i] = std::log(means[i] / (1.0 - means[i]));
  theta.tail(n_params - k).setZero();

  auto residual = [&](const Eigen::VectorXd& v, Eigen::VectorXd& mom_out,
                      JointTable& table_out) {
    table_out = moment_from_canonical(params_from_vector(k, v).to_canonical());
    mom_out = ising_moments(table_out, k, n_params);
    return (mom_out - target).eval();
  };

  JointTable table = JointTable::uniform(k);
  Eigen::VectorXd mom(n_params);
  Eigen::VectorXd r = residual(theta, mom, table);
  double r_norm = r.lpNorm<Eigen::Infinity>();
  int stalls = 0;

  for (int it = 0; it < options.max_iterations && r_norm > options.tolerance; ++it) {
    Eigen::MatrixXd jac = ising_stat_covariance(table, k, n_params, mom);
    jac.diagonal().array() += 1e-12;
    Eigen::VectorXd delta = jac.ldlt().solve(-r);
    if (!delta.allFinite())
      throw InfeasibleMomentsError("Newton step is singular; target moments infeasible");

    // Damped step: halve until the residual improves.
    double step = 1.0;
    bool improved = false;
    while (step >= 1.0 / 1024.0) {
      Eigen::VectorXd trial = theta + step * delta;
      if (trial.allFinite()) {
        Eigen::VectorXd trial_mom(n_params);
        JointTable trial_table = table;
        Eigen::VectorXd trial_r = residual(trial, trial_mom, trial_table);
        const double trial_norm = trial_r.lpNorm<Eigen::Infinity>();
        if (trial_norm < r_norm) {
          theta = trial;
          r = trial_r;
          r_norm = trial_norm;
          mom = trial_mom;
          table = trial_table;
          improved = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!improved && ++stalls >= 3) break;
  }

  if (r_norm > options.accept_tolerance)
    throw InfeasibleMomentsError(
        "moment matching stalled at residual " + std::to_string(r_norm) +
        "; no Ising distribution attains the requested moments");
  return params_from_vector(k, theta);
}

}  // namespace bincma::expfam
