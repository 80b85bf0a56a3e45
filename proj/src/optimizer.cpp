#include "bincma/optimizer.hpp"

#include <algorithm>
#include <cmath>

namespace bincma::optimizer {

namespace {

constexpr double kEigenFloor = 1e-12;

// C^{-1/2} through the symmetric eigendecomposition; eigenvalues are clamped
// at the floor so a degenerate direction cannot blow up the isotropic path.
Eigen::MatrixXd inverse_sqrt(const Eigen::MatrixXd& cov) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("covariance eigendecomposition failed");
  }
  const Eigen::VectorXd inv_root =
      es.eigenvalues().cwiseMax(kEigenFloor).cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * inv_root.asDiagonal() *
         es.eigenvectors().transpose();
}

// Symmetrize, then rebuild from clamped eigenvalues only when one actually
// dips below the floor -- identical in exact arithmetic, and skipping the
// rebuild keeps healthy updates bit-stable.
Eigen::MatrixXd repair_covariance(Eigen::MatrixXd cov) {
  cov = 0.5 * (cov + cov.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("covariance eigendecomposition failed");
  }
  if (es.eigenvalues().minCoeff() >= kEigenFloor) {
    return cov;
  }
  const Eigen::VectorXd floored = es.eigenvalues().cwiseMax(kEigenFloor);
  cov = es.eigenvectors() * floored.asDiagonal() *
        es.eigenvectors().transpose();
  return 0.5 * (cov + cov.transpose()).eval();
}

}  // namespace

StrategyConstants StrategyConstants::defaults(int d, int lambda_override,
                                              int mu_override) {
  if (d < 1) {
    throw ConfigError("d: must be >= 1");
  }
  StrategyConstants c;
  c.lambda = lambda_override > 0
                 ? lambda_override
                 : 4 + static_cast<int>(std::floor(3.0 * std::log(d)));
  c.mu = mu_override > 0 ? mu_override : std::max(1, c.lambda / 2);

  c.weights = Eigen::VectorXd(c.mu);
  for (int i = 0; i < c.mu; ++i) {
    c.weights[i] = std::log(c.mu + 0.5) - std::log(i + 1.0);
  }
  c.weights /= c.weights.sum();
  c.mu_eff = 1.0 / c.weights.squaredNorm();

  c.c_sigma = (c.mu_eff + 2.0) / (d + c.mu_eff + 5.0);
  c.d_sigma = 1.0 +
              2.0 * std::max(0.0, std::sqrt((c.mu_eff - 1.0) / (d + 1.0)) - 1.0) +
              c.c_sigma;
  c.c_c = (4.0 + c.mu_eff / d) / (d + 4.0 + 2.0 * c.mu_eff / d);
  c.c_1 = 2.0 / ((d + 1.3) * (d + 1.3) + c.mu_eff);
  c.c_mu = std::min(1.0 - c.c_1, 2.0 * (c.mu_eff - 2.0 + 1.0 / c.mu_eff) /
                                     ((d + 2.0) * (d + 2.0) + c.mu_eff));
  c.chi = std::sqrt(static_cast<double>(d)) *
          (1.0 - 1.0 / (4.0 * d) + 1.0 / (21.0 * d * d));
  return c;
}

void StrategyConstants::validate(int d) const {
  if (lambda < 1) {
    throw ConfigError("lambda: must be >= 1");
  }
  if (mu < 1 || mu > lambda) {
    throw ConfigError("mu: must satisfy 1 <= mu <= lambda");
  }
  if (weights.size() != mu) {
    throw ConfigError("weights: must have exactly mu entries");
  }
  for (int i = 0; i < mu; ++i) {
    if (!(weights[i] > 0.0)) {
      throw ConfigError("weights: must be strictly positive");
    }
    if (i > 0 && weights[i] > weights[i - 1] + 1e-15) {
      throw ConfigError("weights: must be decreasing");
    }
  }
  if (std::abs(weights.sum() - 1.0) > 1e-9) {
    throw ConfigError("weights: must sum to 1");
  }
  if (!(c_sigma > 0.0 && c_sigma <= 1.0)) {
    throw ConfigError("c_sigma: must lie in (0, 1]");
  }
  if (!(d_sigma > 0.0)) {
    throw ConfigError("d_sigma: must be positive");
  }
  if (!(c_c > 0.0 && c_c <= 1.0)) {
    throw ConfigError("c_c: must lie in (0, 1]");
  }
  if (!(c_1 > 0.0 && c_1 <= 1.0)) {
    throw ConfigError("c_1: must lie in (0, 1]");
  }
  // mu = 1 degenerates the rank-mu term to weight (mu_eff-1)^2/mu_eff = 0,
  // so zero is admissible here even though the other rates must be positive.
  if (!(c_mu >= 0.0 && c_mu <= 1.0)) {
    throw ConfigError("c_mu: must lie in [0, 1]");
  }
  if (c_1 + c_mu > 1.0) {
    throw ConfigError("c_1 + c_mu: must not exceed 1");
  }
  if (!(mu_eff >= 1.0)) {
    throw ConfigError("mu_eff: must be >= 1");
  }
  if (!(chi > 0.0)) {
    throw ConfigError("chi: must be positive");
  }
  if (!(eps >= 0.0)) {
    throw ConfigError("eps: must be >= 0");
  }
  if (max_iterations < 0) {
    throw ConfigError("max_iterations: must be >= 0");
  }
  if (!(margin >= 0.0 && margin < 0.5)) {
    throw ConfigError("margin: must lie in [0, 0.5)");
  }
  if (d < 1) {
    throw ConfigError("d: must be >= 1");
  }
}

void OptimizerConfig::finalize() {
  if (d < 1) {
    throw ConfigError("d: must be >= 1");
  }
  if (dims.empty()) {
    throw ConfigError("dims: required");
  }
  if (dims.size() == 1 && d > 1) {
    dims.assign(static_cast<std::size_t>(d), dims[0]);
  }
  if (static_cast<int>(dims.size()) != d) {
    throw ConfigError("dims: must have 1 or d entries");
  }
  for (std::size_t j = 0; j < dims.size(); ++j) {
    if (dims[j] < 2) {
      throw ConfigError("dims[" + std::to_string(j) + "]: must be >= 2");
    }
  }
  if (lambda < 0) {
    throw ConfigError("lambda: must be >= 0 (0 selects the default)");
  }
  if (mu < 0) {
    throw ConfigError("mu: must be >= 0 (0 selects the default)");
  }
  if (sigma0 < 0.0 || !std::isfinite(sigma0)) {
    throw ConfigError("sigma0: must be finite and >= 0 (0 selects the default)");
  }
  if (sigma0 == 0.0) {
    const int max_trials = *std::max_element(dims.begin(), dims.end()) - 1;
    sigma0 = 0.5 * std::sqrt(static_cast<double>(max_trials));
  }
  if (max_iterations < 0) {
    throw ConfigError("max_iterations: must be >= 0");
  }
  if (!(eps >= 0.0)) {
    throw ConfigError("eps: must be >= 0");
  }
  if (std::isinf(target_f)) {
    throw ConfigError("target_f: must be finite when set");
  }
  if (!(margin >= 0.0 && margin < 0.5)) {
    throw ConfigError("margin: must lie in [0, 0.5)");
  }
}

OptimizerState make_initial_state(OptimizerConfig config) {
  config.finalize();

  StrategyConstants constants =
      StrategyConstants::defaults(config.d, config.lambda, config.mu);
  if (!std::isnan(config.c_sigma)) constants.c_sigma = config.c_sigma;
  if (!std::isnan(config.d_sigma)) constants.d_sigma = config.d_sigma;
  if (!std::isnan(config.c_c)) constants.c_c = config.c_c;
  if (!std::isnan(config.c_1)) constants.c_1 = config.c_1;
  if (!std::isnan(config.c_mu)) constants.c_mu = config.c_mu;
  constants.eps = config.eps;
  constants.max_iterations = config.max_iterations;
  constants.use_hsig = !config.disable_hsig;
  constants.margin = config.margin;
  constants.validate(config.d);

  OptimizerState state;
  state.sd.mean = Eigen::VectorXd(config.d);
  for (int j = 0; j < config.d; ++j) {
    state.sd.mean[j] = 0.5 * (config.dims[j] - 1);
  }
  state.sd.sigma = config.sigma0;
  state.sd.cov = Eigen::MatrixXd::Identity(config.d, config.d);
  state.sd.dims = config.dims;
  state.sd.validate();
  state.p_sigma = Eigen::VectorXd::Zero(config.d);
  state.p_c = Eigen::VectorXd::Zero(config.d);
  state.generation = 0;
  state.constants = std::move(constants);
  state.sampler = config.sampler;
  return state;
}

std::vector<std::vector<int>> ask(const OptimizerState& state, RngStream& rng) {
  if (state.constants.margin <= 0.0) {
    return sampling::sample_candidates(state.sd, state.constants.lambda, rng,
                                       state.sampler);
  }
  // Margin floor: coordinate j never samples with less variance than a
  // Binomial(n_j, margin), so the per-trial success probability handed to
  // the sampler stays at or above the margin.
  sampling::SearchDistribution sd = state.sd;
  const double sigma_sq = sd.sigma * sd.sigma;
  for (int j = 0; j < sd.dimension(); ++j) {
    const double trials = sd.dims[static_cast<std::size_t>(j)] - 1.0;
    const double floor =
        trials * state.constants.margin * (1.0 - state.constants.margin);
    if (sigma_sq * sd.cov(j, j) < floor) {
      sd.cov(j, j) = floor / sigma_sq;
    }
  }
  return sampling::sample_candidates(sd, state.constants.lambda, rng,
                                     state.sampler);
}

std::vector<Candidate> rank(std::vector<Candidate> candidates) {
  for (const Candidate& c : candidates) {
    if (!std::isfinite(c.fitness)) {
      throw NonFiniteFitnessError("candidate " + std::to_string(c.index) +
                                  ": fitness is not finite");
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) {
                     if (a.fitness != b.fitness) return a.fitness < b.fitness;
                     return a.index < b.index;
                   });
  return candidates;
}

OptimizerState tell(const OptimizerState& state,
                    const std::vector<Candidate>& ranked) {
  const StrategyConstants& k = state.constants;
  const int d = state.sd.dimension();
  if (static_cast<int>(ranked.size()) != k.lambda) {
    throw LengthMismatchError("ranked population: expected " +
                              std::to_string(k.lambda) + " candidates, got " +
                              std::to_string(ranked.size()));
  }
  for (const Candidate& c : ranked) {
    if (static_cast<int>(c.x.size()) != d) {
      throw LengthMismatchError("candidate " + std::to_string(c.index) +
                                ": expected " + std::to_string(d) +
                                " coordinates, got " +
                                std::to_string(c.x.size()));
    }
  }

  const Eigen::VectorXd m_prev = state.sd.mean;
  const double sigma = state.sd.sigma;

  // Recombination mean: weighted real-valued average of the mu best.
  Eigen::VectorXd m = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < k.mu; ++i) {
    for (int j = 0; j < d; ++j) {
      m[j] += k.weights[i] * ranked[i].x[j];
    }
  }

  const Eigen::VectorXd y_w = (m - m_prev) / sigma;

  // Isotropic path: whitened mean displacement.
  const Eigen::MatrixXd inv_sqrt_cov = inverse_sqrt(state.sd.cov);
  Eigen::VectorXd p_sigma =
      (1.0 - k.c_sigma) * state.p_sigma +
      std::sqrt(k.c_sigma * (2.0 - k.c_sigma) * k.mu_eff) * (inv_sqrt_cov * y_w);

  // Stall indicator: freeze the rank-one update while the isotropic path is
  // still abnormally long (right after a large step).
  double hsig = 1.0;
  if (k.use_hsig) {
    const double decay =
        std::sqrt(1.0 - std::pow(1.0 - k.c_sigma, 2.0 * (state.generation + 1)));
    const double threshold = (1.4 + 2.0 / (d + 1.0)) * k.chi;
    hsig = (p_sigma.norm() / decay < threshold) ? 1.0 : 0.0;
  }

  Eigen::VectorXd p_c = (1.0 - k.c_c) * state.p_c +
                        hsig * std::sqrt(k.c_c * (2.0 - k.c_c) * k.mu_eff) * y_w;

  // Rank-mu term from the mu best steps, taken relative to the old mean.
  Eigen::MatrixXd rank_mu = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd y_i(d);
  for (int i = 0; i < k.mu; ++i) {
    for (int j = 0; j < d; ++j) {
      y_i[j] = (ranked[i].x[j] - m_prev[j]) / sigma;
    }
    rank_mu.selfadjointView<Eigen::Upper>().rankUpdate(y_i, k.weights[i]);
  }
  rank_mu = rank_mu.selfadjointView<Eigen::Upper>();

  // When hsig stalls the rank-one update, put the missing variance back so
  // the trace decay rate is unchanged.
  const double delta_hsig = (1.0 - hsig) * k.c_c * (2.0 - k.c_c);
  Eigen::MatrixXd cov =
      (1.0 - k.c_1 - k.c_mu) * state.sd.cov +
      k.c_1 * (p_c * p_c.transpose() + delta_hsig * state.sd.cov) +
      k.c_mu * rank_mu;
  cov = repair_covariance(std::move(cov));

  // Multiplicative step-size update; the exponent is capped so a pathological
  // path length degrades gracefully instead of overflowing sigma.
  const double exponent = (k.c_sigma / k.d_sigma) * (p_sigma.norm() / k.chi - 1.0);
  const double sigma_new = sigma * std::exp(std::min(exponent, 40.0));

  OptimizerState next;
  next.sd.mean = m;
  next.sd.sigma = sigma_new;
  next.sd.cov = std::move(cov);
  next.sd.dims = state.sd.dims;
  next.p_sigma = std::move(p_sigma);
  next.p_c = std::move(p_c);
  next.generation = state.generation + 1;
  next.constants = state.constants;
  next.sampler = state.sampler;
  next.best_x = state.best_x;
  next.best_f = state.best_f;
  if (std::isnan(next.best_f) || ranked.front().fitness < next.best_f) {
    next.best_x = ranked.front().x;
    next.best_f = ranked.front().fitness;
  }
  return next;
}

bool terminated(const OptimizerState& state, const Eigen::VectorXd& m_prev) {
  if (state.generation >= state.constants.max_iterations) {
    return true;
  }
  // Mean movement is well-defined only once a tell has happened.
  if (state.generation >= 1 &&
      (state.sd.mean - m_prev).norm() < state.constants.eps) {
    return true;
  }
  return false;
}

OptimizeResult optimize(
    const std::function<double(const std::vector<int>&)>& objective,
    const OptimizerConfig& config, RngStream& rng) {
  OptimizerState state = make_initial_state(config);
  const double target = config.target_f;

  OptimizeResult result;
  result.history.reserve(
      static_cast<std::size_t>(std::max(0, state.constants.max_iterations)));

  for (;;) {
    if (state.generation >= state.constants.max_iterations) {
      break;
    }
    const std::vector<std::vector<int>> xs = ask(state, rng);
    std::vector<Candidate> population;
    population.reserve(xs.size());
    double fitness_sum = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      Candidate c;
      c.x = xs[i];
      c.fitness = objective(xs[i]);
      c.index = static_cast<int>(i);
      fitness_sum += c.fitness;
      population.push_back(std::move(c));
    }
    result.evaluations += static_cast<long>(xs.size());

    const std::vector<Candidate> ranked = rank(std::move(population));
    const Eigen::VectorXd m_prev = state.sd.mean;
    state = tell(state, ranked);

    HistoryRow row;
    row.generation = state.generation;
    row.evaluations = result.evaluations;
    row.best_f = state.best_f;
    row.mean_f = fitness_sum / static_cast<double>(xs.size());
    row.sigma = state.sd.sigma;
    row.mean_step = (state.sd.mean - m_prev).norm();
    result.history.push_back(row);

    if (!std::isnan(target) && state.best_f <= target) {
      break;
    }
    if (terminated(state, m_prev)) {
      break;
    }
  }

  result.best_x = state.best_x;
  result.best_f = state.best_f;
  return result;
}

}  // namespace bincma::optimizer
