#include "doctest.h"
#include "test_util.hpp"

#include <bincma/expfam.hpp>
#include <bincma/rng.hpp>
#include <bincma/sampling.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

using namespace bincma;
using namespace bincma::sampling;

namespace {

// ---------------------------------------------------------------------------
// Test-side oracles.
// ---------------------------------------------------------------------------

double test_binom_pmf(int n, double p, int k) {
  if (p == 0.0) return k == 0 ? 1.0 : 0.0;
  if (p == 1.0) return k == n ? 1.0 : 0.0;
  const double log_choose =
      std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
  return std::exp(log_choose + k * std::log(p) + (n - k) * std::log1p(-p));
}

// Exact distribution of round(mu + B - np) mod (n+1), B ~ Binomial(n, p).
std::vector<double> wrapped_binomial_pmf(double mu, int n, double p) {
  std::vector<double> out(n + 1, 0.0);
  for (int b = 0; b <= n; ++b) {
    const long long v = std::llround(mu + b - n * p);
    const long long m = n + 1;
    const int r = static_cast<int>(((v % m) + m) % m);
    out[r] += test_binom_pmf(n, p, b);
  }
  return out;
}

SearchDistribution make_sd(Eigen::VectorXd mean, double sigma,
                           Eigen::MatrixXd cov, std::vector<int> dims) {
  SearchDistribution sd;
  sd.mean = std::move(mean);
  sd.sigma = sigma;
  sd.cov = std::move(cov);
  sd.dims = std::move(dims);
  return sd;
}

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_CASE("p_from_variance solves n p (1-p) = variance, minimal root") {
  CHECK(p_from_variance(4, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(p_from_variance(100, 9.0) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(p_from_variance(7, 0.0) == 0.0);

  for (int n : {1, 4, 17, 100}) {
    double prev = -1.0;
    for (double frac : {0.0, 0.01, 0.1, 0.33, 0.5, 0.9, 0.999, 1.0}) {
      const double var = frac * 0.25 * n;
      const double p = p_from_variance(n, var);
      CHECK(p >= 0.0);
      CHECK(p <= 0.5);
      CHECK(std::abs(n * p * (1.0 - p) - var) <= 1e-12);
      CHECK(p > prev);  // strictly monotone on this increasing grid
      prev = p;
    }
  }

  CHECK_THROWS_AS(p_from_variance(4, 1.0 + 1e-9), VarianceTooLargeError);
  CHECK_THROWS_AS(p_from_variance(4, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(p_from_variance(0, 0.0), std::invalid_argument);
}

TEST_CASE("shifted binomial degenerate cases") {
  RngStream rng(1, "shifted");
  // p = 0 makes the draw deterministic: round(mu) mod (n+1).
  CHECK(sample_shifted_binomial(2.4, 4, 0.0, rng) == 2);
  CHECK(sample_shifted_binomial(7.0, 4, 0.0, rng) == 2);   // 7 mod 5
  CHECK(sample_shifted_binomial(-1.0, 4, 0.0, rng) == 4);  // Euclidean mod
  CHECK(sample_shifted_binomial(15.7, 15, 0.0, rng) == 0);  // rounds up, wraps

  // Tiny p concentrates on round(mu).
  for (int i = 0; i < 1000; ++i) {
    CHECK(sample_shifted_binomial(2.0, 4, 1e-12, rng) == 2);
  }

  CHECK_THROWS_AS(sample_shifted_binomial(0.0, 0, 0.5, rng), std::invalid_argument);
  CHECK_THROWS_AS(sample_shifted_binomial(0.0, 4, 1.5, rng), std::invalid_argument);
}

TEST_CASE("shifted binomial matches the enumerated wrapped pmf") {
  // mu = 0, n = 4, p = 0.5: support {0..4}; values 3, 4 represent -2, -1.
  RngStream rng(42, "wrapped");
  const int N = 100000;
  std::vector<long> counts(5, 0);
  double signed_sum = 0.0, signed_sq = 0.0;
  for (int i = 0; i < N; ++i) {
    const int v = sample_shifted_binomial(0.0, 4, 0.5, rng);
    REQUIRE(v >= 0);
    REQUIRE(v <= 4);
    ++counts[v];
    const double s = v >= 3 ? v - 5.0 : v;  // signed residual in [-2, 2]
    signed_sum += s;
    signed_sq += s * s;
  }

  const std::vector<double> expect = wrapped_binomial_pmf(0.0, 4, 0.5);
  CHECK(testutil::chi_square_gof_pvalue(counts, expect, N) > 0.01);

  // Empirical mean ~ 0 mod 5 within 3 standard errors; variance tracks
  // n p (1-p) = 1 within 5%.
  const double mean = signed_sum / N;
  const double var = signed_sq / N - mean * mean;
  CHECK(std::abs(mean) <= 3.0 * std::sqrt(var / N));
  CHECK(std::abs(var - 1.0) <= 0.05);
}

TEST_CASE("sigma -> 0 collapses candidates onto the rounded mean") {
  Eigen::VectorXd m(3);
  m << 3.4, 12.2, 15.7;
  SearchDistribution sd = make_sd(m, 1e-12, Eigen::MatrixXd::Identity(3, 3),
                                  {16, 16, 16});
  RngStream rng(5, "collapse");
  for (const auto& x : sample_candidates(sd, 20, rng)) {
    REQUIRE(x.size() == 3);
    CHECK(x[0] == 3);
    CHECK(x[1] == 12);
    CHECK(x[2] == 0);  // round(15.7) = 16 wraps to 0 mod 16
  }
}

TEST_CASE("candidates stay inside the per-coordinate boxes") {
  Eigen::VectorXd m(5);
  m << 0.0, 3.0, 7.5, 15.0, 8.0;
  SearchDistribution sd = make_sd(m, 3.0, Eigen::MatrixXd::Identity(5, 5),
                                  std::vector<int>(5, 16));
  for (SamplerKind kind : {SamplerKind::kCopula, SamplerKind::kExact}) {
    RngStream rng(11, "box");
    for (const auto& x : sample_candidates(sd, 200, rng, kind)) {
      REQUIRE(x.size() == 5);
      for (int v : x) {
        CHECK(v >= 0);
        CHECK(v <= 15);
      }
    }
  }
}

TEST_CASE("sampling is deterministic given seed and stream") {
  Eigen::MatrixXd cov(2, 2);
  cov << 1.0, 0.4, 0.4, 1.0;
  SearchDistribution sd = make_sd(vec2(8.0, 8.0), 1.3, cov, {17, 17});
  for (SamplerKind kind : {SamplerKind::kCopula, SamplerKind::kExact}) {
    RngStream a(123, "det");
    RngStream b(123, "det");
    auto xs = sample_candidates(sd, 500, a, kind);
    auto ys = sample_candidates(sd, 500, b, kind);
    CHECK(xs == ys);
    RngStream c(124, "det");
    CHECK(sample_candidates(sd, 500, c, kind) != xs);
  }
}

TEST_CASE("uncorrelated coordinates show no empirical correlation") {
  SearchDistribution sd = make_sd(vec2(8.0, 8.0), 1.5,
                                  Eigen::MatrixXd::Identity(2, 2), {17, 17});
  RngStream rng(2024, "indep");
  const int N = 100000;
  auto xs = sample_candidates(sd, N, rng);
  std::vector<double> a(N), b(N);
  for (int i = 0; i < N; ++i) {
    a[i] = xs[i][0];
    b[i] = xs[i][1];
  }
  CHECK(std::abs(testutil::pearson(a, b)) <= 3.0 / std::sqrt(double(N)));
}

TEST_CASE("positive covariance produces strong positive rank correlation") {
  Eigen::MatrixXd cov(2, 2);
  cov << 1.0, 0.8, 0.8, 1.0;
  SearchDistribution sd = make_sd(vec2(8.0, 8.0), std::sqrt(2.0), cov, {17, 17});
  RngStream rng(7, "corr");
  const int N = 100000;
  auto xs = sample_candidates(sd, N, rng);
  std::vector<double> a(N), b(N);
  for (int i = 0; i < N; ++i) {
    a[i] = xs[i][0];
    b[i] = xs[i][1];
  }
  const double rho = testutil::spearman(a, b);
  CHECK(rho >= 0.4);

  // Flipping the sign of the coupling flips the sign of the correlation.
  cov(0, 1) = cov(1, 0) = -0.8;
  SearchDistribution neg = make_sd(vec2(8.0, 8.0), std::sqrt(2.0), cov, {17, 17});
  RngStream rng2(7, "corr");
  auto ys = sample_candidates(neg, N, rng2);
  for (int i = 0; i < N; ++i) {
    a[i] = ys[i][0];
    b[i] = ys[i][1];
  }
  CHECK(testutil::spearman(a, b) <= -0.4);
}

TEST_CASE("marginals match the exact wrapped binomial law") {
  // One coordinate with a non-integer mean; the documented marginal is the
  // shifted binomial with p solved from sigma^2 C_jj.
  const double mu = 1.3, sigma = 0.9;
  Eigen::VectorXd m(1);
  m << mu;
  SearchDistribution sd = make_sd(m, sigma, Eigen::MatrixXd::Identity(1, 1), {5});
  const int n = 4;
  const double p = (1.0 - std::sqrt(1.0 - 4.0 * sigma * sigma / n)) / 2.0;
  const std::vector<double> expect = wrapped_binomial_pmf(mu, n, p);

  for (SamplerKind kind : {SamplerKind::kCopula, SamplerKind::kExact}) {
    RngStream rng(99, "marginal");
    const int N = 100000;
    std::vector<long> counts(n + 1, 0);
    for (const auto& x : sample_candidates(sd, N, rng, kind)) {
      ++counts[x[0]];
    }
    CHECK(testutil::chi_square_gof_pvalue(counts, expect, N) > 0.01);
  }
}

TEST_CASE("per-coordinate variance tracks sigma^2 and decreases with sigma") {
  Eigen::VectorXd m(1);
  m << 8.0;
  double prev = 1e300;
  for (double sigma : {1.0, 0.5, 0.1}) {
    SearchDistribution sd =
        make_sd(m, sigma, Eigen::MatrixXd::Identity(1, 1), {17});
    RngStream rng(31, "varctl");
    const int N = 200000;
    double sum = 0.0, sq = 0.0;
    for (const auto& x : sample_candidates(sd, N, rng)) {
      sum += x[0];
      sq += double(x[0]) * x[0];
    }
    const double mean = sum / N;
    const double var = sq / N - mean * mean;
    CHECK(std::abs(var / (sigma * sigma) - 1.0) <= 0.10);
    CHECK(var < prev);
    prev = var;
  }
}

TEST_CASE("variance clamping keeps oversized steps legal") {
  // sigma^2 C_jj = 100 far exceeds n/4 = 1; the sampler clamps to p = 1/2
  // instead of throwing.
  Eigen::VectorXd m(1);
  m << 2.0;
  SearchDistribution sd = make_sd(m, 10.0, Eigen::MatrixXd::Identity(1, 1), {5});
  RngStream rng(3, "clamp");
  auto xs = sample_candidates(sd, 2000, rng);
  std::vector<long> counts(5, 0);
  for (const auto& x : xs) {
    REQUIRE(x[0] >= 0);
    REQUIRE(x[0] <= 4);
    ++counts[x[0]];
  }
  // Clamped p = 1/2 with n = 4 leaves every residue reachable.
  for (long c : counts) CHECK(c > 0);
}

TEST_CASE("search distribution validation") {
  SearchDistribution sd = make_sd(vec2(1.0, 1.0), 1.0,
                                  Eigen::MatrixXd::Identity(2, 2), {4, 4});
  CHECK_NOTHROW(sd.validate());

  SearchDistribution bad_dim = sd;
  bad_dim.dims = {4, 1};
  CHECK_THROWS_AS(bad_dim.validate(), BadDimensionError);

  SearchDistribution bad_sigma = sd;
  bad_sigma.sigma = 0.0;
  CHECK_THROWS_AS(bad_sigma.validate(), std::invalid_argument);

  SearchDistribution bad_cov = sd;
  bad_cov.cov = Eigen::MatrixXd::Identity(3, 3);
  CHECK_THROWS_AS(bad_cov.validate(), std::invalid_argument);

  SearchDistribution asym = sd;
  asym.cov(0, 1) = 0.5;
  CHECK_THROWS_AS(asym.validate(), std::invalid_argument);

  RngStream rng(1, "bad");
  CHECK_THROWS_AS(sample_candidates(bad_dim, 4, rng), BadDimensionError);
  CHECK_THROWS_AS(sample_candidates(sd, 0, rng), std::invalid_argument);
}

TEST_CASE("exact joint sampler: independent coordinates pass independence test") {
  // Zero couplings, fair marginals; trials (8, 8).
  expfam::CanonicalParams indep(2, {0.0, 0.0, 0.0});
  RngStream rng(17, "exact-indep");
  const int N = 100000;
  // Bin success counts into {0-2, 3, 4, 5, 6-8} to keep expected cell counts
  // comfortably large, then run a Pearson independence test on the 5x5 table.
  auto bin_of = [](int v) { return v <= 2 ? 0 : v >= 6 ? 4 : v - 2; };
  std::vector<std::vector<long>> table(5, std::vector<long>(5, 0));
  for (int i = 0; i < N; ++i) {
    std::vector<int> x = exact_joint_sampler(indep, {8, 8}, rng);
    REQUIRE(x.size() == 2);
    REQUIRE(x[0] >= 0);
    REQUIRE(x[0] <= 8);
    ++table[bin_of(x[0])][bin_of(x[1])];
  }
  std::vector<double> row(5, 0.0), col(5, 0.0);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      row[i] += table[i][j];
      col[j] += table[i][j];
    }
  double stat = 0.0;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      const double expect = row[i] * col[j] / N;
      REQUIRE(expect >= 5.0);
      stat += (table[i][j] - expect) * (table[i][j] - expect) / expect;
    }
  const double pvalue = 1.0 - testutil::chi_square_cdf(stat, 16.0);
  CHECK(pvalue > 0.01);
}

TEST_CASE("exact joint sampler: univariate case is a plain binomial") {
  expfam::CanonicalParams c(1, {std::log(0.3 / 0.7)});
  RngStream rng(23, "exact-uni");
  const int N = 100000;
  std::vector<long> counts(7, 0);
  for (int i = 0; i < N; ++i) {
    ++counts[exact_joint_sampler(c, {6}, rng)[0]];
  }
  std::vector<double> expect(7);
  for (int k = 0; k <= 6; ++k) expect[k] = test_binom_pmf(6, 0.3, k);
  CHECK(testutil::chi_square_gof_pvalue(counts, expect, N) > 0.01);
}

TEST_CASE("exact joint sampler: coupled table covariance scales with trials") {
  // The (0.4, 0.2, 0.2, 0.2) table has pairwise covariance 0.04; summing 10
  // independent draws gives covariance 0.4 and Binomial(10, 0.4) marginals.
  expfam::CanonicalParams coupled(
      2, {-std::log(2.0), -std::log(2.0), std::log(2.0)});
  RngStream rng(4, "exact-cov");
  const int N = 200000;
  std::vector<double> a(N), b(N);
  for (int i = 0; i < N; ++i) {
    std::vector<int> x = exact_joint_sampler(coupled, {10, 10}, rng);
    a[i] = x[0];
    b[i] = x[1];
  }
  double ma = 0.0, mb = 0.0;
  for (int i = 0; i < N; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= N;
  mb /= N;
  double cov = 0.0, var_prod = 0.0;
  for (int i = 0; i < N; ++i) {
    const double d = (a[i] - ma) * (b[i] - mb);
    cov += d;
    var_prod += d * d;
  }
  cov /= N;
  var_prod = var_prod / N - cov * cov;
  const double se = std::sqrt(var_prod / N);
  CHECK(std::abs(cov - 0.4) <= 3.0 * se);
  CHECK(std::abs(ma - 4.0) <= 3.0 * std::sqrt(10 * 0.4 * 0.6 / N));

  // The Ising overload draws the same distribution.
  expfam::IsingParams ising = expfam::IsingParams::from_canonical(coupled);
  RngStream rng2(4, "exact-cov-ising");
  std::vector<int> y = exact_joint_sampler(ising, {10, 10}, rng2);
  CHECK(y.size() == 2);
  CHECK(y[0] >= 0);
  CHECK(y[0] <= 10);

  CHECK_THROWS_AS(exact_joint_sampler(coupled, {10}, rng), std::invalid_argument);
  CHECK_THROWS_AS(exact_joint_sampler(coupled, {10, 0}, rng), std::invalid_argument);
}

TEST_CASE("copula and exact samplers agree on covariance sign and ordering") {
  const int N = 50000;
  auto empirical_cov = [&](double coupling, SamplerKind kind) {
    Eigen::MatrixXd cov(2, 2);
    cov << 1.8, coupling, coupling, 1.8;
    SearchDistribution sd = make_sd(vec2(4.0, 4.0), 1.0, cov, {9, 9});
    RngStream rng(88, "compare");
    auto xs = sample_candidates(sd, N, rng, kind);
    double ma = 0.0, mb = 0.0;
    for (const auto& x : xs) {
      ma += x[0];
      mb += x[1];
    }
    ma /= N;
    mb /= N;
    double c = 0.0;
    for (const auto& x : xs) c += (x[0] - ma) * (x[1] - mb);
    return c / N;
  };

  for (SamplerKind kind : {SamplerKind::kCopula, SamplerKind::kExact}) {
    const double weak = empirical_cov(0.5, kind);
    const double strong = empirical_cov(1.4, kind);
    CHECK(weak > 0.0);
    CHECK(strong > weak);
  }
  // And the two mechanisms land in the same neighborhood for the same target.
  const double c_cop = empirical_cov(1.0, SamplerKind::kCopula);
  const double c_exa = empirical_cov(1.0, SamplerKind::kExact);
  CHECK(c_cop > 0.3);
  CHECK(c_exa > 0.3);
  CHECK(std::abs(c_cop - c_exa) <= 0.35);
}
