#ifndef BINCMA_TESTS_TEST_UTIL_HPP
#define BINCMA_TESTS_TEST_UTIL_HPP

// Small, self-contained statistics helpers for the test suites. These are
// deliberately independent of the library under test so they can serve as
// oracles.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace testutil {

// Regularized lower incomplete gamma P(a, x), series + continued fraction
// split at x = a + 1 (the classic gammp construction).
inline double gamma_p(double a, double x) {
  if (x < 0.0 || a <= 0.0) {
    throw std::invalid_argument("gamma_p: bad arguments");
  }
  if (x == 0.0) {
    return 0.0;
  }
  const double log_gamma_a = std::lgamma(a);
  if (x < a + 1.0) {
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      term *= x / ap;
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-15) {
        break;
      }
    }
    return sum * std::exp(-x + a * std::log(x) - log_gamma_a);
  }
  // Lentz continued fraction for Q(a, x); P = 1 - Q.
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-15) {
      break;
    }
  }
  const double q = std::exp(-x + a * std::log(x) - log_gamma_a) * h;
  return 1.0 - q;
}

// Chi-square CDF with k degrees of freedom.
inline double chi_square_cdf(double x, double k) {
  return gamma_p(0.5 * k, 0.5 * x);
}

// Goodness-of-fit p-value: observed counts vs expected probabilities over
// the same index set. Bins with expected count below `min_expected` are
// pooled into their left neighbor to keep the chi-square approximation sane.
inline double chi_square_gof_pvalue(const std::vector<long>& observed,
                                    const std::vector<double>& expected_probs,
                                    long total, double min_expected = 5.0) {
  std::vector<double> exp_counts;
  std::vector<double> obs_counts;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = expected_probs[i] * static_cast<double>(total);
    if (!exp_counts.empty() && (e < min_expected || exp_counts.back() < min_expected)) {
      exp_counts.back() += e;
      obs_counts.back() += static_cast<double>(observed[i]);
    } else {
      exp_counts.push_back(e);
      obs_counts.push_back(static_cast<double>(observed[i]));
    }
  }
  double stat = 0.0;
  std::size_t bins = 0;
  for (std::size_t i = 0; i < exp_counts.size(); ++i) {
    if (exp_counts[i] <= 0.0) {
      continue;
    }
    const double diff = obs_counts[i] - exp_counts[i];
    stat += diff * diff / exp_counts[i];
    ++bins;
  }
  if (bins < 2) {
    return 1.0;
  }
  return 1.0 - chi_square_cdf(stat, static_cast<double>(bins - 1));
}

// Pearson correlation of two integer samples.
inline double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  const std::size_t n = xs.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

// Midranks for Spearman correlation on heavily tied integer data.
inline std::vector<double> midranks(const std::vector<double>& xs) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) {
      ++j;
    }
    const double rank = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t t = i; t <= j; ++t) {
      ranks[order[t]] = rank;
    }
    i = j + 1;
  }
  return ranks;
}

inline double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
  return pearson(midranks(xs), midranks(ys));
}

}  // namespace testutil

#endif  // BINCMA_TESTS_TEST_UTIL_HPP
