#include "bincma/problems.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "bincma/rng.hpp"

namespace bincma::bench {

namespace {

// Load-time check of the claimed optimum: inside the box and achieving the
// claimed value. A failure here is a programming error, not user input.
void verify_optimum(const Problem& p) {
  if (!p.has_optimum) {
    return;
  }
  if (static_cast<int>(p.optimum_x.size()) != p.d) {
    throw std::logic_error(p.name + ": optimum has wrong dimension");
  }
  for (int j = 0; j < p.d; ++j) {
    if (p.optimum_x[j] < 0 || p.optimum_x[j] >= p.dims[j]) {
      throw std::logic_error(p.name + ": optimum leaves the box");
    }
  }
  const double f = p.objective(p.optimum_x);
  if (!(std::abs(f - p.optimum_f) <= 1e-12)) {
    throw std::logic_error(p.name + ": optimum value mismatch");
  }
}

void check_geometry(const std::string& name, int d,
                    const std::vector<int>& dims) {
  if (d < 1) {
    throw std::invalid_argument(name + ": d must be >= 1");
  }
  if (static_cast<int>(dims.size()) != d) {
    throw std::invalid_argument(name + ": dims must have d entries");
  }
  for (int v : dims) {
    if (v < 2) {
      throw std::invalid_argument(name + ": every cardinality must be >= 2");
    }
  }
}

}  // namespace

Problem one_max(int d) {
  Problem p;
  p.name = "one_max";
  p.d = d;
  p.dims.assign(static_cast<std::size_t>(d), 2);
  check_geometry(p.name, d, p.dims);
  p.objective = [d](const std::vector<int>& x) {
    int zeros = 0;
    for (int v : x) {
      zeros += (v == 0);
    }
    return static_cast<double>(zeros);
  };
  p.has_optimum = true;
  p.optimum_x.assign(static_cast<std::size_t>(d), 1);
  p.optimum_f = 0.0;
  verify_optimum(p);
  return p;
}

Problem leading_ones(int d) {
  Problem p;
  p.name = "leading_ones";
  p.d = d;
  p.dims.assign(static_cast<std::size_t>(d), 2);
  check_geometry(p.name, d, p.dims);
  p.objective = [d](const std::vector<int>& x) {
    int run = 0;
    while (run < d && x[static_cast<std::size_t>(run)] == 1) {
      ++run;
    }
    return static_cast<double>(d - run);
  };
  p.has_optimum = true;
  p.optimum_x.assign(static_cast<std::size_t>(d), 1);
  p.optimum_f = 0.0;
  verify_optimum(p);
  return p;
}

Problem integer_sphere(int d, int dims, std::vector<int> center) {
  Problem p;
  p.name = "integer_sphere";
  p.d = d;
  p.dims.assign(static_cast<std::size_t>(d), dims);
  check_geometry(p.name, d, p.dims);
  if (static_cast<int>(center.size()) != d) {
    throw std::invalid_argument(p.name + ": center must have d entries");
  }
  p.objective = [center](const std::vector<int>& x) {
    double total = 0.0;
    for (std::size_t j = 0; j < center.size(); ++j) {
      const double diff = x[j] - center[j];
      total += diff * diff;
    }
    return total;
  };
  p.has_optimum = true;
  p.optimum_x = std::move(center);
  p.optimum_f = 0.0;
  verify_optimum(p);
  return p;
}

Problem discretized_rastrigin(int d, int dims) {
  Problem p;
  p.name = "discretized_rastrigin";
  p.d = d;
  p.dims.assign(static_cast<std::size_t>(d), dims);
  check_geometry(p.name, d, p.dims);
  const int n = dims - 1;
  p.objective = [d, n](const std::vector<int>& x) {
    double total = 10.0 * d;
    for (int v : x) {
      const double z = (2.0 * v - n) * (5.12 / n);
      total += z * z - 10.0 * std::cos(2.0 * std::numbers::pi * z);
    }
    return total;
  };
  if (n % 2 == 0) {  // z = 0 lands on the grid only for odd cardinalities
    p.has_optimum = true;
    p.optimum_x.assign(static_cast<std::size_t>(d), n / 2);
    p.optimum_f = 0.0;
  }
  verify_optimum(p);
  return p;
}

Problem random_ising_energy(int d, std::uint64_t seed) {
  Problem p;
  p.name = "random_ising";
  p.d = d;
  p.dims.assign(static_cast<std::size_t>(d), 2);
  check_geometry(p.name, d, p.dims);

  RngStream rng(seed, "problem");
  std::vector<double> field(static_cast<std::size_t>(d));
  for (double& h : field) {
    h = 2.0 * rng.uniform01() - 1.0;
  }
  std::vector<double> coupling(static_cast<std::size_t>(d * d), 0.0);
  for (int j = 0; j < d; ++j) {
    for (int k = j + 1; k < d; ++k) {
      coupling[static_cast<std::size_t>(j * d + k)] = rng.uniform01() - 0.5;
    }
  }

  p.objective = [d, field, coupling](const std::vector<int>& x) {
    double energy = 0.0;
    for (int j = 0; j < d; ++j) {
      const double sj = 2.0 * x[static_cast<std::size_t>(j)] - 1.0;
      energy -= field[static_cast<std::size_t>(j)] * sj;
      for (int k = j + 1; k < d; ++k) {
        const double sk = 2.0 * x[static_cast<std::size_t>(k)] - 1.0;
        energy -= coupling[static_cast<std::size_t>(j * d + k)] * sj * sk;
      }
    }
    return energy;
  };

  if (d <= 20) {  // ground state by enumeration while that is still cheap
    double best = 0.0;
    std::uint32_t best_mask = 0;
    for (std::uint32_t mask = 0; mask < (1u << d); ++mask) {
      std::vector<int> x(static_cast<std::size_t>(d));
      for (int j = 0; j < d; ++j) {
        x[static_cast<std::size_t>(j)] = (mask >> j) & 1u;
      }
      const double f = p.objective(x);
      if (mask == 0 || f < best) {
        best = f;
        best_mask = mask;
      }
    }
    p.has_optimum = true;
    p.optimum_x.resize(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) {
      p.optimum_x[static_cast<std::size_t>(j)] = (best_mask >> j) & 1u;
    }
    p.optimum_f = best;
  }
  verify_optimum(p);
  return p;
}

std::vector<Problem> builtin_problems() {
  return {
      one_max(20),
      leading_ones(16),
      integer_sphere(5, 16, {3, 12, 7, 1, 14}),
      discretized_rastrigin(4, 17),
      random_ising_energy(12, 2024),
  };
}

Problem find_problem(const std::string& name) {
  for (Problem& p : builtin_problems()) {
    if (p.name == name) {
      return std::move(p);
    }
  }
  throw std::invalid_argument("unknown problem: " + name);
}

}  // namespace bincma::bench
