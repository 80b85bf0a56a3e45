#ifndef BINCMA_PROBLEMS_HPP
#define BINCMA_PROBLEMS_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace bincma::bench {

/// A benchmark objective on the integer box {0..dims_j-1}^d, to be
/// minimized. known_optimum_* is set when the minimizer is known in closed
/// form (or small enough to enumerate); factories verify it at load.
struct Problem {
  std::string name;
  int d = 0;
  std::vector<int> dims;
  std::function<double(const std::vector<int>&)> objective;
  bool has_optimum = false;
  std::vector<int> optimum_x;
  double optimum_f = 0.0;
};

/// Number of zero bits; minimized (0) at the all-ones string.
Problem one_max(int d);

/// d minus the length of the leading run of ones; minimized at all-ones.
Problem leading_ones(int d);

/// Squared distance to `center` on {0..dims-1}^d.
Problem integer_sphere(int d, int dims, std::vector<int> center);

/// Rastrigin on a grid: x maps affinely onto [-5.12, 5.12]^d; with an odd
/// cardinality the global minimum z = 0 is a grid point.
Problem discretized_rastrigin(int d, int dims);

/// Random-field Ising energy over spins s = 2x - 1 with uniform fields and
/// couplings drawn once from the given seed. The exact ground state is
/// enumerated at load for d <= 20 (correlated landscape, known optimum).
Problem random_ising_energy(int d, std::uint64_t seed);

/// The stock problem set used by the bench suites.
std::vector<Problem> builtin_problems();

/// Looks a builtin problem up by name; throws std::invalid_argument if
/// there is none.
Problem find_problem(const std::string& name);

}  // namespace bincma::bench

#endif  // BINCMA_PROBLEMS_HPP
