#include "bincma/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "bincma/poisson_binomial.hpp"
#include "bincma/runner.hpp"

namespace bincma::cli {

namespace {

using nlohmann::json;
using optimizer::ConfigError;

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot open " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_output(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open " + out_path + " for writing");
  }
  out << text;
  if (!out) {
    throw std::runtime_error("write failed: " + out_path);
  }
}

// Typed field access with config-style error messages. `where` is the
// dotted path used in diagnostics, e.g. "optimizer.lambda".
template <typename T>
T field_as(const json& j, const std::string& where) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": wrong type");
  }
}

// Round-number check for CLI arguments that are semantically integers.
long long integer_argument(double value, const std::string& where) {
  const double rounded = std::nearbyint(value);
  if (!(std::abs(value - rounded) == 0.0)) {
    throw ConfigError(where + ": must be an integer");
  }
  return static_cast<long long>(rounded);
}

std::string pmf_csv(const pbinom::DiscretePMF& pmf) {
  std::string out = "index,probability\n";
  for (int i = 0; i < static_cast<int>(pmf.size()); ++i) {
    out += std::to_string(pmf.offset() + i);
    out += ',';
    out += fmt_g(pmf.probs()[static_cast<std::size_t>(i)]);
    out += '\n';
  }
  return out;
}

int run_optimize(const std::string& config_path, bool seed_given,
                 std::uint64_t seed_flag, const std::string& out_path) {
  const json root = json::parse(read_file(config_path));
  if (!root.is_object()) {
    throw ConfigError("config: top level must be an object");
  }
  for (const auto& [key, value] : root.items()) {
    if (key != "problem" && key != "optimizer") {
      throw ConfigError(key + ": unknown field");
    }
  }
  if (!root.contains("problem")) {
    throw ConfigError("problem: required");
  }
  const bench::Problem problem = problem_from_json(root.at("problem"));
  optimizer::OptimizerConfig config =
      config_from_json(root.value("optimizer", json::object()));
  const std::uint64_t seed = seed_given ? seed_flag : config.seed;

  const bench::RunRecord record = bench::run_single(problem, config, seed);
  if (!out_path.empty()) {
    write_output(out_path, bench::run_csv_header() + bench::run_csv(record));
  }

  std::string best_x;
  for (std::size_t j = 0; j < record.best_x.size(); ++j) {
    best_x += (j ? " " : "") + std::to_string(record.best_x[j]);
  }
  std::cout << "problem=" << record.problem << " seed=" << record.seed
            << " digest=" << record.config_digest << " best_f="
            << fmt_g(record.best_f) << " evaluations="
            << record.total_evaluations << " solved=" << (record.censored ? 0 : 1)
            << " best_x=" << best_x << "\n";
  return 0;
}

int run_expfam(const std::string& to_canonical_path,
               const std::string& to_moment_path, const std::string& out_path) {
  if (to_canonical_path.empty() == to_moment_path.empty()) {
    throw ConfigError("expfam: give exactly one of --to-canonical / --to-moment");
  }
  json result;
  if (!to_canonical_path.empty()) {
    const json in = json::parse(read_file(to_canonical_path));
    const expfam::JointTable table = joint_table_from_json(in);
    result = canonical_to_json(expfam::canonical_from_moment(table));
  } else {
    const json in = json::parse(read_file(to_moment_path));
    const expfam::CanonicalParams params = canonical_from_json(in);
    result = joint_table_to_json(expfam::moment_from_canonical(params));
  }
  write_output(out_path, result.dump(2) + "\n");
  return 0;
}

}  // namespace

optimizer::OptimizerConfig config_from_json(const json& j) {
  if (!j.is_object()) {
    throw ConfigError("optimizer: must be an object");
  }
  optimizer::OptimizerConfig config;
  for (const auto& [key, value] : j.items()) {
    const std::string where = "optimizer." + key;
    if (key == "d") {
      config.d = field_as<int>(value, where);
    } else if (key == "dims") {
      if (value.is_array()) {
        config.dims = field_as<std::vector<int>>(value, where);
      } else {
        config.dims = {field_as<int>(value, where)};
      }
    } else if (key == "lambda") {
      config.lambda = field_as<int>(value, where);
    } else if (key == "mu") {
      config.mu = field_as<int>(value, where);
    } else if (key == "sigma0") {
      config.sigma0 = field_as<double>(value, where);
    } else if (key == "seed") {
      config.seed = field_as<std::uint64_t>(value, where);
    } else if (key == "max_iterations") {
      config.max_iterations = field_as<int>(value, where);
    } else if (key == "eps") {
      config.eps = field_as<double>(value, where);
    } else if (key == "sampler") {
      const std::string name = field_as<std::string>(value, where);
      if (name == "copula") {
        config.sampler = sampling::SamplerKind::kCopula;
      } else if (name == "exact") {
        config.sampler = sampling::SamplerKind::kExact;
      } else {
        throw ConfigError(where + ": must be \"copula\" or \"exact\"");
      }
    } else if (key == "disable_hsig") {
      config.disable_hsig = field_as<bool>(value, where);
    } else if (key == "target_f") {
      config.target_f = field_as<double>(value, where);
    } else if (key == "margin") {
      config.margin = field_as<double>(value, where);
    } else if (key == "c_sigma") {
      config.c_sigma = field_as<double>(value, where);
    } else if (key == "d_sigma") {
      config.d_sigma = field_as<double>(value, where);
    } else if (key == "c_c") {
      config.c_c = field_as<double>(value, where);
    } else if (key == "c_1") {
      config.c_1 = field_as<double>(value, where);
    } else if (key == "c_mu") {
      config.c_mu = field_as<double>(value, where);
    } else {
      throw ConfigError(where + ": unknown field");
    }
  }
  return config;
}

bench::Problem problem_from_json(const json& j) {
  if (j.is_string()) {
    try {
      return bench::find_problem(j.get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("problem: ") + e.what());
    }
  }
  if (!j.is_object()) {
    throw ConfigError("problem: must be a name or an object");
  }
  for (const auto& [key, value] : j.items()) {
    if (key != "name" && key != "d" && key != "dims" && key != "center" &&
        key != "seed") {
      throw ConfigError("problem." + key + ": unknown field");
    }
  }
  if (!j.contains("name")) {
    throw ConfigError("problem.name: required");
  }
  const std::string name = field_as<std::string>(j.at("name"), "problem.name");

  try {
    if (name == "one_max") {
      return bench::one_max(field_as<int>(j.value("d", json(20)), "problem.d"));
    }
    if (name == "leading_ones") {
      return bench::leading_ones(
          field_as<int>(j.value("d", json(16)), "problem.d"));
    }
    if (name == "integer_sphere") {
      const int d = field_as<int>(j.value("d", json(5)), "problem.d");
      const int dims = field_as<int>(j.value("dims", json(16)), "problem.dims");
      std::vector<int> center;
      if (j.contains("center")) {
        center = field_as<std::vector<int>>(j.at("center"), "problem.center");
      } else {
        center.assign(static_cast<std::size_t>(d), (dims - 1) / 2);
      }
      return bench::integer_sphere(d, dims, std::move(center));
    }
    if (name == "discretized_rastrigin") {
      const int d = field_as<int>(j.value("d", json(4)), "problem.d");
      const int dims = field_as<int>(j.value("dims", json(17)), "problem.dims");
      return bench::discretized_rastrigin(d, dims);
    }
    if (name == "random_ising") {
      const int d = field_as<int>(j.value("d", json(12)), "problem.d");
      const std::uint64_t seed =
          field_as<std::uint64_t>(j.value("seed", json(2024)), "problem.seed");
      return bench::random_ising_energy(d, seed);
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("problem: ") + e.what());
  }
  throw ConfigError("problem.name: unknown problem \"" + name + "\"");
}

json joint_table_to_json(const expfam::JointTable& table) {
  return json{{"type", "joint_table"},
              {"k", table.dimension()},
              {"probs", table.probs()}};
}

expfam::JointTable joint_table_from_json(const json& j) {
  if (!j.is_object() || j.value("type", "") != "joint_table") {
    throw ConfigError("expfam input: expected {\"type\": \"joint_table\", ...}");
  }
  const int k = field_as<int>(j.value("k", json()), "k");
  const std::vector<double> probs =
      field_as<std::vector<double>>(j.value("probs", json()), "probs");
  try {
    return expfam::JointTable(k, probs);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("joint_table: ") + e.what());
  }
}

json canonical_to_json(const expfam::CanonicalParams& params) {
  return json{{"type", "canonical"},
              {"k", params.dimension()},
              {"theta", params.thetas()},
              {"logA", params.log_partition()}};
}

expfam::CanonicalParams canonical_from_json(const json& j) {
  if (!j.is_object() || j.value("type", "") != "canonical") {
    throw ConfigError("expfam input: expected {\"type\": \"canonical\", ...}");
  }
  const int k = field_as<int>(j.value("k", json()), "k");
  const std::vector<double> theta =
      field_as<std::vector<double>>(j.value("theta", json()), "theta");
  try {
    return expfam::CanonicalParams(k, theta);  // logA is derived, not read
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("canonical: ") + e.what());
  }
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Discrete CMA-ES over integer boxes: optimize, bench, and "
               "distribution/parameter utilities"};
  app.require_subcommand(1);

  // optimize
  auto* optimize_cmd =
      app.add_subcommand("optimize", "Run one problem from a JSON config");
  std::string opt_config;
  std::uint64_t opt_seed = 0;
  std::string opt_out;
  optimize_cmd->add_option("--config", opt_config, "JSON config file")
      ->required();
  auto* opt_seed_flag =
      optimize_cmd->add_option("--seed", opt_seed, "override the config seed");
  optimize_cmd->add_option("--out", opt_out, "write the run history CSV here");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "Run a benchmark suite");
  std::string bench_suite = "quick";
  std::uint64_t bench_seed = 0;
  std::string bench_out = "bench_out";
  bench_cmd->add_option("--suite", bench_suite, "quick or full");
  bench_cmd->add_option("--seed", bench_seed, "base seed for the suite");
  bench_cmd->add_option("--out", bench_out, "output directory for the CSVs");

  // dist
  auto* dist_cmd = app.add_subcommand("dist", "Print a PMF as index,probability CSV");
  std::vector<double> dist_binomial;
  std::vector<double> dist_tg;
  std::vector<double> dist_pb;
  double dist_poisson = 0.0;
  int dist_kmax = 32;
  std::string dist_out;
  dist_cmd->add_option("--binomial", dist_binomial, "n p")->expected(2);
  dist_cmd->add_option("--poisson", dist_poisson, "rate lambda");
  dist_cmd->add_option("--kmax", dist_kmax, "last index printed for --poisson");
  dist_cmd
      ->add_option("--poisson-binomial", dist_pb,
                   "comma-separated success probabilities")
      ->delimiter(',');
  dist_cmd->add_option("--truncated-geometric", dist_tg, "n mu")->expected(2);
  dist_cmd->add_option("--out", dist_out, "write the CSV here");

  // expfam
  auto* expfam_cmd = app.add_subcommand(
      "expfam", "Convert a probability table to/from canonical parameters");
  std::string expfam_to_canonical;
  std::string expfam_to_moment;
  std::string expfam_out;
  expfam_cmd->add_option("--to-canonical", expfam_to_canonical,
                         "joint-table JSON file to convert");
  expfam_cmd->add_option("--to-moment", expfam_to_moment,
                         "canonical JSON file to convert");
  expfam_cmd->add_option("--out", expfam_out, "write the JSON here");

  try {
    app.parse(argc, argv);

    if (optimize_cmd->parsed()) {
      return run_optimize(opt_config, opt_seed_flag->count() > 0, opt_seed,
                          opt_out);
    }
    if (bench_cmd->parsed()) {
      std::cout << bench::run_suite(bench_suite, bench_seed, bench_out);
      return 0;
    }
    if (dist_cmd->parsed()) {
      const int selected = (dist_binomial.size() == 2 ? 1 : 0) +
                           (dist_cmd->count("--poisson") > 0 ? 1 : 0) +
                           (!dist_pb.empty() ? 1 : 0) +
                           (dist_tg.size() == 2 ? 1 : 0);
      if (selected != 1) {
        throw ConfigError("dist: choose exactly one distribution");
      }
      std::string csv;
      if (dist_binomial.size() == 2) {
        const long long n = integer_argument(dist_binomial[0], "binomial n");
        const double p = dist_binomial[1];
        if (n < 1) {
          throw ConfigError("binomial n: must be >= 1");
        }
        if (!(p >= 0.0 && p <= 1.0)) {
          throw ConfigError("binomial p: must lie in [0, 1]");
        }
        csv = "index,probability\n";
        for (long long k = 0; k <= n; ++k) {
          csv += std::to_string(k) + ',' +
                 fmt_g(pbinom::binomial_pmf(static_cast<int>(n), p,
                                                      static_cast<int>(k))) +
                 '\n';
        }
      } else if (dist_cmd->count("--poisson") > 0) {
        if (!(dist_poisson > 0.0) || !std::isfinite(dist_poisson)) {
          throw ConfigError("poisson lambda: must be positive and finite");
        }
        if (dist_kmax < 0) {
          throw ConfigError("kmax: must be >= 0");
        }
        csv = "index,probability\n";
        for (int k = 0; k <= dist_kmax; ++k) {
          csv += std::to_string(k) + ',' +
                 fmt_g(pbinom::poisson_pmf(dist_poisson, k)) + '\n';
        }
      } else if (!dist_pb.empty()) {
        for (double p : dist_pb) {
          if (!(p >= 0.0 && p <= 1.0)) {
            throw ConfigError("poisson-binomial: probabilities must lie in [0, 1]");
          }
        }
        csv = pmf_csv(
            pbinom::pmf(pbinom::PoissonBinomial(dist_pb)));
      } else {
        const long long n =
            integer_argument(dist_tg[0], "truncated-geometric n");
        const double mu = dist_tg[1];
        if (n < 1) {
          throw ConfigError("truncated-geometric n: must be >= 1");
        }
        if (!(mu >= 0.0 && mu <= static_cast<double>(n))) {
          throw ConfigError("truncated-geometric mu: must lie in [0, n]");
        }
        csv = pmf_csv(
            pbinom::truncated_geometric(static_cast<int>(n), mu));
      }
      write_output(dist_out, csv);
      return 0;
    }
    if (expfam_cmd->parsed()) {
      return run_expfam(expfam_to_canonical, expfam_to_moment, expfam_out);
    }
    return 0;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace bincma::cli
