#include "bincma/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace bincma::bench {

namespace {

// %.17g: shortest text that still restores the exact double on parse.
std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char byte : text) {
    h ^= byte;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string sampler_name(sampling::SamplerKind kind) {
  return kind == sampling::SamplerKind::kExact ? "exact" : "copula";
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

double parse_double(const std::string& s) { return std::strtod(s.c_str(), nullptr); }
long parse_long(const std::string& s) { return std::strtol(s.c_str(), nullptr, 10); }

// Censoring rule shared by run_single and the CSV parser: first history row
// at or below target wins; otherwise the run is censored at its full budget.
void fill_target_stats(RunRecord& record) {
  record.censored = true;
  record.evals_to_target = record.total_evaluations;
  if (std::isnan(record.target_f)) {
    return;
  }
  for (const optimizer::HistoryRow& row : record.history) {
    if (row.best_f <= record.target_f) {
      record.evals_to_target = row.evaluations;
      record.censored = false;
      return;
    }
  }
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  out << text;
  if (!out) {
    throw std::runtime_error("write failed: " + path.string());
  }
}

}  // namespace

std::string config_digest(const std::string& problem_name,
                          const optimizer::OptimizerConfig& config,
                          std::uint64_t seed) {
  std::ostringstream canon;
  canon << "problem=" << problem_name << ";d=" << config.d << ";dims=";
  for (std::size_t j = 0; j < config.dims.size(); ++j) {
    canon << (j ? "," : "") << config.dims[j];
  }
  canon << ";lambda=" << config.lambda << ";mu=" << config.mu
        << ";sigma0=" << fmt_g(config.sigma0) << ";seed=" << seed
        << ";max_iterations=" << config.max_iterations
        << ";eps=" << fmt_g(config.eps)
        << ";sampler=" << sampler_name(config.sampler)
        << ";hsig=" << (config.disable_hsig ? 0 : 1)
        << ";margin=" << fmt_g(config.margin)
        << ";target_f=" << fmt_g(config.target_f)
        << ";c_sigma=" << fmt_g(config.c_sigma)
        << ";d_sigma=" << fmt_g(config.d_sigma) << ";c_c=" << fmt_g(config.c_c)
        << ";c_1=" << fmt_g(config.c_1) << ";c_mu=" << fmt_g(config.c_mu);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(canon.str())));
  return buf;
}

RunRecord run_single(const Problem& problem, optimizer::OptimizerConfig config,
                     std::uint64_t seed) {
  config.seed = seed;
  if (config.d == 0) {
    config.d = problem.d;
  }
  if (config.dims.empty()) {
    config.dims = problem.dims;
  }
  config.finalize();
  if (std::isnan(config.target_f) && problem.has_optimum) {
    config.target_f = problem.optimum_f;
  }

  RunRecord record;
  record.problem = problem.name;
  record.seed = seed;
  record.config_digest = config_digest(problem.name, config, seed);
  record.target_f = config.target_f;

  RngStream rng(seed, "sampling");
  const auto t0 = std::chrono::steady_clock::now();
  optimizer::OptimizeResult result =
      optimizer::optimize(problem.objective, config, rng);
  const auto t1 = std::chrono::steady_clock::now();

  record.history = std::move(result.history);
  record.total_evaluations = result.evaluations;
  record.best_x = std::move(result.best_x);
  record.best_f = result.best_f;
  record.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
  fill_target_stats(record);
  return record;
}

std::vector<RunRecord> run_experiment(const Problem& problem,
                                      const optimizer::OptimizerConfig& config,
                                      const std::vector<std::uint64_t>& seeds,
                                      const std::string& out_dir) {
  if (seeds.empty()) {
    throw optimizer::ConfigError("seeds: must be non-empty");
  }
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
  }
  std::vector<RunRecord> records;
  records.reserve(seeds.size());
  for (std::uint64_t seed : seeds) {
    RunRecord record = run_single(problem, config, seed);
    if (!out_dir.empty()) {
      const std::filesystem::path path =
          std::filesystem::path(out_dir) /
          (record.problem + "_seed" + std::to_string(seed) + ".csv");
      write_file(path, run_csv_header() + run_csv(record));
    }
    records.push_back(std::move(record));
  }
  return records;
}

std::string run_csv_header() {
  return "problem,seed,config_digest,target_f,generation,evaluations,best_f,"
         "mean_f,sigma,mean_step,best_x\n";
}

std::string run_csv(const RunRecord& record) {
  std::string best_x;
  for (std::size_t j = 0; j < record.best_x.size(); ++j) {
    if (j) {
      best_x += ' ';
    }
    best_x += std::to_string(record.best_x[j]);
  }
  std::ostringstream out;
  for (const optimizer::HistoryRow& row : record.history) {
    out << record.problem << ',' << record.seed << ',' << record.config_digest
        << ',' << fmt_g(record.target_f) << ',' << row.generation << ','
        << row.evaluations << ',' << fmt_g(row.best_f) << ','
        << fmt_g(row.mean_f) << ',' << fmt_g(row.sigma) << ','
        << fmt_g(row.mean_step) << ',' << best_x << '\n';
  }
  return out.str();
}

std::vector<RunRecord> parse_runs_csv(const std::string& text) {
  std::vector<RunRecord> records;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    if (line + "\n" == run_csv_header()) {
      first = false;
      continue;  // concatenated files repeat the header
    }
    if (first) {
      throw std::invalid_argument("run CSV: missing header");
    }
    const std::vector<std::string> f = split(line, ',');
    if (f.size() != 11) {
      throw std::invalid_argument("run CSV: expected 11 fields, got " +
                                  std::to_string(f.size()));
    }
    const std::uint64_t seed = std::strtoull(f[1].c_str(), nullptr, 10);
    if (records.empty() || records.back().problem != f[0] ||
        records.back().seed != seed || records.back().config_digest != f[2]) {
      RunRecord record;
      record.problem = f[0];
      record.seed = seed;
      record.config_digest = f[2];
      record.target_f = parse_double(f[3]);
      records.push_back(std::move(record));
    }
    RunRecord& record = records.back();
    optimizer::HistoryRow row;
    row.generation = static_cast<int>(parse_long(f[4]));
    row.evaluations = parse_long(f[5]);
    row.best_f = parse_double(f[6]);
    row.mean_f = parse_double(f[7]);
    row.sigma = parse_double(f[8]);
    row.mean_step = parse_double(f[9]);
    record.history.push_back(row);
    record.total_evaluations = row.evaluations;
    record.best_f = row.best_f;
    record.best_x.clear();
    for (const std::string& part : split(f[10], ' ')) {
      if (!part.empty()) {
        record.best_x.push_back(static_cast<int>(parse_long(part)));
      }
    }
  }
  for (RunRecord& record : records) {
    fill_target_stats(record);
  }
  return records;
}

std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records) {
  std::vector<SummaryRow> rows;
  for (const RunRecord& record : records) {
    SummaryRow* row = nullptr;
    for (SummaryRow& existing : rows) {
      if (existing.problem == record.problem) {
        row = &existing;
        break;
      }
    }
    if (row == nullptr) {
      rows.push_back(SummaryRow{record.problem, 0, 0, 0.0, 0.0, 0.0});
      row = &rows.back();
    }
    row->runs += 1;
    row->solved += record.censored ? 0 : 1;
  }
  for (SummaryRow& row : rows) {
    std::vector<double> evals;
    for (const RunRecord& record : records) {
      if (record.problem == row.problem) {
        evals.push_back(static_cast<double>(record.evals_to_target));
      }
    }
    std::sort(evals.begin(), evals.end());
    const std::size_t n = evals.size();
    row.median_evaluations = (n % 2 == 1)
                                 ? evals[n / 2]
                                 : 0.5 * (evals[n / 2 - 1] + evals[n / 2]);
    const auto nearest_rank = [&](double q) {
      const std::size_t rank = static_cast<std::size_t>(
          std::ceil(q * static_cast<double>(n)));
      return evals[std::max<std::size_t>(rank, 1) - 1];
    };
    row.q1_evaluations = nearest_rank(0.25);
    row.q3_evaluations = nearest_rank(0.75);
  }
  return rows;
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream out;
  out << "problem,runs,solved,median_evaluations,q1_evaluations,"
         "q3_evaluations\n";
  for (const SummaryRow& row : rows) {
    out << row.problem << ',' << row.runs << ',' << row.solved << ','
        << fmt_g(row.median_evaluations) << ',' << fmt_g(row.q1_evaluations)
        << ',' << fmt_g(row.q3_evaluations) << '\n';
  }
  return out.str();
}

optimizer::OptimizerConfig suite_config(const Problem& problem,
                                        int max_iterations) {
  optimizer::OptimizerConfig config;
  config.d = problem.d;
  config.dims = problem.dims;
  config.max_iterations = max_iterations;
  // Stagnation stop off and a 1/(2d) mutation-rate floor: discrete runs
  // routinely produce exact-copy generations (mean step exactly zero) long
  // before the budget, and without the floor the step-size path freezes
  // coordinates that are still wrong. Budget and target do the stopping.
  config.eps = 0.0;
  config.margin = 1.0 / (2.0 * problem.d);
  return config;
}

std::string run_suite(const std::string& suite, std::uint64_t seed,
                      const std::string& out_dir) {
  std::vector<std::pair<Problem, int>> plan;  // problem, generation budget
  std::size_t runs_per_problem = 0;
  if (suite == "quick") {
    plan.emplace_back(one_max(20), 250);
    plan.emplace_back(integer_sphere(5, 16, {3, 12, 7, 1, 14}), 625);
    runs_per_problem = 3;
  } else if (suite == "full") {
    plan.emplace_back(one_max(20), 250);
    plan.emplace_back(leading_ones(16), 1000);
    plan.emplace_back(integer_sphere(5, 16, {3, 12, 7, 1, 14}), 625);
    plan.emplace_back(discretized_rastrigin(4, 17), 1000);
    plan.emplace_back(random_ising_energy(12, 2024), 1000);
    runs_per_problem = 20;
  } else {
    throw optimizer::ConfigError("suite: must be \"quick\" or \"full\"");
  }

  std::vector<RunRecord> records;
  for (const auto& [problem, budget] : plan) {
    std::vector<std::uint64_t> seeds;
    for (std::size_t i = 0; i < runs_per_problem; ++i) {
      seeds.push_back(seed + 1 + i);
    }
    std::vector<RunRecord> batch =
        run_experiment(problem, suite_config(problem, budget), seeds, out_dir);
    for (RunRecord& record : batch) {
      records.push_back(std::move(record));
    }
  }
  const std::string summary = summary_csv(summarize(records));
  if (!out_dir.empty()) {
    write_file(std::filesystem::path(out_dir) / "summary.csv", summary);
  }
  return summary;
}

}  // namespace bincma::bench
