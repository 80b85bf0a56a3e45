#ifndef BINCMA_CLI_HPP
#define BINCMA_CLI_HPP

#include <string>
#include <vector>

#include "json.hpp"

#include "bincma/expfam.hpp"
#include "bincma/optimizer.hpp"
#include "bincma/problems.hpp"

namespace bincma::cli {

/// Command-line front end. Subcommands: optimize, bench, dist, expfam.
/// Returns 0 on success, 2 on configuration errors (bad flags, missing or
/// invalid config/input files), 1 on runtime failures.
int run_cli(int argc, const char* const* argv);

/// JSON bindings used by the `optimize` and `expfam` subcommands; exposed
/// so tests can exercise them without spawning a process. All throw
/// optimizer::ConfigError with a field-level message on bad input.
optimizer::OptimizerConfig config_from_json(const nlohmann::json& j);
bench::Problem problem_from_json(const nlohmann::json& j);
nlohmann::json joint_table_to_json(const expfam::JointTable& table);
expfam::JointTable joint_table_from_json(const nlohmann::json& j);
nlohmann::json canonical_to_json(const expfam::CanonicalParams& params);
expfam::CanonicalParams canonical_from_json(const nlohmann::json& j);

}  // namespace bincma::cli

#endif  // BINCMA_CLI_HPP
