#ifndef RDSLAB_RUNNER_HPP
#define RDSLAB_RUNNER_HPP

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

#include <json.hpp>

// Config-driven experiment runner. Each experiment reads a JSON config,
// executes with reproducible seeding, writes a results CSV plus a summary
// record under the output directory, and reports via the exit code:
//   0  all configured assertions passed
//   1  an assertion or runtime step failed
//   2  the config is invalid
// Worker threads come from RDSLAB_THREADS (default: hardware concurrency);
// results are independent of the thread count.

namespace rdslab {

struct CliOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> replicas;
    std::optional<std::string> out;
};

int run_experiment_json(const nlohmann::json& cfg, const CliOverrides& cli, std::ostream& log);
int run_experiment_file(const std::string& config_path, const CliOverrides& cli,
                        std::ostream& log);

}  // namespace rdslab

#endif
