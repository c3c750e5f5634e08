#ifndef ICL_TOOLS_CLI_HPP_
#define ICL_TOOLS_CLI_HPP_

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "icl/experiment.hpp"

namespace icl::cli
{
    inline constexpr int kExitOk = 0;
    inline constexpr int kExitUsage = 1;
    inline constexpr int kExitBackend = 2;

    // Runs one command line; never throws. Returns the process exit code.
    int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

    // Config layering: built-in defaults < top-level keys < commands.<name> < flags.
    nlohmann::json effective_config(const nlohmann::json& file, const std::string& command,
                                     const nlohmann::json& flag_patch);

    ExperimentOptions options_from_config(const nlohmann::json& config);

    // Relative data, task and cache paths resolve against base_dir.
    std::vector<TaskResources> tasks_from_config(const nlohmann::json& config, const std::filesystem::path& base_dir);

    struct Artifact
    {
        std::string name;
        std::string sha256;
        std::uintmax_t bytes = 0;
    };

    // Re-hashes every artifact listed in <run_dir>/manifest.json. Returns human-readable problems;
    // unlisted files in the run directory count as problems too.
    std::vector<std::string> verify_run(const std::filesystem::path& run_dir);
}  // namespace icl::cli

#endif  // ICL_TOOLS_CLI_HPP_
