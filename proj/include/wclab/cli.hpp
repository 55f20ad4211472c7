#ifndef WCLAB_CLI_HPP
#define WCLAB_CLI_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace wclab::cli {

// In-process drivers behind the wclab binary. Exit-code policy: 0 success,
// 1 numerical/assumption failure, 2 usage or config error.
struct Options {
    std::string model_ref;    // file path or builtin:<name>
    std::string config_path;  // sweep config file (JSON)
    std::string out_dir;      // empty: sweep-config value, else current directory
    int jobs = 0;             // worker threads for sweeps; 0 keeps the config value
    double tol = 1e-10;
    std::string route = "all";  // closed | stationary | dynamic | all
};

struct CommandResult {
    int exit_code = 0;
    std::string report;                // plain-text summary, printed by the tool
    std::vector<std::string> outputs;  // emitted file paths
};

CommandResult cmd_validate(const Options& opt);
CommandResult cmd_davies(const Options& opt);
CommandResult cmd_dilation(const Options& opt);
CommandResult cmd_sweep(const Options& opt);

std::string tool_version();
uint64_t fnv1a_hash(const std::string& text);

}  // namespace wclab::cli

#endif
