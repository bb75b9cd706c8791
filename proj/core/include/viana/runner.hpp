#pragma once

#include <string>
#include <vector>

#include "viana/attractor.hpp"
#include "viana/config.hpp"

namespace viana {

// Exit codes follow the CLI contract: 0 success, 2 configuration error,
// 3 numeric non-convergence (outputs still written where defined).
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;

struct RunResult {
    int exit_code = kExitOk;
    std::vector<std::string> files;  // paths written, manifest included
    std::string summary;             // one-line outcome for the console
};

const std::vector<std::string>& command_names();

// Executes one command against the resolved experiment, writing its outputs
// and a manifest (config hash, seed, versions, wall time) into out_dir. The
// manifest is written even when the command fails after configuration.
RunResult run_experiment(Experiment& exp, const std::string& command,
                         const std::string& out_dir);

std::string occupancy_csv(const OccupancyGrid& grid);
std::string occupancy_svg(const OccupancyGrid& grid);

}  // namespace viana
