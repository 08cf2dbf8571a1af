#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "wz/config.hpp"
#include "wz/noise.hpp"

namespace wz::experiment {

enum ExitCode : int { kExitPass = 0, kExitFailure = 1, kExitConfig = 2, kExitUnstable = 3 };

/// Outcome of one (replica, n) cell.
struct CellStatus {
    std::size_t replica = 0;
    std::size_t n = 0;
    std::string status = "ok";  ///< ok, aborted, unstable
    std::string diagnostic;
};

struct RunResult {
    int exit_code = kExitPass;
    /// Emitted files relative to the output directory, manifest last.
    std::vector<std::string> files;
    std::vector<CellStatus> cells;
    /// Human-readable verdict lines.
    std::vector<std::string> summary;
};

RunResult run(const ExperimentConfig& config);
RunResult run_noise(const ExperimentConfig& config);
RunResult run_solve(const ExperimentConfig& config);
RunResult run_rates(const ExperimentConfig& config);
RunResult run_check(const ExperimentConfig& config);

/// Seed of replica r's Wiener path.
std::uint64_t replica_seed(std::uint64_t seed, std::size_t replica);

/// Cache file of replica r's Wiener path under dir.
std::filesystem::path path_cache_file(const std::filesystem::path& dir, const ExperimentConfig& config,
                                      std::size_t d1, std::size_t replica);

/// Wiener path of replica r: loaded from the cache when present, else sampled (and stored when caching).
noise::MultiPath replica_path(const ExperimentConfig& config, std::size_t d1, std::size_t replica);

/// Samples and stores the paths of every replica under output/paths; returns the written files.
std::vector<std::filesystem::path> cache_paths(const ExperimentConfig& config, std::size_t d1);

/// Every cached path in dir, ordered by file name.
std::vector<noise::MultiPath> load_paths(const std::filesystem::path& dir);

/// Runs task(i) for i in [0, count) on `threads` workers; results are indexed, so order never depends
/// on scheduling. The first exception thrown by a task is rethrown after all workers finish.
template <typename F>
void parallel_for(std::size_t count, std::size_t threads, F&& task);

}  // namespace wz::experiment

#include "wz/detail/parallel.hpp"
