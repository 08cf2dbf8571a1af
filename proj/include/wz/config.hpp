#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "wz/noise.hpp"
#include "wz/problem.hpp"
#include "wz/solver.hpp"

namespace wz::experiment {

/// Invalid or inconsistent experiment configuration (exit code 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Mode { noise, solve, rates, check };

std::string to_string(Mode mode);

/// Driver used by noise mode: sampled Brownian motion or the test path W(t) = t.
enum class PathSource { wiener, linear };

struct ExperimentConfig {
    Mode mode = Mode::check;
    std::uint64_t seed = 1;
    std::size_t replicas = 1;
    double horizon = 1.0;
    std::size_t n_fine = std::size_t{1} << 15;
    std::size_t n_x = 128;
    double domain_length = 6.283185307179586;
    noise::Scheme scheme = noise::Scheme::polygonal;
    std::vector<std::size_t> n_list = {8, 16, 32, 64, 128, 256, 512};
    /// Raw problem block; see build_problem().
    nlohmann::json problem = nlohmann::json::object({{"preset", "ou-transport"}});
    std::vector<int> sobolev_m = {0};
    std::size_t n_substeps = 1;
    std::filesystem::path output = "out";
    PathSource path = PathSource::wiener;
    solver::CouplingMethod coupling = solver::CouplingMethod::automatic;
    std::size_t record_stride = 0;
    std::size_t reference_substeps = 8;
    std::size_t reference_mode_factor = 2;
    double gamma_target = 0.5;
    std::optional<double> threshold;
    bool cache_paths = true;
    std::size_t threads = 1;
    std::vector<std::string> checks = {"all"};
    /// Test hook: names of checks whose inputs are deliberately corrupted.
    std::vector<std::string> fault_injection;

    noise::TimeGrid time_grid() const { return {horizon, n_fine}; }
    grid::SpatialGrid spatial_grid() const { return {n_x, domain_length}; }
    double pass_threshold() const { return threshold.value_or(gamma_target - 0.1); }
};

/// Parses a config document; unknown keys and inadmissible values throw ConfigError.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& file);

/// Canonical JSON form of a config (round-trips through parse_config).
nlohmann::json to_json(const ExperimentConfig& config);

/// 64-bit FNV-1a of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

/// Problem described by the config's problem block on the config's spatial grid.
problem::ProblemSpec build_problem(const ExperimentConfig& config);

/// Problem block parser on an explicit grid (presets plus overrides).
problem::ProblemData parse_problem(const nlohmann::json& block, const grid::SpatialGrid& grid);

}  // namespace wz::experiment
