#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "wz/config.hpp"
#include "wz/experiment.hpp"
#include "wz/solver.hpp"

namespace {

struct Options {
    std::string config;
    std::string out;
    std::optional<std::size_t> replicas;
    std::optional<std::size_t> threads;
};

void add_common(CLI::App* sub, Options& o) {
    sub->add_option("--config", o.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory (overrides config)");
    sub->add_option("--replicas", o.replicas, "replica count (overrides config)")->check(CLI::PositiveNumber);
    sub->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
    using namespace wz::experiment;
    CLI::App app{"Wong-Zakai approximation lab"};
    app.require_subcommand(1);
    Options opts;
    const std::pair<const char*, Mode> modes[] = {
        {"noise", Mode::noise}, {"solve", Mode::solve}, {"rates", Mode::rates}, {"check", Mode::check}};
    const char* help[] = {"noise functionals and their rates", "solve trajectories", "coupled error rates",
                          "invariant suite"};
    for (std::size_t i = 0; i < 4; ++i) add_common(app.add_subcommand(modes[i].first, help[i]), opts);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitPass : kExitConfig;
    }

    Mode mode = Mode::check;
    for (const auto& [name, m] : modes)
        if (app.got_subcommand(name)) mode = m;

    try {
        ExperimentConfig config = load_config(opts.config);
        if (config.mode != mode) {
            std::cerr << "note: config mode '" << to_string(config.mode) << "' overridden by subcommand '"
                      << to_string(mode) << "'\n";
            nlohmann::json j = to_json(config);
            j["mode"] = to_string(mode);
            config = parse_config(j);
        }
        if (!opts.out.empty()) config.output = opts.out;
        if (opts.replicas) config.replicas = *opts.replicas;
        if (opts.threads) config.threads = *opts.threads;
        const RunResult result = run(config);
        for (const auto& line : result.summary) std::cout << line << '\n';
        std::cout << "wrote " << result.files.size() << " files to " << config.output.string() << '\n';
        return result.exit_code;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const wz::solver::StabilityError& e) {
        std::cerr << "unstable: " << e.what() << '\n';
        return kExitUnstable;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}
