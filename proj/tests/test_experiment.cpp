#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "wz/experiment.hpp"
#include "wz/path_io.hpp"

using namespace wz::experiment;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("wz_experiment_test_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

json noise_doc(const fs::path& out) {
    return {{"mode", "noise"},
            {"seed", 3},
            {"replicas", 2},
            {"grid", {{"T", 1.0}, {"n_fine", 1024}}},
            {"scheme", "polygonal"},
            {"n_list", {8, 16, 32}},
            {"problem", {{"preset", "ou-transport"}, {"d1", 2}}},
            {"output", out.string()}};
}

json rates_doc(const fs::path& out, const std::string& preset) {
    return {{"mode", "rates"},
            {"seed", 5},
            {"replicas", 3},
            {"grid", {{"T", 1.0}, {"n_fine", 512}}},
            {"space", {{"n_x", 32}}},
            {"n_list", {8, 16, 32}},
            {"problem", {{"preset", preset}}},
            {"sobolev_m", {0, 1}},
            {"output", out.string()}};
}

std::string error_of(const json& doc) {
    try {
        parse_config(doc);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(Config, DefaultsAndRoundTrip) {
    const auto c = parse_config(noise_doc("o"));
    EXPECT_EQ(c.mode, Mode::noise);
    EXPECT_EQ(c.n_fine, 1024u);
    EXPECT_DOUBLE_EQ(c.pass_threshold(), 0.4);
    const auto again = parse_config(to_json(c));
    EXPECT_EQ(to_json(again), to_json(c));
    EXPECT_EQ(config_hash(again), config_hash(c));
    EXPECT_EQ(config_hash(c).size(), 16u);
}

TEST(Config, HashIgnoresThreadsAndOutput) {
    auto doc = noise_doc("a");
    const auto base = config_hash(parse_config(doc));
    doc["threads"] = 4;
    doc["output"] = "elsewhere";
    EXPECT_EQ(config_hash(parse_config(doc)), base);
    doc["seed"] = 4;
    EXPECT_NE(config_hash(parse_config(doc)), base);
}

TEST(Config, ErrorsNameTheOffendingKey) {
    auto doc = noise_doc("o");
    doc["bogus"] = 1;
    EXPECT_NE(error_of(doc).find("bogus"), std::string::npos);

    doc = noise_doc("o");
    doc["grid"]["dt"] = 0.1;
    EXPECT_NE(error_of(doc).find("grid.dt"), std::string::npos);

    doc = noise_doc("o");
    doc["replicas"] = 0;
    EXPECT_NE(error_of(doc).find("replicas"), std::string::npos);

    doc = noise_doc("o");
    doc["n_list"] = {16, 8, 32};
    EXPECT_NE(error_of(doc).find("ascending"), std::string::npos);

    doc = noise_doc("o");
    doc["n_list"] = {8, 12, 16};
    EXPECT_NE(error_of(doc).find("n_list[1]"), std::string::npos);

    doc = noise_doc("o");
    doc["mode"] = "plot";
    EXPECT_NE(error_of(doc).find("mode"), std::string::npos);

    doc = noise_doc("o");
    doc["problem"] = {{"preset", "nope"}};
    EXPECT_NE(error_of(doc).find("problem.preset"), std::string::npos);

    doc = noise_doc("o");
    doc["space"] = {{"domain_length", 2.0}};
    doc["problem"]["domain_length"] = 1.0;
    EXPECT_NE(error_of(doc).find("domain_length"), std::string::npos);

    doc = noise_doc("o");
    doc["coupling"] = {{"reference_mode_factor", 3}};
    EXPECT_NE(error_of(doc).find("power of two"), std::string::npos);

    doc = noise_doc("o");
    doc["sobolev_m"] = {0, -1};
    EXPECT_NE(error_of(doc).find("sobolev_m"), std::string::npos);
}

TEST(Config, ProblemBlockOverrides) {
    const wz::grid::SpatialGrid g(32, 6.283185307179586);
    const json block = {{"a", {{"trig", {{0, 0.5, 0.0}, {1, 0.1, 0.0}}}}},
                        {"b", {0.3}},
                        {"b0", json::array({json{{"const", 0.1}}})},
                        {"u0", {{"gaussian", {{"center", 3.0}, {"width", 0.5}, {"amplitude", 2.0}}}}}};
    const auto d = parse_problem(block, g);
    const wz::problem::ProblemSpec spec(g, d);
    EXPECT_NEAR(spec.a()[0], 0.6, 1e-15);
    EXPECT_DOUBLE_EQ(spec.b(0)[5], 0.3);
    EXPECT_DOUBLE_EQ(spec.b0(0)[5], 0.1);
    EXPECT_NEAR(spec.u0().max_abs(), 2.0, 0.05);

    const auto two = parse_problem({{"preset", "ou-transport"}, {"d1", 2}}, g);
    EXPECT_EQ(two.d1, 2u);
    EXPECT_NO_THROW(wz::problem::ProblemSpec(g, two));
    EXPECT_THROW(parse_problem({{"a", {{"const", 1.0}, {"trig", json::array()}}}}, g), ConfigError);
}

TEST(Config, ProblemDomainLengthFillsSpace) {
    auto doc = noise_doc("o");
    doc["problem"]["domain_length"] = 3.0;
    EXPECT_DOUBLE_EQ(parse_config(doc).domain_length, 3.0);
}

TEST(Config, SingleSobolevIndexAccepted) {
    auto doc = rates_doc("o", "ou-transport");
    doc["sobolev_m"] = 2;
    EXPECT_EQ(parse_config(doc).sobolev_m, (std::vector<int>{2}));
}

TEST(RunNoise, LinearPathGivesHorizonOverN) {
    const auto dir = scratch("linear");
    auto doc = noise_doc(dir);
    doc["path"] = "linear";
    doc["grid"]["T"] = 2.0;
    doc["replicas"] = 1;
    const auto res = run(parse_config(doc));
    EXPECT_EQ(res.exit_code, kExitPass);
    std::istringstream csv(slurp(dir / "noise_report_r0000.csv"));
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, "n,sup_w_err,sup_area_err,bn_variation_max,bn_over_log_n,eta_n");
    for (double n : {8.0, 16.0, 32.0}) {
        std::getline(csv, line);
        const double err = std::stod(line.substr(line.find(',') + 1));
        EXPECT_NEAR(err, 2.0 / n, 1e-14);
    }
    const auto rep = json::parse(slurp(dir / "rate_sup_w_err.json"));
    EXPECT_NEAR(rep["median_kappa"].get<double>(), 1.0, 1e-12);
    fs::remove_all(dir);
}

TEST(RunNoise, SingletonSweepIsRefusedButReported) {
    const auto dir = scratch("singleton");
    auto doc = noise_doc(dir);
    doc["n_list"] = {16};
    doc["replicas"] = 1;
    const auto res = run(parse_config(doc));
    EXPECT_EQ(res.exit_code, kExitPass);
    const auto rep = json::parse(slurp(dir / "rate_sup_w_err.json"));
    EXPECT_EQ(rep["status"], "refused");
    EXPECT_TRUE(rep["median_kappa"].is_null());
    fs::remove_all(dir);
}

TEST(RunNoise, AreaRefusedForOneDriver) {
    const auto dir = scratch("d1");
    auto doc = noise_doc(dir);
    doc["problem"] = {{"preset", "ou-transport"}};
    run(parse_config(doc));
    EXPECT_EQ(json::parse(slurp(dir / "rate_sup_area_err.json"))["status"], "refused");
    fs::remove_all(dir);
}

TEST(RunNoise, RerunsAreByteIdenticalAndShareCachedPaths) {
    const auto a = scratch("rerun_a"), b = scratch("rerun_b");
    auto doc = noise_doc(a);
    const auto ra = run(parse_config(doc));
    doc["output"] = b.string();
    doc["cache_paths"] = false;
    run(parse_config(doc));
    for (const char* f : {"noise_report_r0000.csv", "noise_report_r0001.csv", "rate_sup_w_err.json", "bn_trend.json"})
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    EXPECT_FALSE(fs::exists(b / "paths"));

    const auto c = parse_config(noise_doc(a));
    const auto cached = load_paths(a / "paths");
    ASSERT_EQ(cached.size(), 2u);
    const auto fresh = wz::noise::sample_wiener(replica_seed(3, 1), 2, c.time_grid());
    EXPECT_EQ(cached[1](1, 700), fresh(1, 700));
    EXPECT_EQ(replica_path(c, 2, 1)(0, 1024), fresh(0, 1024));
    // A rerun reads the cache instead of resampling.
    const auto again = run(c);
    EXPECT_EQ(slurp(a / "noise_report_r0001.csv"), slurp(b / "noise_report_r0001.csv"));
    EXPECT_EQ(again.files, ra.files);
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST(RunNoise, CacheGridMismatchThrows) {
    const auto dir = scratch("mismatch");
    auto c = parse_config(noise_doc(dir));
    const auto file = path_cache_file(dir / "paths", c, 2, 0);
    fs::create_directories(file.parent_path());
    wz::noise::save_path(file, wz::noise::sample_wiener(1, 1, c.time_grid()));
    EXPECT_THROW(replica_path(c, 2, 0), std::runtime_error);
    fs::remove_all(dir);
}

TEST(Manifest, ListsEveryFileWithSizes) {
    const auto dir = scratch("manifest");
    const auto res = run(parse_config(noise_doc(dir)));
    const auto m = json::parse(slurp(dir / "manifest.json"));
    for (const char* key : {"config", "config_hash", "code_version", "started_utc", "finished_utc", "mode",
                            "exit_code", "cells", "files"})
        EXPECT_TRUE(m.contains(key)) << key;
    EXPECT_EQ(m["files"].size() + 1, res.files.size());
    for (const auto& f : m["files"]) {
        EXPECT_TRUE(fs::exists(dir / f["path"].get<std::string>())) << f["path"];
        EXPECT_EQ(f["bytes"].get<std::uintmax_t>(), fs::file_size(dir / f["path"].get<std::string>()));
    }
    EXPECT_EQ(m["cells"].size(), 6u);
    EXPECT_EQ(res.files.back(), "manifest.json");
    fs::remove_all(dir);
}

TEST(RunCheck, PassFaultAndEmptySelection) {
    const auto dir = scratch("check");
    json doc = {{"mode", "check"}, {"checks", {"antisymmetry", "parseval"}}, {"output", dir.string()}};
    EXPECT_EQ(run(parse_config(doc)).exit_code, kExitPass);
    const auto report = json::parse(slurp(dir / "check_report.json"));
    EXPECT_EQ(report.size(), 2u);

    doc["fault_injection"] = {"antisymmetry"};
    const auto faulty = run(parse_config(doc));
    EXPECT_EQ(faulty.exit_code, kExitFailure);
    EXPECT_EQ(faulty.summary.front().rfind("FAIL antisymmetry", 0), 0u);

    doc["checks"] = json::array();
    doc.erase("fault_injection");
    EXPECT_THROW(run(parse_config(doc)), ConfigError);
    doc["checks"] = {"no-such-check"};
    EXPECT_THROW(run(parse_config(doc)), ConfigError);
    fs::remove_all(dir);
}

TEST(RunRates, ThreadCountDoesNotChangeOutput) {
    const auto a = scratch("threads_a"), b = scratch("threads_b");
    auto doc = rates_doc(a, "ou-transport");
    doc["threads"] = 1;
    const auto ra = run(parse_config(doc));
    doc["output"] = b.string();
    doc["threads"] = 4;
    run(parse_config(doc));
    EXPECT_NE(ra.exit_code, kExitUnstable);
    for (const char* f : {"errors.csv", "rate_sup_err_m0.json", "rate_integral_err_m1.json"})
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    EXPECT_EQ(json::parse(slurp(a / "rate_sup_err_m0.json"))["status"], "fitted");
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST(RunRates, ZeroNoiseIsRefused) {
    const auto dir = scratch("zero_noise");
    const auto res = run(parse_config(rates_doc(dir, "zero-noise")));
    EXPECT_EQ(res.exit_code, kExitPass);
    for (const char* f : {"rate_sup_err_m0.json", "rate_integral_err_m1.json"}) {
        const auto j = json::parse(slurp(dir / f));
        EXPECT_EQ(j["status"], "refused");
        EXPECT_NE(j["reason"].get<std::string>().find("degenerate"), std::string::npos);
    }
    fs::remove_all(dir);
}

TEST(RunRates, DegenerateIntegralReportIsInformational) {
    const auto dir = scratch("degenerate");
    auto doc = rates_doc(dir, "degenerate-transport");
    doc["sobolev_m"] = {0};
    run(parse_config(doc));
    EXPECT_EQ(json::parse(slurp(dir / "rate_integral_err_m0.json"))["status"], "informational");
    EXPECT_EQ(json::parse(slurp(dir / "rate_sup_err_m0.json"))["status"], "fitted");
    fs::remove_all(dir);
}

TEST(RunRates, StabilityViolationExitsThree) {
    const auto dir = scratch("unstable");
    json doc = rates_doc(dir, "heat-multiplicative");
    doc["grid"] = {{"T", 1.0}, {"n_fine", 256}};
    doc["space"] = {{"n_x", 256}};
    doc["n_list"] = {64, 128, 256};
    doc["replicas"] = 1;
    doc["sobolev_m"] = {0};
    doc["coupling"] = {{"method", "numerical"}, {"reference_substeps", 1}};
    const auto res = run(parse_config(doc));
    EXPECT_EQ(res.exit_code, kExitUnstable);
    bool flagged = false;
    for (const auto& c : res.cells) flagged = flagged || (c.status == "unstable" && !c.diagnostic.empty());
    EXPECT_TRUE(flagged);
    fs::remove_all(dir);
}

TEST(RunRates, ItoFormIsAConfigError) {
    auto doc = rates_doc(scratch("ito"), "ou-transport");
    doc["problem"]["form"] = "ito";
    EXPECT_THROW(run(parse_config(doc)), ConfigError);
}

TEST(RunSolve, WritesTrajectories) {
    const auto dir = scratch("solve");
    json doc = {{"mode", "solve"},
                {"grid", {{"T", 0.5}, {"n_fine", 256}}},
                {"space", {{"n_x", 32}}},
                {"scheme", "smoothed"},
                {"n_list", {16}},
                {"problem", {{"preset", "heat-multiplicative"}}},
                {"sobolev_m", {0, 1}},
                {"output", dir.string()}};
    const auto res = run(parse_config(doc));
    EXPECT_EQ(res.exit_code, kExitPass);
    EXPECT_TRUE(fs::exists(dir / "trajectory_r0000_n0016_m1.csv"));
    EXPECT_EQ(slurp(dir / "trajectory_r0000_n0016_m0.csv").rfind("t,norm_m,norm_mp1,max_abs\n", 0), 0u);
    fs::remove_all(dir);
}

TEST(ParallelFor, IndexedResultsAndExceptions) {
    std::vector<std::size_t> out(100);
    parallel_for(100, 4, [&](std::size_t i) { out[i] = i * i; });
    for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(out[i], i * i);
    std::atomic<int> ran{0};
    EXPECT_THROW(parallel_for(50, 3,
                              [&](std::size_t i) {
                                  ++ran;
                                  if (i == 7) throw std::runtime_error("boom");
                              }),
                 std::runtime_error);
    EXPECT_GE(ran.load(), 8);
    EXPECT_THROW(parallel_for(5, 1, [](std::size_t) { throw std::logic_error("serial"); }), std::logic_error);
    parallel_for(0, 4, [](std::size_t) { FAIL(); });
}
