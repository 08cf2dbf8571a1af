#include "wz/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

#include "wz/checks.hpp"
#include "wz/path_io.hpp"
#include "wz/rates.hpp"
#include "wz/solver.hpp"

#ifndef WZ_CODE_VERSION
#define WZ_CODE_VERSION "unknown"
#endif

namespace wz::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string padded(std::size_t v, int width) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%0*zu", width, v);
    return buf;
}

/// Collects emitted files and writes the manifest at the end.
class Output {
public:
    explicit Output(const ExperimentConfig& config) : config_(config), started_(utc_now()) {
        std::error_code ec;
        fs::create_directories(config.output, ec);
        if (ec) throw ConfigError("output: cannot create directory " + config.output.string() + ": " + ec.message());
    }

    std::ofstream open(const std::string& rel) {
        const fs::path file = config_.output / rel;
        fs::create_directories(file.parent_path());
        std::ofstream out(file, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + file.string());
        out.precision(17);
        index(rel);
        return out;
    }

    void write_json(const std::string& rel, const json& doc) { open(rel) << doc.dump(2) << '\n'; }

    void index(const std::string& rel) {
        if (std::find(files_.begin(), files_.end(), rel) == files_.end()) files_.push_back(rel);
    }

    RunResult finish(RunResult result) {
        json m;
        m["config"] = to_json(config_);
        m["config_hash"] = config_hash(config_);
        m["code_version"] = WZ_CODE_VERSION;
        m["started_utc"] = started_;
        m["finished_utc"] = utc_now();
        m["mode"] = to_string(config_.mode);
        m["exit_code"] = result.exit_code;
        m["cells"] = json::array();
        for (const auto& c : result.cells) {
            m["cells"].push_back({{"replica", c.replica}, {"n", c.n}, {"status", c.status}, {"diagnostic", c.diagnostic}});
        }
        m["files"] = json::array();
        for (const auto& f : files_) {
            std::error_code ec;
            const auto bytes = fs::file_size(config_.output / f, ec);
            m["files"].push_back({{"path", f}, {"bytes", ec ? 0 : bytes}});
        }
        result.files = files_;
        std::ofstream out(config_.output / "manifest.json");
        out << m.dump(2) << '\n';
        result.files.push_back("manifest.json");
        return result;
    }

private:
    const ExperimentConfig& config_;
    std::string started_;
    std::vector<std::string> files_;
};

json refused_report(const std::string& quantity, double gamma, const std::string& reason) {
    return {{"quantity", quantity}, {"gamma_target", gamma}, {"median_kappa", nullptr}, {"iqr", nullptr},
            {"per_replica", json::array()}, {"pass", false}, {"status", "refused"}, {"reason", reason}};
}

/// Fits every replica and aggregates; nullopt with a reason when no replica admits a fit.
std::optional<rates::RateReport> fit_replicas(const std::vector<std::vector<rates::ErrorRecord>>& per_replica,
                                              rates::Quantity q, const std::string& name, const ExperimentConfig& c,
                                              std::string& reason) {
    std::vector<double> kappas;
    for (const auto& recs : per_replica) {
        try {
            kappas.push_back(rates::fit_rate(recs, q).kappa);
        } catch (const std::invalid_argument& e) {
            reason = e.what();
        }
    }
    if (kappas.empty()) {
        if (reason.empty()) reason = "no replica produced a fit";
        return std::nullopt;
    }
    return rates::aggregate(name, kappas, c.gamma_target, c.pass_threshold());
}

/// Writes one rate report file; returns false only for a fitted report that fails its threshold.
bool emit_report(Output& out, const std::string& rel, const std::vector<std::vector<rates::ErrorRecord>>& recs,
                 rates::Quantity q, const std::string& name, const ExperimentConfig& c,
                 std::vector<std::string>& summary, bool gate = true) {
    std::string reason;
    const auto report = fit_replicas(recs, q, name, c, reason);
    if (!report) {
        out.write_json(rel, refused_report(name, c.gamma_target, reason));
        summary.push_back("REFUSED " + name + ": " + reason);
        return true;
    }
    json j = rates::to_json(*report);
    j["threshold"] = report->threshold;
    j["status"] = gate ? "fitted" : "informational";
    out.write_json(rel, j);
    char line[160];
    std::snprintf(line, sizeof line, "%s %s: median kappa %.4f (iqr %.4f, threshold %.2f)",
                  !gate ? "INFO" : report->pass ? "PASS" : "FAIL", name.c_str(), report->median_kappa, report->iqr,
                  report->threshold);
    summary.push_back(line);
    return report->pass || !gate;
}

noise::MultiPath driver_for(const ExperimentConfig& c, std::size_t d1, std::size_t replica) {
    if (c.path == PathSource::linear) {
        return noise::deterministic_path(c.time_grid(), d1, [](std::size_t, double t) { return t; });
    }
    return replica_path(c, d1, replica);
}

void index_paths(Output& out, const ExperimentConfig& c, std::size_t d1) {
    if (!c.cache_paths || c.path != PathSource::wiener) return;
    for (std::size_t r = 0; r < c.replicas; ++r) {
        out.index(fs::relative(path_cache_file(c.output / "paths", c, d1, r), c.output).generic_string());
    }
}

std::size_t driver_count(const ExperimentConfig& c) { return build_problem(c).d1(); }

bool noise_free(const problem::ProblemSpec& spec) {
    for (std::size_t k = 0; k < spec.d1(); ++k) {
        if (spec.b(k).max_abs() != 0.0 || spec.b0(k).max_abs() != 0.0 || spec.g(k).max_abs() != 0.0) return false;
    }
    return true;
}

solver::CoupledOptions coupling_options(const ExperimentConfig& c) {
    solver::CoupledOptions o;
    o.method = c.coupling;
    o.n_substeps = c.n_substeps;
    o.record_stride = c.record_stride;
    o.reference_substeps = c.reference_substeps;
    o.reference_mode_factor = c.reference_mode_factor;
    return o;
}

}  // namespace

std::uint64_t replica_seed(std::uint64_t seed, std::size_t replica) { return noise::split_seed(seed, replica); }

fs::path path_cache_file(const fs::path& dir, const ExperimentConfig& c, std::size_t d1, std::size_t replica) {
    char name[160];
    std::snprintf(name, sizeof name, "w_s%llu_d%zu_N%zu_T%.17g_r%s.wznb", static_cast<unsigned long long>(c.seed),
                  d1, c.n_fine, c.horizon, padded(replica, 4).c_str());
    return dir / name;
}

noise::MultiPath replica_path(const ExperimentConfig& c, std::size_t d1, std::size_t replica) {
    const fs::path file = path_cache_file(c.output / "paths", c, d1, replica);
    if (c.cache_paths && fs::exists(file)) {
        noise::MultiPath w = noise::load_path(file);
        if (!(w.grid() == c.time_grid()) || w.d1() != d1) {
            throw std::runtime_error("cached path " + file.string() + " does not match the configured grid");
        }
        return w;
    }
    noise::MultiPath w = noise::sample_wiener(replica_seed(c.seed, replica), d1, c.time_grid());
    if (c.cache_paths) {
        fs::create_directories(file.parent_path());
        // Write-then-rename keeps concurrent readers from seeing a partial file.
        const fs::path tmp = file.string() + ".tmp" + std::to_string(replica);
        noise::save_path(tmp, w);
        fs::rename(tmp, file);
    }
    return w;
}

std::vector<fs::path> cache_paths(const ExperimentConfig& c, std::size_t d1) {
    std::vector<fs::path> files;
    ExperimentConfig cc = c;
    cc.cache_paths = true;
    for (std::size_t r = 0; r < c.replicas; ++r) {
        (void)replica_path(cc, d1, r);
        files.push_back(path_cache_file(c.output / "paths", c, d1, r));
    }
    return files;
}

std::vector<noise::MultiPath> load_paths(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".wznb") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<noise::MultiPath> out;
    for (const auto& f : files) out.push_back(noise::load_path(f));
    return out;
}

// ---------------------------------------------------------------------------

RunResult run_noise(const ExperimentConfig& c) {
    Output out(c);
    const std::size_t d1 = driver_count(c);
    std::vector<std::vector<noise::NoiseRow>> rows(c.replicas);
    parallel_for(c.replicas, c.threads, [&](std::size_t r) {
        rows[r] = noise::noise_report(driver_for(c, d1, r), c.scheme, c.n_list);
    });
    index_paths(out, c, d1);

    RunResult result;
    std::vector<std::vector<rates::ErrorRecord>> recs(c.replicas);
    for (std::size_t r = 0; r < c.replicas; ++r) {
        auto csv = out.open("noise_report_r" + padded(r, 4) + ".csv");
        csv << "n,sup_w_err,sup_area_err,bn_variation_max,bn_over_log_n,eta_n\n";
        for (const auto& row : rows[r]) {
            csv << row.n << ',' << row.sup_w_err << ',' << row.sup_area_err << ',' << row.bn_variation_max << ','
                << row.bn_over_log_n << ',' << row.eta_n << '\n';
            rates::ErrorRecord e;
            e.n = row.n;
            e.replica = r;
            e.sup_w_err = row.sup_w_err;
            e.sup_a_err = row.sup_area_err;
            e.bn_var = row.bn_variation_max;
            recs[r].push_back(e);
            result.cells.push_back({r, row.n, "ok", ""});
        }
    }

    bool pass = emit_report(out, "rate_sup_w_err.json", recs, rates::Quantity::sup_w_err, "sup_w_err", c, result.summary);
    if (d1 > 1) {
        pass = emit_report(out, "rate_sup_area_err.json", recs, rates::Quantity::sup_a_err, "sup_area_err", c,
                           result.summary) && pass;
    } else {
        out.write_json("rate_sup_area_err.json",
                       refused_report("sup_area_err", c.gamma_target, "area processes vanish for d1 = 1"));
        result.summary.push_back("REFUSED sup_area_err: area processes vanish for d1 = 1");
    }

    json trend = {{"replicas", json::array()}};
    std::size_t monotone = 0, evaluated = 0;
    for (std::size_t r = 0; r < c.replicas; ++r) {
        try {
            const auto t = rates::bn_trend(recs[r]);
            trend["replicas"].push_back({{"replica", r}, {"ns", t.ns}, {"ratios", t.ratios}, {"monotone", t.monotone}});
            ++evaluated;
            if (t.monotone) ++monotone;
        } catch (const std::invalid_argument& e) {
            trend["replicas"].push_back({{"replica", r}, {"error", e.what()}});
        }
    }
    trend["monotone_count"] = monotone;
    trend["evaluated"] = evaluated;
    out.write_json("bn_trend.json", trend);
    result.summary.push_back("INFO bn_trend: " + std::to_string(monotone) + " of " + std::to_string(evaluated) +
                             " replicas strictly decreasing");

    result.exit_code = pass ? kExitPass : kExitFailure;
    return out.finish(std::move(result));
}

RunResult run_rates(const ExperimentConfig& c) {
    const problem::ProblemSpec spec = build_problem(c);
    if (!problem::check_ellipticity(spec).pass) throw ConfigError("problem: approximating equation is not elliptic");
    const auto par = problem::check_parabolicity(spec);
    if (!par.pass) throw ConfigError("problem: limit equation violates stochastic parabolicity");
    if (spec.form() != problem::NoiseForm::stratonovich) {
        throw ConfigError("problem.form: rate studies need the Stratonovich form");
    }
    Output out(c);
    const std::size_t d1 = spec.d1();
    const std::size_t nn = c.n_list.size();
    const auto base = coupling_options(c);
    const bool oracle = c.coupling == solver::CouplingMethod::oracle ||
                        (c.coupling == solver::CouplingMethod::automatic && solver::oracle_admissible(spec));

    struct ReplicaData {
        std::optional<noise::MultiPath> w;
        std::optional<solver::Trajectory> reference;
        std::string failure;
        bool unstable = false;
    };
    std::vector<ReplicaData> reps(c.replicas);
    parallel_for(c.replicas, c.threads, [&](std::size_t r) {
        reps[r].w = driver_for(c, d1, r);
        if (oracle) return;
        auto o = base;
        o.bridge_seed = noise::split_seed(replica_seed(c.seed, r), 0xb41d6eULL);
        try {
            reps[r].reference = solver::reference_solution(spec, *reps[r].w, o);
            if (reps[r].reference->aborted) reps[r].failure = "limit: " + reps[r].reference->diagnostic;
        } catch (const solver::StabilityError& e) {
            reps[r].failure = std::string(e.what()) + " (n_substeps >= " + std::to_string(e.required_substeps()) + ")";
            reps[r].unstable = true;
        }
    });
    index_paths(out, c, d1);

    struct Cell {
        std::vector<solver::CoupledError> errs;
        double sup_w = 0, sup_a = 0, bn_var = 0;
        CellStatus status;
    };
    std::vector<Cell> cells(c.replicas * nn);
    parallel_for(cells.size(), c.threads, [&](std::size_t i) {
        const std::size_t r = i / nn, n = c.n_list[i % nn];
        Cell& cell = cells[i];
        cell.status = {r, n, "ok", ""};
        const noise::MultiPath& w = *reps[r].w;
        const auto bundle = noise::make_bundle(w, noise::approximate(w, c.scheme, n));
        cell.sup_w = bundle.sup_w_err;
        cell.sup_a = bundle.sup_a_err;
        cell.bn_var = bundle.max_bn_variation();
        if (!reps[r].failure.empty()) {
            cell.status = {r, n, reps[r].unstable ? "unstable" : "aborted", reps[r].failure};
            return;
        }
        auto o = base;
        o.bridge_seed = noise::split_seed(replica_seed(c.seed, r), 0xb41d6eULL);
        if (reps[r].reference) o.reference = &*reps[r].reference;
        try {
            cell.errs = solver::coupled_errors(spec, bundle.w, bundle.wn, c.sobolev_m, o);
            if (cell.errs.front().aborted) cell.status = {r, n, "aborted", cell.errs.front().diagnostic};
        } catch (const solver::StabilityError& e) {
            cell.status = {r, n, "unstable",
                           std::string(e.what()) + " (n_substeps >= " + std::to_string(e.required_substeps()) + ")"};
        }
    });

    RunResult result;
    bool unstable = false;
    double max_sup = 0.0;
    const std::size_t nm = c.sobolev_m.size();
    // recs[mi][r]: fit inputs, ok cells only.
    std::vector<std::vector<std::vector<rates::ErrorRecord>>> recs(nm, std::vector<std::vector<rates::ErrorRecord>>(c.replicas));
    {
        auto csv = out.open("errors.csv");
        csv << "replica,n,m,sup_err,integral_err,z_n_sup,sup_w_err,sup_a_err,bn_var,status\n";
        for (const Cell& cell : cells) {
            result.cells.push_back(cell.status);
            if (cell.status.status == "unstable") unstable = true;
            for (std::size_t mi = 0; mi < nm; ++mi) {
                const bool ok = cell.status.status == "ok";
                const double nan = std::numeric_limits<double>::quiet_NaN();
                const double se = ok ? cell.errs[mi].sup_err : nan;
                const double ie = ok ? cell.errs[mi].integral_err : nan;
                const double zs = ok ? cell.errs[mi].z_n_sup : nan;
                csv << cell.status.replica << ',' << cell.status.n << ',' << c.sobolev_m[mi] << ',' << se << ',' << ie
                    << ',' << zs << ',' << cell.sup_w << ',' << cell.sup_a << ',' << cell.bn_var << ','
                    << cell.status.status << '\n';
                if (!ok) continue;
                max_sup = std::max(max_sup, se);
                rates::ErrorRecord e;
                e.n = cell.status.n;
                e.replica = cell.status.replica;
                e.sup_err = se;
                e.integral_err = ie;
                e.sup_w_err = cell.sup_w;
                e.sup_a_err = cell.sup_a;
                e.bn_var = cell.bn_var;
                recs[mi][e.replica].push_back(e);
            }
        }
    }

    const double scale = std::sqrt(grid::sobolev_norm_squared(spec.u0(), 0)) + 1.0;
    const bool degenerate_noise = noise_free(spec) || max_sup <= 1e-12 * scale;
    const bool degenerate_diffusion = problem::check_ellipticity(spec).degenerate || par.margin <= 0.0;
    bool pass = true;
    for (std::size_t mi = 0; mi < nm; ++mi) {
        const std::string suffix = "_m" + std::to_string(c.sobolev_m[mi]);
        if (degenerate_noise) {
            const std::string why = "degenerate: errors at the solver-mismatch floor (u_n coincides with u)";
            for (const std::string q : {"sup_err", "integral_err"}) {
                out.write_json("rate_" + q + suffix + ".json", refused_report(q + suffix, c.gamma_target, why));
                result.summary.push_back("REFUSED " + q + suffix + ": " + why);
            }
            continue;
        }
        pass = emit_report(out, "rate_sup_err" + suffix + ".json", recs[mi], rates::Quantity::sup_err,
                           "sup_err" + suffix, c, result.summary) && pass;
        // Only the sup-norm rate is claimed without ellipticity; the integral term is then informational.
        pass = emit_report(out, "rate_integral_err" + suffix + ".json", recs[mi], rates::Quantity::integral_err,
                           "integral_err" + suffix, c, result.summary, !degenerate_diffusion) && pass;
    }
    std::size_t bad = 0;
    for (const auto& s : result.cells) bad += s.status != "ok";
    if (bad > 0) result.summary.push_back("WARN " + std::to_string(bad) + " cells excluded (see manifest)");

    result.exit_code = unstable ? kExitUnstable : pass ? kExitPass : kExitFailure;
    return out.finish(std::move(result));
}

RunResult run_solve(const ExperimentConfig& c) {
    const problem::ProblemSpec spec = build_problem(c);
    Output out(c);
    const std::size_t d1 = spec.d1();
    const auto steps = solver::strided_steps(c.time_grid(), c.record_stride > 0 ? c.record_stride
                                                                                 : std::max<std::size_t>(1, c.n_fine / 1024));
    const std::size_t nn = c.n_list.size();
    const bool limit_ok = problem::check_parabolicity(spec).pass;
    const std::size_t per_replica = nn + (limit_ok ? 1 : 0);
    std::vector<std::optional<noise::MultiPath>> paths(c.replicas);
    parallel_for(c.replicas, c.threads, [&](std::size_t r) { paths[r] = driver_for(c, d1, r); });
    index_paths(out, c, d1);

    const std::size_t nm = c.sobolev_m.size();
    std::vector<std::vector<solver::Trajectory>> trajs(c.replicas * per_replica);
    std::vector<CellStatus> status(c.replicas * per_replica);
    parallel_for(trajs.size(), c.threads, [&](std::size_t i) {
        const std::size_t r = i / per_replica, slot = i % per_replica;
        const bool limit = slot == nn;
        const std::size_t n = limit ? 0 : c.n_list[slot];
        status[i] = {r, n, "ok", ""};
        const noise::MultiPath& w = *paths[r];
        try {
            for (std::size_t mi = 0; mi < nm; ++mi) {
                solver::SolveRequest req{spec, w, std::nullopt, c.n_substeps, steps, c.sobolev_m[mi], mi == 0, false,
                                         noise::split_seed(replica_seed(c.seed, r), 0xb41d6eULL)};
                if (limit) {
                    trajs[i].push_back(solver::solve_limit(req));
                } else {
                    req.wn = noise::approximate(w, c.scheme, n);
                    trajs[i].push_back(solver::solve_approximating(req));
                }
                if (trajs[i].back().aborted) status[i] = {r, n, "aborted", trajs[i].back().diagnostic};
            }
        } catch (const solver::StabilityError& e) {
            status[i] = {r, n, "unstable",
                         std::string(e.what()) + " (n_substeps >= " + std::to_string(e.required_substeps()) + ")"};
        } catch (const std::invalid_argument& e) {
            trajs[i].clear();
            status[i] = {r, n, "aborted", e.what()};
        }
    });

    RunResult result;
    bool unstable = false;
    for (std::size_t i = 0; i < trajs.size(); ++i) {
        result.cells.push_back(status[i]);
        if (status[i].status == "unstable") {
            unstable = true;
            continue;
        }
        const std::size_t r = i / per_replica, slot = i % per_replica;
        const std::string tag = "r" + padded(r, 4) + "_" + (slot == nn ? std::string("limit") : "n" + padded(c.n_list[slot], 4));
        for (std::size_t mi = 0; mi < trajs[i].size(); ++mi) {
            auto csv = out.open("trajectory_" + tag + "_m" + std::to_string(c.sobolev_m[mi]) + ".csv");
            solver::write_trajectory_csv(csv, trajs[i][mi]);
        }
        if (trajs[i].empty()) continue;
        const auto& t0 = trajs[i].front();
        if (!t0.spectra.empty()) {
            auto csv = out.open("final_state_" + tag + ".csv");
            grid::write_field_csv(csv, t0.state(t0.spectra.size() - 1, spec.grid()));
        }
    }
    result.summary.push_back("INFO solved " + std::to_string(trajs.size()) + " trajectories");
    result.exit_code = unstable ? kExitUnstable : kExitPass;
    return out.finish(std::move(result));
}

RunResult run_check(const ExperimentConfig& c) {
    std::vector<checks::CheckResult> results;
    try {
        results = checks::run_checks(c.checks, c.seed, c.fault_injection);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    Output out(c);
    RunResult result;
    json report = json::array();
    bool pass = true;
    for (const auto& r : results) {
        char line[256];
        std::snprintf(line, sizeof line, "%s %s: %.3e (tolerance %.1e)%s%s", r.pass ? "PASS" : "FAIL", r.name.c_str(),
                      r.value, r.tolerance, r.detail.empty() ? "" : " ", r.detail.c_str());
        result.summary.push_back(line);
        report.push_back({{"name", r.name}, {"pass", r.pass}, {"value", r.value}, {"tolerance", r.tolerance},
                          {"detail", r.detail}});
        pass = pass && r.pass;
    }
    out.write_json("check_report.json", report);
    result.exit_code = pass ? kExitPass : kExitFailure;
    return out.finish(std::move(result));
}

RunResult run(const ExperimentConfig& config) {
    switch (config.mode) {
        case Mode::noise: return run_noise(config);
        case Mode::solve: return run_solve(config);
        case Mode::rates: return run_rates(config);
        case Mode::check: return run_check(config);
    }
    throw ConfigError("mode: unsupported");
}

}  // namespace wz::experiment
