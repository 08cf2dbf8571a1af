#include "wz/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace wz::experiment {

using nlohmann::json;

std::string to_string(Mode mode) {
    switch (mode) {
        case Mode::noise: return "noise";
        case Mode::solve: return "solve";
        case Mode::rates: return "rates";
        case Mode::check: return "check";
    }
    return "unknown";
}

namespace {

Mode parse_mode(const std::string& s) {
    if (s == "noise") return Mode::noise;
    if (s == "solve") return Mode::solve;
    if (s == "rates") return Mode::rates;
    if (s == "check") return Mode::check;
    throw ConfigError("mode: unknown value '" + s + "' (expected noise, solve, rates or check)");
}

std::string coupling_name(solver::CouplingMethod m) {
    switch (m) {
        case solver::CouplingMethod::automatic: return "automatic";
        case solver::CouplingMethod::oracle: return "oracle";
        case solver::CouplingMethod::numerical: return "numerical";
    }
    return "automatic";
}

solver::CouplingMethod parse_coupling(const std::string& s) {
    if (s == "automatic") return solver::CouplingMethod::automatic;
    if (s == "oracle") return solver::CouplingMethod::oracle;
    if (s == "numerical") return solver::CouplingMethod::numerical;
    throw ConfigError("coupling.method: unknown value '" + s + "'");
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.contains(key)) {
            throw ConfigError((where.empty() ? std::string() : where + ".") + key + ": unknown key");
        }
    }
}

template <typename T>
T get_as(const json& obj, const std::string& key, const std::string& where) {
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + key + ": " + e.what());
    }
}

std::size_t get_count(const json& obj, const std::string& key, const std::string& where) {
    const json& v = obj.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
        throw ConfigError(where + key + ": expected a non-negative integer");
    }
    return v.get<std::size_t>();
}

// ---------------------------------------------------------------------------
// Problem block

problem::CoefficientField parse_coefficient(const json& v, const std::string& where) {
    if (v.is_number()) return problem::CoefficientField::constant(v.get<double>());
    reject_unknown(v, {"const", "trig", "values"}, where);
    if (v.size() != 1) throw ConfigError(where + ": give exactly one of const, trig, values");
    if (v.contains("const")) return problem::CoefficientField::constant(get_as<double>(v, "const", where + "."));
    if (v.contains("values")) {
        return problem::CoefficientField::tabulated(get_as<std::vector<double>>(v, "values", where + "."));
    }
    std::vector<problem::TrigTerm> terms;
    for (const auto& t : v.at("trig")) {
        if (!t.is_array() || t.size() != 3 || !t[0].is_number_integer()) {
            throw ConfigError(where + ".trig: each term is [mode, cos, sin] with an integer mode");
        }
        terms.push_back({t[0].get<int>(), t[1].get<double>(), t[2].get<double>()});
    }
    try {
        return problem::CoefficientField::trig(std::move(terms));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

std::vector<problem::CoefficientField> parse_coefficients(const json& v, const std::string& where) {
    std::vector<problem::CoefficientField> out;
    if (v.is_array()) {
        for (std::size_t i = 0; i < v.size(); ++i) out.push_back(parse_coefficient(v[i], where + "[" + std::to_string(i) + "]"));
    } else {
        out.push_back(parse_coefficient(v, where));
    }
    return out;
}

grid::GridFunction parse_field(const json& v, const grid::SpatialGrid& g, const std::string& where) {
    if (v.is_number()) return grid::GridFunction::constant(g, v.get<double>());
    reject_unknown(v, {"gaussian", "trig", "const"}, where);
    if (v.size() != 1) throw ConfigError(where + ": give exactly one of gaussian, trig, const");
    if (v.contains("gaussian")) {
        const json& b = v.at("gaussian");
        reject_unknown(b, {"center", "width", "amplitude"}, where + ".gaussian");
        const std::string w = where + ".gaussian.";
        const double width = get_as<double>(b, "width", w);
        if (!(width > 0.0)) throw ConfigError(w + "width: must be positive");
        return grid::gaussian_bump(g, get_as<double>(b, "center", w), width, get_as<double>(b, "amplitude", w));
    }
    return parse_coefficient(v, where).evaluate(g);
}

}  // namespace

problem::ProblemData parse_problem(const json& block, const grid::SpatialGrid& g) {
    const std::string where = "problem";
    reject_unknown(block, {"preset", "d1", "domain_length", "a", "a1", "a0", "b", "b0", "sigma", "u0", "f", "g", "form"},
                   where);
    problem::ProblemData d;
    try {
        if (block.contains("preset")) d = problem::preset(get_as<std::string>(block, "preset", "problem."), g);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("problem.preset: ") + e.what());
    }
    if (block.contains("domain_length") && get_as<double>(block, "domain_length", "problem.") != g.length()) {
        throw ConfigError("problem.domain_length: differs from space.domain_length");
    }
    if (block.contains("d1")) {
        d.d1 = get_count(block, "d1", "problem.");
        if (d.d1 == 0) throw ConfigError("problem.d1: must be >= 1");
    }
    if (block.contains("a")) d.a = parse_coefficient(block.at("a"), "problem.a");
    if (block.contains("a1")) d.a1 = parse_coefficient(block.at("a1"), "problem.a1");
    if (block.contains("a0")) d.a0 = parse_coefficient(block.at("a0"), "problem.a0");
    if (block.contains("b")) d.b = parse_coefficients(block.at("b"), "problem.b");
    if (block.contains("b0")) d.b0 = parse_coefficients(block.at("b0"), "problem.b0");
    if (block.contains("sigma")) d.sigma = parse_coefficients(block.at("sigma"), "problem.sigma");
    if (block.contains("u0")) d.u0 = parse_field(block.at("u0"), g, "problem.u0");
    if (block.contains("f")) d.f = parse_field(block.at("f"), g, "problem.f");
    if (block.contains("g")) {
        d.g.clear();
        const json& gv = block.at("g");
        if (gv.is_array()) {
            for (std::size_t i = 0; i < gv.size(); ++i) d.g.push_back(parse_field(gv[i], g, "problem.g[" + std::to_string(i) + "]"));
        } else {
            d.g.push_back(parse_field(gv, g, "problem.g"));
        }
    }
    if (block.contains("form")) {
        const auto f = get_as<std::string>(block, "form", "problem.");
        if (f == "stratonovich") d.form = problem::NoiseForm::stratonovich;
        else if (f == "ito") d.form = problem::NoiseForm::ito;
        else throw ConfigError("problem.form: expected stratonovich or ito");
    }
    // A d1 override on a preset re-sizes per-driver defaults only when they were not given.
    if (block.contains("d1") && !block.contains("b") && d.b.size() != d.d1) d.b.clear();
    if (block.contains("d1") && !block.contains("b0") && d.b0.size() != d.d1) d.b0.clear();
    if (block.contains("d1") && !block.contains("g") && d.g.size() != d.d1) d.g.clear();
    if (!d.u0) d.u0 = grid::GridFunction::zeros(g);
    return d;
}

ExperimentConfig parse_config(const json& doc) {
    reject_unknown(doc, {"mode", "seed", "replicas", "grid", "space", "scheme", "n_list", "problem", "sobolev_m",
                         "n_substeps", "output", "path", "coupling", "gamma_target", "threshold", "cache_paths",
                         "threads", "checks", "fault_injection"},
                   "");
    ExperimentConfig c;
    try {
        if (doc.contains("mode")) c.mode = parse_mode(get_as<std::string>(doc, "mode", ""));
        if (doc.contains("seed")) c.seed = get_as<std::uint64_t>(doc, "seed", "");
        if (doc.contains("replicas")) c.replicas = get_count(doc, "replicas", "");
        if (doc.contains("grid")) {
            const json& g = doc.at("grid");
            reject_unknown(g, {"T", "n_fine"}, "grid");
            if (g.contains("T")) c.horizon = get_as<double>(g, "T", "grid.");
            if (g.contains("n_fine")) c.n_fine = get_count(g, "n_fine", "grid.");
        }
        bool space_length = false;
        if (doc.contains("space")) {
            const json& s = doc.at("space");
            reject_unknown(s, {"n_x", "domain_length"}, "space");
            if (s.contains("n_x")) c.n_x = get_count(s, "n_x", "space.");
            if (s.contains("domain_length")) {
                c.domain_length = get_as<double>(s, "domain_length", "space.");
                space_length = true;
            }
        }
        if (doc.contains("scheme")) {
            try {
                c.scheme = noise::parse_scheme(get_as<std::string>(doc, "scheme", ""));
            } catch (const std::invalid_argument& e) {
                throw ConfigError(std::string("scheme: ") + e.what());
            }
        }
        if (doc.contains("n_list")) c.n_list = get_as<std::vector<std::size_t>>(doc, "n_list", "");
        if (doc.contains("problem")) {
            c.problem = doc.at("problem");
            if (!c.problem.is_object()) throw ConfigError("problem: expected an object");
            if (c.problem.contains("domain_length") && !space_length) {
                c.domain_length = get_as<double>(c.problem, "domain_length", "problem.");
            }
        }
        if (doc.contains("sobolev_m")) {
            const json& m = doc.at("sobolev_m");
            c.sobolev_m = m.is_array() ? m.get<std::vector<int>>() : std::vector<int>{m.get<int>()};
        }
        if (doc.contains("n_substeps")) c.n_substeps = get_count(doc, "n_substeps", "");
        if (doc.contains("output")) c.output = get_as<std::string>(doc, "output", "");
        if (doc.contains("path")) {
            const auto p = get_as<std::string>(doc, "path", "");
            if (p == "wiener") c.path = PathSource::wiener;
            else if (p == "linear") c.path = PathSource::linear;
            else throw ConfigError("path: expected wiener or linear");
        }
        if (doc.contains("coupling")) {
            const json& cp = doc.at("coupling");
            reject_unknown(cp, {"method", "record_stride", "reference_substeps", "reference_mode_factor"}, "coupling");
            if (cp.contains("method")) c.coupling = parse_coupling(get_as<std::string>(cp, "method", "coupling."));
            if (cp.contains("record_stride")) c.record_stride = get_count(cp, "record_stride", "coupling.");
            if (cp.contains("reference_substeps")) c.reference_substeps = get_count(cp, "reference_substeps", "coupling.");
            if (cp.contains("reference_mode_factor")) {
                c.reference_mode_factor = get_count(cp, "reference_mode_factor", "coupling.");
            }
        }
        if (doc.contains("gamma_target")) c.gamma_target = get_as<double>(doc, "gamma_target", "");
        if (doc.contains("threshold")) c.threshold = get_as<double>(doc, "threshold", "");
        if (doc.contains("cache_paths")) c.cache_paths = get_as<bool>(doc, "cache_paths", "");
        if (doc.contains("threads")) c.threads = get_count(doc, "threads", "");
        if (doc.contains("checks")) c.checks = get_as<std::vector<std::string>>(doc, "checks", "");
        if (doc.contains("fault_injection")) c.fault_injection = get_as<std::vector<std::string>>(doc, "fault_injection", "");
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }

    if (c.replicas == 0) throw ConfigError("replicas: must be >= 1");
    if (c.threads == 0) throw ConfigError("threads: must be >= 1");
    if (c.n_substeps == 0) throw ConfigError("n_substeps: must be >= 1");
    if (c.reference_substeps == 0 || c.reference_mode_factor == 0) {
        throw ConfigError("coupling: reference factors must be >= 1");
    }
    if ((c.reference_mode_factor & (c.reference_mode_factor - 1)) != 0) {
        throw ConfigError("coupling.reference_mode_factor: must be a power of two");
    }
    for (int m : c.sobolev_m)
        if (m < 0) throw ConfigError("sobolev_m: negative indices are not supported");
    if (c.sobolev_m.empty()) throw ConfigError("sobolev_m: at least one index required");
    try {
        (void)c.time_grid();
        (void)c.spatial_grid();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("grid/space: ") + e.what());
    }
    if (c.mode != Mode::check) {
        if (c.n_list.empty()) throw ConfigError("n_list: must not be empty");
        for (std::size_t i = 0; i < c.n_list.size(); ++i) {
            if (i > 0 && c.n_list[i] <= c.n_list[i - 1]) throw ConfigError("n_list: must be strictly ascending");
            try {
                noise::check_admissible(c.time_grid(), c.scheme, c.n_list[i]);
            } catch (const std::invalid_argument& e) {
                throw ConfigError("n_list[" + std::to_string(i) + "]: " + e.what());
            }
        }
    }
    // Validates the problem block eagerly so errors surface as config errors.
    (void)build_problem(c);
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open config file " + file.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(file.string() + ": " + e.what());
    }
    return parse_config(doc);
}

json to_json(const ExperimentConfig& c) {
    json j;
    j["mode"] = to_string(c.mode);
    j["seed"] = c.seed;
    j["replicas"] = c.replicas;
    j["grid"] = {{"T", c.horizon}, {"n_fine", c.n_fine}};
    j["space"] = {{"n_x", c.n_x}, {"domain_length", c.domain_length}};
    j["scheme"] = noise::to_string(c.scheme);
    j["n_list"] = c.n_list;
    j["problem"] = c.problem;
    j["sobolev_m"] = c.sobolev_m;
    j["n_substeps"] = c.n_substeps;
    j["output"] = c.output.string();
    j["path"] = c.path == PathSource::wiener ? "wiener" : "linear";
    j["coupling"] = {{"method", coupling_name(c.coupling)},
                     {"record_stride", c.record_stride},
                     {"reference_substeps", c.reference_substeps},
                     {"reference_mode_factor", c.reference_mode_factor}};
    j["gamma_target"] = c.gamma_target;
    if (c.threshold) j["threshold"] = *c.threshold;
    j["cache_paths"] = c.cache_paths;
    j["threads"] = c.threads;
    j["checks"] = c.checks;
    j["fault_injection"] = c.fault_injection;
    return j;
}

std::string config_hash(const ExperimentConfig& config) {
    json j = to_json(config);
    // Parallelism and output location do not change results.
    j.erase("threads");
    j.erase("output");
    const std::string text = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

problem::ProblemSpec build_problem(const ExperimentConfig& config) {
    const grid::SpatialGrid g = config.spatial_grid();
    problem::ProblemData d = parse_problem(config.problem, g);
    try {
        return problem::ProblemSpec(g, std::move(d));
    } catch (const std::exception& e) {
        throw ConfigError(std::string("problem: ") + e.what());
    }
}

}  // namespace wz::experiment
