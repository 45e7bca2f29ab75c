#include "jumpput/io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "jumpput/errors.hpp"
#include "jumpput/gridfn.hpp"

namespace jumpput {

using nlohmann::json;

namespace {

const json& require(const json& j, const char* key, const std::string& where) {
    if (!j.is_object()) throw ConfigError("\"" + where + "\" must be an object");
    const auto it = j.find(key);
    if (it == j.end()) throw ConfigError("missing required key \"" + (where.empty() ? "" : where + ".") + key + "\"");
    return *it;
}

template <class T>
T get_as(const json& v, const std::string& name) {
    try {
        return v.get<T>();
    } catch (const json::exception&) {
        throw ConfigError("key \"" + name + "\" has the wrong type");
    }
}

template <class T>
T required(const json& j, const char* key, const std::string& where) {
    return get_as<T>(require(j, key, where), where.empty() ? key : where + "." + key);
}

template <class T>
T optional_or(const json& j, const char* key, const std::string& where, T fallback) {
    if (!j.contains(key)) return fallback;
    return get_as<T>(j.at(key), where + "." + key);
}

double positive(double v, const std::string& name) {
    if (!(v > 0.0)) throw ConfigError("\"" + name + "\" must be positive");
    return v;
}

VolatilityModel vol_from_json(const json& j) {
    const auto kind = required<std::string>(j, "kind", "model.volatility");
    if (kind == "constant") return VolatilityModel::constant(required<double>(j, "sigma", "model.volatility"));
    if (kind == "cev") {
        return VolatilityModel::cev(required<double>(j, "sigma", "model.volatility"),
                                    required<double>(j, "gamma", "model.volatility"));
    }
    if (kind == "table") {
        return VolatilityModel::table(required<std::vector<double>>(j, "x", "model.volatility"),
                                      required<std::vector<double>>(j, "sigma", "model.volatility"));
    }
    throw ConfigError("unknown volatility kind \"" + kind + "\" at \"model.volatility.kind\"");
}

JumpMeasure jumps_from_json(const json& j) {
    const auto kind = required<std::string>(j, "kind", "model.jumps");
    if (kind == "lognormal") {
        return JumpMeasure::lognormal(required<double>(j, "meanlog", "model.jumps"),
                                      required<double>(j, "sdlog", "model.jumps"),
                                      optional_or<int>(j, "order", "model.jumps", 32));
    }
    if (kind == "discrete") {
        std::vector<Atom> atoms;
        for (const auto& a : require(j, "atoms", "model.jumps")) {
            atoms.push_back({required<double>(a, "z", "model.jumps.atoms[]"), required<double>(a, "p", "model.jumps.atoms[]")});
        }
        return JumpMeasure::discrete(std::move(atoms));
    }
    if (kind == "none") return JumpMeasure::identity();
    throw ConfigError("unknown jump kind \"" + kind + "\" at \"model.jumps.kind\"");
}

Scheme scheme_from_string(const std::string& s) {
    if (s == "auto") return Scheme::Auto;
    if (s == "exact") return Scheme::Exact;
    if (s == "euler") return Scheme::Euler;
    throw ConfigError("unknown scheme \"" + s + "\" at \"mc.scheme\"");
}

json shape_to_json(const ShapeReport& s) {
    return {{"convex", s.convex},
            {"decreasing", s.decreasing},
            {"bounds_ok", s.bounds_ok},
            {"min_right_slope", s.min_right_slope},
            {"min_second_difference", s.min_second_difference},
            {"worst_convexity_index", s.worst_convexity_index},
            {"max_forward_difference", s.max_forward_difference},
            {"max_bound_violation", s.max_bound_violation}};
}

ShapeReport shape_from_json(const json& j) {
    ShapeReport s;
    s.convex = j.at("convex").get<bool>();
    s.decreasing = j.at("decreasing").get<bool>();
    s.bounds_ok = j.at("bounds_ok").get<bool>();
    s.min_right_slope = j.at("min_right_slope").get<double>();
    s.min_second_difference = j.at("min_second_difference").get<double>();
    s.worst_convexity_index = j.at("worst_convexity_index").get<std::size_t>();
    s.max_forward_difference = j.at("max_forward_difference").get<double>();
    s.max_bound_violation = j.at("max_bound_violation").get<double>();
    return s;
}

}  // namespace

MarketModel model_from_json(const json& j) {
    const std::string w = "model";
    try {
        const double r = required<double>(j, "r", w);
        const double lambda = required<double>(j, "lambda", w);
        const auto vol = vol_from_json(require(j, "volatility", w));
        const double strike = required<double>(j, "strike", w);
        const double alpha = optional_or<double>(j, "alpha", w, r);
        JumpMeasure jumps = JumpMeasure::identity();
        if (j.contains("jumps")) {
            jumps = jumps_from_json(j.at("jumps"));
        } else if (lambda > 0.0) {
            throw ConfigError("missing required key \"model.jumps\" (lambda > 0)");
        }
        MarketModel m{vol, r, alpha, lambda, jumps, strike};
        m.validate();
        (void)m.xi();
        return m;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("invalid model: ") + e.what());
    }
}

json model_to_json(const MarketModel& m) {
    json vol;
    switch (m.vol.kind()) {
        case VolatilityModel::Kind::Constant:
            vol = {{"kind", "constant"}, {"sigma", m.vol.sigma()}};
            break;
        case VolatilityModel::Kind::Cev:
            vol = {{"kind", "cev"}, {"sigma", m.vol.sigma()}, {"gamma", m.vol.gamma()}};
            break;
        case VolatilityModel::Kind::Table:
            vol = {{"kind", "table"},
                   {"x", std::vector<double>(m.vol.table_x().begin(), m.vol.table_x().end())},
                   {"sigma", std::vector<double>(m.vol.table_sigma().begin(), m.vol.table_sigma().end())}};
            break;
    }
    json jumps;
    if (m.jumps.kind() == JumpMeasure::Kind::Lognormal) {
        jumps = {{"kind", "lognormal"}, {"meanlog", m.jumps.meanlog()}, {"sdlog", m.jumps.sdlog()},
                 {"order", m.jumps.order()}};
    } else {
        json atoms = json::array();
        for (const auto& a : m.jumps.atoms()) atoms.push_back({{"z", a.z}, {"p", a.p}});
        jumps = {{"kind", "discrete"}, {"atoms", atoms}};
    }
    return {{"volatility", vol}, {"r", m.r},           {"alpha", m.alpha},
            {"lambda", m.lambda}, {"jumps", jumps},    {"strike", m.strike}};
}

RunConfig parse_config(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    RunConfig cfg{model_from_json(require(j, "model", "")), {}, {}, std::nullopt, {}, ".", {}};
    const double k = cfg.model.strike;

    cfg.grid = {1e-3 * k, 1e2 * k, 2000};
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        cfg.grid.x_min = positive(optional_or<double>(g, "x_min", "grid", cfg.grid.x_min), "grid.x_min");
        cfg.grid.x_max = positive(optional_or<double>(g, "x_max", "grid", cfg.grid.x_max), "grid.x_max");
        cfg.grid.n = optional_or<std::size_t>(g, "n", "grid", cfg.grid.n);
        if (!(cfg.grid.x_min < k && k < cfg.grid.x_max)) throw ConfigError("grid must satisfy x_min < strike < x_max");
        if (cfg.grid.n < 100) throw ConfigError("\"grid.n\" must be at least 100");
    }

    if (j.contains("solver")) {
        const auto& s = j.at("solver");
        cfg.solver.epsilon = positive(optional_or<double>(s, "epsilon", "solver", cfg.solver.epsilon), "solver.epsilon");
        if (s.contains("tolerances")) {
            const auto& t = s.at("tolerances");
            const std::string w = "solver.tolerances";
            auto& tol = cfg.solver.tol;
            tol.root = positive(optional_or<double>(t, "root", w, tol.root), w + ".root");
            tol.fit = positive(optional_or<double>(t, "fit", w, tol.fit), w + ".fit");
            tol.pde = positive(optional_or<double>(t, "pde", w, tol.pde), w + ".pde");
            tol.trunc = positive(optional_or<double>(t, "trunc", w, tol.trunc), w + ".trunc");
            tol.shape = positive(optional_or<double>(t, "shape", w, tol.shape), w + ".shape");
        }
        if (s.contains("residual_upper")) {
            cfg.solver.residual_upper = positive(get_as<double>(s.at("residual_upper"), "solver.residual_upper"),
                                                 "solver.residual_upper");
        }
        cfg.solver.force_numeric_pair = optional_or<bool>(s, "force_numeric_pair", "solver", false);
    }

    if (j.contains("mc")) {
        const auto& m = j.at("mc");
        McSettings mc;
        mc.n_paths = optional_or<std::size_t>(m, "n_paths", "mc", mc.n_paths);
        mc.dt = positive(optional_or<double>(m, "dt", "mc", mc.dt), "mc.dt");
        mc.t_max = optional_or<double>(m, "t_max", "mc", 0.0);
        if (mc.t_max < 0.0) throw ConfigError("\"mc.t_max\" must be non-negative");
        mc.seed = optional_or<std::uint64_t>(m, "seed", "mc", mc.seed);
        mc.n_sigma = optional_or<double>(m, "n_sigma", "mc", mc.n_sigma);
        mc.allowance = optional_or<double>(m, "allowance", "mc", mc.allowance);
        if (mc.n_sigma < 0.0 || mc.allowance < 0.0) throw ConfigError("\"mc.n_sigma\" and \"mc.allowance\" must be >= 0");
        mc.scheme = scheme_from_string(optional_or<std::string>(m, "scheme", "mc", "auto"));
        cfg.mc_points = optional_or<std::vector<double>>(m, "points", "mc", {});
        cfg.mc = mc;
    }

    cfg.output = optional_or<std::string>(j, "output", "", cfg.output);
    cfg.spots = optional_or<std::vector<double>>(j, "spots", "", {});
    for (double s : cfg.spots) positive(s, "spots[]");
    for (double s : cfg.mc_points) positive(s, "mc.points[]");
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j);
}

Grid make_grid(const RunConfig& cfg) {
    try {
        return Grid::log_spaced(cfg.grid.x_min, cfg.grid.x_max, cfg.grid.n, cfg.model.strike);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("invalid grid: ") + e.what());
    }
}

json diagnostics_to_json(const Diagnostics& d) {
    return {{"smooth_fit_gap", d.smooth_fit_gap},
            {"max_pde_residual_continuation", d.max_pde_residual_continuation},
            {"pde_residual_location", d.pde_residual_location},
            {"max_vi_violation_stopping", d.max_vi_violation_stopping},
            {"min_continuation_premium", d.min_continuation_premium},
            {"fixed_point_residual", d.fixed_point_residual},
            {"shape_report", shape_to_json(d.shape)}};
}

json solution_to_json(const Solution& sol, const std::string& values_file) {
    const Grid& g = sol.v.grid();
    json grid = {{"x_min", g.x_min()}, {"x_max", g.x_max()}, {"n", g.size()}};
    if (g.strike_index()) grid["strike_index"] = *g.strike_index();
    return {{"model", model_to_json(sol.model)},
            {"grid", grid},
            {"boundaries", sol.boundaries},
            {"n_iter", sol.n_iter},
            {"deltas", sol.sup_norm_deltas},
            {"diagnostics", diagnostics_to_json(sol.diagnostics)},
            {"v", values_file}};
}

Solution solution_from_json(const json& j, const std::string& csv_path) {
    try {
        MarketModel model = model_from_json(j.at("model"));
        auto [xs, vs] = read_csv(csv_path);
        if (xs.size() != j.at("grid").at("n").get<std::size_t>()) {
            throw ConfigError("value file has " + std::to_string(xs.size()) + " rows, solution expects " +
                              std::to_string(j.at("grid").at("n").get<std::size_t>()));
        }
        auto grid = std::make_shared<const Grid>(Grid::from_nodes(std::move(xs), model.strike));
        auto pair = make_pair(model, *grid);
        GridFunction v(grid, std::move(vs), Tails{model.strike, pair});

        Diagnostics d;
        const auto& dj = j.at("diagnostics");
        d.smooth_fit_gap = dj.at("smooth_fit_gap").get<double>();
        d.max_pde_residual_continuation = dj.at("max_pde_residual_continuation").get<double>();
        d.pde_residual_location = dj.at("pde_residual_location").get<double>();
        d.max_vi_violation_stopping = dj.at("max_vi_violation_stopping").get<double>();
        d.min_continuation_premium = dj.at("min_continuation_premium").get<double>();
        d.fixed_point_residual = dj.at("fixed_point_residual").get<double>();
        d.shape = shape_from_json(dj.at("shape_report"));

        return Solution{std::move(model),
                        std::move(v),
                        j.at("boundaries").get<std::vector<double>>(),
                        j.at("n_iter").get<std::size_t>(),
                        j.at("deltas").get<std::vector<double>>(),
                        d};
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed solution document: ") + e.what());
    }
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

void save_solution(const Solution& sol, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const auto base = std::filesystem::path(dir);
    write_csv(sol.v, (base / "value.csv").string());
    std::ofstream out(base / "solution.json", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (base / "solution.json").string());
    out << dump_json(solution_to_json(sol, "value.csv"));
}

Solution load_solution(const std::string& dir) {
    const auto base = std::filesystem::path(dir);
    std::ifstream in(base / "solution.json");
    if (!in) throw ConfigError("cannot open " + (base / "solution.json").string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("solution.json is not valid JSON: ") + e.what());
    }
    const auto values = j.value("v", std::string("value.csv"));
    return solution_from_json(j, (base / values).string());
}

json validation_to_json(const ValidationReport& rep, double boundary) {
    json pts = json::array();
    for (const auto& p : rep.points) {
        pts.push_back({{"x", p.x},
                       {"solver_value", p.solver_value},
                       {"mc_mean", p.estimate.mean},
                       {"std_error", p.estimate.std_error},
                       {"truncation_bound", p.estimate.truncation_bound},
                       {"tolerance", p.tolerance},
                       {"n_paths", p.estimate.n_paths},
                       {"pass", p.pass}});
    }
    return {{"boundary", boundary}, {"points", pts}, {"all_pass", rep.all_pass}};
}

}  // namespace jumpput
