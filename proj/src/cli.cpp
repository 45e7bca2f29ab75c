#include "jumpput/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "jumpput/errors.hpp"
#include "jumpput/gridfn.hpp"

namespace jumpput {

namespace {

std::string output_file(const RunConfig& cfg, const std::string& name) {
    std::filesystem::create_directories(cfg.output);
    return (std::filesystem::path(cfg.output) / name).string();
}

std::ofstream open_output(const RunConfig& cfg, const std::string& name) {
    const auto path = output_file(cfg, name);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + path);
    return f;
}

// Runs the solver; on failure prints a diagnostic and returns nullopt.
std::optional<Solution> solve_or_report(const RunConfig& cfg, std::ostream& err, SolverOptions opts) {
    try {
        return solve(cfg.model, make_grid(cfg), opts);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        err << "error: solve failed: " << e.what() << "\n";
        return std::nullopt;
    }
}

std::string num(double v) {
    std::ostringstream s;
    s << std::setprecision(10) << v;
    return s.str();
}

}  // namespace

int cmd_price(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto sol = solve_or_report(cfg, err, cfg.solver);
    if (!sol) return exit_code::solve;
    save_solution(*sol, cfg.output);
    out << "boundary " << num(sol->boundary()) << "\n";
    out << "iterations " << sol->n_iter << "\n";
    for (double s : cfg.spots) out << "spot " << num(s) << " value " << num(sol->v(s)) << "\n";
    return exit_code::ok;
}

int cmd_trace(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto sol = solve_or_report(cfg, err, cfg.solver);
    if (!sol) return exit_code::solve;
    const double k = cfg.model.strike;
    const double q = cfg.model.lambda / (cfg.model.lambda + cfg.model.alpha);
    auto f = open_output(cfg, "trace.csv");
    f << "n,l_n,sup_delta,rate_bound\n";
    std::size_t violations = 0;
    for (std::size_t n = 0; n < sol->n_iter; ++n) {
        const double bound = std::pow(q, static_cast<double>(n)) * k;
        const double delta = sol->sup_norm_deltas[n];
        if (!(delta <= bound)) {
            ++violations;
            err << "error: row " << n << ": sup_delta " << format_real(delta) << " exceeds rate bound "
                << format_real(bound) << "\n";
        }
        f << n << "," << format_real(sol->boundaries[n]) << "," << format_real(delta) << "," << format_real(bound)
          << "\n";
    }
    out << "iterations " << sol->n_iter << "\n";
    out << "boundary " << num(sol->boundary()) << "\n";
    return violations == 0 ? exit_code::ok : exit_code::trace;
}

int cmd_validate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    if (!cfg.mc) throw ConfigError("missing required key \"mc\" for validate");
    auto points = cfg.mc_points.empty() ? cfg.spots : cfg.mc_points;
    if (points.empty()) throw ConfigError("missing required key \"mc.points\" (or --spot) for validate");
    const auto sol = solve_or_report(cfg, err, cfg.solver);
    if (!sol) return exit_code::solve;
    const auto rep = validate_solution(*sol, cfg.model, points, *cfg.mc);
    auto f = open_output(cfg, "validate.json");
    f << dump_json(validation_to_json(rep, sol->boundary()));
    for (const auto& p : rep.points) {
        out << "x " << num(p.x) << " solver " << num(p.solver_value) << " mc " << num(p.estimate.mean) << " se "
            << num(p.estimate.std_error) << (p.pass ? " pass" : " FAIL") << "\n";
    }
    return rep.all_pass ? exit_code::ok : exit_code::validation;
}

int cmd_sweep(const RunConfig& cfg, const std::string& param, const std::vector<double>& values, std::ostream& out,
              std::ostream& err) {
    if (param != "lambda" && param != "sigma" && param != "strike" && param != "alpha") {
        throw ConfigError("unknown sweep parameter \"" + param + "\" (expected lambda, sigma, strike or alpha)");
    }
    if (values.empty()) throw ConfigError("sweep needs at least one value");
    const double spot = cfg.spots.empty() ? cfg.model.strike : cfg.spots.front();

    std::vector<std::string> rows;
    for (double value : values) {
        RunConfig run = cfg;
        double at = spot;
        try {
            if (param == "lambda") {
                run.model.lambda = value;
            } else if (param == "alpha") {
                run.model.alpha = value;
            } else if (param == "sigma") {
                if (cfg.model.vol.kind() == VolatilityModel::Kind::Constant) {
                    run.model.vol = VolatilityModel::constant(value);
                } else if (cfg.model.vol.kind() == VolatilityModel::Kind::Cev) {
                    run.model.vol = VolatilityModel::cev(value, cfg.model.vol.gamma());
                } else {
                    throw ConfigError("sigma sweep is not defined for a volatility table");
                }
            } else {
                // Keep the grid and the spot at the same moneyness.
                const double scale = value / cfg.model.strike;
                run.model.strike = value;
                run.grid.x_min *= scale;
                run.grid.x_max *= scale;
                at = spot * scale;
            }
            run.model.validate();
        } catch (const ConfigError&) {
            throw;
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("invalid sweep value: ") + e.what());
        }
        const auto sol = solve_or_report(run, err, run.solver);
        if (!sol) return exit_code::solve;
        rows.push_back(format_real(value) + "," + format_real(sol->boundary()) + "," + format_real(sol->v(at)));
        out << param << " " << num(value) << " boundary " << num(sol->boundary()) << " v " << num(sol->v(at)) << "\n";
    }
    auto f = open_output(cfg, "sweep.csv");
    f << "value,boundary,v_at_spot\n";
    for (const auto& r : rows) f << r << "\n";
    return exit_code::ok;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Perpetual American put under jump diffusion"};
    app.require_subcommand(1);
    std::string config_path;
    std::string out_dir;
    std::vector<double> spots;
    std::string param;
    std::vector<std::string> raw_values;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON model config")->required();
        cmd->add_option("--out", out_dir, "output directory (overrides config)");
        cmd->add_option("--spot", spots, "spot price; repeatable")->take_all()->allow_extra_args(false);
    };
    auto* price = app.add_subcommand("price", "solve and write value.csv, solution.json");
    auto* trace = app.add_subcommand("trace", "write the convergence trace");
    auto* validate = app.add_subcommand("validate", "compare with Monte Carlo");
    auto* sweep = app.add_subcommand("sweep", "solve over a parameter list");
    for (auto* c : {price, trace, validate, sweep}) add_common(c);
    sweep->add_option("--param", param, "lambda, sigma, strike or alpha")->required();
    sweep->add_option("--values", raw_values, "comma-separated values")->required()->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_code::ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_code::ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::config;
    }

    try {
        RunConfig cfg = load_config(config_path);
        if (!out_dir.empty()) cfg.output = out_dir;
        if (!spots.empty()) cfg.spots = spots;
        for (double s : cfg.spots) {
            if (!(s > 0.0)) throw ConfigError("spot prices must be positive");
        }
        if (price->parsed()) return cmd_price(cfg, out, err);
        if (trace->parsed()) return cmd_trace(cfg, out, err);
        if (validate->parsed()) return cmd_validate(cfg, out, err);
        std::vector<double> values;
        for (const auto& s : raw_values) {
            if (s.empty()) continue;
            try {
                std::size_t used = 0;
                values.push_back(std::stod(s, &used));
                if (used != s.size()) throw std::invalid_argument(s);
            } catch (const std::exception&) {
                throw ConfigError("sweep value \"" + s + "\" is not a number");
            }
        }
        return cmd_sweep(cfg, param, values, out, err);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::config;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::config;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::failure;
    }
}

}  // namespace jumpput
