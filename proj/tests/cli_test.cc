#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "jumpput/cli.hpp"
#include "jumpput/io.hpp"

#ifndef JUMPPUT_CLI_PATH
#error "JUMPPUT_CLI_PATH must point at the jumpput executable"
#endif

using namespace jumpput;
namespace fs = std::filesystem;

namespace {

struct RunResult {
    int code;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class CliTest : public ::testing::Test {
protected:
    fs::path dir;

    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir = fs::temp_directory_path() / (std::string("jumpput_cli_") + info->name());
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    std::string write_config(const nlohmann::json& j, const std::string& name = "config.json") {
        const auto p = dir / name;
        std::ofstream(p) << j.dump(2);
        return p.string();
    }

    RunResult run(const std::string& args) {
        const auto out = dir / "stdout.txt";
        const auto err = dir / "stderr.txt";
        const std::string cmd = std::string(JUMPPUT_CLI_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
        const int status = std::system(cmd.c_str());
        return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
    }

    static nlohmann::json gbm_config(double lambda = 0.0) {
        nlohmann::json model = {{"volatility", {{"kind", "constant"}, {"sigma", 0.2}}},
                                {"r", 0.05},
                                {"lambda", lambda},
                                {"strike", 1.0}};
        if (lambda > 0) model["jumps"] = {{"kind", "lognormal"}, {"meanlog", -0.08}, {"sdlog", 0.4}};
        return {{"model", model}, {"grid", {{"x_min", 1e-3}, {"x_max", 1e2}, {"n", 2000}}}};
    }
};

std::vector<std::vector<std::string>> read_rows(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) cells.push_back(c);
        rows.push_back(cells);
    }
    return rows;
}

double printed(const std::string& out, const std::string& key) {
    const auto pos = out.find(key + " ");
    if (pos == std::string::npos) return NAN;
    return std::stod(out.substr(pos + key.size() + 1));
}

}  // namespace

TEST_F(CliTest, PriceClosedFormConfig) {
    const auto cfg = write_config(gbm_config());
    const auto r = run("price --config " + cfg + " --out " + (dir / "out").string() + " --spot 0.1 --spot 1");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(printed(r.out, "boundary"), 0.714286, 1e-3);
    EXPECT_NE(r.out.find("spot 0.1 value 0.9\n"), std::string::npos) << r.out;
    EXPECT_NEAR(printed(r.out, "spot 1 value"), 0.1232, 1e-4);
    EXPECT_TRUE(fs::exists(dir / "out" / "value.csv"));
    EXPECT_TRUE(fs::exists(dir / "out" / "solution.json"));
    const auto rows = read_rows(dir / "out" / "value.csv");
    ASSERT_EQ(rows.size(), 2001u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"x", "value"}));
}

TEST_F(CliTest, MissingStrikeIsConfigError) {
    auto j = gbm_config();
    j["model"].erase("strike");
    const auto r = run("price --config " + write_config(j));
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("strike"), std::string::npos) << r.err;
}

TEST_F(CliTest, UsageErrors) {
    EXPECT_EQ(run("").code, 2);
    EXPECT_EQ(run("frobnicate --config x.json").code, 2);
    EXPECT_EQ(run("price").code, 2);
    EXPECT_EQ(run("price --config " + (dir / "missing.json").string()).code, 2);
    std::ofstream(dir / "bad.json") << "{not json";
    EXPECT_EQ(run("price --config " + (dir / "bad.json").string()).code, 2);
    auto j = gbm_config();
    j["solver"] = {{"tolerances", {{"fit", 0.0}}}};
    EXPECT_EQ(run("price --config " + write_config(j)).code, 2);
}

TEST_F(CliTest, SolveFailureExitCode) {
    auto j = gbm_config();
    j["grid"] = {{"x_min", 0.08}, {"x_max", 100.0}, {"n", 1000}};
    j["output"] = (dir / "out").string();
    const auto r = run("price --config " + write_config(j));
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("solve failed"), std::string::npos);
}

TEST_F(CliTest, TraceWithoutJumpsHasOneRow) {
    auto j = gbm_config();
    j["output"] = (dir / "out").string();
    const auto r = run("trace --config " + write_config(j));
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = read_rows(dir / "out" / "trace.csv");
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"n", "l_n", "sup_delta", "rate_bound"}));
    EXPECT_EQ(std::stod(rows[1][0]), 0.0);
    EXPECT_NEAR(std::stod(rows[1][1]), 5.0 / 7.0, 1e-3);
    EXPECT_EQ(std::stod(rows[1][3]), 1.0);
}

TEST_F(CliTest, TraceRateBoundAndMonotoneBoundaries) {
    auto j = gbm_config(0.1);
    j["output"] = (dir / "out").string();
    const auto r = run("trace --config " + write_config(j));
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = read_rows(dir / "out" / "trace.csv");
    ASSERT_GT(rows.size(), 3u);
    double prev_l = 1.0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double n = std::stod(rows[i][0]);
        EXPECT_NEAR(std::stod(rows[i][3]), std::pow(2.0 / 3.0, n), 1e-15);
        EXPECT_LE(std::stod(rows[i][2]), std::stod(rows[i][3]));
        const double l = std::stod(rows[i][1]);
        EXPECT_LE(l, prev_l + 1e-10);
        prev_l = l;
    }
}

TEST_F(CliTest, ValidateClosedFormPasses) {
    auto j = gbm_config();
    j["mc"] = {{"n_paths", 100000}, {"dt", 1e-3}, {"seed", 11}, {"points", {0.5, 1.0, 2.0}}};
    j["output"] = (dir / "out").string();
    const auto r = run("validate --config " + write_config(j));
    ASSERT_EQ(r.code, 0) << r.out << r.err;
    const auto doc = nlohmann::json::parse(slurp(dir / "out" / "validate.json"));
    EXPECT_TRUE(doc["all_pass"].get<bool>());
    ASSERT_EQ(doc["points"].size(), 3u);
    for (const auto& p : doc["points"]) {
        for (const char* key : {"x", "solver_value", "mc_mean", "std_error", "pass"}) EXPECT_TRUE(p.contains(key));
    }
    // 0.5 lies in the stopping region: both values are exactly K - x.
    EXPECT_EQ(doc["points"][0]["mc_mean"].get<double>(), 0.5);
    EXPECT_EQ(doc["points"][0]["solver_value"].get<double>(), 0.5);
}

TEST_F(CliTest, ValidateZeroToleranceFails) {
    auto j = gbm_config();
    j["mc"] = {{"n_paths", 2000}, {"seed", 3}, {"n_sigma", 0.0}, {"allowance", 1e-12}, {"points", {0.3, 1.0}}};
    j["output"] = (dir / "out").string();
    const auto r = run("validate --config " + write_config(j));
    EXPECT_EQ(r.code, 5);
    const auto doc = nlohmann::json::parse(slurp(dir / "out" / "validate.json"));
    EXPECT_TRUE(doc["points"][0]["pass"].get<bool>());
    EXPECT_FALSE(doc["points"][1]["pass"].get<bool>());
}

TEST_F(CliTest, ValidateNeedsMcBlock) {
    const auto r = run("validate --config " + write_config(gbm_config()) + " --spot 1");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("mc"), std::string::npos);
}

TEST_F(CliTest, SweepLambda) {
    auto j = gbm_config();
    j["model"]["jumps"] = {{"kind", "lognormal"}, {"meanlog", -0.08}, {"sdlog", 0.4}};
    j["output"] = (dir / "out").string();
    const auto r = run("sweep --config " + write_config(j) + " --param lambda --values 0,0.05,0.1");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = read_rows(dir / "out" / "sweep.csv");
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"value", "boundary", "v_at_spot"}));
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double l = std::stod(rows[i][1]);
        EXPECT_GT(l, 0.0);
        EXPECT_LT(l, 1.0);
    }
}

TEST_F(CliTest, SweepStrikeIsHomogeneous) {
    auto j = gbm_config(0.1);
    j["output"] = (dir / "out").string();
    j["spots"] = {0.9};
    const auto r = run("sweep --config " + write_config(j) + " --param strike --values 1,2");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = read_rows(dir / "out" / "sweep.csv");
    ASSERT_EQ(rows.size(), 3u);
    // Equal up to the absolute stopping tolerance, which does not scale with K.
    EXPECT_NEAR(std::stod(rows[2][1]), 2.0 * std::stod(rows[1][1]), 1e-5);
    EXPECT_NEAR(std::stod(rows[2][2]), 2.0 * std::stod(rows[1][2]), 1e-5);
}

TEST_F(CliTest, SweepErrors) {
    const auto cfg = write_config(gbm_config());
    EXPECT_EQ(run("sweep --config " + cfg + " --param gamma --values 1,2").code, 2);
    EXPECT_EQ(run("sweep --config " + cfg + " --param lambda --values \"\"").code, 2);
    EXPECT_EQ(run("sweep --config " + cfg + " --param lambda").code, 2);
    EXPECT_EQ(run("sweep --config " + cfg + " --param sigma --values 0.2,abc").code, 2);
    EXPECT_EQ(run("sweep --config " + cfg + " --param sigma --values -0.2").code, 2);
}

TEST_F(CliTest, SolutionRoundTripIsByteIdentical) {
    auto j = gbm_config(0.1);
    j["output"] = (dir / "a").string();
    ASSERT_EQ(run("price --config " + write_config(j)).code, 0);
    const auto loaded = load_solution((dir / "a").string());
    save_solution(loaded, (dir / "b").string());
    EXPECT_EQ(slurp(dir / "a" / "solution.json"), slurp(dir / "b" / "solution.json"));
    EXPECT_EQ(slurp(dir / "a" / "value.csv"), slurp(dir / "b" / "value.csv"));
    EXPECT_EQ(loaded.n_iter, loaded.sup_norm_deltas.size());
    EXPECT_NEAR(loaded.v(1.0), loaded.v[*loaded.v.grid().strike_index()], 0.0);
}

TEST(ConfigParsing, DefaultsAndOverrides) {
    const auto j = nlohmann::json::parse(R"({
        "model": {"volatility": {"kind": "cev", "sigma": 0.2, "gamma": 0.5}, "r": 0.04,
                  "lambda": 0.2, "jumps": {"kind": "discrete", "atoms": [{"z": 0.8, "p": 0.5}, {"z": 1.1, "p": 0.5}]},
                  "strike": 2.0},
        "solver": {"epsilon": 1e-5, "tolerances": {"fit": 2e-3}},
        "mc": {"n_paths": 5000, "seed": 9},
        "spots": [1.0, 2.0]
    })");
    const auto cfg = parse_config(j);
    EXPECT_EQ(cfg.model.alpha, 0.04);
    EXPECT_EQ(cfg.model.strike, 2.0);
    EXPECT_EQ(cfg.grid.x_min, 2e-3);
    EXPECT_EQ(cfg.grid.x_max, 200.0);
    EXPECT_EQ(cfg.grid.n, 2000u);
    EXPECT_EQ(cfg.solver.epsilon, 1e-5);
    EXPECT_EQ(cfg.solver.tol.fit, 2e-3);
    EXPECT_EQ(cfg.solver.tol.pde, 1e-4);
    ASSERT_TRUE(cfg.mc.has_value());
    EXPECT_EQ(cfg.mc->n_paths, 5000u);
    EXPECT_EQ(cfg.mc->horizon(cfg.model), 200.0 / 0.04);
    EXPECT_EQ(cfg.spots.size(), 2u);
    EXPECT_EQ(model_from_json(model_to_json(cfg.model)).vol.gamma(), 0.5);
}

TEST(ConfigParsing, ErrorsNameTheKey) {
    auto base = nlohmann::json::parse(R"({"model": {"volatility": {"kind": "constant", "sigma": 0.2},
                                          "r": 0.05, "lambda": 0.1, "strike": 1.0}})");
    try {
        parse_config(base);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("model.jumps"), std::string::npos);
    }
    base["model"]["lambda"] = "fast";
    try {
        parse_config(base);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("model.lambda"), std::string::npos);
    }
    base["model"]["lambda"] = 0.0;
    base["model"]["volatility"]["kind"] = "heston";
    EXPECT_THROW(parse_config(base), ConfigError);
}
