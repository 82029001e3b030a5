#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "cli.hpp"

namespace fs = std::filesystem;
using cvbell::cli::run;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result invoke(const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string value_of(const std::string& text, const std::string& key) {
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.rfind(key + "=", 0) == 0) return line.substr(key.size() + 1);
        if (line.rfind(key + ",", 0) == 0) return line.substr(key.size() + 1);
    }
    return {};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path temp_path(const std::string& name) {
    return fs::temp_directory_path() / ("cvbell_test_" + std::to_string(::getpid()) + "_" + name);
}

}  // namespace

TEST(Cli, AnalyticLowGain) {
    const auto r = invoke({"analytic", "--source", "down-converter", "--gain", "1.000001", "--angles", "standard"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(std::stod(value_of(r.out, "B")), 2.8284, 1e-3);
    EXPECT_EQ(value_of(r.out, "violation"), "yes");
    EXPECT_EQ(invoke({"analytic", "--gain", "1.000001", "--angles", "paper"}).out, r.out);
}

TEST(Cli, AnalyticUnitGainIsDegenerate) {
    const auto r = invoke({"analytic", "--gain", "1"});
    EXPECT_EQ(r.code, cvbell::cli::kExitDegenerate);
    EXPECT_NE(r.err.find("degenerate"), std::string::npos);
}

TEST(Cli, AnalyticSourcesAgree) {
    const auto a = invoke({"analytic", "--source", "four-opa", "--gain", "1.1"});
    const auto b = invoke({"analytic", "--source", "down-converter", "--gain", "1.1"});
    ASSERT_EQ(a.code, 0);
    ASSERT_EQ(b.code, 0);
    EXPECT_NEAR(std::stod(value_of(a.out, "B")), std::stod(value_of(b.out, "B")), 1e-9);
}

TEST(Cli, AnalyticBySqueezingAndCustomAngles) {
    const auto r = invoke({"analytic", "--squeezing", "10", "--angles", "0.1,0.2,0.3,0"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(value_of(r.out, "theta_a"), "0.1");
    EXPECT_NEAR(std::stod(value_of(r.out, "gain")), 1.0 + 1.0 / 360.0, 1e-8);
}

TEST(Cli, ConfigErrors) {
    EXPECT_EQ(invoke({"analytic"}).code, cvbell::cli::kExitConfig);
    EXPECT_EQ(invoke({"analytic", "--gain", "1.1", "--squeezing", "10"}).code, cvbell::cli::kExitConfig);
    EXPECT_EQ(invoke({"analytic", "--gain", "0.5"}).code, cvbell::cli::kExitConfig);
    EXPECT_EQ(invoke({"analytic", "--gain", "1.1", "--bogus"}).code, cvbell::cli::kExitConfig);
    EXPECT_EQ(invoke({"analytic", "--gain", "1.1", "--angles", "1,2"}).code, cvbell::cli::kExitConfig);
    EXPECT_EQ(invoke({"analytic", "--gain", "1.1", "--source", "laser"}).code, cvbell::cli::kExitConfig);
    EXPECT_EQ(invoke({"analytic", "--gain", "1.1", "--dark-variance", "-1"}).code, cvbell::cli::kExitConfig);
    EXPECT_EQ(invoke({"analytic", "--gain", "1.1", "--windows", "10"}).code, cvbell::cli::kExitConfig);
    EXPECT_EQ(invoke({}).code, cvbell::cli::kExitConfig);
    EXPECT_EQ(invoke({"sweep", "--s-min", "0"}).code, cvbell::cli::kExitConfig);
    EXPECT_EQ(invoke({"oracle", "--chi", "1.5"}).code, cvbell::cli::kExitConfig);
    EXPECT_EQ(invoke({"simulate", "--gain", "1.1", "--p-dark", "0"}).code, cvbell::cli::kExitConfig);
    EXPECT_EQ(invoke({"simulate", "--gain", "1.1", "--n-lo", "0"}).code, cvbell::cli::kExitConfig);
}

TEST(Cli, OptimizeLowGain) {
    const auto r = invoke({"optimize", "--gain", "1.000001"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(std::stod(value_of(r.out, "B_max")), 2.8284, 1e-3);
    EXPECT_EQ(value_of(r.out, "theta_b_prime"), "0");
}

TEST(Cli, SweepToFileIsReproducible) {
    const auto p1 = temp_path("sweep1.csv");
    const auto p2 = temp_path("sweep2.csv");
    const auto a = invoke({"sweep", "--steps", "5", "--output", p1.string()});
    const auto b = invoke({"sweep", "--steps", "5", "--output", p2.string()});
    ASSERT_EQ(a.code, 0) << a.err;
    ASSERT_EQ(b.code, 0);
    const auto text = slurp(p1);
    EXPECT_EQ(text, slurp(p2));
    EXPECT_EQ(text.substr(0, text.find('\n')),
              "percent_squeezing,gain,b_max,theta_a,theta_a_prime,theta_b,theta_b_prime");
    EXPECT_EQ(value_of(a.out, "monotone_non_increasing"), "yes");
    EXPECT_NE(value_of(a.out, "crossing_percent_squeezing"), "none");
    fs::remove(p1);
    fs::remove(p2);
}

TEST(Cli, SweepFixedAnglesColumn) {
    const auto r = invoke({"sweep", "--steps", "3", "--fixed-angles"});
    ASSERT_EQ(r.code, 0);
    EXPECT_NE(r.out.find(",b_fixed_angles\n"), std::string::npos);
}

TEST(Cli, SimulateReportsBAndDataset) {
    const auto ds = temp_path("dataset.csv");
    const auto r = invoke({"simulate", "--gain", "1.3", "--windows", "20000", "--seed", "3", "--dataset", ds.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "quantity,value,std_error,n_samples");
    EXPECT_FALSE(value_of(r.out, "B").empty());
    EXPECT_FALSE(value_of(r.out, "B_analytic").empty());
    const auto text = slurp(ds);
    EXPECT_EQ(text.substr(0, text.find('\n')), "window_id,site,angle,choice,outcome_plus,outcome_minus");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 40001);
    fs::remove(ds);
}

TEST(Cli, SimulateIsByteIdentical) {
    const std::vector<std::string> args{"simulate", "--gain", "1.3", "--windows", "20000", "--seed", "9"};
    const auto a = invoke(args);
    const auto b = invoke(args);
    ASSERT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
}

TEST(Cli, DarkPortGate) {
    const auto r = invoke({"simulate", "--gain", "1.1", "--windows", "2000", "--n-dark", "1000", "--n-lo", "10000"});
    EXPECT_EQ(r.code, cvbell::cli::kExitDarkPort);
    EXPECT_TRUE(value_of(r.out, "B").empty());
    EXPECT_FALSE(value_of(r.out, "dark_ratio").empty());
    EXPECT_NE(r.err.find("dark-port"), std::string::npos);
}

TEST(Cli, SimulateVacuumIsDegenerateOrInsufficient) {
    const auto r = invoke({"simulate", "--gain", "1.1", "--windows", "10"});
    EXPECT_EQ(r.code, cvbell::cli::kExitDegenerate);
}

TEST(Cli, Oracle) {
    const auto r = invoke({"oracle", "--chi", "0.01"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(std::stod(value_of(r.out, "B")), 2.8284, 2e-3);
    EXPECT_EQ(invoke({"oracle", "--chi", "0"}).code, cvbell::cli::kExitDegenerate);
}

TEST(Cli, ConfigFileWithFlagOverride) {
    const auto cfg = temp_path("run.ini");
    {
        std::ofstream f(cfg);
        f << "[analytic]\ngain = 2\nexcess-noise = 1\n";
    }
    const auto from_file = invoke({"--config", cfg.string(), "analytic"});
    ASSERT_EQ(from_file.code, 0) << from_file.err;
    EXPECT_EQ(value_of(from_file.out, "gain"), "2");
    EXPECT_EQ(value_of(from_file.out, "excess_bright_noise"), "1");
    const auto overridden = invoke({"--config", cfg.string(), "analytic", "--gain", "1.5"});
    ASSERT_EQ(overridden.code, 0) << overridden.err;
    EXPECT_EQ(value_of(overridden.out, "gain"), "1.5");
    fs::remove(cfg);
}
