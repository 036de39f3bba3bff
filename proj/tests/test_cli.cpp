#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "snlab/cli.hpp"

using namespace snlab;

namespace {

struct Invocation {
    int code = -1;
    std::string out;
    std::string err;
    nlohmann::json doc() const { return nlohmann::json::parse(out); }
};

Invocation run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    Invocation r;
    r.code = run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("snlab_cli_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace

TEST(Cli, CategoryShow) {
    const Invocation r = run({"category", "show", "ising"});
    ASSERT_EQ(r.code, kExitPass) << r.err;
    const auto doc = r.doc();
    EXPECT_NEAR(doc["D"].get<double>(), 2.0, 1e-12);
    EXPECT_EQ(doc["rank"], 3);
    EXPECT_EQ(doc["config"]["category"], "ising");
}

TEST(Cli, CategoryValidate) {
    const Invocation r = run({"category", "validate", "builtin:fibonacci"});
    EXPECT_EQ(r.code, kExitPass) << r.err;
    EXPECT_TRUE(r.doc()["pass"].get<bool>());
}

TEST(Cli, CategoryConvertRoundTrips) {
    const auto dir = temp_dir("convert");
    const std::string path = (dir / "fib.json").string();
    ASSERT_EQ(run({"category", "convert", "fibonacci", "--out", path}).code, kExitPass);
    const Invocation again = run({"category", "validate", path});
    EXPECT_EQ(again.code, kExitPass) << again.err;
}

TEST(Cli, CorruptCategoryIsIoError) {
    const auto dir = temp_dir("corrupt");
    const std::string path = (dir / "bad.json").string();
    std::ofstream(path) << "{ \"labels\": [";
    const Invocation r = run({"category", "validate", path});
    EXPECT_EQ(r.code, kExitIo);
    EXPECT_FALSE(r.err.empty());
}

TEST(Cli, ParseErrorIsIoError) {
    EXPECT_EQ(run({"check", "bogus"}).code, kExitIo);
    EXPECT_EQ(run({"check", "ops", "--lx", "two"}).code, kExitIo);
}

TEST(Cli, InvalidConfigFailsCheck) {
    const Invocation r = run({"check", "ops", "--tol-alg", "-1"});
    EXPECT_EQ(r.code, kExitCheckFailed);
    EXPECT_TRUE(r.doc().contains("error"));
}

TEST(Cli, BasisCapExceeded) {
    const Invocation r = run({"check", "ops", "--category", "ising", "--lx", "3", "--ly", "3", "--basis-cap", "100"});
    EXPECT_EQ(r.code, kExitCap);
    EXPECT_EQ(r.doc()["exit_code"], kExitCap);
}

TEST(Cli, GroundSpaceDegeneracy) {
    const auto dir = temp_dir("gs");
    for (const auto& [name, topo, want] : std::vector<std::tuple<std::string, std::string, int>>{
             {"vec_z2", "torus", 4}, {"fibonacci", "torus", 4}, {"fibonacci", "open", 1}}) {
        const Invocation r = run({"gs", "--category", name, "--topology", topo, "--state-dir", dir.string()});
        ASSERT_EQ(r.code, kExitPass) << r.err;
        const auto doc = r.doc();
        EXPECT_EQ(doc["degeneracy"], want) << name << " " << topo;
        for (const auto& f : doc["files"]) EXPECT_TRUE(std::filesystem::exists(f.get<std::string>()));
    }
}

TEST(Cli, CheckOpsPasses) {
    const Invocation r = run({"check", "ops", "--category", "semion"});
    EXPECT_EQ(r.code, kExitPass) << r.err;
}

TEST(Cli, TeeUsesStoredState) {
    const auto dir = temp_dir("tee");
    ASSERT_EQ(run({"gs", "--category", "fibonacci", "--lx", "3", "--ly", "3", "--state-dir", dir.string()}).code,
              kExitPass);
    const std::string state = (dir / "gs_fibonacci_torus_3x3_0.snstate").string();
    const Invocation r = run({"check", "tee", "--category", "fibonacci", "--lx", "3", "--ly", "3", "--state", state});
    ASSERT_EQ(r.code, kExitPass) << r.err;
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    EXPECT_NEAR(r.doc()["gamma"].get<double>(), std::log(1.0 + phi * phi), 1e-7);
    EXPECT_EQ(r.doc()["state"]["source"], "file");
}

TEST(Cli, ConvexAnnulus) {
    const Invocation r = run({"check", "convex", "--region", "annulus", "--lx", "3", "--ly", "3"});
    ASSERT_EQ(r.code, kExitPass) << r.err;
    EXPECT_EQ(r.doc()["count"], 4);
}

TEST(Cli, AxiomsWithoutPlacementFail) {
    EXPECT_EQ(run({"check", "axioms", "--lx", "2", "--ly", "3"}).code, kExitCheckFailed);
}

TEST(Cli, CsvReport) {
    const Invocation r = run({"category", "show", "fibonacci", "--format", "csv"});
    ASSERT_EQ(r.code, kExitPass);
    EXPECT_EQ(r.out.rfind("label,qdim,kappa,dual\n", 0), 0u);
}

TEST(Cli, ReportToFile) {
    const auto dir = temp_dir("out");
    const std::string path = (dir / "ops.json").string();
    const Invocation r = run({"check", "ops", "--out", path});
    ASSERT_EQ(r.code, kExitPass);
    std::ifstream in(path);
    const auto doc = nlohmann::json::parse(in);
    EXPECT_EQ(doc["command"], "check ops");
}

TEST(Cli, Deterministic) {
    for (const auto& args : std::vector<std::vector<std::string>>{
             {"check", "ltqo", "--topology", "open", "--lx", "3", "--ly", "3", "--seed", "11"},
             {"check", "convex", "--region", "disk", "--topology", "open", "--lx", "3", "--ly", "3", "--seed", "5"}}) {
        const Invocation a = run(args), b = run(args);
        ASSERT_EQ(a.code, kExitPass) << a.err;
        EXPECT_EQ(a.out, b.out);
    }
}
