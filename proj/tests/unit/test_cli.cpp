#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "betafit/solver.hpp"
#include "cli.hpp"
#include "fit_io.hpp"
#include "json.hpp"

using namespace betafit;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "betafit");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
  protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("betafit_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                            "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string file(const std::string& name, const std::string& content) const {
        const auto p = dir_ / name;
        std::ofstream(p, std::ios::binary) << content;
        return p.string();
    }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }
    static std::string slurp(const std::string& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        return s.str();
    }

    fs::path dir_;
};

const char* kPath = "0 1\n1 2\n2 3\n";

}  // namespace

TEST_F(Cli, VersionAndUsage) {
    auto v = run({"--version"});
    EXPECT_EQ(v.code, 0);
    EXPECT_NE(v.out.find("betafit 0.1.0"), std::string::npos);
    EXPECT_EQ(run({}).code, cli::bad_input);
    EXPECT_EQ(run({"frobnicate"}).code, cli::bad_input);
    EXPECT_EQ(run({"--help"}).code, 0);
}

TEST_F(Cli, IngestionWarningsGoToErrorStream) {
    const auto in = file("dups.txt", "0 1\n1 0\n1 1\n1 2\n2 3\n");
    auto r = run({"fit", in, "--lambda", "0.5"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.err.find("dropped 1 self-loop(s) and 1 duplicate edge(s)"), std::string::npos);
}

TEST_F(Cli, FitPathGraph) {
    const auto in = file("path.txt", kPath);
    auto r = run({"fit", in, "--lambda", "0.5"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["lambda"].get<double>(), 0.5);
    EXPECT_TRUE(j["converged"].get<bool>());
    ASSERT_EQ(j["classes"].size(), 2u);
    EXPECT_EQ(j["classes"][0]["degree"].get<int>(), 1);
    EXPECT_EQ(j["classes"][0]["count"].get<int>(), 2);
    ASSERT_EQ(j["nodes"].size(), 4u);
    DegreeSequence d;
    d.degrees = {1, 2, 2, 1};
    FitResult f = fit(build_histogram(d), Penalty(0.5));
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(j["nodes"][i]["label"].get<std::string>(), std::to_string(i));
        EXPECT_EQ(j["nodes"][i]["beta"].get<double>(), f.beta_hat[i]);
    }
}

TEST_F(Cli, FitOptionsAndOutputs) {
    const auto in = file("path.txt", kPath);
    const auto out = path("fit.json");
    auto r = run({"fit", in, "--lambda", "0.5", "--classes-only", "--out", out});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(r.out.empty());
    auto j = nlohmann::json::parse(slurp(out));
    EXPECT_FALSE(j.contains("nodes"));

    r = run({"fit", in, "--lambda", "0.5", "--method", "gradient"});
    ASSERT_EQ(r.code, 0) << r.err;
    r = run({"fit", in, "--lambda", "0.5", "--bounds", "-0.1,0.1"});
    ASSERT_EQ(r.code, 0) << r.err;
    for (const auto& c : nlohmann::json::parse(r.out)["classes"]) EXPECT_LE(std::abs(c["delta"].get<double>()), 0.1);

    const auto deg = file("deg.txt", "a 1\nb 2\nc 2\nd 1\n");
    r = run({"fit", deg, "--degrees", "--lambda", "0.5"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(nlohmann::json::parse(r.out)["nodes"][0]["label"].get<std::string>(), "a");
}

TEST_F(Cli, ExitCodes) {
    const auto in = file("path.txt", kPath);
    auto r = run({"fit", in, "--lambda", "-1"});
    EXPECT_EQ(r.code, cli::bad_input);
    EXPECT_TRUE(r.out.empty());
    EXPECT_FALSE(r.err.empty());
    EXPECT_EQ(run({"fit", in, "--method", "sgd"}).code, cli::bad_input);
    EXPECT_EQ(run({"fit", file("bad.txt", "0 1\n2\n")}).code, cli::bad_input);
    EXPECT_EQ(run({"fit", path("missing.txt")}).code, cli::io_error);
    EXPECT_EQ(run({"fit", file("k3.txt", "0 1\n0 2\n1 2\n")}).code, cli::degenerate);
    EXPECT_EQ(run({"fit", in, "--max-iters", "1", "--tol", "1e-14"}).code, cli::not_converged);
    EXPECT_EQ(run({"select", file("d.txt", "1\n1\n"), "--degrees"}).code, cli::selection_failed);
    const auto star = file("star.txt", "0 1\n0 2\n0 3\n0 4\n0 5\n");
    EXPECT_EQ(run({"select", star, "--lambda", "1"}).code, cli::selection_failed);
    EXPECT_EQ(run({"tune", in, "--grid", "1,0.5", "--out", path("t.csv")}).code, cli::bad_input);
    EXPECT_EQ(run({"tune", file("iso.txt", "1 2\n2 3\n"), "--num-nodes", "4", "--grid", "0", "--tol", "1e-300",
                   "--out", path("t.csv")})
                  .code,
              cli::tune_failed);
    const auto sat = file("sat.json", R"({"lambda":0,"converged":true,"classes":[{"degree":1,"delta":40}]})");
    EXPECT_EQ(run({"gof", file("pair.txt", "0 1\n2 3\n"), "--fit", sat}).code, cli::normalization_failed);
    const auto scn = file("all_fail.txt", "setting=explicit\nbeta=40,40,40,40\nlambda=1\nreplicates=3\n");
    EXPECT_EQ(run({"mc", "--scenario", scn}).code, cli::monte_carlo_failed);
}

TEST_F(Cli, JsonRoundTrip) {
    const auto in = file("g.txt", "0 1\n1 2\n2 3\n3 4\n4 0\n0 2\n5 1\n6 5\n");
    const auto out = path("fit.json");
    ASSERT_EQ(run({"fit", in, "--lambda", "0.3", "--out", out}).code, 0);
    std::ifstream js(out);
    auto stored = cli::read_fit_json(js);
    std::ifstream gin(in);
    auto g = read_edge_list(gin);
    auto d = degrees_of(g);
    FitResult f = fit(build_histogram(d), Penalty(0.3));
    ASSERT_EQ(stored.node_beta.size(), f.beta_hat.size());
    for (std::size_t i = 0; i < f.beta_hat.size(); ++i) EXPECT_EQ(stored.node_beta[i], f.beta_hat[i]);
    for (std::size_t k = 0; k < stored.class_delta.size(); ++k)
        EXPECT_EQ(stored.class_delta[k], f.delta_hat[static_cast<Eigen::Index>(k)]);
    EXPECT_EQ(cli::align_fit(stored, d), f.beta_hat);
    stored.labels.clear();
    EXPECT_EQ(cli::align_fit(stored, d), f.beta_hat);
    EXPECT_EQ(cli::format_double(0.1), "0.10000000000000001");
}

TEST_F(Cli, SimulateIsDeterministic) {
    auto a = run({"simulate", "--setting", "i", "--n", "400", "--seed", "7"});
    auto b = run({"simulate", "--setting", "i", "--n", "400", "--seed", "7"});
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, b.out);
    EXPECT_EQ(a.out.rfind("# n=400 setting=i seed=7\n", 0), 0u);
    EXPECT_NE(run({"simulate", "--setting", "i", "--n", "400", "--seed", "8"}).out, a.out);
    const auto out = path("g.txt");
    ASSERT_EQ(run({"simulate", "--setting", "i", "--n", "400", "--seed", "7", "--out", out}).code, 0);
    EXPECT_EQ(slurp(out), a.out);
    const auto beta = file("beta.txt", "0.1\n-0.2\n# c\n0.3\n");
    auto e = run({"simulate", "--beta-file", beta, "--seed", "3"});
    ASSERT_EQ(e.code, 0) << e.err;
    EXPECT_EQ(e.out.rfind("# n=3 setting=explicit seed=3\n", 0), 0u);
    EXPECT_EQ(run({"simulate", "--n", "10"}).code, cli::bad_input);
    EXPECT_EQ(run({"simulate", "--setting", "ix", "--n", "10"}).code, cli::bad_input);
}

TEST_F(Cli, TunePrintsBestLambda) {
    const auto in = file("g.txt", "0 1\n1 2\n2 3\n3 4\n4 0\n0 2\n5 1\n6 5\n");
    const auto csv = path("tune.csv");
    auto r = run({"tune", in, "--out", csv});
    ASSERT_EQ(r.code, 0) << r.err;
    ASSERT_FALSE(r.out.empty());
    EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 1);
    const double best = std::stod(r.out);
    auto table = slurp(csv);
    EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 14);
    EXPECT_NE(table.find(cli::format_double(best) + ","), std::string::npos);
    EXPECT_EQ(run({"tune", in, "--out", "-"}).code, cli::bad_input);
    auto single = run({"tune", in, "--grid", "0.1", "--out", csv});
    EXPECT_EQ(single.out, "0.10000000000000001\n");
    auto cold = run({"tune", in, "--mode", "cold", "--out", csv, "--threads", "2"});
    EXPECT_EQ(cold.out, r.out);
}

TEST_F(Cli, TuneDenseScenarioChoosesZero) {
    const auto g = path("dense.txt");
    ASSERT_EQ(run({"simulate", "--setting", "aic-dense", "--n", "800", "--seed", "11", "--out", g}).code, 0);
    auto r = run({"tune", g, "--out", path("tune.csv")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out, "0\n");
}

TEST_F(Cli, WabsThreeRows) {
    const auto in = file("path.txt", kPath);
    const auto fit_json = path("fit.json");
    ASSERT_EQ(run({"fit", in, "--lambda", "0.5", "--out", fit_json}).code, 0);
    auto j = nlohmann::json::parse(slurp(fit_json));
    auto beta = [&](int i) { return j["nodes"][static_cast<std::size_t>(i)]["beta"].get<double>(); };
    const auto topics = file("topics.csv", "topic,node_label,score\nt,0,1\nt,1,0.5\nt,3,0.25\n");
    auto r = run({"wabs", "--fit", fit_json, "--topics", topics});
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream lines(r.out);
    std::string header, row, extra;
    std::getline(lines, header);
    std::getline(lines, row);
    EXPECT_FALSE(std::getline(lines, extra));
    EXPECT_EQ(header, "topic,paper_count,wabs");
    EXPECT_EQ(row.rfind("t,3,", 0), 0u);
    const double expect = std::exp(beta(0)) + 0.5 * std::exp(beta(1)) + 0.25 * std::exp(beta(3));
    EXPECT_NEAR(std::stod(row.substr(4)), expect, 1e-14 * expect);

    const auto classes = path("classes.json");
    ASSERT_EQ(run({"fit", in, "--lambda", "0.5", "--classes-only", "--out", classes}).code, 0);
    EXPECT_EQ(run({"wabs", "--fit", classes, "--topics", topics}).code, cli::bad_input);
    auto via_graph = run({"wabs", in, "--fit", classes, "--topics", topics});
    ASSERT_EQ(via_graph.code, 0) << via_graph.err;
    EXPECT_EQ(via_graph.out, r.out);
}

TEST_F(Cli, SelectWritesJson) {
    const auto g = path("s.txt");
    ASSERT_EQ(run({"simulate", "--setting", "simu2-1", "--n", "400", "--seed", "77", "--out", g}).code, 0);
    auto r = run({"select", g, "--lambda", "0"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto j = nlohmann::json::parse(r.out);
    for (const char* k : {"center", "threshold", "a_bar", "selected"}) EXPECT_TRUE(j.contains(k)) << k;
    EXPECT_GT(j["selected"].size(), 60u);

    const auto fit_json = path("fit.json");
    ASSERT_EQ(run({"fit", g, "--lambda", "0", "--out", fit_json}).code, 0);
    auto from_file = run({"select", g, "--fit", fit_json});
    ASSERT_EQ(from_file.code, 0) << from_file.err;
    EXPECT_EQ(from_file.out, r.out);
    auto full = nlohmann::json::parse(run({"select", g, "--center", "full"}).out);
    EXPECT_NEAR(full["center"].get<double>(), 2 * j["center"].get<double>(), 1e-14);
}

TEST_F(Cli, MonteCarloOutputs) {
    const auto csv = path("mc.csv");
    auto r = run({"mc", "--setting", "iii", "--n", "60", "--replicates", "4", "--lambda", "0.1,10", "--csv", csv,
                  "--threads", "1"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto j = nlohmann::json::parse(r.out);
    ASSERT_EQ(j["runs"].size(), 2u);
    EXPECT_EQ(j["runs"][1]["lambda"].get<double>(), 10.0);
    EXPECT_EQ(j["runs"][0]["successes"].get<int>(), 4);
    EXPECT_EQ(j["runs"][0]["coordinates"].size(), 3u);
    auto table = slurp(csv);
    EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 9);
    EXPECT_EQ(table.rfind("lambda,replicate,ok", 0), 0u);

    const auto scn = file("scn.txt", "n=60\nsetting=iii\nseed=1\nlambda=0.1,10\nreplicates=4\n");
    auto s = run({"mc", "--scenario", scn, "--csv", path("mc2.csv"), "--threads", "2"});
    ASSERT_EQ(s.code, 0) << s.err;
    EXPECT_FALSE(slurp(path("mc2.csv")).empty());
    auto js = nlohmann::json::parse(s.out);
    EXPECT_EQ(js["runs"][0]["coordinates"][0]["mean"], j["runs"][0]["coordinates"][0]["mean"]);
    EXPECT_EQ(run({"mc", "--setting", "gof", "--n", "60"}).code, cli::bad_input);
}

TEST_F(Cli, GofOutputs) {
    auto r = run({"gof", "--n", "60", "--replicates", "3", "--seed", "2"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out.rfind("# TW1 reference", 0), 0u);
    EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 6);
    const auto g = path("g.txt");
    ASSERT_EQ(run({"simulate", "--setting", "gof", "--n", "100", "--seed", "4", "--out", g}).code, 0);
    auto single = run({"gof", g, "--lambda", "0"});
    ASSERT_EQ(single.code, 0) << single.err;
    EXPECT_NE(single.out.find("\n0,"), std::string::npos);
}
