#include <dissipcert/cli.hpp>

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace dissipcert;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "dissipcert");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out);
    return {code, out.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class CliFiles : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("dissipcert_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        log::set_level(log::Level::Quiet);
    }
    void TearDown() override {
        fs::remove_all(dir_);
        log::set_level(log::Level::Info);
    }
    std::string file(const std::string& name, const std::string& content) {
        const auto p = dir_ / name;
        std::ofstream(p) << content;
        return p.string();
    }
    fs::path dir_;
};

}  // namespace

TEST(Cli, ParseList) {
    EXPECT_EQ(cli::parse_list("1,2.5,-3", "c"), (Vec(3) << 1, 2.5, -3).finished());
    EXPECT_THROW(cli::parse_list("1,,2", "c"), InvalidArgument);
    EXPECT_THROW(cli::parse_list("1,2x", "c"), InvalidArgument);
    EXPECT_THROW(cli::parse_list("", "c"), InvalidArgument);
}

TEST_F(CliFiles, SolveSymmetric) {
    const auto r = run({"solve", "--transfer", "tanh", "--c", "1,1", "--l", "1,1", "--b", "1"});
    EXPECT_EQ(r.code, 0);
    const auto j = io::parse(r.out);
    EXPECT_EQ(j["report"]["verdict"], "UniqueMax");
    ASSERT_EQ(j["report"]["maxima"].size(), 1u);
    EXPECT_NEAR(j["report"]["maxima"][0]["x"][0].get<double>(), 0.5, 1e-9);
    EXPECT_NEAR(j["report"]["maxima"][0]["x"][1].get<double>(), 0.5, 1e-9);
}

TEST_F(CliFiles, SolveNoMaxAndCsv) {
    EXPECT_EQ(run({"solve", "--transfer", "tanh", "--c", "1,-2", "--l", "1,1", "--b", "1"}).code, 2);
    const auto r = run({"solve", "--transfer", "arctan", "--c", "3,1,2", "--l", "1,1,1", "--b", "3", "--format", "csv"});
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out.rfind("beta,orthant,boundary_flag,value,x1,x2,x3\n", 0), 0u);
    EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 2);
}

TEST_F(CliFiles, JsonInputWinsOverFlags) {
    const auto in = file("p.json", R"({"transfer": "tanh", "c": [1, 1], "l": [1, 1], "b": 1})");
    const auto r = run({"solve", "--input", in, "--transfer", "tanh", "--c", "1,-2", "--l", "1,1", "--b", "1"});
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(io::parse(r.out)["c"][1], 1.0);
}

TEST_F(CliFiles, Errors) {
    EXPECT_EQ(run({"solve", "--input", file("bad.json", "{\n  \"c\": [1,,2]\n}")}).code, 1);
    EXPECT_EQ(run({"solve", "--transfer", "tanh", "--c", "1,1"}).code, 1);
    EXPECT_EQ(run({"solve", "--transfer", "relu", "--c", "1,2", "--l", "1,1", "--b", "1"}).code, 1);
    EXPECT_EQ(run({"check-transfer", "--name", "relu"}).code, 1);
    EXPECT_EQ(run({}).code, 1);
    EXPECT_EQ(run({"bogus"}).code, 1);
    EXPECT_EQ(run({"--help"}).code, 0);
}

TEST_F(CliFiles, CheckTransfer) {
    const auto r = run({"check-transfer", "--name", "arctan", "--grid", "64"});
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(io::parse(r.out)["verdicts"]["A5"], "pass");
}

TEST_F(CliFiles, CertifyPair) {
    const auto stable = file("half.json", R"({"transfer": "tanh", "W": [[0.5, 0], [0, 0.5]]})");
    const auto unstable = file("two.json", R"({"transfer": "tanh", "W": [[2, 0], [0, 2]]})");
    const auto out = (dir_ / "cert.json").string();
    const auto trace = (dir_ / "trace.csv").string();
    EXPECT_EQ(run({"certify", "--model", stable, "--box", "1", "--tol", "1e-3", "-o", out, "--trace", trace}).code, 0);
    EXPECT_EQ(io::parse(slurp(out))["verdict"], "Certified");
    EXPECT_EQ(slurp(trace).rfind("iter,radius\n", 0), 0u);
    const auto r = run({"certify", "--model", unstable, "--box", "1", "--tol", "1e-3"});
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(io::parse(r.out)["verdict"], "Stalled");
}

TEST_F(CliFiles, Simulate) {
    const auto m = file("two.json", R"({"transfer": "tanh", "W": [[2, 0], [0, 2]]})");
    const auto r = run({"simulate", "--model", m, "--y0", "0.1,0.1", "--steps", "100"});
    EXPECT_EQ(r.code, 0);
    const auto j = io::parse(r.out);
    ASSERT_EQ(j["trajectory"].size(), 101u);
    EXPECT_NEAR(j["trajectory"][100][0].get<double>(), 1.915008048154537, 1e-12);
    EXPECT_EQ(run({"simulate", "--model", m, "--y0", "0.1,0.1", "--steps", "0"}).code, 1);
}

TEST_F(CliFiles, OracleCompare) {
    auto r = run({"oracle-compare", "--transfer", "tanh", "--c", "1,1", "--l", "1,1", "--b", "1", "--steps", "801"});
    EXPECT_EQ(r.code, 0);
    auto j = io::parse(r.out);
    EXPECT_LT(j["instances"][0]["distance"].get<double>(), 1e-3);

    r = run({"oracle-compare", "--transfer", "tanh", "--c", "1,1", "--l", "1,-1", "--b", "0"});
    EXPECT_EQ(r.code, 0);
    j = io::parse(r.out);
    EXPECT_EQ(j["instances"][0]["solver_count"], 0);
    EXPECT_EQ(j["instances"][0]["oracle_count"], 0);

    r = run({"oracle-compare", "--corpus", "100", "--transfer", "arctan", "--dim", "2"});
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(io::parse(r.out)["agreed"], 100);

    const auto big = file("p5.json", R"({"transfer": "tanh", "c": [1,2,3,4,5], "l": [1,1,1,1,1], "b": 1})");
    EXPECT_EQ(run({"oracle-compare", "--input", big}).code, 1);
}

TEST_F(CliFiles, SeededOutputIsDeterministic) {
    const std::vector<std::string> args{"oracle-compare", "--corpus", "20", "--transfer", "tanh", "--dim", "3"};
    EXPECT_EQ(run(args).out, run(args).out);
    auto other = args;
    other.insert(other.end(), {"--seed", "7"});
    EXPECT_NE(run(args).out, run(other).out);
}

#ifdef DISSIPCERT_CLI_PATH
// The built executable: exit codes and byte-identical files across runs.
TEST_F(CliFiles, Executable) {
    const std::string exe = DISSIPCERT_CLI_PATH;
    const auto a = (dir_ / "a.json").string();
    const auto b = (dir_ / "b.json").string();
    const std::string solve = " solve --transfer arctan --c 3,1,2 --l 1,1,1 --b 3 -o ";
    ASSERT_EQ(std::system((exe + solve + a).c_str()), 0);
    ASSERT_EQ(std::system((exe + solve + b).c_str()), 0);
    EXPECT_FALSE(slurp(a).empty());
    EXPECT_EQ(slurp(a), slurp(b));

    const auto m = file("two.json", R"({"transfer": "tanh", "W": [[2, 0], [0, 2]]})");
    const int status = std::system((exe + " certify --model " + m + " --box 1 --tol 1e-3 > /dev/null").c_str());
    EXPECT_EQ(WEXITSTATUS(status), 2);
    const int bad = std::system((exe + " solve --input " + file("x.json", "[1,") + " 2> /dev/null").c_str());
    EXPECT_EQ(WEXITSTATUS(bad), 1);
}
#endif
