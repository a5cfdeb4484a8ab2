#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "anytime/runner.hpp"

namespace fs = std::filesystem;
using namespace anytime;
using Catch::Approx;

namespace {

struct CliResult {
    int exit_code;
    std::string output;
};

fs::path scratch_dir() {
    auto dir = fs::temp_directory_path() / "anytime_cli_tests";
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CliResult run_cli(const std::string& args) {
    static int counter = 0;
    const auto out_file = scratch_dir() / ("stdout_" + std::to_string(counter++) + ".txt");
    const std::string cmd =
        std::string(ANYTIME_CLI_PATH) + " " + args + " > " + out_file.string() + " 2>/dev/null";
    const int rc = std::system(cmd.c_str());
    return {WEXITSTATUS(rc), slurp(out_file)};
}

std::vector<std::string> data_rows(const std::string& csv) {
    std::vector<std::string> rows;
    std::istringstream in(csv);
    std::string line;
    bool seen_header = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!seen_header) {
            seen_header = true;  // header row
            continue;
        }
        rows.push_back(line);
    }
    return rows;
}

}  // namespace

TEST_CASE("help exits cleanly") {
    CHECK(run_cli("--help").exit_code == 0);
    CHECK(run_cli("de --help").exit_code == 0);
}

TEST_CASE("threshold subcommand reports the analytical threshold") {
    const auto res = run_cli("threshold");
    REQUIRE(res.exit_code == 0);
    CHECK(res.output.find("eps_bar=0.0980849") != std::string::npos);
    CHECK(res.output.find("variant_q1=3") != std::string::npos);
    CHECK(res.output.find("boundary_warning=false") != std::string::npos);
}

TEST_CASE("strict threshold lists all variants") {
    const auto res = run_cli("threshold --strict");
    REQUIRE(res.exit_code == 0);
    CHECK(res.output.find("variants=3") != std::string::npos);
    CHECK(res.output.find("variant2_eps_bar=0.1104") != std::string::npos);
    CHECK(res.output.find("variant3_eps_bar=0.1204") != std::string::npos);
}

TEST_CASE("narrow searches print a warning line") {
    const auto res = run_cli("threshold --beta-max 0.01");
    REQUIRE(res.exit_code == 0);
    CHECK(res.output.find("boundary_warning=true") != std::string::npos);
    CHECK(res.output.find("warning=") != std::string::npos);
}

TEST_CASE("de with a config file emits one row per delay") {
    const auto cfg_path = scratch_dir() / "paper.cfg";
    {
        std::ofstream out(cfg_path);
        out << "# running example\n"
               "dv1=3\ndc1=6\nlambda1=0.1\n"
               "dv2=2\ndc2=8\nlambda2=0.1\n"
               "eps_sd=0.7\neps_sr=0\neps_rd=0\n";
    }
    const auto res = run_cli("de --config " + cfg_path.string() + " --i 20 --dmax 60");
    REQUIRE(res.exit_code == 0);
    CHECK(data_rows(res.output).size() == 61);
}

TEST_CASE("de with a clean channel is identically zero") {
    const auto res = run_cli("de --i 4 --dmax 3 --eps-sd 0");
    REQUIRE(res.exit_code == 0);
    const auto rows = data_rows(res.output);
    REQUIRE(rows.size() == 4);
    for (int d = 0; d < 4; ++d)
        CHECK(rows[d] == "4," + std::to_string(d) + ',' + std::to_string(4 + d) + ",0,");
}

TEST_CASE("defaults mirror the paper's running example") {
    const auto res = run_cli("de --i 3 --dmax 2");
    REQUIRE(res.exit_code == 0);
    std::istringstream in(res.output);
    const auto stamp = parse_stamp(in);
    CHECK(stamp.at("dv1") == "3");
    CHECK(stamp.at("dc1") == "6");
    CHECK(stamp.at("lambda1") == "0.1");
    CHECK(stamp.at("dv2") == "2");
    CHECK(stamp.at("dc2") == "8");
    CHECK(stamp.at("lambda2") == "0.1");
    CHECK(stamp.at("eps_sd") == "0.7");
}

TEST_CASE("stamps re-parse into the resolved run") {
    const auto out = scratch_dir() / "curve_stamp.csv";
    const auto res = run_cli("de --i 5 --dmax 2 --eps-sd 0.25 --seed 99 --tol 1e-10 --out " +
                             out.string());
    REQUIRE(res.exit_code == 0);
    const auto spec = runspec_from_entries(parse_stamp_file(out.string()));
    CHECK(spec.subcommand == "de");
    CHECK(spec.seed == 99);
    CHECK(spec.de.tol == 1e-10);
    CHECK(spec.config.eps_sd == 0.25);
    CHECK(spec.messages == std::vector<int>{5});
    CHECK(spec.d_max == 2);
}

TEST_CASE("bad configuration exits with code 1") {
    const auto cfg_path = scratch_dir() / "bad.cfg";
    {
        std::ofstream out(cfg_path);
        out << "dv3=4\n";
    }
    CHECK(run_cli("de --config " + cfg_path.string()).exit_code == 1);
    CHECK(run_cli("de --i 2 --dmax 1 --lambda1 1.5").exit_code == 1);
    CHECK(run_cli("simulate --M 101 --i 2 --dmax 2 --trials 1").exit_code == 1);
    CHECK(run_cli("exponent --families nope --lambda1-grid 0.1").exit_code == 1);
    CHECK(run_cli("exponent --families i --dv1 3 --lambda1-grid 0.1").exit_code == 1);
    CHECK(run_cli("nonsense").exit_code == 1);
}

TEST_CASE("empty sweep grids exit with code 1") {
    CHECK(run_cli("exponent --lambda1-grid \"\"").exit_code == 1);
}

TEST_CASE("non-convergence exits with code 2 and flags rows") {
    const auto res = run_cli("de --i 4 --dmax 1 --max-iters 2");
    CHECK(res.exit_code == 2);
    for (const auto& row : data_rows(res.output))
        CHECK(row.find("converged=false") != std::string::npos);
}

TEST_CASE("unwritable outputs exit with code 3") {
    CHECK(run_cli("de --i 2 --dmax 1 --out /no_such_dir_anytime/x.csv").exit_code == 3);
    CHECK(run_cli("threshold --out /no_such_dir_anytime/t.txt").exit_code == 3);
}

TEST_CASE("exponent sweep of one named family") {
    const auto res = run_cli(
        "exponent --families i --lambda1-grid 0.2 --i 6 --dmax 20 --eps-sd 0.3");
    REQUIRE(res.exit_code == 0);
    const auto rows = data_rows(res.output);
    REQUIRE(rows.size() == 1);
    // family (i): alpha_theory = 3*lambda1 + 2*0.1 = 0.8
    CHECK(rows[0].rfind("i,0.2,3,0.1,2,0.8,", 0) == 0);
}

TEST_CASE("custom family comes from explicit degree flags") {
    const auto res = run_cli(
        "exponent --dv1 3 --dv2 2 --lambda2 0.1 --lambda1-grid 0.2 --i 6 --dmax 20 --eps-sd 0.3");
    REQUIRE(res.exit_code == 0);
    const auto rows = data_rows(res.output);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].rfind("custom,0.2,3,0.1,2,0.8,", 0) == 0);
}

TEST_CASE("simulate is byte-identical across runs and thread counts") {
    const auto f1 = scratch_dir() / "sim1.csv";
    const auto f2 = scratch_dir() / "sim2.csv";
    const auto f3 = scratch_dir() / "sim3.csv";
    const std::string base = "simulate --M 60 --T 12 --i 4 --trials 8 --seed 7 --eps-sd 0.5 ";
    REQUIRE(run_cli(base + "--threads 1 --out " + f1.string()).exit_code == 0);
    REQUIRE(run_cli(base + "--threads 1 --out " + f2.string()).exit_code == 0);
    REQUIRE(run_cli(base + "--threads 8 --out " + f3.string()).exit_code == 0);
    const auto b1 = slurp(f1);
    CHECK(b1 == slurp(f2));
    CHECK(b1 == slurp(f3));
    CHECK(data_rows(b1).size() == 9);  // delays 0..8
}

TEST_CASE("simulate overlay and compare expose the DE prediction") {
    const auto res = run_cli("simulate --M 60 --T 10 --i 3 --trials 4 --eps-sd 0.5 --overlay");
    REQUIRE(res.exit_code == 0);
    CHECK(res.output.find("pe_hat,ci_halfwidth,pe_de") != std::string::npos);

    const auto cmp = run_cli("compare --M 60 --T 10 --i 3 --trials 4 --eps-sd 0.5");
    REQUIRE(cmp.exit_code == 0);
    CHECK(cmp.output.find("pe_de,abs_dev,within_3hw") != std::string::npos);
}

TEST_CASE("dumped graphs load back") {
    const auto gpath = scratch_dir() / "trial0.graph";
    const auto res = run_cli("simulate --M 24 --T 6 --i 2 --trials 2 --eps-sd 0.5 --dump-graph " +
                             gpath.string());
    REQUIRE(res.exit_code == 0);
    std::ifstream in(gpath);
    REQUIRE(in.good());
    const auto g = load_graph(in);
    CHECK(g.M == 24);
    CHECK(g.T == 6);
    CHECK(int(g.edges.size()) == 24 * 6 * 5);
}
