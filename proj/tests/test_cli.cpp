#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "multipd/csv.hpp"

using namespace multipd;

namespace {

int run_cli(const std::string& args) {
    const std::string cmd = std::string(MULTIPD_CLI_BIN) + " " + args;
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::size_t line_count(const std::string& s) {
    std::size_t n = 0;
    for (const char c : s) {
        if (c == '\n') ++n;
    }
    return n;
}

struct TempFile {
    std::string path;
    explicit TempFile(std::string p) : path(std::move(p)) {}
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("csv fields quote exactly when needed") {
    CHECK(csv_field("plain") == "plain");
    CHECK(csv_field("") == "");
    CHECK(csv_field("a,b") == "\"a,b\"");
    CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(csv_field("two\nlines") == "\"two\nlines\"");
    CHECK(csv_field("cr\rhere") == "\"cr\rhere\"");
}

TEST_CASE("csv numbers round-trip doubles") {
    for (const double v : {0.1, 1.0 / 3.0, 1e-300, -2.5, 0.0, 12345678.9}) {
        CHECK(std::stod(csv_num(v)) == v);
    }
    CHECK(csv_num(std::uint64_t{1} << 44) == "17592186044416");
    CHECK(csv_num(-7) == "-7");
}

TEST_CASE("csv writer joins rows with commas") {
    std::ostringstream os;
    CsvWriter w(os);
    w.row({"a", "b"});
    w.row({"1", "2"});
    CHECK(os.str() == "a,b\n1,2\n");
}

TEST_CASE("sampling runs are reproducible by seed") {
    TempFile a{"/tmp/multipd_cli_a.csv"}, b{"/tmp/multipd_cli_b.csv"},
        c{"/tmp/multipd_cli_c.csv"};
    CHECK(run_cli("sample mpd --theta 2,3 --n 20 --trunc 100 --seed 7 --out " + a.path) == 0);
    CHECK(run_cli("sample mpd --theta 2,3 --n 20 --trunc 100 --seed 7 --out " + b.path) == 0);
    CHECK(run_cli("sample mpd --theta 2,3 --n 20 --trunc 100 --seed 8 --out " + c.path) == 0);
    const auto sa = slurp(a.path);
    CHECK(sa == slurp(b.path));
    CHECK(sa != slurp(c.path));
    CHECK(line_count(sa) == 21);  // header + rows
}

TEST_CASE("stdout output matches file output") {
    TempFile a{"/tmp/multipd_cli_so.csv"}, b{"/tmp/multipd_cli_sf.csv"};
    CHECK(run_cli("sample dirichlet --alpha 1,1 --n 2 --seed 3 > " + a.path) == 0);
    CHECK(run_cli("sample dirichlet --alpha 1,1 --n 2 --seed 3 --out " + b.path) == 0);
    const auto s = slurp(a.path);
    CHECK(s == slurp(b.path));
    CHECK(s.rfind("w1,w2\n", 0) == 0);
}

TEST_CASE("config files supply defaults that flags override") {
    TempFile cfg{"/tmp/multipd_cli_cfg.json"}, out{"/tmp/multipd_cli_cfg.csv"};
    {
        std::ofstream o(cfg.path);
        o << R"({"theta": [2.0, 3.0], "n": 5, "seed": 9, "trunc": 50})";
    }
    CHECK(run_cli("sample mpd --config " + cfg.path + " --out " + out.path) == 0);
    CHECK(line_count(slurp(out.path)) == 6);
    CHECK(run_cli("sample mpd --config " + cfg.path + " --n 2 --out " + out.path) == 0);
    CHECK(line_count(slurp(out.path)) == 3);
}

TEST_CASE("verification reports land in jsonl form") {
    TempFile rep{"/tmp/multipd_cli_rep.jsonl"};
    CHECK(run_cli("verify stationary-exact --theta 2,3 --k 2 --report " + rep.path +
                  " > /dev/null") == 0);
    std::ifstream in(rep.path);
    std::string line;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        const auto j = nlohmann::json::parse(line);
        CHECK(j.contains("statistic"));
        CHECK(j.contains("pass"));
        CHECK(j["name"].get<std::string>().rfind("stationary-exact", 0) == 0);
        ++rows;
    }
    CHECK(rows == 8);  // 4 degree buckets, both drift signs
}

TEST_CASE("the boundary demo emits the full sequence") {
    TempFile out{"/tmp/multipd_cli_demo.csv"};
    CHECK(run_cli("demo boundary --depth 20 --n-max 6 --out " + out.path) == 0);
    const auto s = slurp(out.path);
    CHECK(line_count(s) == 7);
    CHECK(s.rfind("n,w1,w2,", 0) == 0);
    CHECK(s.find("\n1,0.25,0.75,") != std::string::npos);
    CHECK(s.find("\n2,0.5,0.5,") != std::string::npos);
}

TEST_CASE("usage errors exit with the config status") {
    CHECK(run_cli("sample mpd --trunc 50 2> /dev/null") == 2);       // no theta
    CHECK(run_cli("sample mpd --theta 2,3 --bogus 2> /dev/null") == 2);
    CHECK(run_cli("nonsense 2> /dev/null") == 2);
    CHECK(run_cli("sample pd --theta 2 --trunc 5 --top 9 2> /dev/null") == 2);
    CHECK(run_cli("verify all --k 2 2> /dev/null") == 2);            // no theta
    CHECK(run_cli("--help > /dev/null") == 0);
}

TEST_SUITE_END();
