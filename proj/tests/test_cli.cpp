#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cq/cli.hpp"

namespace {

int run(const std::vector<std::string>& args) {
    std::vector<const char*> argv{"cq"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return cq::cli::dispatch(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("weights subcommand emits a header and n+1 rows") {
    const std::string out = "/tmp/cq_test_weights.csv";
    CHECK(run({"weights", "--kernel", "pow:0.5", "--method", "be", "--h", "0.01", "--n", "10",
               "--out", out}) == 0);
    const std::string text = slurp(out);
    CHECK(text.rfind("n,omega\n", 0) == 0);
    int rows = 0;
    for (char c : text)
        if (c == '\n') ++rows;
    CHECK(rows == 12);  // header + 11 data rows
    std::remove(out.c_str());
}

TEST_CASE("usage errors exit with status 2") {
    CHECK(run({"weights", "--no-such-flag", "1"}) == 2);
    CHECK(run({"frobnicate"}) == 2);
    CHECK(run({"weights", "--kernel", "gauss:1"}) == 2);
    CHECK(run({"volterra", "--mode", "slow"}) == 2);
}

TEST_CASE("convolve --check reports small deviations and is deterministic") {
    const std::string out1 = "/tmp/cq_test_conv1.csv";
    const std::string out2 = "/tmp/cq_test_conv2.csv";
    const std::vector<std::string> args{"convolve", "--kernel", "pow:0.5",  "--method", "bdf2",
                                        "--h",      "0.05",    "--N",      "300",      "--B",
                                        "5",        "--K",     "15",       "--g",      "sin",
                                        "--check"};
    auto a1 = args;
    a1.insert(a1.end(), {"--out", out1});
    auto a2 = args;
    a2.insert(a2.end(), {"--out", out2});
    CHECK(run(a1) == 0);
    CHECK(run(a2) == 0);
    const std::string t1 = slurp(out1);
    CHECK(t1 == slurp(out2));  // bit-identical CSV
    CHECK(t1.find("# kernel_evals=") == 0);
    CHECK(t1.find("n,t,u_fast,u_direct,abs_err") != std::string::npos);

    // every abs_err entry small relative to the solution scale
    std::istringstream lines(t1);
    std::string line;
    double max_err = 0.0;
    while (std::getline(lines, line)) {
        if (line.empty() || line[0] == '#' || line[0] == 'n') continue;
        const auto pos = line.rfind(',');
        max_err = std::max(max_err, std::stod(line.substr(pos + 1)));
    }
    CHECK(max_err < 1e-6);
    std::remove(out1.c_str());
    std::remove(out2.c_str());
}

TEST_CASE("config file supplies defaults and flags override") {
    const std::string cfg = "/tmp/cq_test_cfg.ini";
    {
        std::ofstream f(cfg);
        f << "kernel=pow:0.5\nmethod=be\nh=0.01\nn=4\n";
    }
    const std::string out = "/tmp/cq_test_cfgout.csv";
    CHECK(run({"weights", "--config", cfg, "--out", out}) == 0);
    std::string text = slurp(out);
    int rows = 0;
    for (char c : text)
        if (c == '\n') ++rows;
    CHECK(rows == 6);  // header + 5 rows from n=4
    std::remove(cfg.c_str());
    std::remove(out.c_str());
}

TEST_SUITE_END();
