#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cfslab/cli.hpp"

namespace fs = std::filesystem;
using namespace cfslab::cli;

namespace {

const fs::path kConfigs = fs::path(CFSLAB_SOURCE_DIR) / "configs";

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("cfslab_cli_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

fs::path write_config(const fs::path& dir, const std::string& name, const std::string& text) {
    fs::create_directories(dir);
    const fs::path p = dir / name;
    std::ofstream(p, std::ios::binary) << text;
    return p;
}

struct Outcome {
    int code;
    std::string diagnostics;
};

Outcome run_cmd(const std::string& cmd, const fs::path& config, const fs::path& out,
                std::optional<std::uint64_t> seed = std::nullopt) {
    RunOptions o;
    o.command = cmd;
    o.config_path = config;
    o.out_dir = out;
    o.seed = seed;
    o.threads = 1;
    std::ostringstream err;
    const int code = run(o, err);
    return {code, err.str()};
}

nlohmann::json manifest(const fs::path& out) { return nlohmann::json::parse(slurp(out / "manifest.json")); }

}  // namespace

TEST_CASE("every subcommand runs its demo config") {
    const std::vector<std::pair<std::string, std::string>> demos{
        {"classify", "classify_two_point.json"}, {"action", "action_three_point.json"},
        {"minimize", "minimize_f2_n1.json"},     {"spectral", "spectral_staircase.json"},
        {"spectral", "spectral_triple.json"},    {"tracedyn", "tracedyn_stm.json"},
        {"tracedyn", "tracedyn_bateman.json"},   {"clifford", "clifford.json"},
        {"sea", "sea_demo.json"}};
    for (const auto& [cmd, file] : demos) {
        CAPTURE(file);
        const fs::path out = scratch("demo_" + file);
        const auto r = run_cmd(cmd, kConfigs / file, out);
        REQUIRE(r.code == ok);
        const auto m = manifest(out);
        CHECK(m.at("command") == cmd);
        CHECK(m.at("threads") == 1);
        CHECK(m.contains("wall_time_seconds"));
        const std::string hash = m.at("config_hash").get<std::string>();
        CHECK(hash.rfind("fnv1a:", 0) == 0);
        CHECK(m.at("outputs").size() >= 1);
        // Every result file names the command, config hash, seed and version up front.
        for (const auto& name : m.at("outputs")) {
            const std::string text = slurp(out / name.get<std::string>());
            if (name.get<std::string>().ends_with(".csv")) {
                const std::string first = text.substr(0, text.find('\n'));
                CHECK(first.find("command=" + cmd) != std::string::npos);
                CHECK(first.find("config_hash=" + hash) != std::string::npos);
                CHECK(first.find("seed=") != std::string::npos);
                CHECK(first.find(std::string("version=") + kVersion) != std::string::npos);
            } else {
                const auto h = nlohmann::json::parse(text).at("header");
                CHECK(h.at("command") == cmd);
                CHECK(h.at("config_hash") == hash);
                CHECK(h.at("version") == kVersion);
                CHECK(h.contains("seed"));
            }
        }
    }
}

TEST_CASE("two-point classification matrix") {
    const fs::path out = scratch("classify");
    REQUIRE(run_cmd("classify", kConfigs / "classify_two_point.json", out).code == ok);
    std::istringstream in(slurp(out / "classes.csv"));
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line)) lines.push_back(line);
    REQUIRE(lines.size() == 4);
    CHECK(lines[1] == "point,0,1");
    CHECK(lines[2].rfind("0,", 0) == 0);
    CHECK(lines[3].rfind("1,", 0) == 0);
    CHECK(std::count(lines[2].begin(), lines[2].end(), ',') == 2);
}

TEST_CASE("exit codes") {
    const fs::path dir = scratch("exit");
    SUBCASE("malformed JSON reports line and column") {
        const fs::path cfg = write_config(dir, "bad.json", "{\n  \"spin_dim\": 1,\n  \"points\": [,]\n}\n");
        const auto r = run_cmd("classify", cfg, dir / "out");
        CHECK(r.code == config_error);
        CHECK(r.diagnostics.find("bad.json:3:") != std::string::npos);
    }
    SUBCASE("missing config file") {
        CHECK(run_cmd("classify", dir / "nope.json", dir / "out").code == config_error);
    }
    SUBCASE("unknown command") {
        CHECK(run_cmd("frobnicate", kConfigs / "clifford.json", dir / "out").code == config_error);
    }
    SUBCASE("bad option values") {
        RunOptions o;
        o.command = "clifford";
        o.config_path = kConfigs / "clifford.json";
        o.out_dir = dir / "out";
        std::ostringstream err;
        o.tol = -1.0;
        CHECK(run(o, err) == config_error);
        o.tol.reset();
        o.threads = -2;
        CHECK(run(o, err) == config_error);
    }
    SUBCASE("unsupported signature is a config error") {
        const fs::path cfg = write_config(dir, "sig.json", R"({"signatures": [[1, 2]]})");
        CHECK(run_cmd("clifford", cfg, dir / "out").code == config_error);
    }
    SUBCASE("infeasible minimization is a config error") {
        const fs::path cfg = write_config(
            dir, "inf.json",
            R"({"ambient_dim": 2, "spin_dim": 1, "num_points": 1, "target_volume": 1.0, "target_trace": 1.0, "boundedness_cap": 0.1})");
        CHECK(run_cmd("minimize", cfg, dir / "out").code == config_error);
    }
    SUBCASE("runaway integration is a numerical failure") {
        std::string text = slurp(kConfigs / "tracedyn_bateman.json");
        auto j = nlohmann::json::parse(text);
        j["params"]["gamma"] = 30.0;
        j["steps"] = 5000;
        const fs::path cfg = write_config(dir, "unstable.json", j.dump());
        const auto r = run_cmd("tracedyn", cfg, dir / "out");
        CHECK(r.code == numerical_error);
        CHECK(r.diagnostics.find("step") != std::string::npos);
    }
}

TEST_CASE("identical manifests give byte-identical outputs") {
    for (const auto& [cmd, file] : std::vector<std::pair<std::string, std::string>>{
             {"minimize", "minimize_f3_m3.json"}, {"sea", "sea_demo.json"}, {"clifford", "clifford.json"},
             {"tracedyn", "tracedyn_stm.json"}, {"spectral", "spectral_triple.json"}}) {
        CAPTURE(file);
        const fs::path a = scratch("repro_a_" + file), b = scratch("repro_b_" + file);
        REQUIRE(run_cmd(cmd, kConfigs / file, a, 5).code == ok);
        REQUIRE(run_cmd(cmd, kConfigs / file, b, 5).code == ok);
        const auto m = manifest(a);
        CHECK(m.at("seed") == 5);
        for (const auto& name : m.at("outputs")) {
            CHECK(slurp(a / name.get<std::string>()) == slurp(b / name.get<std::string>()));
        }
    }
}

TEST_CASE("the seed flag changes seeded outputs") {
    const fs::path a = scratch("seed_a"), b = scratch("seed_b");
    REQUIRE(run_cmd("clifford", kConfigs / "clifford.json", a, 1).code == ok);
    REQUIRE(run_cmd("clifford", kConfigs / "clifford.json", b, 2).code == ok);
    CHECK(slurp(a / "clifford.json") != slurp(b / "clifford.json"));
}

TEST_CASE("output directory falls back to the environment") {
    const fs::path env_dir = scratch("env");
    ::setenv(kOutEnv, env_dir.c_str(), 1);
    RunOptions o;
    CHECK(resolve_out_dir(o) == env_dir);
    o.command = "clifford";
    o.config_path = kConfigs / "clifford.json";
    std::ostringstream err;
    CHECK(run(o, err) == ok);
    CHECK(fs::exists(env_dir / "manifest.json"));
    o.out_dir = env_dir / "explicit";
    CHECK(resolve_out_dir(o) == env_dir / "explicit");
    ::unsetenv(kOutEnv);
    CHECK(resolve_out_dir(RunOptions{}) == fs::path("cfslab-out"));
}

TEST_CASE("sea output feeds classification and yields a heat map") {
    const fs::path sea = scratch("pipe_sea"), cls = scratch("pipe_classify");
    REQUIRE(run_cmd("sea", kConfigs / "sea_demo.json", sea).code == ok);
    const auto r = run_cmd("classify", sea / "measure.json", cls);
    REQUIRE(r.code == ok);
    std::istringstream in(slurp(cls / "heatmap.csv"));
    std::string line;
    std::getline(in, line);
    CHECK(line.rfind("# command=classify", 0) == 0);
    std::getline(in, line);
    CHECK(line == "t,x,class,lagrangian");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 8 * 16);
}

TEST_CASE("spectral staircase from the CLI") {
    const fs::path out = scratch("staircase");
    REQUIRE(run_cmd("spectral", kConfigs / "spectral_staircase.json", out).code == ok);
    std::istringstream in(slurp(out / "sweep.csv"));
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    double prev = -1.0;
    int rows = 0;
    while (std::getline(in, line)) {
        const double lambda = std::stod(line.substr(0, line.find(',')));
        const double s = std::stod(line.substr(line.find(',') + 1));
        CHECK(s >= prev);
        if (std::abs(lambda - std::round(lambda)) > 1e-9) CHECK(s == std::min(8.0, std::floor(lambda)));
        prev = s;
        ++rows;
    }
    CHECK(rows == 100);
}

TEST_CASE("minimize demo converges with a trace spread column") {
    const fs::path out = scratch("min");
    REQUIRE(run_cmd("minimize", kConfigs / "minimize_f2_n1.json", out).code == ok);
    const auto res = nlohmann::json::parse(slurp(out / "result.json"));
    CHECK(res.at("termination") == "converged");
    CHECK(res.at("action").get<double>() == doctest::Approx(0.5).epsilon(1e-4));
    const std::string hist = slurp(out / "history.csv");
    CHECK(hist.find("trace_spread") != std::string::npos);
}

TEST_CASE("stm demo conserves its charges") {
    const fs::path out = scratch("stm");
    REQUIRE(run_cmd("tracedyn", kConfigs / "tracedyn_stm.json", out).code == ok);
    const auto s = nlohmann::json::parse(slurp(out / "summary.json"));
    CHECK(s.at("am_charge_drift").get<double>() <= 1e-8 * std::max(1.0, s.at("am_charge_norm_initial").get<double>()));
    CHECK(s.at("trace_hamiltonian_drift").get<double>() <= 1e-8);
}
