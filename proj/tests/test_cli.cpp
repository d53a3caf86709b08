#include "doctest.h"

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hzsl/hierarchy.hpp"
#include "hzsl/model.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
    int code = -1;
    std::string out;
};

RunResult run_cli(const std::string& args) {
    const std::string cmd = std::string(HZSL_CLI_PATH) + " " + args + " 2>&1";
    std::array<char, 4096> buf{};
    RunResult r;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
    const int rc = pclose(pipe);
    r.code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    return r;
}

std::string temp_dir(const std::string& tag) {
    const fs::path p = fs::temp_directory_path() / ("hzsl_cli_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
}

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(is);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

std::size_t line_count(const std::string& path) {
    const std::string text = slurp(path);
    return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

}  // namespace

TEST_CASE("--version reports a semantic version") {
    const RunResult r = run_cli("--version");
    CHECK(r.code == 0);
    CHECK(r.out.find("hzsl 1.") != std::string::npos);
}

TEST_CASE("unknown flags and missing subcommands exit with code 2") {
    CHECK(run_cli("").code == 2);
    CHECK(run_cli("frobnicate").code == 2);
    CHECK(run_cli("gen-synth --no-such-flag x").code == 2);
    CHECK(run_cli("eval --data /nowhere --model m --hierarchy h --mode zsl").code == 2);
}

TEST_CASE("gen-synth writes a consistent four-file dataset") {
    const std::string dir = temp_dir("gen");
    const RunResult r =
        run_cli("gen-synth --out " + dir + " --p 8 --q 3 --df 6 --dz 4 --n 4 --seed 5");
    CHECK(r.code == 0);

    std::vector<std::string> found;
    for (const auto& e : fs::directory_iterator(dir))
        found.push_back(e.path().filename().string());
    std::sort(found.begin(), found.end());
    CHECK(found == std::vector<std::string>{"features.csv", "labels.txt",
                                            "semantics.csv", "split.json"});
    CHECK(line_count(dir + "/features.csv") == 11 * 4);
    CHECK(line_count(dir + "/labels.txt") == 11 * 4);
    CHECK(line_count(dir + "/semantics.csv") == 11);
    const auto split = nlohmann::json::parse(slurp(dir + "/split.json"));
    CHECK(split["seen"].size() == 8);
    CHECK(split["unseen"].size() == 3);
}

TEST_CASE("gen-synth rejects an impossible planted map with exit code 2") {
    const std::string dir = temp_dir("gen_bad");
    const RunResult r = run_cli("gen-synth --out " + dir + " --df 4 --dz 8");
    CHECK(r.code == 2);
    CHECK(r.out.find("d_f < d_z") != std::string::npos);
}

TEST_CASE("build-hierarchy applies the layer-size rule and round-trips") {
    const std::string dir = temp_dir("bh");
    REQUIRE(run_cli("gen-synth --out " + dir + " --p 150 --q 50 --df 6 --dz 4 --n 1 --seed 2")
                .code == 0);
    const std::string hpath = dir + "/hierarchy.json";
    const RunResult r =
        run_cli("build-hierarchy --data " + dir + " --t 5 --seed 3 --out " + hpath);
    CHECK(r.code == 0);
    const auto h = hzsl::hierarchy_from_json(nlohmann::json::parse(slurp(hpath)));
    CHECK(h.n_r == 2);
    CHECK(h.layer_sizes == std::vector<std::size_t>{40, 8});
    CHECK(h.n_leaves == 200);

    CHECK(run_cli("build-hierarchy --data " + dir + " --t 300 --out " + hpath).code == 2);
}

TEST_CASE("train writes the model pair and prints nonincreasing traces") {
    const std::string dir = temp_dir("train");
    REQUIRE(run_cli("gen-synth --out " + dir + " --p 10 --q 4 --df 8 --dz 5 --n 5 --seed 3")
                .code == 0);
    const std::string hpath = dir + "/h.json";
    REQUIRE(run_cli("build-hierarchy --data " + dir + " --t 3 --seed 1 --out " + hpath)
                .code == 0);
    const std::string mpath = dir + "/model.bin";
    const RunResult r =
        run_cli("train --data " + dir + " --hierarchy " + hpath + " --out " + mpath);
    CHECK(r.code == 0);

    // every "... objective trace:" line must be nonincreasing
    std::istringstream lines(r.out);
    std::string line;
    std::size_t traces_seen = 0;
    while (std::getline(lines, line)) {
        const auto pos = line.find("objective trace:");
        if (pos == std::string::npos) continue;
        ++traces_seen;
        std::istringstream nums(line.substr(pos + 16));
        double prev = std::numeric_limits<double>::infinity(), v;
        while (nums >> v) {
            CHECK(v <= prev * (1.0 + 1e-9));
            prev = v;
        }
    }
    const auto h = hzsl::hierarchy_from_json(nlohmann::json::parse(slurp(hpath)));
    CHECK(traces_seen == h.n_r + 1);

    const hzsl::ProjectionModel m = hzsl::load_model(mpath);
    CHECK(m.n_layers() == h.n_r);  // file carries n_r + 1 matrices with the class one
    CHECK(fs::exists(mpath + ".json"));

    // hierarchy built for a different class table is rejected up front
    const std::string dir2 = temp_dir("train_mismatch");
    REQUIRE(run_cli("gen-synth --out " + dir2 + " --p 6 --q 2 --df 8 --dz 5 --n 3 --seed 4")
                .code == 0);
    CHECK(run_cli("train --data " + dir2 + " --hierarchy " + hpath + " --out " + dir2 +
                  "/m.bin")
              .code == 2);
}

TEST_CASE("train accepts a config file and honours validation") {
    const std::string dir = temp_dir("train_cfg");
    REQUIRE(run_cli("gen-synth --out " + dir + " --p 10 --q 4 --df 8 --dz 5 --n 5 --seed 3")
                .code == 0);
    const std::string hpath = dir + "/h.json";
    REQUIRE(run_cli("build-hierarchy --data " + dir + " --t 3 --seed 1 --out " + hpath)
                .code == 0);
    {
        std::ofstream cfg(dir + "/cfg.json");
        cfg << R"({"superclass": {"alpha": 0.4, "beta": 0.6, "epsilon": 0.0, "gamma": 0.01},
                   "graph_k": 5})";
    }
    CHECK(run_cli("train --data " + dir + " --hierarchy " + hpath + " --config " + dir +
                  "/cfg.json --out " + dir + "/m.bin")
              .code == 0);
    {
        std::ofstream cfg(dir + "/bad.json");
        cfg << R"({"superclass": {"alpha": 1.5}})";
    }
    const RunResult bad = run_cli("train --data " + dir + " --hierarchy " + hpath +
                                  " --config " + dir + "/bad.json --out " + dir + "/m.bin");
    CHECK(bad.code == 2);
    CHECK(bad.out.find("alpha") != std::string::npos);
}

TEST_CASE("train --tune selects a grid point before fitting") {
    const std::string dir = temp_dir("tune");
    REQUIRE(run_cli("gen-synth --out " + dir + " --p 10 --q 4 --df 8 --dz 5 --n 5 --seed 3")
                .code == 0);
    const std::string hpath = dir + "/h.json";
    REQUIRE(run_cli("build-hierarchy --data " + dir + " --t 3 --seed 1 --out " + hpath)
                .code == 0);
    {
        std::ofstream cfg(dir + "/cfg.json");
        cfg << R"({"grid": {"alphas": [0.3, 0.6], "betas": [0.5], "epsilons": [0.0]}})";
    }
    const RunResult r = run_cli("train --data " + dir + " --hierarchy " + hpath +
                                " --config " + dir + "/cfg.json --tune --out " + dir +
                                "/m.bin");
    CHECK(r.code == 0);
    CHECK(r.out.find("tuned alpha=") != std::string::npos);
}

TEST_CASE("eval covers the three modes end to end") {
    const std::string dir = temp_dir("eval");
    REQUIRE(run_cli("gen-synth --out " + dir + " --p 10 --q 4 --df 8 --dz 5 --n 7 --seed 3")
                .code == 0);
    const std::string hpath = dir + "/h.json";
    REQUIRE(run_cli("build-hierarchy --data " + dir + " --t 3 --seed 1 --out " + hpath)
                .code == 0);
    const std::string mpath = dir + "/m.bin";
    REQUIRE(run_cli("train --data " + dir + " --hierarchy " + hpath + " --out " + mpath)
                .code == 0);

    SUBCASE("zsl: noiseless synthetic reaches the report with top1 >= 0.95") {
        const RunResult r = run_cli("eval --data " + dir + " --model " + mpath +
                                    " --hierarchy " + hpath + " --mode zsl --out " + dir +
                                    "/report.json --pred " + dir + "/pred.csv");
        CHECK(r.code == 0);
        const auto report = nlohmann::json::parse(slurp(dir + "/report.json"));
        CHECK(report["mode"] == "zsl");
        CHECK(report["top1"].get<double>() >= 0.95);
        // predictions csv: header + one row per unseen sample
        CHECK(line_count(dir + "/pred.csv") == 1 + 4 * 7);
        const std::string head = slurp(dir + "/pred.csv");
        CHECK(head.rfind("sample_id,predicted_class,distance,fallback_flag", 0) == 0);
    }
    SUBCASE("gzsl: report satisfies the harmonic-mean identity") {
        const RunResult r = run_cli("eval --data " + dir + " --model " + mpath +
                                    " --hierarchy " + hpath + " --mode gzsl --out " + dir +
                                    "/report.json --pred " + dir + "/pred.csv");
        CHECK(r.code == 0);
        const auto report = nlohmann::json::parse(slurp(dir + "/report.json"));
        const double s = report["acc_s"].get<double>();
        const double u = report["acc_u"].get<double>();
        const double hm = report["hm"].get<double>();
        const double expect = s + u > 0 ? 2 * s * u / (s + u) : 0.0;
        CHECK(hm == doctest::Approx(expect).epsilon(1e-12));
    }
    SUBCASE("fsl: report carries the 95% confidence interval") {
        const RunResult r = run_cli("eval --data " + dir + " --model " + mpath +
                                    " --hierarchy " + hpath +
                                    " --mode fsl --kshot 5 --nway 4 --episodes 30 --out " +
                                    dir + "/report.json");
        CHECK(r.code == 0);
        const auto report = nlohmann::json::parse(slurp(dir + "/report.json"));
        CHECK(report["fsl"].contains("ci95"));
        CHECK(report["fsl"]["k_shot"] == 5);
        CHECK(report["fsl"]["n_episodes"] == 30);
    }
    SUBCASE("unknown mode exits with code 2") {
        CHECK(run_cli("eval --data " + dir + " --model " + mpath + " --hierarchy " + hpath +
                      " --mode nope")
                  .code == 2);
    }
}
