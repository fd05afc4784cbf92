#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "cli.hpp"

namespace fs = std::filesystem;

namespace {

int run(std::initializer_list<const char*> args) {
    std::vector<const char*> argv{"capsep"};
    argv.insert(argv.end(), args.begin(), args.end());
    return capsep::cli::run(static_cast<int>(argv.size()), argv.data());
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("capsep-test-" + std::to_string(::getpid()) + "-" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

} // namespace

TEST_CASE("generate writes parseable, seed-deterministic instances") {
    TempDir tmp;
    REQUIRE(run({"generate", "--n", "6", "--count", "2", "--seed", "9",
                 "--out", tmp.path.string().c_str()}) == 0);
    const auto a = capsep::cli::load_instance(tmp.file("random-9-n6.vrp"));
    const auto b = capsep::cli::load_instance(tmp.file("random-10-n6.vrp"));
    CHECK(a.num_customers() == 6);
    CHECK(b.num_customers() == 6);
    CHECK(a == capsep::generate_random(6, 9));
}

TEST_CASE("solve emits the documented trace csv") {
    TempDir tmp;
    REQUIRE(run({"generate", "--n", "6", "--count", "1", "--seed", "3",
                 "--out", tmp.path.string().c_str()}) == 0);
    const std::string trace = tmp.file("t.csv");
    REQUIRE(run({"solve", "--instance", tmp.file("random-3-n6.vrp").c_str(), "--separator",
                 "exact", "--max-iter", "50", "--out", trace.c_str()}) == 0);
    std::ifstream in(trace);
    std::string header;
    std::getline(in, header);
    CHECK(header == "iteration,lb,cuts_added,sep_time_s,lp_pivots");
    in.seekg(0);
    CHECK_NOTHROW(capsep::parse_trace_csv(in));
}

TEST_CASE("compare includes the gap column when a ub file is given") {
    TempDir tmp;
    REQUIRE(run({"generate", "--n", "5", "--count", "1", "--seed", "4",
                 "--out", tmp.path.string().c_str()}) == 0);
    {
        std::ofstream ub(tmp.file("ubs.csv"));
        ub << "random-4-n5,1000000\n";
    }
    const std::string out = tmp.file("summary.csv");
    REQUIRE(run({"compare", "--instance", tmp.file("random-4-n5.vrp").c_str(), "--separators",
                 "exact,components", "--ub-file", tmp.file("ubs.csv").c_str(), "--max-iter", "20",
                 "--out", out.c_str()}) == 0);
    std::ifstream in(out);
    std::string header, row;
    std::getline(in, header);
    CHECK(header == "instance,n,k,separator,final_lb,gap_pct,iterations,wall_s,termination");
    std::getline(in, row);
    // gap field populated (two commas around a number, not an empty field)
    CHECK(row.find(",,") == std::string::npos);
}

TEST_CASE("labels then train then sepbench runs end to end") {
    TempDir tmp;
    REQUIRE(run({"generate", "--n", "7", "--count", "2", "--seed", "31",
                 "--out", tmp.path.string().c_str()}) == 0);
    const std::string dataset = tmp.file("data.jsonl");
    REQUIRE(run({"labels", "--instance", tmp.file("random-31-n7.vrp").c_str(), "--instance",
                 tmp.file("random-32-n7.vrp").c_str(), "--out", dataset.c_str()}) == 0);
    CHECK_FALSE(capsep::load_dataset_file(dataset).empty());

    const std::string ck = tmp.file("params.json");
    REQUIRE(run({"train", "--dataset", dataset.c_str(), "--epochs", "1", "--seed", "2", "--out",
                 ck.c_str()}) == 0);
    CHECK(fs::exists(ck));
    CHECK(fs::exists(tmp.file("params.json.epoch1.json"))); // per-epoch checkpoint

    const std::string metrics = tmp.file("metrics.csv");
    REQUIRE(run({"sepbench", "--dataset", dataset.c_str(), "--separators",
                 "exact,components,greedy,neural", "--checkpoint", ck.c_str(), "--out",
                 metrics.c_str()}) == 0);
    std::ifstream in(metrics);
    std::string header;
    std::getline(in, header);
    CHECK(header == "separator,avg_violation,cut_count,success_rate");
    int rows = 0;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 4);
}

TEST_CASE("solve can export the final LP for external cross-checks") {
    TempDir tmp;
    REQUIRE(run({"generate", "--n", "6", "--count", "1", "--seed", "12",
                 "--out", tmp.path.string().c_str()}) == 0);
    const std::string lp = tmp.file("final.lp");
    REQUIRE(run({"solve", "--instance", tmp.file("random-12-n6.vrp").c_str(), "--max-iter", "30",
                 "--export-lp", lp.c_str()}) == 0);
    std::ifstream in(lp);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(text.find("Minimize") != std::string::npos);
    CHECK(text.find("deg_1:") != std::string::npos);
}

TEST_CASE("a neural run without a checkpoint exits with status 2") {
    TempDir tmp;
    REQUIRE(run({"generate", "--n", "5", "--count", "1", "--seed", "8",
                 "--out", tmp.path.string().c_str()}) == 0);
    CHECK(run({"solve", "--instance", tmp.file("random-8-n5.vrp").c_str(), "--separator",
               "neural"}) == 2);
}

TEST_CASE("usage errors exit with status 2") {
    CHECK(run({"frobnicate"}) == 2);
    CHECK(run({"solve", "--no-such-flag"}) == 2);
    CHECK(run({"solve"}) == 2); // missing required --instance
}

TEST_CASE("a missing instance file is a validation failure") {
    CHECK(run({"solve", "--instance", "/nonexistent/x.vrp"}) == 2);
}
