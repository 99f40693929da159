#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>

#include "json.hpp"

#include "fundus/image.hpp"
#include "fundus/pnm.hpp"
#include "helpers.hpp"

namespace {

/// Runs the installed binary, returning its exit code and combined output.
int run_cli(const std::string& args, const testutil::TempDir& dir,
            std::string* output = nullptr) {
    const std::string capture = dir.str("cli_output.txt");
    const std::string cmd =
        std::string(FUNDUS_CLI_BIN) + " " + args + " > " + capture + " 2>&1";
    const int status = std::system(cmd.c_str());
    if (output) {
        std::ifstream in(capture, std::ios::binary);
        output->assign(std::istreambuf_iterator<char>(in), {});
    }
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), {}};
}

std::string replace_all(std::string text, const std::string& from, const std::string& to) {
    std::size_t pos = 0;
    while ((pos = text.find(from, pos)) != std::string::npos) {
        text.replace(pos, from.size(), to);
        pos += to.size();
    }
    return text;
}

testutil::BlobParams cli_blobs() {
    testutil::BlobParams p;
    p.width = 16;
    p.height = 16;
    p.base_radius = 2.0;
    p.radius_step = 3.0;
    p.jitter = 1.0;
    p.noise = 10.0;
    return p;
}

}  // namespace

TEST_CASE("the binary refuses to run without a valid subcommand") {
    testutil::TempDir dir("cli");
    CHECK(run_cli("", dir) != 0);
    CHECK(run_cli("frobnicate", dir) != 0);

    std::string output;
    CHECK(run_cli("enhance --input missing.pgm --output out.pgm", dir, &output) != 0);
    CHECK(output.find("error") != std::string::npos);
}

TEST_CASE("enhancing a constant image reproduces the file") {
    testutil::TempDir dir("cli");
    fundus::Image flat(12, 10, 1);
    for (auto& px : flat.pixels) px = 77;
    fundus::save_image(flat, dir.str("flat.pgm"));

    CHECK(run_cli("enhance --input " + dir.str("flat.pgm") + " --output " +
                      dir.str("out.pgm"),
                  dir) == 0);
    CHECK(read_bytes(dir.str("out.pgm")) == read_bytes(dir.str("flat.pgm")));
}

TEST_CASE("split runs are reproducible from the command line") {
    testutil::TempDir dir("cli");
    const auto tree = dir.path() / "data";
    testutil::write_blob_tree(tree, {"No_DR", "DR"}, {10, 10}, cli_blobs(), 7);

    const std::string base = "split --root " + tree.string() + " --ratio 0.8 ";
    CHECK(run_cli(base + "--seed 5 --out " + dir.str("a.csv"), dir) == 0);
    CHECK(run_cli(base + "--seed 5 --out " + dir.str("b.csv"), dir) == 0);
    CHECK(run_cli(base + "--seed 6 --out " + dir.str("c.csv"), dir) == 0);

    CHECK(read_bytes(dir.str("a.csv")) == read_bytes(dir.str("b.csv")));
    CHECK(read_bytes(dir.str("a.csv")) != read_bytes(dir.str("c.csv")));
}

TEST_CASE("chained subcommands reproduce the pipeline byte for byte") {
    testutil::TempDir dir("cli");
    const auto tree = dir.path() / "data";
    testutil::write_blob_tree(tree, {"No_DR", "DR"}, {10, 10}, cli_blobs(), 42);

    const std::string pipe_out = dir.str("pipe");
    CHECK(run_cli("pipeline --root " + tree.string() + " --out " + pipe_out +
                      " --seed 4 --width 8 --height 8 --tile-rows 2 --tile-cols 2"
                      " --epochs 2 --batch 8",
                  dir) == 0);

    // The pipeline log names the per-stage seeds derived from the master.
    const std::string log = read_bytes(pipe_out + "/run.log");
    const auto at = log.find("stage_seeds");
    REQUIRE(at != std::string::npos);
    unsigned long long seed_split = 0, seed_smote = 0, seed_train = 0, seed_augment = 0;
    REQUIRE(std::sscanf(log.c_str() + at,
                        "stage_seeds split %llu smote %llu train %llu augment %llu",
                        &seed_split, &seed_smote, &seed_train, &seed_augment) == 4);

    const std::string chain = dir.str("chain");
    std::filesystem::create_directories(chain);
    CHECK(run_cli("enhance --root " + tree.string() + " --out " + chain +
                      "/enhanced --tile-rows 2 --tile-cols 2",
                  dir) == 0);
    CHECK(run_cli("split --root " + chain + "/enhanced --ratio 0.8 --seed " +
                      std::to_string(seed_split) + " --out " + chain + "/split.csv",
                  dir) == 0);
    CHECK(run_cli("flatten --split " + chain + "/split.csv --part train --width 8"
                      " --height 8 --out " + chain + "/train.features",
                  dir) == 0);
    CHECK(run_cli("flatten --split " + chain + "/split.csv --part test --width 8"
                      " --height 8 --out " + chain + "/test.features",
                  dir) == 0);
    CHECK(run_cli("smote --features " + chain + "/train.features --out " + chain +
                      "/train_smote.features --provenance " + chain +
                      "/smote_provenance.csv --seed " + std::to_string(seed_smote),
                  dir) == 0);
    CHECK(run_cli("train --features " + chain + "/train_smote.features --model " +
                      chain + "/model.txt --epochs 2 --batch 8 --seed " +
                      std::to_string(seed_train) + " --augment --augment-seed " +
                      std::to_string(seed_augment),
                  dir) == 0);
    CHECK(run_cli("evaluate --model " + chain + "/model.txt --features " + chain +
                      "/test.features --out " + chain + "/report.json",
                  dir) == 0);

    for (const char* name : {"train.features", "test.features", "train_smote.features",
                             "smote_provenance.csv", "model.txt", "report.json"}) {
        CHECK(read_bytes(chain + "/" + name) ==
              read_bytes(pipe_out + "/" + std::string(name)));
    }
    // The split manifests differ only in the enhanced-tree location.
    const std::string pipe_split =
        replace_all(read_bytes(pipe_out + "/split.csv"), pipe_out + "/enhanced", "@");
    const std::string chain_split =
        replace_all(read_bytes(chain + "/split.csv"), chain + "/enhanced", "@");
    CHECK(pipe_split == chain_split);
}

TEST_CASE("evaluate reproduces the worked metrics example from predictions") {
    testutil::TempDir dir("cli");
    const auto csv = dir.str("preds.csv");
    {
        std::ofstream out(csv);
        out << "actual,predicted,score_0,score_1\n";
        auto emit = [&](int actual, int predicted, int copies) {
            for (int i = 0; i < copies; ++i) {
                out << actual << ',' << predicted << ','
                    << (predicted == 1 ? "0.1,0.9" : "0.8,0.2") << '\n';
            }
        };
        emit(1, 1, 40);  // true positives
        emit(0, 0, 45);  // true negatives
        emit(0, 1, 5);   // false positives
        emit(1, 0, 10);  // false negatives
    }

    CHECK(run_cli("evaluate --predictions " + csv + " --out " + dir.str("report.json"),
                  dir) == 0);
    const auto doc = nlohmann::json::parse(read_bytes(dir.str("report.json")));
    CHECK(doc["accuracy"].get<double>() == doctest::Approx(0.85).epsilon(1e-6));
    CHECK(doc["per_class"][1]["precision"].get<double>() ==
          doctest::Approx(0.888889).epsilon(1e-6));
    CHECK(doc["per_class"][1]["recall"].get<double>() == doctest::Approx(0.8).epsilon(1e-6));
    CHECK(doc["per_class"][1]["specificity"].get<double>() ==
          doctest::Approx(0.9).epsilon(1e-6));
    CHECK(doc["per_class"][1]["f1"].get<double>() ==
          doctest::Approx(0.842105).epsilon(1e-6));
    CHECK(doc["confusion"][1][1].get<int>() == 40);
}
