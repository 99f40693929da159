#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "fundus/dataset.hpp"
#include "fundus/pnm.hpp"
#include "fundus/rng.hpp"
#include "helpers.hpp"

using namespace fundus;

namespace {

Image tiny_image(int w, int h, int c, std::uint8_t fill) {
    Image img(w, h, c);
    for (auto& px : img.pixels) px = fill;
    return img;
}

void write_manifest(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

}  // namespace

TEST_CASE("folder ingest orders classes by scheme, files lexicographically") {
    testutil::TempDir dir("ingest");
    const auto scheme = ClassScheme::binary_scheme();
    std::filesystem::create_directories(dir.path() / "No_DR");
    std::filesystem::create_directories(dir.path() / "DR");
    save_image(tiny_image(2, 2, 1, 10), dir.path() / "No_DR" / "b.pgm");
    save_image(tiny_image(2, 2, 1, 20), dir.path() / "No_DR" / "a.pgm");
    save_image(tiny_image(2, 2, 1, 30), dir.path() / "DR" / "z.pgm");

    const Dataset ds = ingest_folder(dir.str(), scheme);
    REQUIRE(ds.size() == 3);
    // No_DR comes first even though "DR" sorts before it.
    CHECK(ds.items[0].label == 0);
    CHECK(ds.items[1].label == 0);
    CHECK(ds.items[2].label == 1);
    CHECK(ds.items[0].path.find("a.pgm") != std::string::npos);
    CHECK(ds.items[1].path.find("b.pgm") != std::string::npos);
    CHECK(ds.items[2].path.find("z.pgm") != std::string::npos);
    CHECK(ds.class_counts() == std::vector<std::size_t>{2, 1});

    const Dataset again = ingest_folder(dir.str(), scheme);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(again.items[i].path == ds.items[i].path);
        CHECK(again.items[i].label == ds.items[i].label);
    }
}

TEST_CASE("folder ingest rejects unknown class folders, warns on missing ones") {
    testutil::TempDir dir("ingest");
    std::filesystem::create_directories(dir.path() / "No_DR");
    std::filesystem::create_directories(dir.path() / "Sideways");
    save_image(tiny_image(2, 2, 1, 1), dir.path() / "No_DR" / "a.pgm");
    CHECK_THROWS_WITH_AS(ingest_folder(dir.str(), ClassScheme::binary_scheme()),
                         doctest::Contains("unknown class folder"), std::runtime_error);

    std::filesystem::remove(dir.path() / "Sideways");
    std::vector<std::string> warnings;
    const Dataset ds = ingest_folder(dir.str(), ClassScheme::binary_scheme(), &warnings);
    CHECK(ds.size() == 1);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("DR") != std::string::npos);

    CHECK_THROWS_AS(ingest_folder(dir.str("nope"), ClassScheme::binary_scheme()),
                    std::runtime_error);
}

TEST_CASE("manifest ingest collapses grades to binary labels") {
    testutil::TempDir dir("manifest");
    const auto images = dir.path() / "img";
    std::filesystem::create_directories(images);
    for (const char* id : {"eye1", "eye2", "eye3"})
        save_image(tiny_image(2, 2, 1, 5), images / (std::string(id) + ".pgm"));

    const auto csv = dir.str("labels.csv");
    write_manifest(csv, "id_code,diagnosis\r\neye1,0\neye2,3\neye3,1\n");

    const Dataset binary =
        ingest_manifest(csv, images.string(), ClassScheme::binary_scheme());
    REQUIRE(binary.size() == 3);
    CHECK(binary.items[0].label == 0);
    CHECK(binary.items[1].label == 1);  // grade 3 collapses to DR
    CHECK(binary.items[2].label == 1);

    const Dataset multi =
        ingest_manifest(csv, images.string(), ClassScheme::multiclass_scheme());
    CHECK(multi.items[1].label == 3);
}

TEST_CASE("manifest ingest cites the offending line") {
    testutil::TempDir dir("manifest");
    const auto images = dir.path() / "img";
    std::filesystem::create_directories(images);
    save_image(tiny_image(2, 2, 1, 5), images / "ok.pgm");

    const auto bad_header = dir.str("h.csv");
    write_manifest(bad_header, "id,label\nok,0\n");
    CHECK_THROWS_WITH_AS(
        ingest_manifest(bad_header, images.string(), ClassScheme::binary_scheme()),
        doctest::Contains("header"), std::runtime_error);

    const auto bad_grade = dir.str("g.csv");
    write_manifest(bad_grade, "id_code,diagnosis\nok,7\n");
    CHECK_THROWS_WITH_AS(
        ingest_manifest(bad_grade, images.string(), ClassScheme::binary_scheme()),
        doctest::Contains(":2"), std::runtime_error);

    const auto not_int = dir.str("i.csv");
    write_manifest(not_int, "id_code,diagnosis\nok,x\n");
    CHECK_THROWS_WITH_AS(
        ingest_manifest(not_int, images.string(), ClassScheme::binary_scheme()),
        doctest::Contains("not an integer"), std::runtime_error);

    const auto missing_img = dir.str("m.csv");
    write_manifest(missing_img, "id_code,diagnosis\nghost,0\n");
    CHECK_THROWS_WITH_AS(
        ingest_manifest(missing_img, images.string(), ClassScheme::binary_scheme()),
        doctest::Contains("not found"), std::runtime_error);
}

namespace {

Dataset fake_dataset(const std::vector<std::size_t>& counts, const ClassScheme& scheme) {
    // Split never opens files, so paths can be synthetic.
    Dataset ds;
    ds.scheme = scheme;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        for (std::size_t i = 0; i < counts[c]; ++i) {
            ds.items.push_back({"item_" + std::to_string(c) + "_" + std::to_string(i),
                                static_cast<int>(c)});
        }
    }
    return ds;
}

}  // namespace

TEST_CASE("stratified split partitions every index exactly once, sorted") {
    const Dataset ds = fake_dataset({60, 40}, ClassScheme::binary_scheme());
    const SplitIndices split = stratified_split(ds, 0.8, 7);

    CHECK(split.train.size() == 80);
    CHECK(split.test.size() == 20);
    CHECK(std::is_sorted(split.train.begin(), split.train.end()));
    CHECK(std::is_sorted(split.test.begin(), split.test.end()));

    std::set<std::size_t> all(split.train.begin(), split.train.end());
    all.insert(split.test.begin(), split.test.end());
    CHECK(all.size() == 100);
    CHECK(*all.rbegin() == 99);

    // Per class: round(0.2 * 60) = 12 and round(0.2 * 40) = 8 test items.
    std::size_t test_class0 = 0;
    for (const auto idx : split.test) test_class0 += ds.items[idx].label == 0 ? 1 : 0;
    CHECK(test_class0 == 12);
    CHECK(split.test.size() - test_class0 == 8);
}

TEST_CASE("split test counts round half up per class") {
    // 5 items at ratio 0.5 keep round(2.5) = 3 for test.
    const Dataset ds = fake_dataset({5, 4}, ClassScheme::binary_scheme());
    const SplitIndices split = stratified_split(ds, 0.5, 1);
    std::size_t test_class0 = 0;
    for (const auto idx : split.test) test_class0 += ds.items[idx].label == 0 ? 1 : 0;
    CHECK(test_class0 == 3);
    CHECK(split.test.size() - test_class0 == 2);
}

TEST_CASE("splits are deterministic in the seed") {
    const Dataset ds = fake_dataset({30, 25}, ClassScheme::binary_scheme());
    const SplitIndices a = stratified_split(ds, 0.8, 42);
    const SplitIndices b = stratified_split(ds, 0.8, 42);
    CHECK(a.train == b.train);
    CHECK(a.test == b.test);

    const SplitIndices c = stratified_split(ds, 0.8, 43);
    CHECK(a.test != c.test);
}

TEST_CASE("split proportions stay within half an item per class") {
    Rng rng(2025);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n0 = 2 + rng.next_below(400);
        const std::size_t n1 = 2 + rng.next_below(400);
        const double ratio = 0.5 + 0.45 * rng.next_double();
        const Dataset ds = fake_dataset({n0, n1}, ClassScheme::binary_scheme());
        const SplitIndices split = stratified_split(ds, ratio, trial);

        std::vector<std::size_t> test_counts(2, 0);
        for (const auto idx : split.test) ++test_counts[ds.items[idx].label];
        CHECK(std::abs(static_cast<double>(test_counts[0]) - (1.0 - ratio) * n0) <=
              0.5 + 1e-9);
        CHECK(std::abs(static_cast<double>(test_counts[1]) - (1.0 - ratio) * n1) <=
              0.5 + 1e-9);
        CHECK(split.train.size() + split.test.size() == n0 + n1);
    }
}

TEST_CASE("split rejects bad ratios and undersized classes") {
    const Dataset ds = fake_dataset({10, 10}, ClassScheme::binary_scheme());
    CHECK_THROWS_AS(stratified_split(ds, 0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(stratified_split(ds, 1.0, 1), std::invalid_argument);

    const Dataset tiny = fake_dataset({10, 1}, ClassScheme::binary_scheme());
    CHECK_THROWS_WITH_AS(stratified_split(tiny, 0.8, 1), doctest::Contains("DR"),
                         std::runtime_error);
}

TEST_CASE("flatten resizes, rescales and tracks labels") {
    testutil::TempDir dir("flatten");
    const auto scheme = ClassScheme::binary_scheme();
    std::filesystem::create_directories(dir.path() / "No_DR");
    std::filesystem::create_directories(dir.path() / "DR");
    save_image(tiny_image(8, 6, 1, 0), dir.path() / "No_DR" / "dark.pgm");
    save_image(tiny_image(3, 3, 1, 255), dir.path() / "DR" / "bright.pgm");

    const Dataset ds = ingest_folder(dir.str(), scheme);
    const FeatureSet set = flatten(ds, 4, 4);
    CHECK(set.features.rows == 2);
    CHECK(set.features.cols == 16);
    CHECK(set.image_width == 4);
    CHECK(set.image_height == 4);
    CHECK(set.image_channels == 1);
    CHECK(set.num_classes == 2);
    CHECK(set.labels == std::vector<int>{0, 1});
    for (std::size_t c = 0; c < 16; ++c) {
        CHECK(set.features.at(0, c) == 0.0);
        CHECK(set.features.at(1, c) == 1.0);
    }
}

TEST_CASE("flatten converts RGB to luma when asked, else keeps channels") {
    testutil::TempDir dir("flatten");
    std::filesystem::create_directories(dir.path() / "No_DR");
    std::filesystem::create_directories(dir.path() / "DR");
    Image red(2, 2, 3);
    for (std::size_t p = 0; p < 4; ++p) red.pixels[p * 3] = 255;
    save_image(red, dir.path() / "No_DR" / "red.ppm");
    save_image(red, dir.path() / "DR" / "red2.ppm");

    const Dataset ds = ingest_folder(dir.str(), ClassScheme::binary_scheme());
    const FeatureSet gray = flatten(ds, 2, 2, true);
    CHECK(gray.features.cols == 4);
    CHECK(gray.image_channels == 1);
    CHECK(gray.features.at(0, 0) == doctest::Approx(76.0 / 255.0).epsilon(1e-12));

    const FeatureSet rgb = flatten(ds, 2, 2, false);
    CHECK(rgb.features.cols == 12);
    CHECK(rgb.image_channels == 3);
    CHECK(rgb.features.at(0, 0) == 1.0);
    CHECK(rgb.features.at(0, 1) == 0.0);
}

TEST_CASE("flatten rejects mixed channel counts unless converting to luma") {
    testutil::TempDir dir("flatten");
    std::filesystem::create_directories(dir.path() / "No_DR");
    std::filesystem::create_directories(dir.path() / "DR");
    save_image(tiny_image(2, 2, 1, 9), dir.path() / "No_DR" / "gray.pgm");
    save_image(tiny_image(2, 2, 3, 9), dir.path() / "DR" / "color.ppm");

    const Dataset ds = ingest_folder(dir.str(), ClassScheme::binary_scheme());
    CHECK_THROWS_WITH_AS(flatten(ds, 2, 2, false), doctest::Contains("channel"),
                         std::runtime_error);
    const FeatureSet gray = flatten(ds, 2, 2, true);
    CHECK(gray.features.rows == 2);
}

TEST_CASE("flatten_subset keeps only the requested rows in order") {
    testutil::TempDir dir("flatten");
    std::filesystem::create_directories(dir.path() / "No_DR");
    std::filesystem::create_directories(dir.path() / "DR");
    for (int i = 0; i < 3; ++i) {
        save_image(tiny_image(2, 2, 1, static_cast<std::uint8_t>(10 * (i + 1))),
                   dir.path() / "No_DR" / ("f" + std::to_string(i) + ".pgm"));
    }
    save_image(tiny_image(2, 2, 1, 200), dir.path() / "DR" / "g.pgm");

    const Dataset ds = ingest_folder(dir.str(), ClassScheme::binary_scheme());
    const FeatureSet subset = flatten_subset(ds, {0, 2, 3}, 2, 2);
    REQUIRE(subset.features.rows == 3);
    CHECK(subset.features.at(0, 0) == doctest::Approx(10.0 / 255.0));
    CHECK(subset.features.at(1, 0) == doctest::Approx(30.0 / 255.0));
    CHECK(subset.features.at(2, 0) == doctest::Approx(200.0 / 255.0));
    CHECK(subset.labels == std::vector<int>{0, 0, 1});
}
