#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "rffsb/dataset.hpp"
#include "rffsb/rng.hpp"

using namespace rffsb;
namespace fs = std::filesystem;

namespace {

DatasetSplit make_split(int rows, Rng& rng) {
    DatasetSplit d;
    for (int r = 0; r < rows; ++r) {
        std::vector<double> i(16), q(16), f(4);
        for (auto& v : i) v = rng.gauss();
        for (auto& v : q) v = rng.gauss();
        for (auto& v : f) v = rng.gauss();
        d.append(i, q, f, static_cast<std::uint16_t>(r % 3));
    }
    d.provenance = {{"note", "unit"}, {"seed", 99}};
    return d;
}

}  // namespace

TEST_CASE("sha256 matches the reference digest") {
    // [DERIVED] sha256("abc") from the standard test vector set
    const std::string s = "abc";
    CHECK(sha256_hex(reinterpret_cast<const std::uint8_t*>(s.data()),
                     s.size()) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex(nullptr, 0) ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("split save/load round trip") {
    Rng rng(40);
    auto d = make_split(7, rng);
    const auto dir = fs::temp_directory_path() / "rffsb_ds_rt";
    fs::remove_all(dir);
    d.save(dir);
    auto r = DatasetSplit::load(dir);
    fs::remove_all(dir);

    CHECK(r.rows() == 7);
    CHECK(r.n_samples == 16);
    CHECK(r.feature_len == 4);
    CHECK(r.frames == d.frames);
    CHECK(r.features == d.features);
    CHECK(r.labels == d.labels);
    CHECK(r.provenance.at("seed").get<int>() == 99);
}

TEST_CASE("row accessors invert append") {
    Rng rng(41);
    DatasetSplit d;
    std::vector<double> i0 = {1.0, -2.0, 3.0}, q0 = {0.5, 0.25, -0.125};
    std::vector<double> f0 = {9.0, 8.0};
    d.append(i0, q0, f0, 5);
    std::vector<double> i1 = {-1.0, 0.0, 7.0}, q1 = {2.0, 4.0, 6.0};
    d.append(i1, q1, {1.0, 2.0}, 6);

    // interleaved i,q layout
    CHECK(d.frames[0] == 1.0f);
    CHECK(d.frames[1] == 0.5f);
    CHECK(d.frames[2] == -2.0f);

    std::vector<double> i, q;
    d.frame_row(1, i, q);
    CHECK(i == i1);
    CHECK(q == q1);
    CHECK(d.feature_row(0) == f0);
    CHECK(d.labels[1] == 6);

    CHECK_THROWS_AS(d.append({1.0}, {2.0}, {3.0, 4.0}, 0), ShapeError);
}

TEST_CASE("corruption is detected at load") {
    Rng rng(42);
    auto d = make_split(5, rng);
    const auto dir = fs::temp_directory_path() / "rffsb_ds_bad";

    SUBCASE("flipped byte in features") {
        fs::remove_all(dir);
        d.save(dir);
        std::fstream f(dir / "features.f32",
                       std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(9);
        char c;
        f.seekg(9);
        f.get(c);
        f.seekp(9);
        f.put(static_cast<char>(c ^ 0x40));
        f.close();
        CHECK_THROWS_AS(DatasetSplit::load(dir), IoError);
    }
    SUBCASE("truncated frames blob") {
        fs::remove_all(dir);
        d.save(dir);
        fs::resize_file(dir / "frames.f32",
                        fs::file_size(dir / "frames.f32") - 8);
        CHECK_THROWS_AS(DatasetSplit::load(dir), IoError);
    }
    SUBCASE("missing manifest") {
        fs::remove_all(dir);
        d.save(dir);
        fs::remove(dir / "manifest.json");
        CHECK_THROWS_AS(DatasetSplit::load(dir), IoError);
    }
    fs::remove_all(dir);
}
