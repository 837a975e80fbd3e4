#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "rffsb/nn_io.hpp"
#include "rffsb/rng.hpp"

using namespace rffsb;
namespace fs = std::filesystem;

namespace {

fs::path tmpfile(const char* tag) {
    return fs::temp_directory_path() / (std::string("rffsb_io_") + tag);
}

}  // namespace

TEST_CASE("checkpoint round trip is bit exact for both dtypes") {
    Rng rng(30);
    std::vector<float> a(257);
    for (auto& v : a) v = static_cast<float>(rng.gauss());
    std::vector<double> b(63);
    for (auto& v : b) v = rng.gauss();
    // values with tricky bit patterns
    a[0] = 0.0f; a[1] = -0.0f;
    b[0] = 1e-300; b[1] = -1e300;

    nn::Checkpoint ck;
    ck.put_f32("w", {257}, a.data(), a.size());
    ck.put_f64("stats/mean", {7, 9}, b.data(), b.size());
    ck.put_scalar("hp/depth", 3.0);

    const auto path = tmpfile("rt.rfnn");
    ck.save(path);
    auto r = nn::Checkpoint::load(path);
    fs::remove(path);

    CHECK(r.get_f32("w") == a);
    CHECK(r.get_f64("stats/mean") == b);
    CHECK(r.get_scalar("hp/depth") == 3.0);
    CHECK(r.at("stats/mean").shape == std::vector<std::uint64_t>{7, 9});
    CHECK(r.at("w").dtype == nn::Checkpoint::F32);
}

TEST_CASE("missing entries and dtype mismatches raise") {
    nn::Checkpoint ck;
    double v = 1.0;
    ck.put_f64("x", {1}, &v, 1);
    CHECK_THROWS_AS(ck.at("y"), IoError);
    CHECK_THROWS_AS(ck.get_f32("x"), IoError);
    CHECK(ck.has("x"));
    CHECK_FALSE(ck.has("y"));
    float f = 1.0f;
    CHECK_THROWS_AS(ck.put_f32("bad", {3}, &f, 1), ShapeError);
}

TEST_CASE("corrupted files are rejected") {
    const auto path = tmpfile("bad.rfnn");

    SUBCASE("wrong magic") {
        std::ofstream(path, std::ios::binary) << "NOPE then some bytes";
        CHECK_THROWS_AS(nn::Checkpoint::load(path), IoError);
    }
    SUBCASE("unsupported version") {
        std::ofstream f(path, std::ios::binary);
        f.write("RFNN", 4);
        const std::uint32_t ver = 99, cnt = 0;
        f.write(reinterpret_cast<const char*>(&ver), 4);
        f.write(reinterpret_cast<const char*>(&cnt), 4);
        f.close();
        CHECK_THROWS_AS(nn::Checkpoint::load(path), IoError);
    }
    SUBCASE("truncated blob region") {
        nn::Checkpoint ck;
        std::vector<double> big(4096, 0.25);
        ck.put_f64("big", {4096}, big.data(), big.size());
        ck.save(path);
        const auto full = fs::file_size(path);
        fs::resize_file(path, full - 64);
        CHECK_THROWS_AS(nn::Checkpoint::load(path), IoError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(nn::Checkpoint::load(tmpfile("never_written.rfnn")),
                        IoError);
    }
    fs::remove(path);
}

TEST_CASE("overwriting an entry keeps the latest value") {
    nn::Checkpoint ck;
    double a = 1.0, b = 2.0;
    ck.put_f64("x", {1}, &a, 1);
    ck.put_f64("x", {1}, &b, 1);
    CHECK(ck.get_scalar("x") == 2.0);
    CHECK(ck.entries().size() == 1);
}
