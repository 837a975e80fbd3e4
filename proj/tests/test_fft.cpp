#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rffsb/fft.hpp"
#include "rffsb/rng.hpp"

using namespace rffsb;

namespace {

// Naive O(N^2) DFT oracle.
std::vector<cdouble> naive_dft(const std::vector<cdouble>& x, bool inverse) {
    const std::size_t n = x.size();
    std::vector<cdouble> out(n);
    const double sgn = inverse ? 1.0 : -1.0;
    for (std::size_t k = 0; k < n; ++k) {
        cdouble acc(0.0, 0.0);
        for (std::size_t t = 0; t < n; ++t) {
            const double ph = sgn * 2.0 * kPi * static_cast<double>(k * t) /
                              static_cast<double>(n);
            acc += x[t] * cdouble(std::cos(ph), std::sin(ph));
        }
        out[k] = inverse ? acc / static_cast<double>(n) : acc;
    }
    return out;
}

std::vector<cdouble> random_signal(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<cdouble> x(n);
    for (auto& v : x) v = cdouble(rng.gauss(), rng.gauss());
    return x;
}

}  // namespace

TEST_CASE("fft matches the naive DFT") {
    for (std::size_t n : {2u, 8u, 16u, 64u, 256u}) {
        auto x = random_signal(n, 10 + n);
        auto want = naive_dft(x, false);
        auto got = x;
        fft_inplace(got, false);
        for (std::size_t k = 0; k < n; ++k)
            CHECK(std::abs(got[k] - want[k]) < 1e-9 * std::max(1.0, std::abs(want[k])));
    }
}

TEST_CASE("inverse fft matches the naive inverse DFT") {
    auto x = random_signal(32, 99);
    auto want = naive_dft(x, true);
    auto got = x;
    fft_inplace(got, true);
    for (std::size_t k = 0; k < 32; ++k)
        CHECK(std::abs(got[k] - want[k]) < 1e-10);
}

TEST_CASE("forward-inverse round trip") {
    auto x = random_signal(128, 4);
    auto y = x;
    fft_inplace(y, false);
    fft_inplace(y, true);
    for (std::size_t k = 0; k < x.size(); ++k)
        CHECK(std::abs(y[k] - x[k]) < 1e-10);
}

TEST_CASE("parseval energy identity") {
    auto x = random_signal(64, 5);
    double et = 0.0;
    for (const auto& v : x) et += std::norm(v);
    auto y = x;
    fft_inplace(y, false);
    double ef = 0.0;
    for (const auto& v : y) ef += std::norm(v);
    CHECK(ef / 64.0 == doctest::Approx(et).epsilon(1e-10));
}

TEST_CASE("fft_padded zero-pads then transforms") {
    auto x = random_signal(12, 6);
    auto padded = x;
    padded.resize(32, cdouble(0.0, 0.0));
    auto want = naive_dft(padded, false);
    auto got = fft_padded(x, 32);
    REQUIRE(got.size() == 32);
    for (std::size_t k = 0; k < 32; ++k)
        CHECK(std::abs(got[k] - want[k]) < 1e-9);
}

TEST_CASE("non power of two size rejected") {
    std::vector<cdouble> x(12, cdouble(1.0, 0.0));
    CHECK_THROWS_AS(fft_inplace(x, false), ShapeError);
}
