#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rffsb/channel.hpp"
#include "rffsb/clps.hpp"

using namespace rffsb;

namespace {

IqFrame random_frame(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    IqFrame x;
    x.i.resize(n);
    x.q.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        x.i[k] = rng.gauss();
        x.q[k] = rng.gauss();
    }
    return x;
}

// Naive O(M^2) DFT.
std::vector<cdouble> naive_dft(const std::vector<cdouble>& x) {
    const std::size_t n = x.size();
    std::vector<cdouble> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        cdouble acc(0.0, 0.0);
        for (std::size_t t = 0; t < n; ++t) {
            const double ph =
                -2.0 * kPi * static_cast<double>(k * t) / static_cast<double>(n);
            acc += x[t] * cdouble(std::cos(ph), std::sin(ph));
        }
        out[k] = acc;
    }
    return out;
}

}  // namespace

TEST_CASE("autocorrelation of a unit impulse") {
    IqFrame x;
    x.i = {1.0, 0.0, 0.0, 0.0};
    x.q = {0.0, 0.0, 0.0, 0.0};
    const auto acf = autocorrelate(x);
    REQUIRE(acf.size() == 7);
    for (std::size_t k = 0; k < 7; ++k) {
        const double want = k == 3 ? 0.25 : 0.0;   // lag 0 at the center
        CHECK(std::abs(acf[k] - cdouble(want, 0.0)) < 1e-15);
    }
}

TEST_CASE("autocorrelation of a constant frame") {
    // [DERIVED] direct-summation oracle for r[n]=1, N=4.
    IqFrame x;
    x.i = {1.0, 1.0, 1.0, 1.0};
    x.q = {0.0, 0.0, 0.0, 0.0};
    const auto acf = autocorrelate(x);
    const std::vector<double> want = {0.25, 0.5, 0.75, 1.0, 0.75, 0.5, 0.25};
    REQUIRE(acf.size() == want.size());
    for (std::size_t k = 0; k < want.size(); ++k)
        CHECK(std::abs(acf[k] - cdouble(want[k], 0.0)) < 1e-15);
}

TEST_CASE("autocorrelation is Hermitian symmetric") {
    const auto x = random_frame(16, 21);
    const auto acf = autocorrelate(x);
    const std::size_t c = 15;   // lag-0 index
    for (std::size_t m = 0; m <= c; ++m)
        CHECK(std::abs(acf[c - m] - std::conj(acf[c + m])) < 1e-12);
}

TEST_CASE("toy frame matches the naive DFT pipeline") {
    // [DERIVED] independent naive DFT + direct-summation oracle for the
    // 8-sample frame, full 16-bin spectrum decimated to 8 bins.
    IqFrame x;
    x.i = {1, 1, -1, -1, 1, -1, 1, -1};
    x.q = {0, 0, 0, 0, 0, 0, 0, 0};
    ClpsSpec spec;
    spec.fft_size = 16;
    spec.band_bins = 16;
    spec.feature_len = 8;

    const auto got = extract_clps(x, spec);
    REQUIRE(got.size() == 8);

    std::vector<cdouble> xp(16, cdouble(0.0, 0.0));
    for (int k = 0; k < 8; ++k) xp[k] = cdouble(x.i[k], x.q[k]);
    const auto X = naive_dft(xp);
    std::vector<double> p(16);
    double pmean = 0.0;
    for (int m = 0; m < 16; ++m) {
        const double s = std::norm(X[m]) / 8.0;
        p[m] = s * s;
        pmean += p[m];
    }
    pmean /= 16.0;
    std::vector<double> logp(16);
    double mean = 0.0;
    for (int m = 0; m < 16; ++m) {
        logp[m] = std::log10(p[m] + 1e-12 * pmean);
        mean += logp[m];
    }
    mean /= 16.0;
    for (auto& v : logp) v -= mean;
    // fftshift: negative half first, then the nonnegative half.
    std::vector<double> shifted(16);
    for (int m = 0; m < 8; ++m) shifted[m] = logp[8 + m];
    for (int m = 0; m < 8; ++m) shifted[8 + m] = logp[m];
    std::vector<double> want(8);
    double mean2 = 0.0;
    for (int b = 0; b < 8; ++b) {
        want[b] = 0.5 * (shifted[2 * b] + shifted[2 * b + 1]);
        mean2 += want[b];
    }
    mean2 /= 8.0;
    for (int b = 0; b < 8; ++b)
        CHECK(got[b] == doctest::Approx(want[b] - mean2).epsilon(1e-9));
}

TEST_CASE("scale invariance") {
    ClpsSpec spec;
    spec.fft_size = 64;
    spec.band_bins = 32;
    spec.feature_len = 16;
    for (std::uint64_t s = 0; s < 50; ++s) {
        const auto x = random_frame(24, 100 + s);
        const auto base = extract_clps(x, spec);
        for (double alpha : {1e-3, 3.7, 1e3}) {
            IqFrame xs = x;
            for (std::size_t k = 0; k < xs.size(); ++k) {
                xs.i[k] *= alpha;
                xs.q[k] *= alpha;
            }
            const auto f = extract_clps(xs, spec);
            for (std::size_t k = 0; k < f.size(); ++k)
                CHECK(std::abs(f[k] - base[k]) < 1e-9);
        }
    }
}

TEST_CASE("output mean is zero") {
    ClpsSpec spec;
    spec.fft_size = 128;
    spec.band_bins = 64;
    spec.feature_len = 32;
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto f = extract_clps(random_frame(48, 200 + s), spec);
        double m = 0.0;
        for (double v : f) m += v;
        CHECK(std::abs(m / f.size()) < 1e-9);
    }
}

TEST_CASE("circular-shift invariance against the circular-variant oracle") {
    // Test-local circular pipeline: circular ACF, same-size DFT, square, log,
    // center.  Shifting the frame circularly must leave it unchanged.
    const std::size_t n = 16;
    const auto x = random_frame(n, 33);
    auto circular_clps = [&](const IqFrame& f) {
        std::vector<cdouble> v(n);
        for (std::size_t k = 0; k < n; ++k) v[k] = cdouble(f.i[k], f.q[k]);
        std::vector<cdouble> acf(n, cdouble(0.0, 0.0));
        for (std::size_t m = 0; m < n; ++m)
            for (std::size_t t = 0; t < n; ++t)
                acf[m] += v[t] * std::conj(v[(t + n - m) % n]) /
                          static_cast<double>(n);
        const auto S = naive_dft(acf);
        std::vector<double> out(n);
        double mean = 0.0;
        for (std::size_t m = 0; m < n; ++m) {
            out[m] = std::log10(std::abs(S[m]) * std::abs(S[m]) + 1e-12);
            mean += out[m];
        }
        mean /= n;
        for (auto& o : out) o -= mean;
        return out;
    };

    const auto base = circular_clps(x);
    for (std::size_t shift : {1u, 5u, 9u}) {
        IqFrame xs;
        xs.i.resize(n);
        xs.q.resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            xs.i[k] = x.i[(k + shift) % n];
            xs.q[k] = x.q[(k + shift) % n];
        }
        const auto f = circular_clps(xs);
        for (std::size_t k = 0; k < n; ++k)
            CHECK(std::abs(f[k] - base[k]) < 1e-6);
    }
}

TEST_CASE("flat channel invariance through propagate") {
    ClpsSpec spec;
    spec.fft_size = 256;
    spec.band_bins = 128;
    spec.feature_len = 64;
    Rng rng(44);
    const double inf = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 20; ++i) {
        const auto x = random_frame(100, 300 + i);
        const auto base = extract_clps(x, spec);
        ChannelRealization cr;
        const double th = rng.uniform(0.0, 2.0 * kPi);
        const double a = rng.uniform(0.1, 3.0);
        cr.taps = {cdouble(a * std::cos(th), a * std::sin(th))};
        const auto y = propagate(x, cr, 40e6, inf, rng);
        const auto f = extract_clps(y, spec);
        for (std::size_t k = 0; k < f.size(); ++k)
            CHECK(std::abs(f[k] - base[k]) < 1e-9);
    }
}

TEST_CASE("all-zero frame is degenerate, not an error") {
    IqFrame x;
    x.i.assign(32, 0.0);
    x.q.assign(32, 0.0);
    ClpsSpec spec;
    spec.fft_size = 64;
    spec.band_bins = 32;
    spec.feature_len = 32;
    const auto f = extract_clps_feature(x, spec);
    CHECK(f.degenerate);
    for (double v : f.bins) CHECK(v == doctest::Approx(0.0));
}

TEST_CASE("spec validation") {
    ClpsSpec spec;
    spec.fft_size = 100;   // not a power of two
    spec.band_bins = 16;
    spec.feature_len = 16;
    CHECK_THROWS_AS(extract_clps(random_frame(16, 1), spec), ConfigError);
    spec.fft_size = 32;    // < 2N-1 for N = 24
    CHECK_THROWS_AS(extract_clps(random_frame(24, 1), spec), ConfigError);
    spec.fft_size = 64;
    spec.band_bins = 15;   // odd
    CHECK_THROWS_AS(extract_clps(random_frame(24, 1), spec), ConfigError);
    spec.band_bins = 16;
    spec.feature_len = 7;  // does not divide band
    CHECK_THROWS_AS(extract_clps(random_frame(24, 1), spec), ConfigError);
}

TEST_CASE("same-device features cluster under the default channel") {
    // Statistical: intra-device CLPS distance < inter-device distance.
    const FleetSpec fs;
    const auto fleet = sample_fleet(fs, 77);
    const FrameSpec frame;
    const auto base = make_preamble(frame);
    const auto prof = builtin_profile("default");
    ClpsSpec spec;   // production settings
    Rng rng(78);

    const int frames_per_dev = 100;
    std::vector<std::vector<std::vector<double>>> feats(10);
    for (int d = 0; d < 10; ++d) {
        const auto tx = apply_impairment(base, fleet[d]);
        for (int f = 0; f < frames_per_dev; ++f) {
            const auto cr = realize_channel(prof, frame.sample_rate(), rng);
            const auto rx =
                propagate(tx, cr, frame.sample_rate(), prof.ebn0_db, rng);
            feats[d].push_back(extract_clps(rx, spec));
        }
    }
    auto dist = [](const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k)
            s += (a[k] - b[k]) * (a[k] - b[k]);
        return std::sqrt(s);
    };
    double intra = 0.0;
    std::size_t n_intra = 0;
    for (int d = 0; d < 10; ++d)
        for (int f = 1; f < frames_per_dev; f += 7) {
            intra += dist(feats[d][0], feats[d][f]);
            n_intra++;
        }
    double inter = 0.0;
    std::size_t n_inter = 0;
    for (int a = 0; a < 10; ++a)
        for (int b = a + 1; b < 10; ++b) {
            inter += dist(feats[a][0], feats[b][0]);
            n_inter++;
        }
    CHECK(intra / n_intra < inter / n_inter);
}
