#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rffsb/diff_physics.hpp"
#include "rffsb/gradcheck.hpp"
#include "rffsb/layers.hpp"

using namespace rffsb;
using nn::Tensor;

TEST_CASE("conv1d worked example") {
    // x=[1,2,3], w=[1,1], stride 1, no padding -> [3,5]
    auto x = Tensor<double>::from({1, 1, 3}, {1, 2, 3});
    auto w = Tensor<double>::from({1, 1, 2}, {1, 1});
    auto b = Tensor<double>::zeros({1});
    auto y = nn::conv1d(x, w, b, 1, 0);
    REQUIRE(y.shape() == nn::Shape{1, 1, 2});
    CHECK(y.values()[0] == doctest::Approx(3.0));
    CHECK(y.values()[1] == doctest::Approx(5.0));
}

TEST_CASE("conv adjoint identity <conv(x),y> == <x,convT(y)>") {
    Rng rng(1);
    const std::size_t B = 2, Ci = 3, Co = 4, L = 10, K = 3, s = 2, p = 1;
    const std::size_t Lo = (L + 2 * p - K) / s + 1;
    auto rnd = [&](nn::Shape sh) {
        std::vector<double> v(nn::shape_numel(sh));
        for (auto& x : v) x = rng.gauss();
        return Tensor<double>::from(sh, v);
    };
    auto x = rnd({B, Ci, L});
    auto w = rnd({Co, Ci, K});
    auto y = rnd({B, Co, Lo});
    auto zb = Tensor<double>::zeros({Co});

    auto cx = nn::conv1d(x, w, zb, s, p);
    // The [Co,Ci,K] conv weight reads as [Cin,Cout,K] for the transpose, so
    // the same tensor realizes the exact adjoint once the geometry matches:
    // (Lo-1)*s - 2p + K + out_pad == L.
    const std::size_t out_pad = L - ((Lo - 1) * s - 2 * p + K);
    auto zbi = Tensor<double>::zeros({Ci});
    auto ty = nn::conv1d_transpose(y, w, zbi, s, p, out_pad);
    REQUIRE(ty.shape() == nn::Shape{B, Ci, L});

    double lhs = 0.0, rhs = 0.0;
    for (std::size_t k = 0; k < cx.numel(); ++k)
        lhs += cx.values()[k] * y.values()[k];
    for (std::size_t k = 0; k < x.numel(); ++k)
        rhs += x.values()[k] * ty.values()[k];
    CHECK(std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)) < 1e-6);
}

TEST_CASE("cross entropy on uniform logits equals ln(C)") {
    for (std::size_t C : {2u, 5u, 10u}) {
        auto lg = Tensor<double>::zeros({3, C});
        std::vector<int> labels = {0, 1, 0};
        auto loss = nn::softmax_cross_entropy(lg, labels);
        CHECK(loss.values()[0] ==
              doctest::Approx(std::log(static_cast<double>(C))).epsilon(1e-12));
    }
}

TEST_CASE("adam drives (x-3)^2 close to the optimum") {
    nn::ParamSet<double> ps;
    auto x = ps.make("x", {1});
    x.values()[0] = 0.0;
    nn::Adam<double> opt(ps, 0.1);
    for (int step = 0; step < 100; ++step) {
        opt.zero_grad();
        auto t = Tensor<double>::from({1}, {3.0});
        auto loss = nn::mse_loss(x, t);
        loss.backward();
        opt.step();
    }
    CHECK(std::abs(x.values()[0] - 3.0) < 0.1);
}

TEST_CASE("backward requires a scalar root") {
    auto x = Tensor<double>::from({2}, {1.0, 2.0}, true);
    auto y = nn::scale(x, 2.0);
    CHECK_THROWS_AS(y.backward(), ShapeError);
}

TEST_CASE("shared subexpressions accumulate gradients") {
    auto x = Tensor<double>::from({1}, {1.5}, true);
    auto y = nn::add(x, x);            // y = 2x
    auto t = Tensor<double>::zeros({1});
    auto loss = nn::mse_loss(y, t);    // (2x)^2 -> d/dx = 8x = 12
    loss.backward();
    CHECK(x.grad()[0] == doctest::Approx(12.0).epsilon(1e-12));
}

TEST_CASE("zero_grad resets accumulation between steps") {
    nn::ParamSet<double> ps;
    auto x = ps.make("x", {1});
    x.values()[0] = 2.0;
    nn::Adam<double> opt(ps, 0.01);
    auto run = [&] {
        auto t = Tensor<double>::zeros({1});
        auto loss = nn::mse_loss(x, t);
        loss.backward();
        return x.grad()[0];
    };
    const double g1 = run();
    const double g2 = run();            // accumulates without zero_grad
    CHECK(g2 == doctest::Approx(2.0 * g1));
    opt.zero_grad();
    const double g3 = run();
    CHECK(g3 == doctest::Approx(g1));
}

TEST_CASE("gradient check across the op set") {
    Rng rng(2);
    auto tgt = [&](nn::Shape s) {
        std::vector<double> v(nn::shape_numel(s));
        for (auto& x : v) x = rng.gauss();
        return Tensor<double>::from(s, v);
    };

    SUBCASE("linear") {
        auto t = tgt({2, 3});
        auto r = nn::gradcheck(
            {{2, 4}, {4, 3}, {3}},
            [&](std::vector<Tensor<double>>& L) {
                return nn::mse_loss(nn::linear(L[0], L[1], L[2]), t);
            },
            rng);
        CHECK(r.max_err < 1e-6);
    }
    SUBCASE("conv and transposed conv") {
        auto t = tgt({2, 2, 4});
        auto r = nn::gradcheck(
            {{2, 3, 7}, {2, 3, 3}, {2}},
            [&](std::vector<Tensor<double>>& L) {
                return nn::mse_loss(nn::conv1d(L[0], L[1], L[2], 2, 1), t);
            },
            rng);
        CHECK(r.max_err < 1e-6);
        auto t2 = tgt({2, 2, 8});
        auto r2 = nn::gradcheck(
            {{2, 3, 4}, {3, 2, 3}, {2}},
            [&](std::vector<Tensor<double>>& L) {
                return nn::mse_loss(
                    nn::conv1d_transpose(L[0], L[1], L[2], 2, 1, 1), t2);
            },
            rng);
        CHECK(r2.max_err < 1e-6);
    }
    SUBCASE("batchnorm both modes") {
        auto t = tgt({3, 2, 4});
        auto r = nn::gradcheck(
            {{3, 2, 4}, {2}, {2}},
            [&](std::vector<Tensor<double>>& L) {
                nn::BatchNormStats<double> st;
                return nn::mse_loss(
                    nn::batchnorm1d(L[0], L[1], L[2], st, true), t);
            },
            rng);
        CHECK(r.max_err < 1e-5);
        nn::BatchNormStats<double> fixed;
        fixed.running_mean = {0.2, -0.4};
        fixed.running_var = {0.9, 1.7};
        auto r2 = nn::gradcheck(
            {{3, 2, 4}, {2}, {2}},
            [&](std::vector<Tensor<double>>& L) {
                nn::BatchNormStats<double> st = fixed;
                return nn::mse_loss(
                    nn::batchnorm1d(L[0], L[1], L[2], st, false), t);
            },
            rng);
        CHECK(r2.max_err < 1e-6);
    }
    SUBCASE("losses") {
        const std::vector<int> labels = {2, 0, 1};
        auto r = nn::gradcheck(
            {{3, 4}},
            [&](std::vector<Tensor<double>>& L) {
                return nn::softmax_cross_entropy(L[0], labels);
            },
            rng);
        CHECK(r.max_err < 1e-6);
        auto r2 = nn::gradcheck(
            {{3, 4}, {3, 4}},
            [&](std::vector<Tensor<double>>& L) {
                return nn::gaussian_kl(L[0], L[1]);
            },
            rng);
        CHECK(r2.max_err < 1e-6);
    }
    SUBCASE("reparameterized sample") {
        auto t = tgt({2, 3});
        std::vector<double> eps = {0.3, -1.2, 0.7, 0.1, -0.4, 1.9};
        auto r = nn::gradcheck(
            {{2, 3}, {2, 3}},
            [&](std::vector<Tensor<double>>& L) {
                std::vector<double> e(eps);
                return nn::mse_loss(nn::gaussian_sample(L[0], L[1], e), t);
            },
            rng);
        CHECK(r.max_err < 1e-6);
    }
    SUBCASE("concat") {
        auto t = tgt({2, 5, 3});
        auto r = nn::gradcheck(
            {{2, 2, 3}, {2, 3, 3}},
            [&](std::vector<Tensor<double>>& L) {
                std::vector<Tensor<double>> parts = {L[0], L[1]};
                return nn::mse_loss(nn::concat(parts, 1), t);
            },
            rng);
        CHECK(r.max_err < 1e-6);
    }
}

TEST_CASE("impairment and channel propagation gradients") {
    Rng rng(3);
    auto tgt = [&](nn::Shape s) {
        std::vector<double> v(nn::shape_numel(s));
        for (auto& x : v) x = rng.gauss();
        return Tensor<double>::from(s, v);
    };
    SUBCASE("apply_impairment_diff") {
        DeviceProfile dev{-0.22, 0.19};
        auto t = tgt({2, 2, 8});
        auto r = nn::gradcheck(
            {{2, 2, 8}},
            [&](std::vector<Tensor<double>>& L) {
                return nn::mse_loss(nn::apply_impairment_diff(L[0], dev), t);
            },
            rng);
        CHECK(r.max_err < 1e-6);
    }
    SUBCASE("propagate_diff with fixed draws") {
        const std::size_t N = 12;
        ChannelProfile prof = builtin_profile("vehicular_a");
        std::vector<nn::ChannelDraw> draws(2);
        for (auto& d : draws) {
            d = nn::draw_channel(prof, 40e6, N, rng);
            d.ebn0_db = 5.0;
            d.ref_power = 2.0;
        }
        auto t = tgt({2, 2, N});
        auto r = nn::gradcheck(
            {{2, 2, N}},
            [&](std::vector<Tensor<double>>& L) {
                return nn::mse_loss(nn::propagate_diff(L[0], draws, 40e6), t);
            },
            rng);
        CHECK(r.max_err < 1e-6);
    }
}

TEST_CASE("extract_clps_diff forward matches extract_clps") {
    ClpsSpec spec;
    spec.fft_size = 128;
    spec.band_bins = 64;
    spec.feature_len = 32;
    Rng rng(4);
    const std::size_t N = 64, B = 4;
    for (int rep = 0; rep < 25; ++rep) {
        std::vector<double> v(B * 2 * N);
        for (auto& x : v) x = rng.gauss();
        auto xt = Tensor<double>::from({B, 2, N}, v);
        auto f = nn::extract_clps_diff(xt, spec);
        for (std::size_t b = 0; b < B; ++b) {
            IqFrame fr;
            fr.i.assign(v.begin() + (b * 2 + 0) * N,
                        v.begin() + (b * 2 + 0) * N + N);
            fr.q.assign(v.begin() + (b * 2 + 1) * N,
                        v.begin() + (b * 2 + 1) * N + N);
            const auto want = extract_clps(fr, spec);
            for (std::size_t k = 0; k < want.size(); ++k)
                CHECK(std::abs(f.values()[b * want.size() + k] - want[k]) <
                      1e-9);
        }
    }
}

TEST_CASE("extract_clps_diff gradient on a 64-sample frame") {
    ClpsSpec spec;
    spec.fft_size = 128;
    spec.band_bins = 32;
    spec.feature_len = 16;
    Rng rng(5);
    std::vector<double> tv(16);
    for (auto& x : tv) x = rng.gauss();
    auto t = Tensor<double>::from({1, 16}, tv);
    auto r = nn::gradcheck(
        {{1, 2, 64}},
        [&](std::vector<Tensor<double>>& L) {
            return nn::mse_loss(nn::extract_clps_diff(L[0], spec), t);
        },
        rng);
    CHECK(r.max_err < 1e-4);
}

TEST_CASE("gradient of the CLPS mean is identically zero") {
    ClpsSpec spec;
    spec.fft_size = 64;
    spec.band_bins = 16;
    spec.feature_len = 8;
    Rng rng(6);
    std::vector<double> v(2 * 24);
    for (auto& x : v) x = rng.gauss();
    auto xt = Tensor<double>::from({1, 2, 24}, v, true);
    auto f = nn::extract_clps_diff(xt, spec);
    // mean(CLPS) = sum/8, built as a linear map so it stays on the tape
    auto w = Tensor<double>::from({8, 1}, std::vector<double>(8, 1.0 / 8.0));
    auto b = Tensor<double>::zeros({1});
    auto m = nn::linear(f, w, b);
    auto m2 = nn::reshape(m, {1});
    auto loss = nn::mse_loss(m2, Tensor<double>::zeros({1}));
    loss.backward();
    for (std::size_t k = 0; k < xt.numel(); ++k)
        CHECK(std::abs(xt.grad()[k]) < 1e-12);
}

TEST_CASE("kaiming-style init stays within the fan-in bound") {
    Rng rng(7);
    nn::ParamSet<float> ps;
    nn::Dense<float> d(ps, "d", 64, 32, rng);
    const double bound = 1.0 / std::sqrt(64.0);
    for (float v : d.w.values()) {
        CHECK(v >= -bound);
        CHECK(v <= bound);
    }
}

TEST_CASE("adam raises on a parameter that never received a gradient") {
    nn::ParamSet<double> ps;
    auto x = ps.make("x", {1});
    auto y = ps.make("unused", {2});
    (void)y;
    nn::Adam<double> opt(ps, 0.1);
    // no zero_grad: "unused" never enters a graph, so its grad stays unsized
    auto t = Tensor<double>::zeros({1});
    auto loss = nn::mse_loss(x, t);
    loss.backward();
    CHECK_THROWS_AS(opt.step(), ShapeError);
}
