#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "rffsb/eval.hpp"

using namespace rffsb;
namespace fs = std::filesystem;

namespace {

std::string slurp_file(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

int count_lines(const std::string& s) {
    int n = 0;
    for (char c : s) n += c == '\n';
    return n;
}

}  // namespace

TEST_CASE("wilson interval matches reference values") {
    // [DERIVED] frozen from an independent implementation of the Wilson score
    // interval (z = 1.96), bounds clamped to [0, 1]
    struct Case { std::size_t h, n; double lo, hi; };
    const Case cases[] = {
        {7, 10, 0.396773219979565, 0.892210712513788},
        {0, 20, 0.0, 0.161130125494933},
        {20, 20, 0.838869874505067, 1.0},
        {95, 100, 0.888248034727912, 0.978456638543686},
        {1, 1, 0.206543291473893, 1.0},
    };
    for (const auto& c : cases) {
        auto w = wilson_interval(c.h, c.n);
        CHECK(w.lo == doctest::Approx(c.lo).epsilon(1e-12));
        CHECK(w.hi == doctest::Approx(c.hi).epsilon(1e-12));
    }
    CHECK_THROWS_AS(wilson_interval(0, 0), ConfigError);
}

TEST_CASE("average ranks share tie means") {
    auto r = average_ranks({10.0, 30.0, 20.0, 30.0});
    CHECK(r == std::vector<double>{1.0, 3.5, 2.0, 3.5});
    auto r2 = average_ranks({5.0, 5.0, 5.0});
    CHECK(r2 == std::vector<double>{2.0, 2.0, 2.0});
}

TEST_CASE("spearman rho reference values") {
    CHECK(spearman_rho({1, 2, 3, 4, 5}, {10, 20, 30, 40, 50}) ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(spearman_rho({1, 2, 3, 4, 5}, {5, 4, 3, 2, 1}) ==
          doctest::Approx(-1.0).epsilon(1e-12));
    // [DERIVED] tie handling cross-checked against a rank-correlation oracle
    CHECK(spearman_rho({1.0, 2.0, 2.0, 3.0}, {10.0, 10.0, 20.0, 30.0}) ==
          doctest::Approx(0.8333333333333335).epsilon(1e-12));
    CHECK(spearman_rho({3.1, -0.5, 2.2, 8.9, 0.0, 4.4, -2.2, 7.1},
                       {0.1, 1.2, -3.4, 5.5, 2.0, 2.0, -1.0, 4.2}) ==
          doctest::Approx(0.7065994945288228).epsilon(1e-12));
    CHECK(spearman_rho({1, 2, 3}, {7, 7, 7}) == 0.0);
    CHECK_THROWS_AS(spearman_rho({1.0}, {2.0}), ConfigError);
    CHECK_THROWS_AS(spearman_rho({1.0, 2.0}, {2.0}), ConfigError);
}

TEST_CASE("attack success rate is the hit fraction") {
    CHECK(attack_success({4, 4, 4}, 4).asr == 1.0);
    CHECK(attack_success({1, 2, 3}, 4).asr == 0.0);
    auto r = attack_success({4, 4, 4, 4, 4, 4, 4, 0, 1, 2}, 4);
    CHECK(r.asr == doctest::Approx(0.7));
    CHECK(r.hits == 7);
    CHECK(r.n == 10);
    CHECK(r.ci.lo > 0.0);
    CHECK(r.ci.hi < 1.0);
    CHECK_THROWS_AS(attack_success({}, 4), ConfigError);
}

TEST_CASE("cell seeds separate profiles, variants, and targets") {
    RunConfig cfg;
    std::vector<std::uint64_t> seeds = {
        cell_seed(cfg, "indoor_a", 1, 0), cell_seed(cfg, "indoor_a", 1, 1),
        cell_seed(cfg, "indoor_a", 2, 0), cell_seed(cfg, "indoor_b", 1, 0),
        cell_seed(cfg, "indoor_a|awgn", 2, 0),
    };
    std::sort(seeds.begin(), seeds.end());
    CHECK(std::adjacent_find(seeds.begin(), seeds.end()) == seeds.end());
}

TEST_CASE("attack artifact round trip") {
    nn::VaeHyper hp;
    hp.n_samples = 32;
    hp.latent_dim = 4;
    hp.base_width = 4;
    Rng rng(50);
    AttackOutcome att;
    att.vae = nn::VaeModel<float>(hp, rng);
    att.templates = {{1.0, 2.0, 3.0}, {4.0, 5.0, 6.0}};
    att.best_colluder_asr = 0.875;
    att.patience_warning = true;

    const auto path = fs::temp_directory_path() / "rffsb_attack_art.rfnn";
    save_attack_artifact(path, att);
    auto r = load_attack_artifact(path);
    fs::remove(path);

    CHECK(r.templates == att.templates);
    CHECK(r.best_colluder_asr == 0.875);
    CHECK(r.patience_warning);
    for (std::size_t k = 0; k < att.vae.params.count(); ++k)
        CHECK(att.vae.params.items()[k].second.values() ==
              r.vae.params.items()[k].second.values());
}

TEST_CASE("artifact paths are stable") {
    const fs::path out = "/tmp/x";
    CHECK(paths::classifier(out) == fs::path("/tmp/x/models/classifier.rfnn"));
    CHECK(paths::vae(out, "indoor_a", 4) ==
          fs::path("/tmp/x/models/vae_indoor_a_t4.rfnn"));
    CHECK(paths::vae(out, "awgn", 0, true) ==
          fs::path("/tmp/x/models/vae_rawiq_awgn_t0.rfnn"));
    CHECK(paths::eval_state(out) == fs::path("/tmp/x/eval/eval_state.json"));
}

TEST_CASE("emit_report writes the full deterministic file set") {
    RunConfig cfg;
    cfg.validate();

    nlohmann::json state;
    state["classifier"] = {
        {"test_accuracy", 0.9},
        {"confusion", {{3, 1}, {0, 4}}},
    };
    nlohmann::json cells = nlohmann::json::array();
    for (const std::string tp : {"awgn", "indoor_a"})
        for (const std::string rp : {"awgn", "indoor_a"})
            cells.push_back({{"train_profile", tp},
                             {"test_profile", rp},
                             {"mean_asr", tp == rp ? 0.95 : 0.5},
                             {"per_target", nlohmann::json::object()}});
    state["cross_channel"] = {{"cells", cells},
                              {"absent", nlohmann::json::array()}};
    nlohmann::json pt = {
        {"ebn0_db", 10.0},
        {"mean_asr", 0.8},
        {"per_target",
         {{"1", {{"asr", 0.8}, {"wilson_lo", 0.6}, {"wilson_hi", 0.9}}}}},
    };
    state["sweep_ebn0"] = {
        {"values", {10.0}},
        {"per_profile",
         {{"indoor_a",
           {{"points", nlohmann::json::array({pt})}, {"spearman_rho", 1.0}}}}},
    };
    state["sweep_k"] = {{"values", nlohmann::json::array()},
                        {"per_profile", nlohmann::json::object()}};

    const auto base = fs::temp_directory_path() / "rffsb_report_ut";
    fs::remove_all(base);
    const auto out_a = base / "a", out_b = base / "b";
    emit_report(cfg, state, out_a, "rffsb test");
    emit_report(cfg, state, out_b, "rffsb test");

    const auto ra = paths::report_dir(out_a);
    // matrix rows = |train| x |test| (+1 header)
    const auto cross = slurp_file(ra / "asr_cross.csv");
    CHECK(count_lines(cross) == 5);
    CHECK(cross.rfind("train_profile,test_profile,mean_asr\n", 0) == 0);
    CHECK(cross.find("awgn,indoor_a,0.500000") != std::string::npos);

    const auto conf = slurp_file(ra / "confusion.csv");
    CHECK(conf.find("0,3,1") != std::string::npos);
    CHECK(conf.find("1,0,4") != std::string::npos);

    const auto swe = slurp_file(ra / "sweep_ebn0.csv");
    CHECK(swe.find("indoor_a,10.000000,0.800000,0.600000,0.900000") !=
          std::string::npos);
    CHECK(fs::exists(ra / "plots" / "asr_vs_ebn0_indoor_a.dat"));

    // empty sweep list -> valid report, header-only table
    const auto swk = slurp_file(ra / "sweep_k.csv");
    CHECK(count_lines(swk) == 1);

    auto rep = nlohmann::json::parse(slurp_file(ra / "report.json"));
    CHECK(rep.at("tool_version") == "rffsb test");
    CHECK(rep.at("scenario").at("master_seed").get<std::uint64_t>() ==
          cfg.master_seed);

    // re-emit is byte identical, file for file
    for (const auto& e : fs::recursive_directory_iterator(ra)) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), ra);
        CHECK(slurp_file(e.path()) ==
              slurp_file(paths::report_dir(out_b) / rel));
    }
    fs::remove_all(base);
}
