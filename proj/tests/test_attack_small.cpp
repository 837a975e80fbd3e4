#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "rffsb/stages.hpp"

using namespace rffsb;
namespace fs = std::filesystem;

namespace {

// Miniature scenario: 3 devices, short frames, shallow nets.  Exercises the
// full chain in seconds; threshold checks at realistic scale live in the
// acceptance suite.
RunConfig tiny() {
    RunConfig cfg;
    cfg.master_seed = 777;
    cfg.frame.n_symbols = 1;
    cfg.frame.oversample = 4;     // 128 samples per frame
    cfg.clps.fft_size = 512;
    cfg.clps.band_bins = 64;
    cfg.clps.feature_len = 32;
    cfg.fleet.n_legit = 3;
    cfg.frames_train = 40;
    cfg.frames_test = 10;
    cfg.targets = {1};
    cfg.cls_epochs = 4;
    cfg.cls_batch = 16;
    cfg.cls_width = 4;
    cfg.vae_latent = 8;
    cfg.vae_width = 4;
    cfg.attack_steps = 40;
    cfg.attack_batch = 4;
    cfg.attack_lr = 2e-3;
    cfg.template_bank = 8;
    cfg.attack_eval_every = 10;
    cfg.attack_eval_frames = 12;
    cfg.attack_patience = 1000;
    cfg.eval_frames = 20;
    cfg.rawiq_frames_train = 20;
    cfg.rawiq_epochs = 2;
    cfg.rawiq_steps = 8;
    cfg.sweep_ebn0 = {0, 30};
    cfg.sweep_k = {0, 10};
    cfg.sweep_profiles = {"indoor_a"};
    cfg.matrix_profiles = {"awgn", "indoor_a"};
    cfg.validate();
    return cfg;
}

}  // namespace

TEST_CASE("dataset rows are ordered, labeled, and reproducible") {
    auto cfg = tiny();
    auto ds = build_dataset(cfg);
    const std::size_t n_dev = cfg.fleet.n_legit + 1;
    CHECK(ds.train.rows() == n_dev * cfg.frames_train);
    CHECK(ds.test.rows() == n_dev * cfg.frames_test);
    CHECK(ds.train.n_samples == 128u);
    CHECK(ds.train.feature_len == 32u);
    for (std::size_t r = 0; r < ds.train.rows(); ++r)
        CHECK(ds.train.labels[r] == static_cast<int>(r / cfg.frames_train));

    auto ds2 = build_dataset(cfg);
    CHECK(ds.train.frames == ds2.train.frames);
    CHECK(ds.train.features == ds2.train.features);

    // thread count must not change the rows
    RunConfig threaded = cfg;
    threaded.threads = 3;
    auto ds3 = build_dataset(threaded);
    CHECK(ds.train.frames == ds3.train.frames);
    CHECK(ds.test.features == ds3.test.features);

    // different master seed, different data
    RunConfig other = cfg;
    other.master_seed = 778;
    auto ds4 = build_dataset(other);
    CHECK(ds.train.features != ds4.train.features);
}

TEST_CASE("classifier trains above chance on the tiny fleet") {
    auto cfg = tiny();
    auto ds = build_dataset(cfg);
    auto tr = train_classifier(ds, cfg);
    CHECK(tr.log.size() == cfg.cls_epochs);
    CHECK(tr.test_accuracy > 1.0 / cfg.fleet.n_legit);
    // confusion rows sum to per-class test counts
    for (int c = 0; c < cfg.fleet.n_legit; ++c) {
        int row = 0;
        for (int p = 0; p < cfg.fleet.n_legit; ++p) row += tr.confusion[c][p];
        CHECK(row == static_cast<int>(cfg.frames_test));
    }
}

TEST_CASE("attack training is deterministic and fills its artifacts") {
    auto cfg = tiny();
    auto ds = build_dataset(cfg);
    auto tr = train_classifier(ds, cfg);
    const auto fleet = sample_fleet(cfg.fleet, cfg.master_seed);

    auto a = train_attack(tr.model, cfg, fleet, 1, cfg.train_profile);
    auto b = train_attack(tr.model, cfg, fleet, 1, cfg.train_profile);

    CHECK(a.templates.size() == cfg.template_bank);
    CHECK(a.templates[0].size() == cfg.clps.feature_len);
    CHECK(a.curve.size() >= 1);
    CHECK(a.best_colluder_asr >= 0.0);
    CHECK(a.best_colluder_asr <= 1.0);
    CHECK_FALSE(a.patience_warning);

    REQUIRE(a.vae.params.count() == b.vae.params.count());
    for (std::size_t k = 0; k < a.vae.params.count(); ++k)
        CHECK(a.vae.params.items()[k].second.values() ==
              b.vae.params.items()[k].second.values());
    CHECK(a.best_colluder_asr == b.best_colluder_asr);

    // optimizer actually moved the weights
    Rng init_rng(cfg.master_seed, StreamId::train,
                 0x5A5AULL ^ fnv1a64(cfg.train_profile) ^ 1ULL, 0);
    nn::VaeHyper vh;
    vh.n_samples = 128;
    vh.latent_dim = cfg.vae_latent;
    vh.base_width = cfg.vae_width;
    nn::VaeModel<float> fresh(vh, init_rng);
    bool moved = false;
    for (std::size_t k = 0; k < a.vae.params.count(); ++k)
        moved |= a.vae.params.items()[k].second.values() !=
                 fresh.params.items()[k].second.values();
    CHECK(moved);

    CHECK_THROWS_AS(train_attack(tr.model, cfg, fleet, 9, cfg.train_profile),
                    ConfigError);
    CHECK_THROWS_AS(train_attack(tr.model, cfg, fleet, -1, cfg.train_profile),
                    ConfigError);
}

TEST_CASE("spoofing is seed-deterministic with per-frame variation") {
    auto cfg = tiny();
    const auto fleet = sample_fleet(cfg.fleet, cfg.master_seed);
    Rng rng(5);
    nn::VaeHyper vh;
    vh.n_samples = 128;
    vh.latent_dim = cfg.vae_latent;
    vh.base_width = cfg.vae_width;
    nn::VaeModel<float> vae(vh, rng);

    const auto& prof = cfg.profile("indoor_a");
    auto s1 = spoof(vae, fleet.back(), prof, cfg, 5, 42);
    auto s2 = spoof(vae, fleet.back(), prof, cfg, 5, 42);
    auto s3 = spoof(vae, fleet.back(), prof, cfg, 5, 43);
    REQUIRE(s1.size() == 5);
    CHECK(s1[0].rx.i == s2[0].rx.i);
    CHECK(s1[4].feature == s2[4].feature);
    CHECK(s1[0].rx.i != s3[0].rx.i);
    CHECK(s1[0].rx.i != s1[1].rx.i);   // fresh channel per frame
    CHECK(s1[0].feature.size() == cfg.clps.feature_len);
}

TEST_CASE("full pipeline stages produce a coherent run directory") {
    auto cfg = tiny();
    const auto out = fs::temp_directory_path() / "rffsb_stage_ut";
    fs::remove_all(out);

    write_run_stamp(cfg, out);
    CHECK(fs::exists(out / "resolved_config.json"));

    stage_gen_dataset(cfg, out);
    CHECK(fs::exists(paths::dataset(out, "train") / "manifest.json"));
    CHECK(fs::exists(paths::dataset(out, "test") / "frames.f32"));

    stage_train_classifier(cfg, out);
    CHECK(fs::exists(paths::classifier(out)));
    CHECK(fs::exists(out / "logs" / "classifier_log.json"));

    for (const std::string pn : {"default", "awgn", "indoor_a"})
        stage_train_attack_one(cfg, out, 1, pn);
    CHECK(fs::exists(paths::vae(out, "default", 1)));

    stage_train_classifier_rawiq(cfg, out);
    stage_train_attack_one(cfg, out, 1, cfg.train_profile, true);
    CHECK(fs::exists(paths::classifier_rawiq(out)));
    CHECK(fs::exists(paths::vae(out, cfg.train_profile, 1, true)));

    stage_evaluate(cfg, out);
    auto st = load_eval_state(out);
    REQUIRE(st.contains("classifier"));
    REQUIRE(st.contains("attack"));
    REQUIRE(st.contains("cross_channel"));
    REQUIRE(st.contains("rawiq"));
    CHECK(st["attack"]["per_target"].contains("1"));
    const double asr =
        st["attack"]["per_target"]["1"]["asr"].get<double>();
    CHECK(asr >= 0.0);
    CHECK(asr <= 1.0);
    CHECK(st["attack"]["per_target"]["1"]["n"].get<int>() ==
          static_cast<int>(cfg.eval_frames));
    // both matrix profiles trained -> full |train| x |test| grid
    CHECK(st["cross_channel"]["cells"].size() == 4);
    CHECK(st["cross_channel"]["absent"].empty());

    stage_sweep(cfg, out, "ebn0");
    stage_sweep(cfg, out, "k");
    CHECK_THROWS_AS(stage_sweep(cfg, out, "doppler"), ConfigError);
    st = load_eval_state(out);
    REQUIRE(st.contains("sweep_ebn0"));
    REQUIRE(st.contains("sweep_k"));
    CHECK(st["sweep_ebn0"]["per_profile"].contains("indoor_a"));
    CHECK(st["sweep_ebn0"]["per_profile"]["indoor_a"]["points"].size() == 2);

    stage_report(cfg, out);
    CHECK(fs::exists(paths::report_dir(out) / "report.json"));
    CHECK(fs::exists(paths::report_dir(out) / "asr_cross.csv"));
    CHECK(fs::exists(paths::report_dir(out) / "sweep_ebn0.csv"));
    CHECK(fs::exists(paths::report_dir(out) / "sweep_k.csv"));
    CHECK(fs::exists(paths::report_dir(out) / "confusion.csv"));

    // evaluate is replayable: rerun and compare the persisted state
    auto before = load_eval_state(out);
    stage_evaluate(cfg, out);
    stage_sweep(cfg, out, "ebn0");
    stage_sweep(cfg, out, "k");
    auto after = load_eval_state(out);
    CHECK(before == after);

    fs::remove_all(out);
}

TEST_CASE("report stage demands prior evaluation") {
    auto cfg = tiny();
    const auto out = fs::temp_directory_path() / "rffsb_stage_empty";
    fs::remove_all(out);
    fs::create_directories(out);
    CHECK_THROWS_AS(stage_report(cfg, out), IoError);
    fs::remove_all(out);
}

TEST_CASE("train-attack stage parses its target argument") {
    auto cfg = tiny();
    const auto out = fs::temp_directory_path() / "rffsb_stage_badtarget";
    fs::remove_all(out);
    CHECK_THROWS_AS(stage_train_attack(cfg, out, "seven"), ConfigError);
    fs::remove_all(out);
}
