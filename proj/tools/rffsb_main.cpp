// rffsb command line: dataset generation, training, attack, evaluation,
// sweeps, reporting, and the acceptance check.  Exit codes: 0 success,
// 2 configuration error, 3 failed acceptance check.

#include <CLI11.hpp>

#include "rffsb/acceptance.hpp"

namespace {

struct GlobalArgs {
    std::optional<std::string> config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> scale;
    std::optional<int> threads;
};

rffsb::RunConfig make_config(const GlobalArgs& g,
                             std::filesystem::path& out_dir) {
    rffsb::RunConfig cfg;
    std::optional<std::filesystem::path> config_dir;
    if (g.config) {
        rffsb::load_config_file(cfg, *g.config);
        config_dir = std::filesystem::absolute(*g.config).parent_path();
    }
    if (g.scale) cfg.apply_scale(*g.scale);
    if (g.seed) cfg.master_seed = *g.seed;
    if (g.threads) cfg.threads = *g.threads;
    cfg.validate();
    out_dir = rffsb::resolve_out_dir(cfg, g.out, config_dir);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rffsb: channel-resistant RF fingerprinting and its "
                 "collusion-driven impersonation attack, at desk scale"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalArgs g;
    app.add_option("--config", g.config, "run configuration file");
    app.add_option("--seed", g.seed, "master seed (overrides config)");
    app.add_option("--out", g.out,
                   "output directory (falls back to config, then $RFFSB_OUT)");
    app.add_option("--scale", g.scale, "preset: desk or paper")
        ->check(CLI::IsMember({"desk", "paper"}));
    app.add_option("--threads", g.threads, "worker threads for data paths");

    auto* cmd_gen = app.add_subcommand("gen-dataset",
                                       "synthesize train/test splits");
    auto* cmd_cls = app.add_subcommand("train-classifier",
                                       "train the fingerprint classifier");
    auto* cmd_att = app.add_subcommand("train-attack",
                                       "train the impersonation generator");
    std::string target_arg = "all";
    cmd_att->add_option("--target", target_arg,
                        "legitimate device id, or 'all' for the configured set");
    auto* cmd_eval = app.add_subcommand("evaluate",
                                        "receiver-side evaluation of artifacts");
    auto* cmd_sweep = app.add_subcommand("sweep", "parameter sweeps");
    std::string axis;
    cmd_sweep->add_option("--axis", axis, "ebn0, k, or channel")->required();
    auto* cmd_rep = app.add_subcommand("report",
                                       "render report files from eval state");
    auto* cmd_check = app.add_subcommand("check",
                                         "run the acceptance criteria");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);   // prints the error and usage
        return 2;
    }

    try {
        std::filesystem::path out_dir;
        const auto cfg = make_config(g, out_dir);
        rffsb::write_run_stamp(cfg, out_dir);

        if (cmd_gen->parsed()) {
            rffsb::stage_gen_dataset(cfg, out_dir);
            std::printf("dataset written to %s\n",
                        (out_dir / "dataset").string().c_str());
        } else if (cmd_cls->parsed()) {
            auto tr = rffsb::stage_train_classifier(cfg, out_dir);
            std::printf("classifier test accuracy %.4f -> %s\n",
                        tr.test_accuracy,
                        rffsb::paths::classifier(out_dir).string().c_str());
        } else if (cmd_att->parsed()) {
            rffsb::stage_train_attack(cfg, out_dir, target_arg);
            std::printf("attack artifacts written under %s\n",
                        rffsb::paths::models(out_dir).string().c_str());
        } else if (cmd_eval->parsed()) {
            rffsb::stage_evaluate(cfg, out_dir);
            std::printf("eval state -> %s\n",
                        rffsb::paths::eval_state(out_dir).string().c_str());
        } else if (cmd_sweep->parsed()) {
            rffsb::stage_sweep(cfg, out_dir, axis);
            std::printf("sweep '%s' merged into %s\n", axis.c_str(),
                        rffsb::paths::eval_state(out_dir).string().c_str());
        } else if (cmd_rep->parsed()) {
            rffsb::stage_report(cfg, out_dir);
            std::printf("report -> %s\n",
                        rffsb::paths::report_dir(out_dir).string().c_str());
        } else if (cmd_check->parsed()) {
            const auto results = rffsb::run_acceptance(cfg, out_dir);
            bool all = true;
            for (const auto& r : results) all &= r.pass;
            std::printf("%s\n", all ? "acceptance: ALL PASS"
                                    : "acceptance: FAILURES PRESENT");
            return all ? 0 : 3;
        }
        return 0;
    } catch (const rffsb::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
