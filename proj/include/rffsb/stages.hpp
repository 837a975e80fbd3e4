#pragma once
// Command-level stages: each writes its artifacts under the run's output
// directory and can be replayed independently from the stamped config.

#include "rffsb/eval.hpp"

namespace rffsb {

inline constexpr const char* kToolVersion = "rffsb 0.1.0";

inline void write_run_stamp(const RunConfig& cfg,
                            const std::filesystem::path& out) {
    std::filesystem::create_directories(out);
    nlohmann::json j = cfg.to_json();
    j["tool_version"] = kToolVersion;
    write_text(out / "resolved_config.json", j.dump(2) + "\n");
}

inline void stage_gen_dataset(const RunConfig& cfg,
                              const std::filesystem::path& out) {
    auto ds = build_dataset(cfg);
    ds.train.save(paths::dataset(out, "train").string());
    ds.test.save(paths::dataset(out, "test").string());
}

inline ClassifierTraining stage_train_classifier(
    const RunConfig& cfg, const std::filesystem::path& out) {
    BuiltDataset ds;
    ds.train = DatasetSplit::load(paths::dataset(out, "train").string());
    ds.test = DatasetSplit::load(paths::dataset(out, "test").string());
    auto tr = train_classifier(ds, cfg);
    std::filesystem::create_directories(paths::models(out));
    nn::save_classifier(tr.model, paths::classifier(out));
    std::filesystem::create_directories(out / "logs");
    nlohmann::json log = {{"epochs", tr.log},
                          {"test_accuracy", tr.test_accuracy},
                          {"confusion", tr.confusion}};
    write_text(out / "logs" / "classifier_log.json", log.dump(2) + "\n");
    return tr;
}

inline ClassifierTraining stage_train_classifier_rawiq(
    const RunConfig& cfg, const std::filesystem::path& out) {
    RunConfig rcfg = cfg;
    rcfg.frames_train = std::min(cfg.frames_train, cfg.rawiq_frames_train);
    BuiltDataset ds;
    {
        const auto fleet = sample_fleet(cfg.fleet, cfg.master_seed);
        const auto& prof = cfg.profile(cfg.train_profile);
        ds.train = build_split(rcfg, fleet, prof, rcfg.frames_train, 0);
        ds.test = build_split(rcfg, fleet, prof, rcfg.frames_test, 1);
    }
    auto tr = train_classifier_rawiq(ds, rcfg);
    std::filesystem::create_directories(paths::models(out));
    nn::save_classifier(tr.model, paths::classifier_rawiq(out));
    std::filesystem::create_directories(out / "logs");
    nlohmann::json log = {{"epochs", tr.log},
                          {"test_accuracy", tr.test_accuracy}};
    write_text(out / "logs" / "classifier_rawiq_log.json", log.dump(2) + "\n");
    return tr;
}

// One attack artifact: target impersonation trained against `profile_name`'s
// colluder path, persisted as models/vae_<profile>_t<target>.rfnn.
inline AttackOutcome stage_train_attack_one(const RunConfig& cfg,
                                            const std::filesystem::path& out,
                                            int target,
                                            const std::string& profile_name,
                                            bool raw_iq = false) {
    auto classifier = nn::load_classifier<float>(
        raw_iq ? paths::classifier_rawiq(out) : paths::classifier(out));
    const auto fleet = sample_fleet(cfg.fleet, cfg.master_seed);
    auto att = train_attack(classifier, cfg, fleet, target, profile_name, raw_iq);
    std::filesystem::create_directories(paths::models(out));
    save_attack_artifact(paths::vae(out, profile_name, target, raw_iq), att);
    std::filesystem::create_directories(out / "logs");
    nlohmann::json log = {{"target", target},
                          {"profile", profile_name},
                          {"raw_iq", raw_iq},
                          {"best_colluder_asr", att.best_colluder_asr},
                          {"patience_warning", att.patience_warning},
                          {"curve", att.curve}};
    const std::string stem = (raw_iq ? std::string("attack_rawiq_")
                                     : std::string("attack_")) +
                             profile_name + "_t" + std::to_string(target);
    write_text(out / "logs" / (stem + "_log.json"), log.dump(2) + "\n");
    if (att.patience_warning)
        std::fprintf(stderr,
                     "warning: attack(%s, target %d): colluder ASR plateaued; "
                     "restored best snapshot\n",
                     profile_name.c_str(), target);
    return att;
}

inline void stage_train_attack(const RunConfig& cfg,
                               const std::filesystem::path& out,
                               const std::string& target_arg) {
    std::vector<int> targets;
    if (target_arg == "all") {
        targets = cfg.targets;
    } else {
        try {
            targets.push_back(std::stoi(target_arg));
        } catch (const std::exception&) {
            throw ConfigError("train-attack: --target must be a device id or 'all'");
        }
    }
    for (int t : targets) stage_train_attack_one(cfg, out, t, cfg.train_profile);
}

inline nlohmann::json load_eval_state(const std::filesystem::path& out) {
    const auto p = paths::eval_state(out);
    if (!std::filesystem::exists(p)) return nlohmann::json::object();
    std::ifstream f(p);
    nlohmann::json j;
    f >> j;
    return j;
}

inline void save_eval_state(const std::filesystem::path& out,
                            const nlohmann::json& st) {
    std::filesystem::create_directories(out / "eval");
    write_text(paths::eval_state(out), st.dump(2) + "\n");
}

inline void stage_evaluate(const RunConfig& cfg,
                           const std::filesystem::path& out) {
    auto st = load_eval_state(out);
    auto ev = evaluate_run(cfg, out);
    for (auto& [k, v] : ev.items()) st[k] = v;
    save_eval_state(out, st);
}

inline void stage_sweep(const RunConfig& cfg, const std::filesystem::path& out,
                        const std::string& axis) {
    auto st = load_eval_state(out);
    if (axis == "ebn0") {
        st["sweep_ebn0"] = sweep_ebn0_run(cfg, out);
    } else if (axis == "k") {
        st["sweep_k"] = sweep_k_run(cfg, out);
    } else if (axis == "channel") {
        // Cross-channel matrix only (subset of evaluate, refreshed alone).
        auto ev = evaluate_run(cfg, out);
        st["cross_channel"] = ev["cross_channel"];
    } else {
        throw ConfigError("sweep: --axis must be ebn0, k, or channel");
    }
    save_eval_state(out, st);
}

inline void stage_report(const RunConfig& cfg,
                         const std::filesystem::path& out) {
    const auto st = load_eval_state(out);
    if (st.empty())
        throw IoError("report: no eval state at " +
                      paths::eval_state(out).string() + "; run evaluate first");
    emit_report(cfg, st, out, kToolVersion);
}

}  // namespace rffsb
