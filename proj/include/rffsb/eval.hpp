#pragma once
// Receiver-side evaluation and reporting.  Path convention, recorded in the
// report metadata: the colluder observes through the *train* profile, the
// victim receiver sits behind the *test* profile.  Every ASR cell carries a
// Wilson 95% interval; every number in the report is recomputable from the
// persisted artifacts plus the seeds echoed alongside it.

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "rffsb/pipeline.hpp"

namespace rffsb {

struct Wilson {
    double lo = 0.0, hi = 0.0;
};

inline Wilson wilson_interval(std::size_t hits, std::size_t n, double z = 1.96) {
    if (n == 0) throw ConfigError("wilson_interval: n must be positive");
    const double p = static_cast<double>(hits) / static_cast<double>(n);
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = p + z2 / (2.0 * n);
    const double rad = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
    return {std::max(0.0, (center - rad) / denom),
            std::min(1.0, (center + rad) / denom)};
}

// Average-rank transform (ties share the mean of their rank range).
inline std::vector<double> average_ranks(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<std::size_t> idx(n);
    for (std::size_t k = 0; k < n; ++k) idx[k] = k;
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> rank(n);
    std::size_t a = 0;
    while (a < n) {
        std::size_t b = a;
        while (b + 1 < n && x[idx[b + 1]] == x[idx[a]]) ++b;
        const double r = 0.5 * (a + b) + 1.0;
        for (std::size_t k = a; k <= b; ++k) rank[idx[k]] = r;
        a = b + 1;
    }
    return rank;
}

// Spearman rank correlation; 0 when either side is constant.
inline double spearman_rho(const std::vector<double>& x,
                           const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw ConfigError("spearman_rho: need two same-length series");
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        mx += rx[k];
        my += ry[k];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxy += (rx[k] - mx) * (ry[k] - my);
        sxx += (rx[k] - mx) * (rx[k] - mx);
        syy += (ry[k] - my) * (ry[k] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

struct AsrResult {
    std::size_t hits = 0, n = 0;
    double asr = 0.0;
    Wilson ci;
};

inline AsrResult attack_success(const std::vector<int>& preds, int target) {
    if (preds.empty())
        throw ConfigError("attack_success: empty prediction set");
    AsrResult r;
    r.n = preds.size();
    for (int p : preds) r.hits += p == target;
    r.asr = static_cast<double>(r.hits) / static_cast<double>(r.n);
    r.ci = wilson_interval(r.hits, r.n);
    return r;
}

inline nlohmann::json asr_json(const AsrResult& r) {
    return {{"asr", r.asr},
            {"hits", r.hits},
            {"n", r.n},
            {"wilson_lo", r.ci.lo},
            {"wilson_hi", r.ci.hi}};
}

// Deterministic per-cell seed: master x stream x profile-name x cell indices.
inline std::uint64_t cell_seed(const RunConfig& cfg, const std::string& profile,
                               std::uint64_t variant, std::uint64_t target) {
    return derive_seed(cfg.master_seed, static_cast<std::uint64_t>(StreamId::eval),
                       fnv1a64(profile) ^ (variant << 8), target);
}

// Spoof through `prof` (optionally overriding Eb/N0 or K) and classify.
inline AsrResult receiver_asr(nn::ClassifierModel<float>& classifier,
                              nn::VaeModel<float>& vae,
                              const DeviceProfile& attacker,
                              ChannelProfile prof, const RunConfig& cfg,
                              int target, std::uint64_t seed, bool raw_iq,
                              double* ebn0_override = nullptr,
                              double* k_override = nullptr) {
    if (ebn0_override) prof.ebn0_db = *ebn0_override;
    if (k_override) prof.k_factor = *k_override;
    const std::size_t n = cfg.eval_frames;
    const auto base = make_preamble(cfg.frame);
    const double fs = cfg.frame.sample_rate();
    const std::size_t N = base.size();
    std::vector<float> one(2 * N);
    for (std::size_t k = 0; k < N; ++k) {
        one[k] = static_cast<float>(base.i[k]);
        one[N + k] = static_cast<float>(base.q[k]);
    }

    std::vector<std::vector<double>> feats(n);
    auto work = [&](std::size_t f0, std::size_t f1) {
        for (std::size_t f = f0; f < f1; ++f) {
            Rng rng(seed, StreamId::eval, f);
            std::vector<float> eps(vae.hp.latent_dim);
            for (auto& e : eps) e = static_cast<float>(rng.gauss());
            auto x1 = nn::Tensor<float>::from({1, 2, N}, one);
            auto vout = vae.forward(x1, eps);
            IqFrame recon;
            recon.i.resize(N);
            recon.q.resize(N);
            for (std::size_t k = 0; k < N; ++k) {
                recon.i[k] = vout.recon.values()[k];
                recon.q[k] = vout.recon.values()[N + k];
            }
            const auto tx = apply_impairment(recon, attacker);
            const auto cr = realize_channel(prof, fs, rng);
            const auto rx = propagate(tx, cr, fs, prof.ebn0_db, rng);
            if (raw_iq) {
                std::vector<double> row;
                row.reserve(2 * N);
                row.insert(row.end(), rx.i.begin(), rx.i.end());
                row.insert(row.end(), rx.q.begin(), rx.q.end());
                feats[f] = std::move(row);
            } else {
                feats[f] = extract_clps(rx, cfg.clps);
            }
        }
    };
    const int nt = std::max(1, cfg.threads);
    if (nt == 1) {
        work(0, n);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (n + nt - 1) / nt;
        for (int t = 0; t < nt; ++t) {
            const std::size_t f0 = std::min(n, t * chunk);
            const std::size_t f1 = std::min(n, (t + 1) * chunk);
            if (f0 < f1) pool.emplace_back(work, f0, f1);
        }
        for (auto& th : pool) th.join();
    }
    return attack_success(predict_labels(classifier, feats), target);
}

// ------------------------------------------------------------- artifacts ---

namespace paths {
inline std::filesystem::path models(const std::filesystem::path& out) {
    return out / "models";
}
inline std::filesystem::path classifier(const std::filesystem::path& out) {
    return models(out) / "classifier.rfnn";
}
inline std::filesystem::path classifier_rawiq(const std::filesystem::path& out) {
    return models(out) / "classifier_rawiq.rfnn";
}
inline std::filesystem::path vae(const std::filesystem::path& out,
                                 const std::string& profile, int target,
                                 bool raw_iq = false) {
    std::string stem = raw_iq ? "vae_rawiq_" : "vae_";
    return models(out) / (stem + profile + "_t" + std::to_string(target) + ".rfnn");
}
inline std::filesystem::path dataset(const std::filesystem::path& out,
                                     const std::string& split) {
    return out / "dataset" / split;
}
inline std::filesystem::path eval_state(const std::filesystem::path& out) {
    return out / "eval" / "eval_state.json";
}
inline std::filesystem::path report_dir(const std::filesystem::path& out) {
    return out / "report";
}
}  // namespace paths

// Attack artifacts travel as one checkpoint: VAE weights + template bank +
// training metadata.
inline void save_attack_artifact(const std::filesystem::path& path,
                                 const AttackOutcome& att) {
    nn::Checkpoint ck;
    nn::VaeModel<float>& vae = const_cast<AttackOutcome&>(att).vae;
    nn::append_vae(ck, vae);
    if (!att.templates.empty()) {
        const std::size_t M = att.templates.size();
        const std::size_t F = att.templates[0].size();
        std::vector<double> flat(M * F);
        for (std::size_t m = 0; m < M; ++m)
            for (std::size_t k = 0; k < F; ++k)
                flat[m * F + k] = att.templates[m][k];
        ck.put_f64("attack/templates", {M, F}, flat.data(), flat.size());
    }
    ck.put_scalar("attack/best_colluder_asr", att.best_colluder_asr);
    ck.put_scalar("attack/patience_warning", att.patience_warning ? 1.0 : 0.0);
    ck.save(path);
}

struct LoadedAttack {
    nn::VaeModel<float> vae;
    std::vector<std::vector<double>> templates;
    double best_colluder_asr = 0.0;
    bool patience_warning = false;
};

inline LoadedAttack load_attack_artifact(const std::filesystem::path& path) {
    auto ck = nn::Checkpoint::load(path);
    LoadedAttack out;
    out.vae = nn::extract_vae<float>(ck);
    if (ck.has("attack/templates")) {
        const auto& e = ck.at("attack/templates");
        const std::size_t M = e.shape[0], F = e.shape[1];
        auto flat = ck.get_f64("attack/templates");
        out.templates.assign(M, std::vector<double>(F));
        for (std::size_t m = 0; m < M; ++m)
            for (std::size_t k = 0; k < F; ++k)
                out.templates[m][k] = flat[m * F + k];
    }
    out.best_colluder_asr = ck.get_scalar("attack/best_colluder_asr");
    out.patience_warning = ck.get_scalar("attack/patience_warning") != 0.0;
    return out;
}

// ------------------------------------------------------------ evaluation ---

// Core receiver-side evaluation over persisted artifacts.  Missing attack
// artifacts are listed as absent and skipped; the run continues.
inline nlohmann::json evaluate_run(const RunConfig& cfg,
                                   const std::filesystem::path& out_dir) {
    const auto fleet = sample_fleet(cfg.fleet, cfg.master_seed);
    const DeviceProfile& attacker = fleet.back();

    if (!std::filesystem::exists(paths::classifier(out_dir)))
        throw IoError("evaluate: missing classifier artifact " +
                      paths::classifier(out_dir).string());
    auto classifier =
        nn::load_classifier<float>(paths::classifier(out_dir));

    nlohmann::json ev;
    ev["convention"] = {
        {"colluder_path", "train profile"},
        {"receiver_path", "test profile"},
    };
    ev["master_seed"] = cfg.master_seed;
    ev["train_profile"] = cfg.train_profile;
    ev["test_profile"] = cfg.test_profile;

    // Classifier accuracy + confusion on the persisted test split.
    {
        auto test = DatasetSplit::load(paths::dataset(out_dir, "test").string());
        std::vector<std::vector<double>> xte;
        std::vector<int> yte;
        legit_rows(test, cfg.fleet.n_legit, xte, yte);
        const auto pred = predict_labels(classifier, xte);
        std::size_t hits = 0;
        for (std::size_t k = 0; k < pred.size(); ++k) hits += pred[k] == yte[k];
        ev["classifier"] = {
            {"test_accuracy",
             static_cast<double>(hits) / static_cast<double>(pred.size())},
            {"n_test", pred.size()},
            {"confusion", confusion_matrix(yte, pred, cfg.fleet.n_legit)},
        };
    }

    // Matched-channel attack: artifacts trained on train_profile, receiver
    // behind test_profile.
    {
        nlohmann::json per_target = nlohmann::json::object();
        nlohmann::json absent = nlohmann::json::array();
        std::vector<double> asrs;
        for (int t : cfg.targets) {
            const auto p = paths::vae(out_dir, cfg.train_profile, t);
            if (!std::filesystem::exists(p)) {
                absent.push_back(t);
                continue;
            }
            auto att = load_attack_artifact(p);
            auto r = receiver_asr(classifier, att.vae, attacker,
                                  cfg.profile(cfg.test_profile), cfg, t,
                                  cell_seed(cfg, cfg.test_profile, 1, t), false);
            auto j = asr_json(r);
            j["colluder_best_asr"] = att.best_colluder_asr;
            j["patience_warning"] = att.patience_warning;
            per_target[std::to_string(t)] = j;
            asrs.push_back(r.asr);
        }
        nlohmann::json m = {{"per_target", per_target}, {"absent", absent}};
        if (!asrs.empty()) m["mean_asr"] = mean_of(asrs);
        ev["attack"] = m;
    }

    // Cross-channel matrix over matrix_profiles.
    {
        nlohmann::json rows = nlohmann::json::array();
        nlohmann::json absent = nlohmann::json::array();
        for (const auto& tp : cfg.matrix_profiles) {
            bool any = false;
            for (int t : cfg.targets)
                any |= std::filesystem::exists(paths::vae(out_dir, tp, t));
            if (!any) {
                absent.push_back(tp);
                continue;
            }
            for (const auto& rp : cfg.matrix_profiles) {
                nlohmann::json per_target = nlohmann::json::object();
                std::vector<double> asrs;
                for (int t : cfg.targets) {
                    const auto p = paths::vae(out_dir, tp, t);
                    if (!std::filesystem::exists(p)) continue;
                    auto att = load_attack_artifact(p);
                    auto r = receiver_asr(
                        classifier, att.vae, attacker, cfg.profile(rp), cfg, t,
                        cell_seed(cfg, tp + "|" + rp, 2, t), false);
                    per_target[std::to_string(t)] = asr_json(r);
                    asrs.push_back(r.asr);
                }
                rows.push_back({{"train_profile", tp},
                                {"test_profile", rp},
                                {"mean_asr", mean_of(asrs)},
                                {"per_target", per_target}});
            }
        }
        ev["cross_channel"] = {{"cells", rows}, {"absent", absent}};
    }

    // Raw-I/Q ablation, when its artifacts exist.
    if (std::filesystem::exists(paths::classifier_rawiq(out_dir))) {
        auto rcls = nn::load_classifier<float>(paths::classifier_rawiq(out_dir));
        nlohmann::json per_target = nlohmann::json::object();
        std::vector<double> asrs;
        for (int t : cfg.targets) {
            const auto p = paths::vae(out_dir, cfg.train_profile, t, true);
            if (!std::filesystem::exists(p)) continue;
            auto att = load_attack_artifact(p);
            auto r = receiver_asr(rcls, att.vae, attacker,
                                  cfg.profile(cfg.test_profile), cfg, t,
                                  cell_seed(cfg, cfg.test_profile, 3, t), true);
            per_target[std::to_string(t)] = asr_json(r);
            asrs.push_back(r.asr);
        }
        nlohmann::json m = {{"per_target", per_target}};
        if (!asrs.empty()) m["mean_asr"] = mean_of(asrs);
        ev["rawiq"] = m;
    }

    return ev;
}

// Eb/N0 sweep: receiver Eb/N0 varies, channel profile otherwise matched.
inline nlohmann::json sweep_ebn0_run(const RunConfig& cfg,
                                     const std::filesystem::path& out_dir) {
    const auto fleet = sample_fleet(cfg.fleet, cfg.master_seed);
    auto classifier =
        nn::load_classifier<float>(paths::classifier(out_dir));

    nlohmann::json per_profile = nlohmann::json::object();
    for (const auto& pn : cfg.sweep_profiles) {
        bool any = false;
        for (int t : cfg.targets)
            any |= std::filesystem::exists(paths::vae(out_dir, pn, t));
        if (!any) continue;
        nlohmann::json points = nlohmann::json::array();
        std::vector<double> xs, ys;
        for (std::size_t vi = 0; vi < cfg.sweep_ebn0.size(); ++vi) {
            double e = cfg.sweep_ebn0[vi];
            nlohmann::json per_target = nlohmann::json::object();
            std::vector<double> asrs;
            for (int t : cfg.targets) {
                const auto p = paths::vae(out_dir, pn, t);
                if (!std::filesystem::exists(p)) continue;
                auto att = load_attack_artifact(p);
                auto r = receiver_asr(classifier, att.vae, fleet.back(),
                                      cfg.profile(pn), cfg, t,
                                      cell_seed(cfg, pn, 16 + vi, t), false, &e);
                per_target[std::to_string(t)] = asr_json(r);
                asrs.push_back(r.asr);
            }
            const double mean = mean_of(asrs);
            points.push_back({{"ebn0_db", e},
                              {"mean_asr", mean},
                              {"per_target", per_target}});
            xs.push_back(e);
            ys.push_back(mean);
        }
        per_profile[pn] = {{"points", points},
                           {"spearman_rho", spearman_rho(xs, ys)}};
    }
    return {{"values", cfg.sweep_ebn0}, {"per_profile", per_profile}};
}

// K-factor sweep: receiver-side Rician K varies.
inline nlohmann::json sweep_k_run(const RunConfig& cfg,
                                  const std::filesystem::path& out_dir) {
    const auto fleet = sample_fleet(cfg.fleet, cfg.master_seed);
    auto classifier =
        nn::load_classifier<float>(paths::classifier(out_dir));

    nlohmann::json per_profile = nlohmann::json::object();
    for (const auto& pn : cfg.sweep_profiles) {
        bool any = false;
        for (int t : cfg.targets)
            any |= std::filesystem::exists(paths::vae(out_dir, pn, t));
        if (!any) continue;
        nlohmann::json points = nlohmann::json::array();
        for (std::size_t vi = 0; vi < cfg.sweep_k.size(); ++vi) {
            double kf = cfg.sweep_k[vi];
            nlohmann::json per_target = nlohmann::json::object();
            std::vector<double> asrs;
            for (int t : cfg.targets) {
                const auto p = paths::vae(out_dir, pn, t);
                if (!std::filesystem::exists(p)) continue;
                auto att = load_attack_artifact(p);
                auto r = receiver_asr(classifier, att.vae, fleet.back(),
                                      cfg.profile(pn), cfg, t,
                                      cell_seed(cfg, pn, 64 + vi, t), false,
                                      nullptr, &kf);
                per_target[std::to_string(t)] = asr_json(r);
                asrs.push_back(r.asr);
            }
            points.push_back({{"k_factor", kf},
                              {"mean_asr", mean_of(asrs)},
                              {"per_target", per_target}});
        }
        per_profile[pn] = {{"points", points}};
    }
    return {{"values", cfg.sweep_k}, {"per_profile", per_profile}};
}

// --------------------------------------------------------------- reports ---

inline void write_text(const std::filesystem::path& p, const std::string& s) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw IoError("cannot write " + p.string());
    f << s;
}

inline std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

// report/: report.json plus flat CSVs and gnuplot-ready .dat series.
inline void emit_report(const RunConfig& cfg, const nlohmann::json& state,
                        const std::filesystem::path& out_dir,
                        const std::string& tool_version) {
    const auto rdir = paths::report_dir(out_dir);
    std::filesystem::create_directories(rdir / "plots");

    nlohmann::json rep = state;
    rep["tool_version"] = tool_version;
    rep["master_seed"] = cfg.master_seed;
    rep["scenario"] = cfg.to_json();
    write_text(rdir / "report.json", rep.dump(2) + "\n");

    // Cross-channel CSV.
    {
        std::string csv = "train_profile,test_profile,mean_asr\n";
        if (state.contains("cross_channel"))
            for (const auto& c : state["cross_channel"]["cells"]) {
                csv += c["train_profile"].get<std::string>() + "," +
                       c["test_profile"].get<std::string>() + "," +
                       fmt6(c["mean_asr"].get<double>()) + "\n";
            }
        write_text(rdir / "asr_cross.csv", csv);
    }

    // Confusion CSV (true label = row).
    if (state.contains("classifier")) {
        std::string csv = "true_label";
        const auto& cm = state["classifier"]["confusion"];
        for (std::size_t c = 0; c < cm.size(); ++c)
            csv += ",pred_" + std::to_string(c);
        csv += "\n";
        for (std::size_t r = 0; r < cm.size(); ++r) {
            csv += std::to_string(r);
            for (std::size_t c = 0; c < cm[r].size(); ++c)
                csv += "," + std::to_string(cm[r][c].get<int>());
            csv += "\n";
        }
        write_text(rdir / "confusion.csv", csv);
    }

    // Sweep CSVs + plot data.
    if (state.contains("sweep_ebn0")) {
        std::string csv = "profile,ebn0_db,mean_asr,wilson_lo,wilson_hi\n";
        for (const auto& [pn, pj] : state["sweep_ebn0"]["per_profile"].items()) {
            std::string dat = "# ebn0_db mean_asr wilson_lo wilson_hi\n";
            for (const auto& pt : pj["points"]) {
                double lo = 1.0, hi = 0.0;
                for (const auto& [t, tj] : pt["per_target"].items()) {
                    lo = std::min(lo, tj["wilson_lo"].get<double>());
                    hi = std::max(hi, tj["wilson_hi"].get<double>());
                }
                const std::string e = fmt6(pt["ebn0_db"].get<double>());
                const std::string m = fmt6(pt["mean_asr"].get<double>());
                csv += pn + "," + e + "," + m + "," + fmt6(lo) + "," + fmt6(hi) + "\n";
                dat += e + " " + m + " " + fmt6(lo) + " " + fmt6(hi) + "\n";
            }
            write_text(rdir / "plots" / ("asr_vs_ebn0_" + pn + ".dat"), dat);
        }
        write_text(rdir / "sweep_ebn0.csv", csv);
    }
    if (state.contains("sweep_k")) {
        std::string csv = "profile,k_factor,mean_asr,wilson_lo,wilson_hi\n";
        for (const auto& [pn, pj] : state["sweep_k"]["per_profile"].items()) {
            std::string dat = "# k_factor mean_asr wilson_lo wilson_hi\n";
            for (const auto& pt : pj["points"]) {
                double lo = 1.0, hi = 0.0;
                for (const auto& [t, tj] : pt["per_target"].items()) {
                    lo = std::min(lo, tj["wilson_lo"].get<double>());
                    hi = std::max(hi, tj["wilson_hi"].get<double>());
                }
                const std::string k = fmt6(pt["k_factor"].get<double>());
                const std::string m = fmt6(pt["mean_asr"].get<double>());
                csv += pn + "," + k + "," + m + "," + fmt6(lo) + "," + fmt6(hi) + "\n";
                dat += k + " " + m + " " + fmt6(lo) + " " + fmt6(hi) + "\n";
            }
            write_text(rdir / "plots" / ("asr_vs_k_" + pn + ".dat"), dat);
        }
        write_text(rdir / "sweep_k.csv", csv);
    }
}

}  // namespace rffsb
