#pragma once
// Scenario orchestration: dataset builds, classifier training, the collusion
// attack loop, and spoofed-frame generation.  Every stochastic site draws
// from a seed derived from (master, stream, indices), so any artifact can be
// regenerated independently of scheduling or call order.

#include <thread>

#include "rffsb/config.hpp"
#include "rffsb/dataset.hpp"
#include "rffsb/diff_physics.hpp"
#include "rffsb/model_io.hpp"

namespace rffsb {

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// ---------------------------------------------------------------- dataset --

struct BuiltDataset {
    DatasetSplit train, test;
};

// One split: for each device (legit fleet plus the attacker as the last
// label), frames_per_dev frames through fresh train-profile realizations.
inline DatasetSplit build_split(const RunConfig& cfg,
                                const std::vector<DeviceProfile>& fleet,
                                const ChannelProfile& prof,
                                std::size_t frames_per_dev, int split_tag) {
    const auto base = make_preamble(cfg.frame);
    const double fs = cfg.frame.sample_rate();
    const std::size_t n = base.size();
    const std::size_t feat_len = cfg.clps.feature_len;
    const std::size_t n_dev = fleet.size();
    const std::size_t rows = n_dev * frames_per_dev;

    std::vector<IqFrame> impaired(n_dev);
    for (std::size_t d = 0; d < n_dev; ++d)
        impaired[d] = apply_impairment(base, fleet[d]);

    DatasetSplit out;
    out.n_samples = n;
    out.feature_len = feat_len;
    out.frames.assign(rows * 2 * n, 0.0f);
    out.features.assign(rows * feat_len, 0.0f);
    out.labels.assign(rows, 0);

    auto work = [&](std::size_t r0, std::size_t r1) {
        for (std::size_t r = r0; r < r1; ++r) {
            const std::size_t d = r / frames_per_dev;
            const std::size_t i = r % frames_per_dev;
            Rng rng(cfg.master_seed, StreamId::legit_rx,
                    (static_cast<std::uint64_t>(split_tag) << 32) | d, i);
            const auto cr = realize_channel(prof, fs, rng);
            const auto rx = propagate(impaired[d], cr, fs, prof.ebn0_db, rng);
            const auto feat = extract_clps(rx, cfg.clps);
            float* fr = out.frames.data() + r * 2 * n;
            for (std::size_t k = 0; k < n; ++k) {
                fr[2 * k] = static_cast<float>(rx.i[k]);
                fr[2 * k + 1] = static_cast<float>(rx.q[k]);
            }
            float* ft = out.features.data() + r * feat_len;
            for (std::size_t k = 0; k < feat_len; ++k)
                ft[k] = static_cast<float>(feat[k]);
            out.labels[r] = static_cast<std::uint16_t>(d);
        }
    };

    const int nt = std::max(1, cfg.threads);
    if (nt == 1) {
        work(0, rows);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (rows + nt - 1) / nt;
        for (int t = 0; t < nt; ++t) {
            const std::size_t r0 = std::min(rows, t * chunk);
            const std::size_t r1 = std::min(rows, (t + 1) * chunk);
            if (r0 < r1) pool.emplace_back(work, r0, r1);
        }
        for (auto& th : pool) th.join();
    }

    out.provenance = {
        {"master_seed", cfg.master_seed},
        {"split", split_tag == 0 ? "train" : "test"},
        {"profile", prof.name},
        {"frames_per_device", frames_per_dev},
        {"n_devices", n_dev},
        {"config", cfg.to_json()},
    };
    return out;
}

inline BuiltDataset build_dataset(const RunConfig& cfg) {
    cfg.validate();
    const auto fleet = sample_fleet(cfg.fleet, cfg.master_seed);
    const auto& prof = cfg.profile(cfg.train_profile);
    BuiltDataset ds;
    ds.train = build_split(cfg, fleet, prof, cfg.frames_train, 0);
    ds.test = build_split(cfg, fleet, prof, cfg.frames_test, 1);
    return ds;
}

// ------------------------------------------------------------- classifier --

// Feature rows (doubles) for rows whose label is a legitimate device.
inline void legit_rows(const DatasetSplit& split, int n_legit,
                       std::vector<std::vector<double>>& rows,
                       std::vector<int>& labels) {
    rows.clear();
    labels.clear();
    for (std::size_t r = 0; r < split.rows(); ++r) {
        if (split.labels[r] >= n_legit) continue;
        rows.push_back(split.feature_row(r));
        labels.push_back(split.labels[r]);
    }
}

template <typename T>
std::vector<int> predict_labels(nn::ClassifierModel<T>& model,
                                const std::vector<std::vector<double>>& rows,
                                std::size_t chunk = 128) {
    std::vector<int> out;
    for (std::size_t a = 0; a < rows.size(); a += chunk) {
        const std::size_t b = std::min(rows.size(), a + chunk);
        std::vector<std::vector<double>> part(rows.begin() + a,
                                              rows.begin() + b);
        auto lab = model.predict(part);
        out.insert(out.end(), lab.begin(), lab.end());
    }
    return out;
}

struct ClassifierTraining {
    nn::ClassifierModel<float> model;
    nlohmann::json log;                      // per-epoch loss / test accuracy
    std::vector<std::vector<int>> confusion; // [true][pred] on the test split
    double test_accuracy = 0.0;
};

inline std::vector<std::vector<int>> confusion_matrix(
    const std::vector<int>& truth, const std::vector<int>& pred, int n_classes) {
    std::vector<std::vector<int>> m(n_classes, std::vector<int>(n_classes, 0));
    for (std::size_t k = 0; k < truth.size(); ++k) m[truth[k]][pred[k]]++;
    return m;
}

// Shared batched training loop over standardized rows.
template <typename T>
nlohmann::json train_classifier_loop(nn::ClassifierModel<T>& model,
                                     const std::vector<std::vector<double>>& xtr,
                                     const std::vector<int>& ytr,
                                     const std::vector<std::vector<double>>& xte,
                                     const std::vector<int>& yte,
                                     std::size_t epochs, std::size_t batch,
                                     double lr, std::uint64_t master_seed,
                                     std::uint64_t stream_tag) {
    nn::Adam<T> opt(model.params, lr);
    nlohmann::json log = nlohmann::json::array();
    std::vector<std::size_t> order(xtr.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;

    for (std::size_t ep = 0; ep < epochs; ++ep) {
        Rng shuffle_rng(master_seed, StreamId::train, stream_tag, ep);
        for (std::size_t k = order.size(); k > 1; --k)
            std::swap(order[k - 1], order[shuffle_rng.below(k)]);

        double ep_loss = 0.0;
        for (std::size_t a = 0; a < order.size(); a += batch) {
            const std::size_t b = std::min(order.size(), a + batch);
            std::vector<std::vector<double>> bx;
            std::vector<int> by;
            for (std::size_t k = a; k < b; ++k) {
                bx.push_back(xtr[order[k]]);
                by.push_back(ytr[order[k]]);
            }
            opt.zero_grad();
            auto logits = model.forward(model.standardize(bx), true);
            auto loss = nn::softmax_cross_entropy(logits, by);
            const double lv = loss.values()[0];
            if (!std::isfinite(lv))
                throw std::runtime_error("classifier training diverged (NaN loss)");
            loss.backward();
            opt.step();
            ep_loss += lv * static_cast<double>(b - a);
        }
        ep_loss /= static_cast<double>(order.size());

        const auto pred = predict_labels(model, xte);
        std::size_t hits = 0;
        for (std::size_t k = 0; k < pred.size(); ++k)
            hits += pred[k] == yte[k];
        const double acc = static_cast<double>(hits) /
                           static_cast<double>(pred.size());
        log.push_back({{"epoch", ep}, {"loss", ep_loss}, {"test_acc", acc}});
    }
    return log;
}

inline ClassifierTraining train_classifier(const BuiltDataset& ds,
                                           const RunConfig& cfg) {
    std::vector<std::vector<double>> xtr, xte;
    std::vector<int> ytr, yte;
    legit_rows(ds.train, cfg.fleet.n_legit, xtr, ytr);
    legit_rows(ds.test, cfg.fleet.n_legit, xte, yte);

    nn::ClassifierHyper hp;
    hp.input_len = cfg.clps.feature_len;
    hp.in_channels = 1;
    hp.n_classes = static_cast<std::size_t>(cfg.fleet.n_legit);
    hp.width = cfg.cls_width;
    Rng init_rng(cfg.master_seed, StreamId::train, 1);
    ClassifierTraining out{nn::ClassifierModel<float>(hp, init_rng), {}, {}, 0.0};
    out.model.fit_normalizer(xtr);

    out.log = train_classifier_loop(out.model, xtr, ytr, xte, yte,
                                    cfg.cls_epochs, cfg.cls_batch, cfg.cls_lr,
                                    cfg.master_seed, 2);

    const auto pred = predict_labels(out.model, xte);
    out.confusion = confusion_matrix(yte, pred, cfg.fleet.n_legit);
    std::size_t hits = 0;
    for (std::size_t k = 0; k < pred.size(); ++k) hits += pred[k] == yte[k];
    out.test_accuracy = static_cast<double>(hits) /
                        static_cast<double>(pred.size());
    return out;
}

// Raw-I/Q ablation classifier: trains on received frames directly (channel-
// major rows [i..., q...]), global-sigma normalization, strided stem.
inline void raw_rows(const DatasetSplit& split, int n_legit,
                     std::vector<std::vector<double>>& rows,
                     std::vector<int>& labels) {
    rows.clear();
    labels.clear();
    std::vector<double> i, q;
    for (std::size_t r = 0; r < split.rows(); ++r) {
        if (split.labels[r] >= n_legit) continue;
        split.frame_row(r, i, q);
        std::vector<double> row;
        row.reserve(2 * i.size());
        row.insert(row.end(), i.begin(), i.end());
        row.insert(row.end(), q.begin(), q.end());
        rows.push_back(std::move(row));
        labels.push_back(split.labels[r]);
    }
}

inline ClassifierTraining train_classifier_rawiq(const BuiltDataset& ds,
                                                 const RunConfig& cfg) {
    std::vector<std::vector<double>> xtr, xte;
    std::vector<int> ytr, yte;
    raw_rows(ds.train, cfg.fleet.n_legit, xtr, ytr);
    raw_rows(ds.test, cfg.fleet.n_legit, xte, yte);

    nn::ClassifierHyper hp;
    hp.input_len = static_cast<std::size_t>(cfg.frame.n_samples());
    hp.in_channels = 2;
    hp.n_classes = static_cast<std::size_t>(cfg.fleet.n_legit);
    hp.width = cfg.cls_width;
    hp.stem_stride = 4;
    Rng init_rng(cfg.master_seed, StreamId::train, 3);
    ClassifierTraining out{nn::ClassifierModel<float>(hp, init_rng), {}, {}, 0.0};
    out.model.fit_normalizer_global(xtr);

    out.log = train_classifier_loop(out.model, xtr, ytr, xte, yte,
                                    cfg.rawiq_epochs, cfg.cls_batch, cfg.cls_lr,
                                    cfg.master_seed, 4);

    const auto pred = predict_labels(out.model, xte);
    out.confusion = confusion_matrix(yte, pred, cfg.fleet.n_legit);
    std::size_t hits = 0;
    for (std::size_t k = 0; k < pred.size(); ++k) hits += pred[k] == yte[k];
    out.test_accuracy = static_cast<double>(hits) /
                        static_cast<double>(pred.size());
    return out;
}

// ------------------------------------------------------------------ attack --

// Colluder-side observations of a device through the colluder channel path.
inline std::vector<std::vector<double>> observe_device(
    const RunConfig& cfg, const std::vector<DeviceProfile>& fleet, int device,
    const ChannelProfile& prof, std::size_t n_frames, StreamId stream,
    std::uint64_t tag) {
    const auto base = make_preamble(cfg.frame);
    const auto tx = apply_impairment(base, fleet[device]);
    const double fs = cfg.frame.sample_rate();
    std::vector<std::vector<double>> out;
    for (std::size_t m = 0; m < n_frames; ++m) {
        Rng rng(cfg.master_seed, stream, tag, m);
        const auto cr = realize_channel(prof, fs, rng);
        const auto rx = propagate(tx, cr, fs, prof.ebn0_db, rng);
        out.push_back(extract_clps(rx, cfg.clps));
    }
    return out;
}

struct AttackOutcome {
    nn::VaeModel<float> vae;
    std::vector<std::vector<double>> templates;   // colluder-observed target CLPS
    double best_colluder_asr = 0.0;
    nlohmann::json curve;                         // steps, losses, colluder ASR
    bool patience_warning = false;
};

// The collusion loop: VAE output -> attacker hardware -> fresh colluder
// channel -> CLPS -> frozen classifier, optimized under the four-term loss.
inline AttackOutcome train_attack(nn::ClassifierModel<float>& classifier,
                                  const RunConfig& cfg,
                                  const std::vector<DeviceProfile>& fleet,
                                  int target, const std::string& profile_name,
                                  bool raw_iq = false) {
    if (target < 0 || target >= cfg.fleet.n_legit)
        throw ConfigError("attack: target must be a legitimate device id");
    const ChannelProfile& prof = cfg.profile(profile_name);
    const auto base = make_preamble(cfg.frame);
    const DeviceProfile& attacker = fleet.back();
    const double fs = cfg.frame.sample_rate();
    const std::size_t N = base.size();
    const std::size_t B = cfg.attack_batch;
    const std::size_t F = cfg.clps.feature_len;
    const std::uint64_t ptag = fnv1a64(profile_name);
    const std::size_t steps = raw_iq ? cfg.rawiq_steps : cfg.attack_steps;

    AttackOutcome out;
    if (!raw_iq)
        out.templates = observe_device(cfg, fleet, target, prof,
                                       cfg.template_bank, StreamId::target_col,
                                       ptag ^ (static_cast<std::uint64_t>(target) << 1));

    nn::VaeHyper vh;
    vh.n_samples = N;
    vh.latent_dim = cfg.vae_latent;
    vh.base_width = cfg.vae_width;
    Rng init_rng(cfg.master_seed, StreamId::train,
                 0x5A5A ^ ptag ^ static_cast<std::uint64_t>(target),
                 raw_iq ? 1 : 0);
    nn::VaeModel<float> vae(vh, init_rng);
    nn::Adam<float> opt(vae.params, cfg.attack_lr);

    // Clean attacker preamble, replicated into the batch (also the Eq. 4a
    // reconstruction reference).
    std::vector<float> basev(B * 2 * N);
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t k = 0; k < N; ++k) {
            basev[(b * 2 + 0) * N + k] = static_cast<float>(base.i[k]);
            basev[(b * 2 + 1) * N + k] = static_cast<float>(base.q[k]);
        }
    auto input = nn::Tensor<float>::from({B, 2, N}, basev);

    // Standardizer coefficients for the frozen classifier.
    std::vector<double> inv_std(classifier.feat_std.size());
    std::vector<double> neg_mean(classifier.feat_mean.size());
    for (std::size_t k = 0; k < inv_std.size(); ++k) {
        inv_std[k] = 1.0 / classifier.feat_std[k];
        neg_mean[k] = -classifier.feat_mean[k] / classifier.feat_std[k];
    }

    const auto target_tx = apply_impairment(base, fleet[target]);
    std::vector<int> target_labels(B, target);
    out.curve = nlohmann::json::array();

    std::vector<std::vector<float>> best_params;
    std::size_t best_step = 0;
    double best_asr = -1.0;

    auto colluder_asr = [&](std::size_t round) {
        // Held-out colluder-side check: spoof through fresh colluder channels.
        const std::size_t n = cfg.attack_eval_frames;
        std::vector<std::vector<double>> feats;
        for (std::size_t f = 0; f < n; ++f) {
            Rng rng(cfg.master_seed, StreamId::attacker_col,
                    ptag ^ (static_cast<std::uint64_t>(target) << 1) ^ 0xE7A1,
                    round * n + f);
            std::vector<float> eps(vh.latent_dim);
            for (auto& e : eps) e = static_cast<float>(rng.gauss());
            std::vector<float> one(basev.begin(), basev.begin() + 2 * N);
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
                row.insert(row.end(), rx.i.begin(), rx.i.end());
                row.insert(row.end(), rx.q.begin(), rx.q.end());
                feats.push_back(std::move(row));
            } else {
                feats.push_back(extract_clps(rx, cfg.clps));
            }
        }
        const auto pred = predict_labels(classifier, feats);
        std::size_t hits = 0;
        for (int p : pred) hits += p == target;
        return static_cast<double>(hits) / static_cast<double>(pred.size());
    };

    for (std::size_t step = 0; step < steps; ++step) {
        Rng step_rng(cfg.master_seed, StreamId::train,
                     0xACE ^ ptag ^ (static_cast<std::uint64_t>(target) << 2),
                     step + (raw_iq ? 1u << 30 : 0u));
        std::vector<float> eps(B * vh.latent_dim);
        for (auto& e : eps) e = static_cast<float>(step_rng.gauss());

        std::vector<nn::ChannelDraw> draws(B);
        for (std::size_t b = 0; b < B; ++b) {
            Rng crng(cfg.master_seed, StreamId::attacker_col,
                     ptag ^ (static_cast<std::uint64_t>(target) << 1) ^ 1,
                     step * B + b);
            draws[b] = nn::draw_channel(prof, fs, N, crng);
        }

        opt.zero_grad();
        auto vout = vae.forward(input, eps);
        auto tx = nn::apply_impairment_diff(vout.recon, attacker);
        auto rx = nn::propagate_diff(tx, draws, fs);

        nn::Tensor<float> feats, clps_target, logits;
        if (raw_iq) {
            // Loss 4c compares I/Q against target frames observed on the
            // colluder path this step.
            std::vector<float> obs(B * 2 * N);
            for (std::size_t b = 0; b < B; ++b) {
                Rng orng(cfg.master_seed, StreamId::target_col,
                         ptag ^ (static_cast<std::uint64_t>(target) << 1) ^ 2,
                         step * B + b);
                const auto cr = realize_channel(prof, fs, orng);
                const auto orx = propagate(target_tx, cr, fs, prof.ebn0_db, orng);
                for (std::size_t k = 0; k < N; ++k) {
                    obs[(b * 2 + 0) * N + k] = static_cast<float>(orx.i[k]);
                    obs[(b * 2 + 1) * N + k] = static_cast<float>(orx.q[k]);
                }
            }
            feats = rx;
            clps_target = nn::Tensor<float>::from({B, 2, N}, std::move(obs));
            auto xin = nn::affine_rows(rx, inv_std, neg_mean);
            logits = classifier.forward(xin, false);
        } else {
            feats = nn::extract_clps_diff(rx, cfg.clps);
            std::vector<float> tv(B * F);
            for (std::size_t b = 0; b < B; ++b) {
                const auto& t = out.templates[step_rng.below(out.templates.size())];
                for (std::size_t k = 0; k < F; ++k)
                    tv[b * F + k] = static_cast<float>(t[k]);
            }
            clps_target = nn::Tensor<float>::from({B, F}, std::move(tv));
            auto fn = nn::affine_rows(feats, inv_std, neg_mean);
            logits = classifier.forward(nn::reshape(fn, {B, 1, F}), false);
        }

        auto loss = nn::total_loss(vout.recon, input, vout.mu, vout.logvar,
                                   feats, clps_target, logits, target_labels,
                                   cfg.loss);
        if (!std::isfinite(static_cast<double>(loss.values()[0])))
            throw std::runtime_error("attack training diverged (NaN loss)");
        loss.backward();
        opt.step();

        const bool at_eval = (step + 1) % cfg.attack_eval_every == 0 ||
                             step + 1 == steps;
        if (at_eval) {
            const double asr = colluder_asr(step + 1);
            out.curve.push_back({{"step", step + 1},
                                 {"loss", loss.values()[0]},
                                 {"colluder_asr", asr}});
            if (asr > best_asr) {
                best_asr = asr;
                best_step = step + 1;
                best_params.clear();
                for (auto& [name, t] : vae.params.items())
                    best_params.push_back(t.values());
            }
            if (step + 1 - best_step >= cfg.attack_patience &&
                step + 1 != steps) {
                out.patience_warning = true;
                break;
            }
        }
    }

    if (!best_params.empty()) {
        std::size_t k = 0;
        for (auto& [name, t] : vae.params.items()) t.values() = best_params[k++];
    }
    out.best_colluder_asr = best_asr;
    out.vae = std::move(vae);
    return out;
}

// ------------------------------------------------------------------- spoof --

struct SpoofedFrame {
    IqFrame rx;
    std::vector<double> feature;
};

// Spoofed transmissions as seen at a receiver behind `prof` (independent
// channel realizations per frame, seeded only by `seed`).
inline std::vector<SpoofedFrame> spoof(nn::VaeModel<float>& vae,
                                       const DeviceProfile& attacker,
                                       const ChannelProfile& prof,
                                       const RunConfig& cfg,
                                       std::size_t n_frames,
                                       std::uint64_t seed) {
    const auto base = make_preamble(cfg.frame);
    const double fs = cfg.frame.sample_rate();
    const std::size_t N = base.size();
    std::vector<float> one(2 * N);
    for (std::size_t k = 0; k < N; ++k) {
        one[k] = static_cast<float>(base.i[k]);
        one[N + k] = static_cast<float>(base.q[k]);
    }

    std::vector<SpoofedFrame> out;
    out.reserve(n_frames);
    for (std::size_t f = 0; f < n_frames; ++f) {
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
        SpoofedFrame sf;
        sf.rx = propagate(tx, cr, fs, prof.ebn0_db, rng);
        sf.feature = extract_clps(sf.rx, cfg.clps);
        out.push_back(std::move(sf));
    }
    return out;
}

}  // namespace rffsb
