#pragma once
// Model <-> checkpoint glue.  Parameters persist in the training dtype,
// batch-norm statistics and the feature normalizer in f64, hyperparameters as
// scalar manifest entries.

#include "rffsb/models.hpp"
#include "rffsb/nn_io.hpp"

namespace rffsb::nn {

template <typename T>
void put_params(Checkpoint& ck, const ParamSet<T>& ps) {
    for (const auto& [name, t] : ps.items()) {
        std::vector<std::uint64_t> shape(t.shape().begin(), t.shape().end());
        if constexpr (std::is_same_v<T, float>)
            ck.put_f32("param/" + name, shape, t.values().data(), t.numel());
        else
            ck.put_f64("param/" + name, shape, t.values().data(), t.numel());
    }
}

template <typename T>
void get_params(const Checkpoint& ck, ParamSet<T>& ps) {
    for (auto& [name, t] : ps.items()) {
        if constexpr (std::is_same_v<T, float>) {
            auto v = ck.get_f32("param/" + name);
            if (v.size() != t.numel())
                throw IoError("checkpoint: size mismatch for " + name);
            std::copy(v.begin(), v.end(), t.values().begin());
        } else {
            auto v = ck.get_f64("param/" + name);
            if (v.size() != t.numel())
                throw IoError("checkpoint: size mismatch for " + name);
            std::copy(v.begin(), v.end(), t.values().begin());
        }
    }
}

template <typename T>
void put_bn(Checkpoint& ck, const std::string& name,
            const BatchNormStats<T>& st) {
    ck.put_f64("bn/" + name + ".mean", {st.running_mean.size()},
               st.running_mean.data(), st.running_mean.size());
    ck.put_f64("bn/" + name + ".var", {st.running_var.size()},
               st.running_var.data(), st.running_var.size());
}

template <typename T>
void get_bn(const Checkpoint& ck, const std::string& name,
            BatchNormStats<T>& st) {
    st.running_mean = ck.get_f64("bn/" + name + ".mean");
    st.running_var = ck.get_f64("bn/" + name + ".var");
}

template <typename T>
std::vector<std::pair<std::string, BatchNormStats<T>*>> classifier_bns(
    ClassifierModel<T>& m) {
    return {
        {"blk1.b1", &m.blk1.b1.stats}, {"blk1.b2", &m.blk1.b2.stats},
        {"blk2.b1", &m.blk2.b1.stats}, {"blk2.b2", &m.blk2.b2.stats},
        {"blk3.b1", &m.blk3.b1.stats}, {"blk3.b2", &m.blk3.b2.stats},
    };
}

template <typename T>
void append_classifier(Checkpoint& ck, ClassifierModel<T>& m) {
    ck.put_scalar("hp/kind", 1.0);   // 1 = classifier
    ck.put_scalar("hp/input_len", static_cast<double>(m.hp.input_len));
    ck.put_scalar("hp/in_channels", static_cast<double>(m.hp.in_channels));
    ck.put_scalar("hp/n_classes", static_cast<double>(m.hp.n_classes));
    ck.put_scalar("hp/width", static_cast<double>(m.hp.width));
    ck.put_scalar("hp/stem_stride", static_cast<double>(m.hp.stem_stride));
    put_params(ck, m.params);
    for (auto& [name, st] : classifier_bns(m)) put_bn(ck, name, *st);
    ck.put_f64("norm/mean", {m.feat_mean.size()}, m.feat_mean.data(),
               m.feat_mean.size());
    ck.put_f64("norm/std", {m.feat_std.size()}, m.feat_std.data(),
               m.feat_std.size());
}

template <typename T>
void save_classifier(ClassifierModel<T>& m, const std::filesystem::path& path) {
    Checkpoint ck;
    append_classifier(ck, m);
    ck.save(path);
}

template <typename T>
ClassifierModel<T> extract_classifier(const Checkpoint& ck) {
    if (ck.get_scalar("hp/kind") != 1.0)
        throw IoError("checkpoint: not a classifier");
    ClassifierHyper hp;
    hp.input_len = static_cast<std::size_t>(ck.get_scalar("hp/input_len"));
    hp.in_channels = static_cast<std::size_t>(ck.get_scalar("hp/in_channels"));
    hp.n_classes = static_cast<std::size_t>(ck.get_scalar("hp/n_classes"));
    hp.width = static_cast<std::size_t>(ck.get_scalar("hp/width"));
    hp.stem_stride = static_cast<std::size_t>(ck.get_scalar("hp/stem_stride"));
    Rng dummy(0);
    ClassifierModel<T> m(hp, dummy);
    get_params(ck, m.params);
    for (auto& [name, st] : classifier_bns(m)) get_bn(ck, name, *st);
    m.feat_mean = ck.get_f64("norm/mean");
    m.feat_std = ck.get_f64("norm/std");
    return m;
}

template <typename T>
ClassifierModel<T> load_classifier(const std::filesystem::path& path) {
    return extract_classifier<T>(Checkpoint::load(path));
}

template <typename T>
void append_vae(Checkpoint& ck, VaeModel<T>& m) {
    ck.put_scalar("hp/kind", 2.0);   // 2 = vae
    ck.put_scalar("hp/n_samples", static_cast<double>(m.hp.n_samples));
    ck.put_scalar("hp/latent_dim", static_cast<double>(m.hp.latent_dim));
    ck.put_scalar("hp/base_width", static_cast<double>(m.hp.base_width));
    put_params(ck, m.params);
}

template <typename T>
void save_vae(VaeModel<T>& m, const std::filesystem::path& path) {
    Checkpoint ck;
    append_vae(ck, m);
    ck.save(path);
}

template <typename T>
VaeModel<T> extract_vae(const Checkpoint& ck) {
    if (ck.get_scalar("hp/kind") != 2.0)
        throw IoError("checkpoint: not a vae");
    VaeHyper hp;
    hp.n_samples = static_cast<std::size_t>(ck.get_scalar("hp/n_samples"));
    hp.latent_dim = static_cast<std::size_t>(ck.get_scalar("hp/latent_dim"));
    hp.base_width = static_cast<std::size_t>(ck.get_scalar("hp/base_width"));
    Rng dummy(0);
    VaeModel<T> m(hp, dummy);
    get_params(ck, m.params);
    return m;
}

template <typename T>
VaeModel<T> load_vae(const std::filesystem::path& path) {
    return extract_vae<T>(Checkpoint::load(path));
}

}  // namespace rffsb::nn
