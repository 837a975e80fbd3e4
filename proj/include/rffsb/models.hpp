#pragma once
// The two concrete networks: a small 1-D ResNet classifying CLPS features,
// and the spoofing VAE, plus the four-term attack loss.

#include <string>

#include "rffsb/layers.hpp"
#include "rffsb/tensor.hpp"

namespace rffsb::nn {

struct LossWeights {
    double recon = 2.0;
    double kl = 0.1;
    double clps = 1.0;
    double cls = 0.5;

    void validate() const {
        if (recon < 0 || kl < 0 || clps < 0 || cls < 0)
            throw ConfigError("loss weights must be >= 0");
    }
};

// recon vs input (4a), latent KL (4b), feature match (4c), classifier CE (4d).
template <typename T>
Tensor<T> total_loss(const Tensor<T>& recon, const Tensor<T>& input,
                     const Tensor<T>& mu, const Tensor<T>& logvar,
                     const Tensor<T>& clps_recon, const Tensor<T>& clps_target,
                     const Tensor<T>& logits, const std::vector<int>& target_labels,
                     const LossWeights& w) {
    w.validate();
    auto l_rec = mse_loss(recon, input);
    auto l_kl = gaussian_kl(mu, logvar);
    auto l_clps = mse_loss(clps_recon, clps_target);
    auto l_cls = softmax_cross_entropy(logits, target_labels);
    return weighted_sum<T>({l_rec, l_kl, l_clps, l_cls},
                           {w.recon, w.kl, w.clps, w.cls});
}

template <typename T>
struct ResBlock {
    Conv1dLayer<T> c1, c2, skip;
    BatchNormLayer<T> b1, b2;
    bool has_skip = false;

    ResBlock() = default;
    ResBlock(ParamSet<T>& ps, const std::string& name, std::size_t cin,
             std::size_t cout, std::size_t stride, Rng& rng) {
        c1 = Conv1dLayer<T>(ps, name + ".c1", cin, cout, 3, stride, 1, rng);
        b1 = BatchNormLayer<T>(ps, name + ".b1", cout);
        c2 = Conv1dLayer<T>(ps, name + ".c2", cout, cout, 3, 1, 1, rng);
        b2 = BatchNormLayer<T>(ps, name + ".b2", cout);
        has_skip = (cin != cout || stride != 1);
        if (has_skip)
            skip = Conv1dLayer<T>(ps, name + ".skip", cin, cout, 1, stride, 0, rng);
    }

    Tensor<T> operator()(const Tensor<T>& x, bool training) {
        auto h = relu(b1(c1(x), training));
        h = b2(c2(h), training);
        auto sk = has_skip ? skip(x) : x;
        return relu(add(h, sk));
    }
};

struct ClassifierHyper {
    std::size_t input_len = 1024;   // bins (CLPS) or samples (raw ablation)
    std::size_t in_channels = 1;    // 1 = CLPS feature, 2 = raw I/Q
    std::size_t n_classes = 10;
    std::size_t width = 16;         // stem channels; blocks use w, 2w, 4w
    std::size_t stem_stride = 1;    // raw mode uses 4 to tame the length

    std::size_t row_len() const { return in_channels * input_len; }
    std::size_t flat_len() const {
        return 4 * width * (input_len / stem_stride / 4);
    }
};

// Stem conv -> three residual blocks (stride-2 entering blocks 2 and 3) ->
// flatten -> dense logits.  Spectral fingerprints are bin-positional, so the
// head keeps position information instead of pooling it away.
template <typename T>
struct ClassifierModel {
    ClassifierHyper hp;
    ParamSet<T> params;
    Conv1dLayer<T> stem;
    ResBlock<T> blk1, blk2, blk3;
    Dense<T> head;
    // Per-position standardization fitted on the training set.
    std::vector<double> feat_mean, feat_std;

    ClassifierModel() = default;
    explicit ClassifierModel(const ClassifierHyper& h, Rng& rng) : hp(h) {
        if (h.input_len % (4 * h.stem_stride) != 0)
            throw ConfigError(
                "classifier: input_len must divide by 4*stem_stride");
        const std::size_t w = h.width;
        stem = Conv1dLayer<T>(params, "stem", h.in_channels, w, 3,
                              h.stem_stride, 1, rng);
        blk1 = ResBlock<T>(params, "blk1", w, w, 1, rng);
        blk2 = ResBlock<T>(params, "blk2", w, 2 * w, 2, rng);
        blk3 = ResBlock<T>(params, "blk3", 2 * w, 4 * w, 2, rng);
        head = Dense<T>(params, "head", h.flat_len(), h.n_classes, rng);
        feat_mean.assign(h.row_len(), 0.0);
        feat_std.assign(h.row_len(), 1.0);
    }

    // x: [B, in_channels, input_len] already standardized.
    Tensor<T> forward(const Tensor<T>& x, bool training) {
        if (x.shape() != Shape{x.shape()[0], hp.in_channels, hp.input_len})
            throw ShapeError("classifier: expect [B,in_channels,input_len]");
        auto h = relu(stem(x));
        h = blk1(h, training);
        h = blk2(h, training);
        h = blk3(h, training);
        h = reshape(h, {x.shape()[0], hp.flat_len()});
        return head(h);
    }

    // Per-position mean/std over training rows (row = channel-major flatten).
    void fit_normalizer(const std::vector<std::vector<double>>& rows) {
        const std::size_t F = hp.row_len();
        feat_mean.assign(F, 0.0);
        feat_std.assign(F, 0.0);
        for (const auto& r : rows)
            for (std::size_t k = 0; k < F; ++k) feat_mean[k] += r[k];
        for (auto& v : feat_mean) v /= static_cast<double>(rows.size());
        for (const auto& r : rows)
            for (std::size_t k = 0; k < F; ++k) {
                const double d = r[k] - feat_mean[k];
                feat_std[k] += d * d;
            }
        for (auto& v : feat_std)
            v = std::sqrt(v / static_cast<double>(rows.size())) + 1e-6;
    }

    // Single global scale (zero mean): the raw-I/Q ablation normalizes
    // amplitude without flattening the pulse structure.
    void fit_normalizer_global(const std::vector<std::vector<double>>& rows) {
        const std::size_t F = hp.row_len();
        double acc = 0.0;
        std::size_t n = 0;
        for (const auto& r : rows)
            for (double v : r) { acc += v * v; ++n; }
        const double sigma = std::sqrt(acc / static_cast<double>(n)) + 1e-9;
        feat_mean.assign(F, 0.0);
        feat_std.assign(F, sigma);
    }

    // Standardize a batch of raw rows into a [B,in_channels,input_len] tensor.
    Tensor<T> standardize(const std::vector<std::vector<double>>& rows) const {
        const std::size_t F = hp.row_len();
        std::vector<T> v(rows.size() * F);
        for (std::size_t b = 0; b < rows.size(); ++b) {
            if (rows[b].size() != F)
                throw ShapeError("classifier: feature length mismatch");
            for (std::size_t k = 0; k < F; ++k)
                v[b * F + k] = static_cast<T>(
                    (rows[b][k] - feat_mean[k]) / feat_std[k]);
        }
        return Tensor<T>::from({rows.size(), hp.in_channels, hp.input_len},
                               std::move(v));
    }

    // Inference on raw (unstandardized) feature rows.
    std::vector<std::vector<double>> predict_probs(
        const std::vector<std::vector<double>>& rows) {
        auto logits = forward(standardize(rows), /*training=*/false);
        const std::size_t B = rows.size(), C = hp.n_classes;
        std::vector<std::vector<double>> probs(B, std::vector<double>(C));
        for (std::size_t b = 0; b < B; ++b) {
            double mx = logits.values()[b * C];
            for (std::size_t c = 1; c < C; ++c)
                mx = std::max(mx, static_cast<double>(logits.values()[b * C + c]));
            double z = 0.0;
            for (std::size_t c = 0; c < C; ++c) {
                probs[b][c] = std::exp(logits.values()[b * C + c] - mx);
                z += probs[b][c];
            }
            for (auto& p : probs[b]) p /= z;
        }
        return probs;
    }

    std::vector<int> predict(const std::vector<std::vector<double>>& rows) {
        auto probs = predict_probs(rows);
        std::vector<int> labels(rows.size());
        for (std::size_t b = 0; b < rows.size(); ++b) {
            int best = 0;
            for (std::size_t c = 1; c < hp.n_classes; ++c)
                if (probs[b][c] > probs[b][best]) best = static_cast<int>(c);
            labels[b] = best;
        }
        return labels;
    }
};

struct VaeHyper {
    std::size_t n_samples = 5120;
    std::size_t latent_dim = 128;
    std::size_t base_width = 16;   // encoder channels: w, 2w, 4w
};

// Conv encoder (K=5, stride 2, ReLU) to mu/logvar, dense + transposed-conv
// decoder mirroring the encoder, linear output head.
template <typename T>
struct VaeModel {
    VaeHyper hp;
    ParamSet<T> params;
    Conv1dLayer<T> e1, e2, e3;
    Dense<T> fmu, flv, fdec;
    ConvT1dLayer<T> d1, d2, d3;

    VaeModel() = default;
    explicit VaeModel(const VaeHyper& h, Rng& rng) : hp(h) {
        if (h.n_samples % 8 != 0)
            throw ConfigError("vae: n_samples must be divisible by 8");
        const std::size_t w = h.base_width;
        const std::size_t flat = 4 * w * (h.n_samples / 8);
        e1 = Conv1dLayer<T>(params, "e1", 2, w, 5, 2, 2, rng);
        e2 = Conv1dLayer<T>(params, "e2", w, 2 * w, 5, 2, 2, rng);
        e3 = Conv1dLayer<T>(params, "e3", 2 * w, 4 * w, 5, 2, 2, rng);
        fmu = Dense<T>(params, "fmu", flat, h.latent_dim, rng);
        flv = Dense<T>(params, "flv", flat, h.latent_dim, rng);
        fdec = Dense<T>(params, "fdec", h.latent_dim, flat, rng);
        d1 = ConvT1dLayer<T>(params, "d1", 4 * w, 2 * w, 5, 2, 2, 1, rng);
        d2 = ConvT1dLayer<T>(params, "d2", 2 * w, w, 5, 2, 2, 1, rng);
        d3 = ConvT1dLayer<T>(params, "d3", w, 2, 5, 2, 2, 1, rng);
    }

    struct Output {
        Tensor<T> recon, mu, logvar;
    };

    // x: [B, 2, n_samples]; eps: latent noise, one draw per (batch, dim).
    Output forward(const Tensor<T>& x, const std::vector<T>& eps) {
        const std::size_t B = x.shape()[0];
        if (x.shape() != Shape{B, 2, hp.n_samples})
            throw ShapeError("vae: expect [B,2,n_samples]");
        if (eps.size() != B * hp.latent_dim)
            throw ShapeError("vae: eps size mismatch");
        const std::size_t w = hp.base_width;
        const std::size_t l8 = hp.n_samples / 8;

        auto h = relu(e1(x));
        h = relu(e2(h));
        h = relu(e3(h));
        h = reshape(h, {B, 4 * w * l8});
        Output out;
        out.mu = fmu(h);
        out.logvar = flv(h);
        auto z = gaussian_sample(out.mu, out.logvar, eps);
        auto g = relu(fdec(z));
        g = reshape(g, {B, 4 * w, l8});
        g = relu(d1(g));
        g = relu(d2(g));
        out.recon = d3(g);
        return out;
    }
};

}  // namespace rffsb::nn
