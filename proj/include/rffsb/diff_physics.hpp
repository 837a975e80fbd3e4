#pragma once
// Differentiable twins of the transmit chain: IQ impairment, channel
// propagation, and CLPS extraction as autodiff nodes over [B, 2, N] tensors.
// These make the colluder's impairment -> channel -> CLPS -> classifier chain
// trainable end to end.

#include "rffsb/channel.hpp"
#include "rffsb/clps.hpp"
#include "rffsb/fft.hpp"
#include "rffsb/frame.hpp"
#include "rffsb/tensor.hpp"

namespace rffsb::nn {

// Hardware signature, differentiable w.r.t. the signal (g, phi are constants).
template <typename T>
Tensor<T> apply_impairment_diff(const Tensor<T>& x, const DeviceProfile& dev) {
    const auto& s = x.shape();
    if (s.size() != 3 || s[1] != 2) throw ShapeError("impair: expect [B,2,N]");
    const std::size_t B = s[0], N = s[2];
    const T g = static_cast<T>(1.0 + dev.gain_imbalance);
    const T c = static_cast<T>(std::cos(dev.phase_skew_rad));
    const T sn = static_cast<T>(std::sin(dev.phase_skew_rad));

    std::vector<T> v(x.numel());
    for (std::size_t b = 0; b < B; ++b) {
        const T* xi = x.values().data() + (b * 2 + 0) * N;
        const T* xq = x.values().data() + (b * 2 + 1) * N;
        T* yi = v.data() + (b * 2 + 0) * N;
        T* yq = v.data() + (b * 2 + 1) * N;
        for (std::size_t k = 0; k < N; ++k) {
            yi[k] = g * xi[k];
            yq[k] = xq[k] * c + xi[k] * sn;
        }
    }
    auto xn = x.node();
    return make_node<T>(s, std::move(v), {x},
        [xn, B, N, g, c, sn](TensorData<T>& self) {
            xn->ensure_grad();
            for (std::size_t b = 0; b < B; ++b) {
                const T* gi = self.g.data() + (b * 2 + 0) * N;
                const T* gq = self.g.data() + (b * 2 + 1) * N;
                T* xgi = xn->g.data() + (b * 2 + 0) * N;
                T* xgq = xn->g.data() + (b * 2 + 1) * N;
                for (std::size_t k = 0; k < N; ++k) {
                    xgi[k] += g * gi[k] + sn * gq[k];
                    xgq[k] += c * gq[k];
                }
            }
        });
}

// One frozen channel draw per batch element: taps, Doppler, and unit-variance
// noise to be scaled at forward time.  The realization is a constant;
// gradients flow through the signal only (conjugate-adjoint of the
// complex-linear chain).  Noise sigma is calibrated against the received
// power: by default the actual (detached) power of the propagated batch row,
// or a fixed ref_power, which makes the node exactly affine for checks.
struct ChannelDraw {
    std::vector<cdouble> taps;
    double doppler_hz = 0.0;
    std::vector<cdouble> unit_noise;   // iid CN(0, 2) pairs: (gauss, gauss)
    double ebn0_db = std::numeric_limits<double>::infinity();
    double ref_power = 0.0;            // 0 = calibrate on actual received power
};

inline ChannelDraw draw_channel(const ChannelProfile& p, double sample_rate,
                                std::size_t n, Rng& rng) {
    ChannelDraw d;
    const auto cr = realize_channel(p, sample_rate, rng);
    d.taps = cr.taps;
    d.doppler_hz = cr.doppler_hz;
    d.ebn0_db = p.ebn0_db;
    if (!std::isinf(p.ebn0_db)) {
        d.unit_noise.resize(n);
        for (auto& v : d.unit_noise) {
            const double re = rng.gauss();
            const double im = rng.gauss();
            v = cdouble(re, im);
        }
    }
    return d;
}

template <typename T>
Tensor<T> propagate_diff(const Tensor<T>& x, const std::vector<ChannelDraw>& draws,
                         double sample_rate) {
    const auto& s = x.shape();
    if (s.size() != 3 || s[1] != 2) throw ShapeError("propagate: expect [B,2,N]");
    const std::size_t B = s[0], N = s[2];
    if (draws.size() != B) throw ShapeError("propagate: one draw per batch row");

    // Pre-compute rotations per draw.
    std::vector<std::vector<cdouble>> rots(B);
    for (std::size_t b = 0; b < B; ++b) {
        if (draws[b].doppler_hz != 0.0) {
            rots[b].resize(N);
            const double w = 2.0 * kPi * draws[b].doppler_hz / sample_rate;
            for (std::size_t k = 0; k < N; ++k)
                rots[b][k] = cdouble(std::cos(w * k), std::sin(w * k));
        }
    }

    std::vector<T> v(x.numel());
    for (std::size_t b = 0; b < B; ++b) {
        const T* xi = x.values().data() + (b * 2 + 0) * N;
        const T* xq = x.values().data() + (b * 2 + 1) * N;
        std::vector<cdouble> y(N, cdouble(0.0, 0.0));
        for (std::size_t t = 0; t < draws[b].taps.size(); ++t) {
            const cdouble h = draws[b].taps[t];
            if (h == cdouble(0.0, 0.0)) continue;
            for (std::size_t k = t; k < N; ++k)
                y[k] += h * cdouble(xi[k - t], xq[k - t]);
        }
        if (!rots[b].empty())
            for (std::size_t k = 0; k < N; ++k) y[k] *= rots[b][k];
        if (!draws[b].unit_noise.empty()) {
            double ref = draws[b].ref_power;
            if (ref <= 0.0) ref = mean_power(y);   // detached calibration
            const double snr = db_to_lin(draws[b].ebn0_db);
            const double sigma = std::sqrt(ref / snr / 2.0);
            for (std::size_t k = 0; k < N; ++k)
                y[k] += sigma * draws[b].unit_noise[k];
        }
        T* yi = v.data() + (b * 2 + 0) * N;
        T* yq = v.data() + (b * 2 + 1) * N;
        for (std::size_t k = 0; k < N; ++k) {
            yi[k] = static_cast<T>(y[k].real());
            yq[k] = static_cast<T>(y[k].imag());
        }
    }

    auto xn = x.node();
    return make_node<T>(s, std::move(v), {x},
        [xn, draws, rots, B, N](TensorData<T>& self) {
            xn->ensure_grad();
            for (std::size_t b = 0; b < B; ++b) {
                const T* gi = self.g.data() + (b * 2 + 0) * N;
                const T* gq = self.g.data() + (b * 2 + 1) * N;
                std::vector<cdouble> u(N);
                for (std::size_t k = 0; k < N; ++k)
                    u[k] = cdouble(gi[k], gq[k]);
                if (!rots[b].empty())
                    for (std::size_t k = 0; k < N; ++k)
                        u[k] *= std::conj(rots[b][k]);
                std::vector<cdouble> gx(N, cdouble(0.0, 0.0));
                for (std::size_t t = 0; t < draws[b].taps.size(); ++t) {
                    const cdouble hc = std::conj(draws[b].taps[t]);
                    if (hc == cdouble(0.0, 0.0)) continue;
                    for (std::size_t k = 0; k + t < N; ++k)
                        gx[k] += hc * u[k + t];
                }
                T* xgi = xn->g.data() + (b * 2 + 0) * N;
                T* xgq = xn->g.data() + (b * 2 + 1) * N;
                for (std::size_t k = 0; k < N; ++k) {
                    xgi[k] += static_cast<T>(gx[k].real());
                    xgq[k] += static_cast<T>(gx[k].imag());
                }
            }
        });
}

// Differentiable CLPS.  Forward mirrors extract_clps (double-precision FFT
// internally); backward is the analytic adjoint of the log-spectrum chain.
template <typename T>
Tensor<T> extract_clps_diff(const Tensor<T>& x, const ClpsSpec& spec) {
    const auto& s = x.shape();
    if (s.size() != 3 || s[1] != 2) throw ShapeError("clps_diff: expect [B,2,N]");
    const std::size_t B = s[0], N = s[2];
    const std::size_t M = spec.resolve_fft(N);
    const std::size_t F = spec.feature_len;
    const std::size_t band = spec.band_bins;
    const std::size_t half = band / 2;
    const std::size_t block = band / F;

    // Saved activations for the backward pass.
    auto Xs = std::make_shared<std::vector<std::vector<cdouble>>>(B);
    auto Ps = std::make_shared<std::vector<std::vector<double>>>(B);
    auto Pmeans = std::make_shared<std::vector<double>>(B, 0.0);

    std::vector<T> v(B * F);
    for (std::size_t b = 0; b < B; ++b) {
        const T* xi = x.values().data() + (b * 2 + 0) * N;
        const T* xq = x.values().data() + (b * 2 + 1) * N;
        std::vector<cdouble> r(M, cdouble(0.0, 0.0));
        for (std::size_t k = 0; k < N; ++k) r[k] = cdouble(xi[k], xq[k]);
        fft_inplace(r, false);
        (*Xs)[b] = r;

        std::vector<double>& p = (*Ps)[b];
        p.resize(M);
        const double inv_n = 1.0 / static_cast<double>(N);
        double pmean = 0.0;
        for (std::size_t k = 0; k < M; ++k) {
            const double sk = std::norm(r[k]) * inv_n;
            p[k] = sk * sk;
            pmean += p[k];
        }
        pmean /= static_cast<double>(M);
        (*Pmeans)[b] = pmean;
        const double floor = pmean > 0.0 ? spec.eps * pmean : spec.eps;

        std::vector<double> logp(M);
        double lmean = 0.0;
        for (std::size_t k = 0; k < M; ++k) {
            logp[k] = std::log10(p[k] + floor);
            lmean += logp[k];
        }
        lmean /= static_cast<double>(M);

        std::vector<double> bandv(band);
        for (std::size_t k = 0; k < half; ++k)
            bandv[k] = logp[M - half + k] - lmean;
        for (std::size_t k = 0; k < half; ++k)
            bandv[half + k] = logp[k] - lmean;

        std::vector<double> feat(F);
        double fmean = 0.0;
        for (std::size_t k = 0; k < F; ++k) {
            double acc = 0.0;
            for (std::size_t j = 0; j < block; ++j) acc += bandv[k * block + j];
            feat[k] = acc / static_cast<double>(block);
            fmean += feat[k];
        }
        fmean /= static_cast<double>(F);
        for (std::size_t k = 0; k < F; ++k)
            v[b * F + k] = static_cast<T>(feat[k] - fmean);
    }

    auto xn = x.node();
    const double eps = spec.eps;
    return make_node<T>({B, F}, std::move(v), {x},
        [xn, Xs, Ps, Pmeans, B, N, M, F, band, half, block,
         eps](TensorData<T>& self) {
            xn->ensure_grad();
            const double ln10 = std::log(10.0);
            for (std::size_t b = 0; b < B; ++b) {
                const T* gout = self.g.data() + b * F;
                // adjoint of final centering
                double gmean = 0.0;
                for (std::size_t k = 0; k < F; ++k) gmean += gout[k];
                gmean /= static_cast<double>(F);
                // adjoint of decimation into the band
                std::vector<double> gband(band);
                for (std::size_t k = 0; k < F; ++k) {
                    const double gf = (gout[k] - gmean) / static_cast<double>(block);
                    for (std::size_t j = 0; j < block; ++j)
                        gband[k * block + j] = gf;
                }
                // scatter band back onto the full grid (fftshift inverse)
                std::vector<double> gc(M, 0.0);
                for (std::size_t k = 0; k < half; ++k) gc[M - half + k] = gband[k];
                for (std::size_t k = 0; k < half; ++k) gc[k] = gband[half + k];
                // adjoint of whole-grid centering
                double cmean = 0.0;
                for (std::size_t k = 0; k < M; ++k) cmean += gc[k];
                cmean /= static_cast<double>(M);
                // chain through log10, square, |.|^2/N back to the spectrum
                const auto& X = (*Xs)[b];
                const auto& P = (*Ps)[b];
                const double pmean = (*Pmeans)[b];
                const double floor = pmean > 0.0 ? eps * pmean : eps;
                std::vector<cdouble> G(M);
                std::vector<double> t(M);
                double tsum = 0.0;
                const double inv_n = 1.0 / static_cast<double>(N);
                for (std::size_t k = 0; k < M; ++k) {
                    const double gl = gc[k] - cmean;
                    t[k] = gl / (ln10 * (P[k] + floor));
                    tsum += t[k];
                }
                // the floor rides on mean(P), so every bin feeds back a share
                const double extra =
                    pmean > 0.0 ? eps * tsum / static_cast<double>(M) : 0.0;
                for (std::size_t k = 0; k < M; ++k) {
                    const double gp = t[k] + extra;
                    const double sk = std::sqrt(P[k]);     // S = |X|^2/N >= 0
                    const double gs = 2.0 * sk * gp;
                    // S = (Xr^2 + Xi^2)/N  ->  conj-gradient 2*X/N * gs
                    G[k] = X[k] * (2.0 * gs * inv_n);
                }
                // adjoint of zero-padded FFT: M * IFFT, truncate to N
                fft_inplace(G, true);
                T* xgi = xn->g.data() + (b * 2 + 0) * N;
                T* xgq = xn->g.data() + (b * 2 + 1) * N;
                const double scale = static_cast<double>(M);
                for (std::size_t k = 0; k < N; ++k) {
                    xgi[k] += static_cast<T>(G[k].real() * scale);
                    xgq[k] += static_cast<T>(G[k].imag() * scale);
                }
            }
        });
}

}  // namespace rffsb::nn
