#pragma once
// Channel-resistant feature extraction: centralized logarithmic power
// spectrum of the frame autocorrelation.
//
// Pipeline: biased ACF -> |FFT|^2 -> log10 -> mean removal over the whole
// grid -> crop to the central band (fftshift order) -> optional block-mean
// decimation -> re-center.  Because the FFT size is >= 2N-1, the spectrum of
// the zero-padded two-sided ACF equals (|FFT(x)|^2 / N)^2 bin for bin, which
// is what the production path computes; the explicit ACF is still exposed.

#include <vector>

#include "rffsb/common.hpp"
#include "rffsb/fft.hpp"
#include "rffsb/frame.hpp"

namespace rffsb {

struct ClpsSpec {
    std::size_t fft_size = 0;       // 0 = auto: next power of two >= 2N-1
    std::size_t band_bins = 1024;   // central bins kept before decimation
    std::size_t feature_len = 1024; // output bins (band_bins % feature_len == 0)
    double eps = 1e-12;             // log floor

    std::size_t resolve_fft(std::size_t n_samples) const {
        const std::size_t need = 2 * n_samples - 1;
        const std::size_t m = fft_size == 0 ? next_pow2(need) : fft_size;
        if (m < need) throw ConfigError("clps: fft_size must be >= 2N-1");
        if ((m & (m - 1)) != 0)
            throw ConfigError("clps: fft_size must be a power of two");
        if (band_bins == 0 || band_bins % 2 != 0 || band_bins > m)
            throw ConfigError("clps: band_bins must be even and <= fft_size");
        if (feature_len == 0 || band_bins % feature_len != 0)
            throw ConfigError("clps: feature_len must divide band_bins");
        return m;
    }
};

struct ClpsFeature {
    std::vector<double> bins;
    bool degenerate = false;   // all-zero input: every bin sat at the log floor
};

// Biased two-sided sample ACF, lags -(N-1)..(N-1) in natural order
// (index k holds lag k-(N-1)):  acf(l) = (1/N) sum_n x[n] conj(x[n-l]).
inline std::vector<cdouble> autocorrelate(const IqFrame& frame) {
    const auto x = frame.to_complex();
    const std::size_t n = x.size();
    if (n < 2) throw ShapeError("autocorrelate: frame too short");
    std::vector<cdouble> acf(2 * n - 1, cdouble(0.0, 0.0));
    for (std::size_t l = 0; l < n; ++l) {
        cdouble acc(0.0, 0.0);
        for (std::size_t k = 0; k + l < n; ++k) acc += x[k + l] * std::conj(x[k]);
        acc /= static_cast<double>(n);
        acf[n - 1 + l] = acc;                     // lag +l
        acf[n - 1 - l] = std::conj(acc);          // lag -l
    }
    return acf;
}

// Squared magnitude of the ACF spectrum on the padded grid, natural bin order.
inline std::vector<double> clps_spectrum(const IqFrame& frame,
                                         const ClpsSpec& spec = {}) {
    const std::size_t m = spec.resolve_fft(frame.size());
    const auto X = fft_padded(frame.to_complex(), m);
    const double inv_n = 1.0 / static_cast<double>(frame.size());
    std::vector<double> p(m);
    for (std::size_t k = 0; k < m; ++k) {
        const double s = std::norm(X[k]) * inv_n;   // == FFT of the biased ACF
        p[k] = s * s;                               // squared once more
    }
    return p;
}

inline ClpsFeature extract_clps_feature(const IqFrame& frame,
                                        const ClpsSpec& spec = {}) {
    const std::size_t m = spec.resolve_fft(frame.size());
    const auto p = clps_spectrum(frame, spec);

    // The log floor rides on the spectrum's own scale so the feature stays
    // exactly scale-invariant: log10(c(P+eps*mean)) differs by a constant,
    // which the centering removes.  All-zero frames fall back to the bare eps.
    double pmean = 0.0;
    for (std::size_t k = 0; k < m; ++k) pmean += p[k];
    pmean /= static_cast<double>(m);
    const double floor = pmean > 0.0 ? spec.eps * pmean : spec.eps;

    std::vector<double> logp(m);
    double lmean = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        logp[k] = std::log10(p[k] + floor);
        lmean += logp[k];
    }
    lmean /= static_cast<double>(m);

    // Central band in fftshift order: negative-frequency half first.
    const std::size_t half = spec.band_bins / 2;
    std::vector<double> band(spec.band_bins);
    for (std::size_t k = 0; k < half; ++k) band[k] = logp[m - half + k] - lmean;
    for (std::size_t k = 0; k < half; ++k) band[half + k] = logp[k] - lmean;

    // Block-mean decimation down to feature_len (identity when equal).
    const std::size_t block = spec.band_bins / spec.feature_len;
    ClpsFeature out;
    out.bins.assign(spec.feature_len, 0.0);
    for (std::size_t k = 0; k < spec.feature_len; ++k) {
        double acc = 0.0;
        for (std::size_t j = 0; j < block; ++j) acc += band[k * block + j];
        out.bins[k] = acc / static_cast<double>(block);
    }

    const double dmean = mean_of(out.bins);
    for (auto& v : out.bins) v -= dmean;
    out.degenerate = pmean <= 0.0;
    return out;
}

inline std::vector<double> extract_clps(const IqFrame& frame,
                                        const ClpsSpec& spec = {}) {
    return extract_clps_feature(frame, spec).bins;
}

}  // namespace rffsb
