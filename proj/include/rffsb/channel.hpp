#pragma once
// Tapped-delay-line fading channel with a Rician first tap, Rayleigh echoes,
// a per-frame Doppler offset, and calibrated AWGN.
//
// Block fading: one tap realization per frame; the Doppler shift is drawn
// uniformly in [-fd, fd] and held constant across the frame.

#include <algorithm>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "rffsb/common.hpp"
#include "rffsb/frame.hpp"
#include "rffsb/rng.hpp"

namespace rffsb {

struct ChannelProfile {
    std::string name = "default";
    std::vector<double> delays_ns;   // tap delays
    std::vector<double> gains_db;    // relative average tap powers
    double k_factor = 5.0;           // Rician K, linear; inf => no scatter on tap 0
    double doppler_hz = 10.0;        // max Doppler offset
    double ebn0_db = 10.0;           // per-frame noise operating point
};

inline ChannelProfile builtin_profile(const std::string& name) {
    ChannelProfile p;
    p.name = name;
    if (name == "default" || name == "indoor_a") {
        p.delays_ns = {0, 50, 110, 170, 290, 310};
        p.gains_db = {0, -3, -10, -18, -26, -32};
    } else if (name == "indoor_b") {
        p.delays_ns = {0, 100, 200, 300, 500, 700};
        p.gains_db = {0, -3.6, -7.2, -10.8, -18.0, -25.2};
    } else if (name == "vehicular_a") {
        p.delays_ns = {0, 310, 710, 1090, 1730, 2510};
        p.gains_db = {0, -1.0, -9.0, -10.0, -15.0, -20.0};
    } else if (name == "awgn") {
        p.delays_ns = {0};
        p.gains_db = {0};
        p.k_factor = std::numeric_limits<double>::infinity();
        p.doppler_hz = 0.0;
    } else {
        throw ConfigError("unknown channel profile: " + name);
    }
    return p;
}

inline const std::vector<std::string>& builtin_profile_names() {
    static const std::vector<std::string> names = {
        "default", "indoor_a", "indoor_b", "vehicular_a", "awgn"};
    return names;
}

struct ChannelRealization {
    std::vector<cdouble> taps;   // dense impulse response on the sample grid
    double doppler_hz = 0.0;     // per-frame constant offset actually drawn
};

// Draw one block-fading realization.  Tap powers normalize to unit total so
// the channel is on average energy preserving; delays snap to the sample grid
// with coincident taps merged (powers summed).
inline ChannelRealization realize_channel(const ChannelProfile& p,
                                          double sample_rate, Rng& rng) {
    if (p.delays_ns.size() != p.gains_db.size() || p.delays_ns.empty())
        throw ConfigError("channel profile: delays/gains mismatch");

    std::vector<double> pw(p.gains_db.size());
    double tot = 0.0;
    for (std::size_t k = 0; k < pw.size(); ++k) {
        pw[k] = db_to_lin(p.gains_db[k]);
        tot += pw[k];
    }
    for (auto& v : pw) v /= tot;

    // Snap to sample indices; merge duplicates.
    std::map<int, double> merged;
    for (std::size_t k = 0; k < pw.size(); ++k) {
        const int idx = static_cast<int>(
            std::llround(p.delays_ns[k] * 1e-9 * sample_rate));
        merged[idx] += pw[k];
    }

    ChannelRealization cr;
    cr.taps.assign(static_cast<std::size_t>(merged.rbegin()->first) + 1,
                   cdouble(0.0, 0.0));

    bool first = true;
    for (const auto& [idx, pk] : merged) {
        if (first) {
            const double theta = rng.uniform(0.0, 2.0 * kPi);
            const cdouble los(std::cos(theta), std::sin(theta));
            if (std::isinf(p.k_factor)) {
                cr.taps[idx] = std::sqrt(pk) * los;   // deterministic LOS
            } else {
                const double K = p.k_factor;
                const double a_los = std::sqrt(K / (K + 1.0));
                const double a_sc = std::sqrt(1.0 / (2.0 * (K + 1.0)));
                const cdouble sc(rng.gauss(), rng.gauss());
                cr.taps[idx] = std::sqrt(pk) * (a_los * los + a_sc * sc);
            }
            first = false;
        } else {
            const cdouble sc(rng.gauss(), rng.gauss());
            cr.taps[idx] = std::sqrt(pk / 2.0) * sc;
        }
    }

    cr.doppler_hz =
        p.doppler_hz > 0.0 ? rng.uniform(-p.doppler_hz, p.doppler_hz) : 0.0;
    return cr;
}

// Convolve, rotate by the Doppler offset, then add noise calibrated against
// the post-channel signal power.  ebn0_db == +inf disables the noise stage.
inline IqFrame propagate(const IqFrame& tx, const ChannelRealization& cr,
                         double sample_rate, double ebn0_db, Rng& rng) {
    const std::size_t n = tx.size();
    std::vector<cdouble> x = tx.to_complex();
    std::vector<cdouble> y(n, cdouble(0.0, 0.0));

    // Truncated linear convolution (output clipped to the frame length).
    for (std::size_t t = 0; t < cr.taps.size(); ++t) {
        const cdouble h = cr.taps[t];
        if (h == cdouble(0.0, 0.0)) continue;
        for (std::size_t k = t; k < n; ++k) y[k] += h * x[k - t];
    }

    if (cr.doppler_hz != 0.0) {
        const double w = 2.0 * kPi * cr.doppler_hz / sample_rate;
        for (std::size_t k = 0; k < n; ++k) {
            const double ph = w * static_cast<double>(k);
            y[k] *= cdouble(std::cos(ph), std::sin(ph));
        }
    }

    if (!std::isinf(ebn0_db)) {
        // Operating point maps directly to per-sample SNR; noise power is
        // referenced to the actual received power of this frame's fade.
        const double snr = db_to_lin(ebn0_db);
        const double py = mean_power(y);
        const double sigma = std::sqrt(py / snr / 2.0);
        for (auto& v : y)
            v += cdouble(sigma * rng.gauss(), sigma * rng.gauss());
    }
    return IqFrame::from_complex(y);
}

}  // namespace rffsb
