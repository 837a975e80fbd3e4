#pragma once
// 802.15.4-style O-QPSK preamble synthesis and transmitter IQ impairment.
//
// The emitted frame is the 8-symbol all-zero preamble: each symbol maps to the
// same 32-chip PN sequence, even chips drive I, odd chips drive Q delayed by
// one chip period, both shaped by a half-sine pulse spanning two chip periods.

#include <array>
#include <vector>

#include "rffsb/common.hpp"
#include "rffsb/rng.hpp"

namespace rffsb {

struct FrameSpec {
    int oversample = 20;        // samples per chip
    int n_symbols = 8;
    double chip_rate = 2.0e6;   // chips/s
    double bit_rate = 250e3;    // payload bit rate (bookkeeping only)

    int n_chips() const { return n_symbols * 32; }
    int n_samples() const { return n_chips() * oversample; }
    double sample_rate() const { return chip_rate * oversample; }
};

// Chip sequence for the zero symbol (the only one the preamble uses).
inline const std::array<int, 32>& zero_symbol_chips() {
    static const std::array<int, 32> seq = {
        1,1,0,1,1,0,0,1,1,1,0,0,0,0,1,1,
        0,1,0,1,0,0,1,0,0,0,1,0,1,1,1,0};
    return seq;
}

struct IqFrame {
    std::vector<double> i, q;

    std::size_t size() const { return i.size(); }

    std::vector<cdouble> to_complex() const {
        std::vector<cdouble> out(i.size());
        for (std::size_t k = 0; k < i.size(); ++k) out[k] = {i[k], q[k]};
        return out;
    }

    static IqFrame from_complex(const std::vector<cdouble>& x) {
        IqFrame f;
        f.i.resize(x.size());
        f.q.resize(x.size());
        for (std::size_t k = 0; k < x.size(); ++k) {
            f.i[k] = x[k].real();
            f.q[k] = x[k].imag();
        }
        return f;
    }
};

inline IqFrame make_preamble(const FrameSpec& spec = {}) {
    const int os = spec.oversample;
    const int n = spec.n_samples();
    const int n_chips = spec.n_chips();
    const auto& seq = zero_symbol_chips();

    IqFrame f;
    f.i.assign(n, 0.0);
    f.q.assign(n, 0.0);

    // Half-sine pulse over two chip periods.
    const int plen = 2 * os;
    std::vector<double> pulse(plen);
    for (int t = 0; t < plen; ++t)
        pulse[t] = std::sin(kPi * t / static_cast<double>(plen));

    for (int k = 0; k < n_chips / 2; ++k) {
        const int ci = seq[(2 * k) % 32] ? 1 : -1;
        const int cq = seq[(2 * k + 1) % 32] ? 1 : -1;
        const int s0 = k * 2 * os;          // I pulse start
        const int s1 = s0 + os;             // Q offset by one chip
        for (int t = 0; t < plen; ++t) {
            if (s0 + t < n) f.i[s0 + t] += ci * pulse[t];
            if (s1 + t < n) f.q[s1 + t] += cq * pulse[t];
        }
    }
    return f;
}

// Transmitter front-end signature: gain imbalance on I, phase skew leaking I
// into Q.  Linear and invertible for the parameter ranges used here.
struct DeviceProfile {
    double gain_imbalance = 0.0;   // epsilon_g, dimensionless
    double phase_skew_rad = 0.0;   // epsilon_phi
};

inline IqFrame apply_impairment(const IqFrame& in, const DeviceProfile& d) {
    IqFrame out;
    const std::size_t n = in.size();
    out.i.resize(n);
    out.q.resize(n);
    const double g = 1.0 + d.gain_imbalance;
    const double c = std::cos(d.phase_skew_rad);
    const double s = std::sin(d.phase_skew_rad);
    for (std::size_t k = 0; k < n; ++k) {
        out.i[k] = g * in.i[k];
        out.q[k] = in.q[k] * c + in.i[k] * s;
    }
    return out;
}

struct FleetSpec {
    int n_legit = 10;
    double gain_lo = -0.3, gain_hi = 0.3;
    double phase_lo_deg = -15.0, phase_hi_deg = 15.0;
};

// Draw n_legit device profiles plus one attacker profile (last entry).
inline std::vector<DeviceProfile> sample_fleet(const FleetSpec& fs,
                                               std::uint64_t master_seed) {
    Rng rng(master_seed, StreamId::fleet);
    std::vector<DeviceProfile> fleet(fs.n_legit + 1);
    for (auto& d : fleet) {
        d.gain_imbalance = rng.uniform(fs.gain_lo, fs.gain_hi);
        d.phase_skew_rad =
            rng.uniform(fs.phase_lo_deg, fs.phase_hi_deg) * kPi / 180.0;
    }
    return fleet;
}

}  // namespace rffsb
