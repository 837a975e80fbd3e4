#pragma once
// Deterministic RNG with hierarchical stream derivation.
//
// Every stochastic site derives its own generator from (master_seed, stream_id,
// index) so regenerating any single frame or channel draw never depends on call
// order.  std::* distributions are implementation-defined, so uniform/normal
// sampling is done by hand (Box-Muller) to keep outputs identical across
// toolchains.

#include <cstdint>
#include <cmath>

#include "rffsb/common.hpp"

namespace rffsb {

// Independent stochastic paths through the system.  Each (path, device, frame)
// triple owns a disjoint stream.
enum class StreamId : std::uint64_t {
    fleet = 1,          // device impairment parameter draws
    legit_rx = 2,       // legitimate device -> receiver channel + noise
    attacker_rx = 3,    // attacker -> receiver channel + noise
    attacker_col = 4,   // attacker -> colluder channel + noise
    target_col = 5,     // target -> colluder channel + noise
    train = 6,          // shuffles, init, latent draws
    eval = 7,           // evaluation-time channel draws
};

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Mix an arbitrary key list into one 64-bit seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t s = master;
    splitmix64(s);
    s ^= a * 0x9e3779b97f4a7c15ULL;
    splitmix64(s);
    s ^= b * 0xd1b54a32d192ed03ULL;
    splitmix64(s);
    s ^= c * 0x8cb92ba72f3d8dd7ULL;
    return splitmix64(s);
}

// xoshiro256++ (Blackman & Vigna).  Fast, solid equidistribution, trivially
// portable.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
        have_gauss_ = false;
    }

    Rng(std::uint64_t master, StreamId stream, std::uint64_t a = 0,
        std::uint64_t b = 0)
        : Rng(derive_seed(master, static_cast<std::uint64_t>(stream), a, b)) {}

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0, 1).  53-bit mantissa fill.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller; caches the second deviate.
    double gauss() {
        if (have_gauss_) {
            have_gauss_ = false;
            return cached_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double th = 2.0 * kPi * u2;
        cached_ = r * std::sin(th);
        have_gauss_ = true;
        return r * std::cos(th);
    }

    // Circularly-symmetric complex normal with E|z|^2 = 1.
    cdouble cgauss() {
        const double scale = std::sqrt(0.5);
        const double re = gauss();
        const double im = gauss();
        return {scale * re, scale * im};
    }

    // Uniform integer in [0, n).  Rejection-free modulo is fine here: n is
    // always tiny relative to 2^64 so the bias is < 1e-15.
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t s_[4];
    double cached_ = 0.0;
    bool have_gauss_ = false;
};

}  // namespace rffsb
