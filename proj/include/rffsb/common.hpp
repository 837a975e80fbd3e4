#pragma once
// Shared basics: error types, byte helpers, small numeric utilities.

#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace rffsb {

using cdouble = std::complex<double>;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

constexpr double kPi = 3.14159265358979323846;

inline double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }
inline double lin_to_db(double lin) { return 10.0 * std::log10(lin); }

template <typename T>
double mean_power(const std::vector<std::complex<T>>& x) {
    double acc = 0.0;
    for (const auto& v : x) acc += static_cast<double>(v.real()) * v.real() +
                                   static_cast<double>(v.imag()) * v.imag();
    return x.empty() ? 0.0 : acc / static_cast<double>(x.size());
}

inline double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Round a positive value up to the next power of two.
inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

}  // namespace rffsb
