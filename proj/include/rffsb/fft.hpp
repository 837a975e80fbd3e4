#pragma once
// In-place iterative radix-2 FFT for power-of-two sizes.  Double precision
// twiddles regardless of the sample type so float pipelines keep full phase
// accuracy.

#include <complex>
#include <vector>

#include "rffsb/common.hpp"

namespace rffsb {

template <typename T>
void fft_inplace(std::vector<std::complex<T>>& a, bool inverse) {
    const std::size_t n = a.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw ShapeError("fft: size must be a power of two");

    // Bit-reversal permutation.
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }

    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * kPi / static_cast<double>(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u(a[i + k].real(), a[i + k].imag());
                const std::complex<double> v =
                    std::complex<double>(a[i + k + len / 2].real(),
                                         a[i + k + len / 2].imag()) * w;
                const auto s = u + v;
                const auto d = u - v;
                a[i + k] = {static_cast<T>(s.real()), static_cast<T>(s.imag())};
                a[i + k + len / 2] = {static_cast<T>(d.real()),
                                      static_cast<T>(d.imag())};
                w *= wl;
            }
        }
    }

    if (inverse) {
        const T inv_n = static_cast<T>(1.0 / static_cast<double>(n));
        for (auto& v : a) v *= inv_n;
    }
}

// Forward FFT of x zero-padded to m points (m must be a power of two >= x.size()).
template <typename T>
std::vector<std::complex<T>> fft_padded(const std::vector<std::complex<T>>& x,
                                        std::size_t m) {
    if (m < x.size()) throw ShapeError("fft_padded: m < input size");
    std::vector<std::complex<T>> a(m, std::complex<T>(0, 0));
    std::copy(x.begin(), x.end(), a.begin());
    fft_inplace(a, false);
    return a;
}

}  // namespace rffsb
