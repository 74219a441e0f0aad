#pragma once

// Iterative radix-2 FFT (power-of-two lengths), used by the STFT front-end
// and the correlation machinery in evaluation.

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace phonosep {

inline void fft(std::vector<std::complex<double>>& a, bool invert) {
    const size_t n = a.size();
    if (n == 0 || (n & (n - 1)) != 0) throw std::invalid_argument("fft: length must be a power of two");
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    const double pi = 3.14159265358979323846;
    for (size_t len = 2; len <= n; len <<= 1) {
        double ang = 2 * pi / (double)len * (invert ? 1 : -1);
        std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (size_t k = 0; k < len / 2; ++k) {
                std::complex<double> u = a[i + k];
                std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (invert)
        for (auto& x : a) x /= (double)n;
}

inline size_t next_pow2(size_t n) {
    size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// Linear convolution of two real sequences via FFT.
inline std::vector<double> fft_convolve(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty()) return {};
    size_t m = a.size() + b.size() - 1;
    size_t n = next_pow2(m);
    std::vector<std::complex<double>> fa(n), fb(n);
    for (size_t i = 0; i < a.size(); ++i) fa[i] = a[i];
    for (size_t i = 0; i < b.size(); ++i) fb[i] = b[i];
    fft(fa, false);
    fft(fb, false);
    for (size_t i = 0; i < n; ++i) fa[i] *= fb[i];
    fft(fa, true);
    std::vector<double> out(m);
    for (size_t i = 0; i < m; ++i) out[i] = fa[i].real();
    return out;
}

// Cross-correlation r[l] = sum_t x[t] * y[t - l] for l in [0, max_lag).
inline std::vector<double> cross_correlate(const std::vector<double>& x, const std::vector<double>& y,
                                           size_t max_lag) {
    std::vector<double> yr(y.rbegin(), y.rend());
    std::vector<double> conv = fft_convolve(x, yr);
    // conv[k] = sum_t x[t] * y[y.size()-1 - (k - t)]; lag l corresponds to
    // index y.size()-1 + l
    std::vector<double> r(max_lag, 0.0);
    for (size_t l = 0; l < max_lag; ++l) {
        size_t idx = y.size() - 1 + l;
        if (idx < conv.size()) r[l] = conv[idx];
    }
    return r;
}

}  // namespace phonosep
