#pragma once

#include <complex>
#include <numbers>
#include <vector>

namespace liouville::detail {

/// Iterative radix-2 FFT with a precomputed twiddle table.  Sizes are powers
/// of two; that is all the periodic grids here ever use.
class Fft1D {
public:
    explicit Fft1D(int n) : n_(n) {
        int log2n = 0;
        while ((1 << log2n) < n) ++log2n;
        rev_.resize(n);
        for (int i = 1; i < n; ++i) rev_[i] = (rev_[i >> 1] >> 1) | ((i & 1) << (log2n - 1));
        for (int len = 2; len <= n; len <<= 1)
            for (int j = 0; j < len / 2; ++j)
                w_.push_back(std::polar(1.0, -2.0 * std::numbers::pi * j / len));
    }

    int size() const { return n_; }

    /// In-place transform with stride, sign -1 = forward, +1 = inverse
    /// (unnormalized).
    void transform(std::complex<double>* a, int stride, int sign) const {
        for (int i = 0; i < n_; ++i)
            if (i < rev_[i]) std::swap(a[i * stride], a[rev_[i] * stride]);
        size_t base = 0;
        for (int len = 2; len <= n_; len <<= 1) {
            const int half = len / 2;
            for (int start = 0; start < n_; start += len) {
                for (int j = 0; j < half; ++j) {
                    std::complex<double> w = w_[base + j];
                    if (sign > 0) w = std::conj(w);
                    std::complex<double>& lo = a[(start + j) * stride];
                    std::complex<double>& hi = a[(start + j + half) * stride];
                    const std::complex<double> tmp = hi * w;
                    hi = lo - tmp;
                    lo += tmp;
                }
            }
            base += half;
        }
    }

private:
    int n_;
    std::vector<int> rev_;
    std::vector<std::complex<double>> w_;
};

/// Unnormalized 2-D DFT of a real K x K field (row-major).
inline std::vector<std::complex<double>> fft2_forward(const std::vector<double>& f, int K) {
    const Fft1D plan(K);
    std::vector<std::complex<double>> F(f.begin(), f.end());
    for (int row = 0; row < K; ++row) plan.transform(F.data() + static_cast<size_t>(row) * K, 1, -1);
    for (int col = 0; col < K; ++col) plan.transform(F.data() + col, K, -1);
    return F;
}

/// Real part of the normalized inverse 2-D DFT.
inline std::vector<double> fft2_inverse_real(std::vector<std::complex<double>> F, int K) {
    const Fft1D plan(K);
    for (int row = 0; row < K; ++row) plan.transform(F.data() + static_cast<size_t>(row) * K, 1, +1);
    for (int col = 0; col < K; ++col) plan.transform(F.data() + col, K, +1);
    std::vector<double> f(static_cast<size_t>(K) * K);
    const double norm = 1.0 / (static_cast<double>(K) * K);
    for (size_t i = 0; i < f.size(); ++i) f[i] = F[i].real() * norm;
    return f;
}

/// Signed integer frequency for grid index i on a ring of K points.
inline int signed_freq(int i, int K) { return i <= K / 2 ? i : i - K; }

} // namespace liouville::detail
