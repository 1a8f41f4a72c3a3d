#pragma once

#include <complex>
#include <span>

namespace regiontag {

/// Real-to-complex transform of fixed length backed by FFTW. Plans are created
/// once per length and shared; execution is safe from multiple threads.
class RealFft {
public:
    explicit RealFft(int n);

    int size() const { return n_; }
    int bins() const { return n_ / 2 + 1; }

    /// out[k] = sum_n in[n] exp(-2 pi i k n / N), k in [0, N/2].
    void forward(std::span<const double> in, std::span<std::complex<double>> out) const;
    /// Unnormalized inverse: out[n] = sum_k X[k] exp(+2 pi i k n / N) over the full
    /// Hermitian spectrum implied by `in` (N/2+1 bins).
    void inverse(std::span<const std::complex<double>> in, std::span<double> out) const;

private:
    int n_;
    void* forward_plan_;
    void* inverse_plan_;
};

}  // namespace regiontag
