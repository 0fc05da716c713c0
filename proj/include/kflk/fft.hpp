#pragma once

#include <complex>
#include <memory>
#include <span>
#include <vector>

namespace kflk {

// Real periodic FFT of one fixed size, with cached FFTW plans and owned
// aligned buffers. Plan creation is not thread-safe; create per thread.
class PeriodicFft {
public:
    explicit PeriodicFft(int n);
    ~PeriodicFft();
    PeriodicFft(const PeriodicFft&) = delete;
    PeriodicFft& operator=(const PeriodicFft&) = delete;
    PeriodicFft(PeriodicFft&&) noexcept;
    PeriodicFft& operator=(PeriodicFft&&) noexcept;

    int size() const;

    // out has n/2 + 1 unnormalized coefficients.
    void forward(std::span<const double> in, std::span<std::complex<double>> out);
    // Normalizes by 1/n.
    void inverse(std::span<const std::complex<double>> in, std::span<double> out);

    // In-place periodic shift: values(x) <- values(x - s) with x in [0, 1)
    // units. Mode k is rotated by e^{-2 pi i k s}; the Nyquist mode keeps
    // only the real part of its rotation so the output stays real.
    void shift(std::span<double> values, double s);

    // Circular convolution out_i = sum_j a_j b_{i-j} (index units, no dx).
    void convolve(std::span<const double> a, std::span<const double> b,
                  std::span<double> out);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace kflk
