#include "kflk/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "kflk/math_util.hpp"

namespace kflk {

struct PeriodicFft::Impl {
    int n = 0;
    double* real = nullptr;
    fftw_complex* spec = nullptr;
    fftw_complex* spec2 = nullptr;
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;

    explicit Impl(int n_) : n(n_) {
        real = fftw_alloc_real(n);
        spec = fftw_alloc_complex(n / 2 + 1);
        spec2 = fftw_alloc_complex(n / 2 + 1);
        fwd = fftw_plan_dft_r2c_1d(n, real, spec, FFTW_ESTIMATE);
        bwd = fftw_plan_dft_c2r_1d(n, spec, real, FFTW_ESTIMATE);
    }
    ~Impl() {
        if (fwd) fftw_destroy_plan(fwd);
        if (bwd) fftw_destroy_plan(bwd);
        fftw_free(real);
        fftw_free(spec);
        fftw_free(spec2);
    }
};

PeriodicFft::PeriodicFft(int n) {
    if (n < 2) throw std::invalid_argument("fft size must be >= 2");
    impl_ = std::make_unique<Impl>(n);
}

PeriodicFft::~PeriodicFft() = default;
PeriodicFft::PeriodicFft(PeriodicFft&&) noexcept = default;
PeriodicFft& PeriodicFft::operator=(PeriodicFft&&) noexcept = default;

int PeriodicFft::size() const { return impl_->n; }

void PeriodicFft::forward(std::span<const double> in, std::span<std::complex<double>> out) {
    const int n = impl_->n;
    std::memcpy(impl_->real, in.data(), sizeof(double) * n);
    fftw_execute(impl_->fwd);
    std::memcpy(out.data(), impl_->spec, sizeof(fftw_complex) * (n / 2 + 1));
}

void PeriodicFft::inverse(std::span<const std::complex<double>> in, std::span<double> out) {
    const int n = impl_->n;
    std::memcpy(impl_->spec, in.data(), sizeof(fftw_complex) * (n / 2 + 1));
    fftw_execute(impl_->bwd);
    for (int i = 0; i < n; ++i) out[i] = impl_->real[i] / n;
}

void PeriodicFft::shift(std::span<double> values, double s) {
    const int n = impl_->n;
    std::memcpy(impl_->real, values.data(), sizeof(double) * n);
    fftw_execute(impl_->fwd);
    // Rotate modes incrementally: w^k with w = e^{-2 pi i s}.
    const std::complex<double> w(std::cos(two_pi * s), -std::sin(two_pi * s));
    std::complex<double> wk(1.0, 0.0);
    for (int k = 1; k < n / 2; ++k) {
        wk *= w;
        const std::complex<double> c(impl_->spec[k][0], impl_->spec[k][1]);
        const std::complex<double> r = c * wk;
        impl_->spec[k][0] = r.real();
        impl_->spec[k][1] = r.imag();
    }
    // Nyquist: real part of the rotation keeps the signal real.
    const int ny = n / 2;
    const double cosny = std::cos(two_pi * ny * s);
    impl_->spec[ny][0] *= cosny;
    impl_->spec[ny][1] = 0.0;
    fftw_execute(impl_->bwd);
    for (int i = 0; i < n; ++i) values[i] = impl_->real[i] / n;
}

void PeriodicFft::convolve(std::span<const double> a, std::span<const double> b,
                           std::span<double> out) {
    const int n = impl_->n;
    std::memcpy(impl_->real, a.data(), sizeof(double) * n);
    fftw_execute(impl_->fwd);
    std::memcpy(impl_->spec2, impl_->spec, sizeof(fftw_complex) * (n / 2 + 1));
    std::memcpy(impl_->real, b.data(), sizeof(double) * n);
    fftw_execute(impl_->fwd);
    for (int k = 0; k <= n / 2; ++k) {
        const std::complex<double> pa(impl_->spec2[k][0], impl_->spec2[k][1]);
        const std::complex<double> pb(impl_->spec[k][0], impl_->spec[k][1]);
        const std::complex<double> r = pa * pb;
        impl_->spec[k][0] = r.real();
        impl_->spec[k][1] = r.imag();
    }
    fftw_execute(impl_->bwd);
    for (int i = 0; i < n; ++i) out[i] = impl_->real[i] / n;
}

}  // namespace kflk
