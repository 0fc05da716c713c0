#include "kflk/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kflk/math_util.hpp"

namespace kflk::model {

HerdingFunction HerdingFunction::rational(double beta) {
    if (!(beta > 0.0) || !std::isfinite(beta))
        throw ConfigError("herding beta must be > 0");
    HerdingFunction h;
    h.family_ = HerdingFamily::RationalBeta;
    h.beta_ = beta;
    return h;
}

HerdingFunction HerdingFunction::tabulated(std::span<const double> u,
                                           std::span<const double> g) {
    if (u.size() != g.size() || u.size() < 2)
        throw ConfigError("tabulated herding needs >= 2 matching nodes");
    if (u[0] != 0.0 || g[0] != 0.0)
        throw ConfigError("tabulated herding must start at (0, 0)");
    for (std::size_t i = 1; i < u.size(); ++i)
        if (!(u[i] > u[i - 1]))
            throw ConfigError("tabulated herding nodes must be strictly increasing");

    HerdingFunction h;
    h.family_ = HerdingFamily::Tabulated;
    h.nodes_.assign(u.begin(), u.end());
    h.values_.assign(g.begin(), g.end());

    // Natural cubic spline second derivatives (Thomas solve). Natural ends
    // give s''(0) = 0, so the odd extension is C^2 through the origin.
    const int n = static_cast<int>(u.size());
    h.second_.assign(n, 0.0);
    if (n > 2) {
        std::vector<double> diag(n - 2), rhs(n - 2), upper(n - 2);
        for (int i = 1; i < n - 1; ++i) {
            const double h0 = u[i] - u[i - 1];
            const double h1 = u[i + 1] - u[i];
            diag[i - 1] = 2.0 * (h0 + h1);
            upper[i - 1] = h1;
            rhs[i - 1] = 6.0 * ((g[i + 1] - g[i]) / h1 - (g[i] - g[i - 1]) / h0);
        }
        for (int i = 1; i < n - 2; ++i) {
            const double lower = u[i + 1] - u[i];
            const double m = lower / diag[i - 1];
            diag[i] -= m * upper[i - 1];
            rhs[i] -= m * rhs[i - 1];
        }
        for (int i = n - 3; i >= 0; --i) {
            const double next = (i + 1 < n - 2) ? upper[i] * h.second_[i + 2] : 0.0;
            h.second_[i + 1] = (rhs[i] - next) / diag[i];
        }
    }
    return h;
}

double HerdingFunction::spline_eval(double u) const {
    const auto& x = nodes_;
    const auto& y = values_;
    if (u >= x.back()) return y.back();
    const auto it = std::upper_bound(x.begin(), x.end(), u);
    const int i = std::max<int>(1, static_cast<int>(it - x.begin()));
    const double h = x[i] - x[i - 1];
    const double a = (x[i] - u) / h;
    const double b = (u - x[i - 1]) / h;
    return a * y[i - 1] + b * y[i] +
           ((a * a * a - a) * second_[i - 1] + (b * b * b - b) * second_[i]) * h * h / 6.0;
}

double HerdingFunction::spline_derivative(double u) const {
    const auto& x = nodes_;
    const auto& y = values_;
    if (u >= x.back()) return 0.0;
    const auto it = std::upper_bound(x.begin(), x.end(), u);
    const int i = std::max<int>(1, static_cast<int>(it - x.begin()));
    const double h = x[i] - x[i - 1];
    const double a = (x[i] - u) / h;
    const double b = (u - x[i - 1]) / h;
    return (y[i] - y[i - 1]) / h +
           ((3.0 * b * b - 1.0) * second_[i] - (3.0 * a * a - 1.0) * second_[i - 1]) * h / 6.0;
}

double HerdingFunction::operator()(double u) const {
    if (family_ == HerdingFamily::RationalBeta)
        return (1.0 + beta_) * u / (1.0 + beta_ * u * u);
    const double s = u < 0.0 ? -1.0 : 1.0;
    return s * spline_eval(std::abs(u));
}

double HerdingFunction::derivative(double u) const {
    if (family_ == HerdingFamily::RationalBeta) {
        const double q = 1.0 + beta_ * u * u;
        return (1.0 + beta_) * (1.0 - beta_ * u * u) / (q * q);
    }
    return spline_derivative(std::abs(u));
}

double HerdingFunction::potential(double u) const {
    if (family_ == HerdingFamily::RationalBeta)
        return -(1.0 + beta_) / (2.0 * beta_) * std::log1p(beta_ * u * u);
    const double a = std::abs(u);
    if (a == 0.0) return 0.0;
    // V(|u|) = -int_0^{|u|} G; V is even because G is odd.
    return -adaptive_simpson([this](double s) { return spline_eval(s); }, 0.0, a, 1e-12);
}

double HerdingFunction::bound() const {
    if (family_ == HerdingFamily::RationalBeta)
        return (1.0 + beta_) / (2.0 * std::sqrt(beta_));
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

InteractionKernel InteractionKernel::uniform() { return InteractionKernel{}; }

InteractionKernel InteractionKernel::von_mises(double kappa) {
    if (!(kappa > 0.0) || !std::isfinite(kappa))
        throw ConfigError("von Mises kappa must be > 0");
    InteractionKernel k;
    k.family_ = KernelFamily::VonMises;
    k.kappa_ = kappa;
    k.bessel_i0_ = std::cyl_bessel_i(0.0, kappa);
    return k;
}

InteractionKernel InteractionKernel::cosine_perturbation(double lambda, int k) {
    if (!(lambda > 0.0 && lambda < 1.0))
        throw ConfigError("cosine perturbation lambda must lie in (0, 1)");
    if (k < 1) throw ConfigError("cosine perturbation harmonic must be >= 1");
    InteractionKernel kern;
    kern.family_ = KernelFamily::CosinePerturbation;
    kern.lambda_ = lambda;
    kern.harmonic_ = k;
    return kern;
}

double InteractionKernel::operator()(double x) const {
    switch (family_) {
        case KernelFamily::Uniform:
            return 1.0;
        case KernelFamily::VonMises:
            return std::exp(kappa_ * std::cos(two_pi * x)) / bessel_i0_;
        case KernelFamily::CosinePerturbation:
            return 1.0 + lambda_ * std::cos(two_pi * harmonic_ * x);
    }
    return 1.0;
}

double InteractionKernel::epsilon_floor() const {
    switch (family_) {
        case KernelFamily::Uniform:
            return 1.0;
        case KernelFamily::VonMises:
            return std::exp(-kappa_) / bessel_i0_;
        case KernelFamily::CosinePerturbation:
            return 1.0 - lambda_;
    }
    return 1.0;
}

std::vector<double> InteractionKernel::cosine_coefficients(int n_modes) const {
    if (n_modes < 0) throw ConfigError("n_modes must be >= 0");
    std::vector<double> a(static_cast<std::size_t>(n_modes) + 1, 0.0);
    a[0] = 1.0;
    switch (family_) {
        case KernelFamily::Uniform:
            break;
        case KernelFamily::CosinePerturbation:
            if (harmonic_ <= n_modes) a[harmonic_] = lambda_;
            break;
        case KernelFamily::VonMises:
            for (int m = 1; m <= n_modes; ++m)
                a[m] = 2.0 * std::cyl_bessel_i(m, kappa_) / bessel_i0_;
            break;
    }
    return a;
}

int InteractionKernel::default_modes(double tail_tol) const {
    switch (family_) {
        case KernelFamily::Uniform:
            return 1;
        case KernelFamily::CosinePerturbation:
            return harmonic_;
        case KernelFamily::VonMises: {
            // Tail of sum 2 I_m / I_0: the terms decay super-geometrically,
            // so twice the first neglected term bounds the remainder once
            // consecutive terms at least halve.
            double prev = std::numeric_limits<double>::max();
            for (int m = 1; m <= 512; ++m) {
                const double am = 2.0 * std::cyl_bessel_i(m, kappa_) / bessel_i0_;
                if (am < 0.5 * prev && 2.0 * am < tail_tol) return m - 1;
                prev = am;
            }
            throw NumericalError("von Mises mode count did not converge");
        }
    }
    return 1;
}

ModelParams::ModelParams(double sigma_, HerdingFunction herding_, InteractionKernel kernel_)
    : sigma(sigma_), herding(std::move(herding_)), kernel(std::move(kernel_)) {
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw ConfigError("sigma must be > 0");
}

ModelParams ModelParams::standard(double sigma_, double beta) {
    return ModelParams(sigma_, HerdingFunction::rational(beta),
                       InteractionKernel::von_mises(4.0));
}

}  // namespace kflk::model
