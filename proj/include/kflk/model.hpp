#pragma once

#include <span>
#include <vector>

#include "kflk/errors.hpp"

namespace kflk::model {

enum class HerdingFamily { RationalBeta, Tabulated };

// Odd, bounded, smooth drift law G with fixed points {-1, 0, 1}: G(u) > u on
// (0,1) and G(u) < u on (1,inf). The default family is
//   G_beta(u) = (1 + beta) u / (1 + beta u^2),
// which has closed-form derivative and potential. A tabulated family
// (natural cubic spline on [0, u_max], clamped to odd symmetry) supports
// experiments with other profiles.
class HerdingFunction {
public:
    static HerdingFunction rational(double beta);
    // u must be strictly increasing starting at 0 with g[0] = 0; the profile
    // is extended oddly to u < 0 and held constant beyond the last node.
    static HerdingFunction tabulated(std::span<const double> u, std::span<const double> g);

    double operator()(double u) const;
    double derivative(double u) const;
    // V with V'(u) = -G(u) and V(0) = 0. Closed form for RationalBeta,
    // numerical quadrature for Tabulated.
    double potential(double u) const;

    // sup |G| (exact for RationalBeta, node-based bound for Tabulated).
    double bound() const;

    HerdingFamily family() const { return family_; }
    double beta() const { return beta_; }

private:
    HerdingFunction() = default;

    double spline_eval(double u) const;
    double spline_derivative(double u) const;

    HerdingFamily family_ = HerdingFamily::RationalBeta;
    double beta_ = 1.0;
    // Tabulated data: nodes, values, and spline second derivatives.
    std::vector<double> nodes_, values_, second_;
};

enum class KernelFamily { Uniform, VonMises, CosinePerturbation };

// Spatial interaction weight phi on the torus [0,1): strictly positive,
// even, unit mass. All families admit a cosine expansion
//   phi(x) = a_0 + sum_{m>=1} a_m cos(2 pi m x),
// exact for Uniform / CosinePerturbation and rapidly convergent (modified
// Bessel ratios) for VonMises.
class InteractionKernel {
public:
    static InteractionKernel uniform();
    static InteractionKernel von_mises(double kappa);
    // phi = 1 + lambda cos(2 pi k x); lambda in (0, 1) keeps phi >= 1 - lambda > 0.
    static InteractionKernel cosine_perturbation(double lambda, int k);

    // phi(x); x is a torus displacement, any real value is accepted.
    double operator()(double x) const;

    // Derived lower bound of phi.
    double epsilon_floor() const;

    // Coefficients a_0..a_n of the cosine expansion.
    std::vector<double> cosine_coefficients(int n_modes) const;
    // Smallest band width whose neglected tail is below tail_tol in sup norm.
    int default_modes(double tail_tol = 1e-10) const;

    KernelFamily family() const { return family_; }
    double kappa() const { return kappa_; }
    double lambda() const { return lambda_; }
    int harmonic() const { return harmonic_; }

private:
    InteractionKernel() = default;

    KernelFamily family_ = KernelFamily::Uniform;
    double kappa_ = 0.0;
    double lambda_ = 0.0;
    int harmonic_ = 1;
    double bessel_i0_ = 1.0;  // I_0(kappa), cached for VonMises
};

// Global model parameters: diffusion strength sigma plus the two laws above.
struct ModelParams {
    double sigma;
    HerdingFunction herding;
    InteractionKernel kernel;

    ModelParams(double sigma_, HerdingFunction herding_, InteractionKernel kernel_);

    // Convenience defaults: G_beta(1), VonMises(4).
    static ModelParams standard(double sigma_ = 0.25, double beta = 1.0);
};

}  // namespace kflk::model
