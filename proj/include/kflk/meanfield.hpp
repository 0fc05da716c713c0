#pragma once

#include <span>
#include <string>
#include <vector>

#include "kflk/model.hpp"
#include "kflk/particles.hpp"
#include "kflk/pde.hpp"

namespace kflk::meanfield {

// C^2 plateau bump in v: identically 1 on |v - center| <= plateau, quintic
// smoothstep down to 0 at |v - center| = support.
struct Bump {
    double center;
    double plateau;
    double support;

    double value(double v) const;
    double d1(double v) const;
    double d2(double v) const;
};

// Smooth test functions psi(x, v) = trig_k(x) * bump(v) with
// trig in {1, cos(2 pi k x), sin(2 pi k x) : k <= k_max}. All satisfy
// |psi|_inf <= 1 and have compact support in v.
class TestFunctionFamily {
public:
    TestFunctionFamily(int k_max, std::vector<Bump> bumps);

    // Default family: k <= 3, bumps centered at 0 (wide) and +1 (narrow).
    static TestFunctionFamily standard();

    int count() const { return static_cast<int>(names_.size()); }
    const std::string& name(int idx) const { return names_[idx]; }

    double value(int idx, double x, double v) const;
    double dx(int idx, double x, double v) const;
    double dv(int idx, double x, double v) const;
    double dvv(int idx, double x, double v) const;

    // Per-psi generator integrand at one particle:
    //   dx(psi) v - dv(psi) v + sigma dvv(psi) + dv(psi) g
    // accumulated into out[idx] with weight 1/N handled by the caller.
    void accumulate_generator(double x, double v, double g, double sigma,
                              std::span<double> out) const;
    // Accumulate psi values into out[idx].
    void accumulate_value(double x, double v, std::span<double> out) const;

private:
    struct Term {
        int trig;   // 0: 1, >0: cos(2 pi k x) with k=trig, <0: sin with k=-trig
        int bump;
    };
    double trig_value(int trig, double x) const;
    double trig_derivative(int trig, double x) const;

    int k_max_;
    std::vector<Bump> bumps_;
    std::vector<Term> terms_;
    std::vector<std::string> names_;
};

// <S^N, psi> = (1/N) sum psi(x_i, v_i)  /  <f, psi> = sum psi f dx dv.
double pairing(const particles::ParticleEnsemble& e, const TestFunctionFamily& fam, int idx);
double pairing(const pde::DensityField& f, const TestFunctionFamily& fam, int idx);

// max over the family of |<S^N, psi> - <f, psi>|, capped at 1.
double empirical_vs_density_gap(const particles::ParticleEnsemble& e,
                                const pde::DensityField& f, const TestFunctionFamily& fam);

// Exact Wasserstein-1 between the empirical velocity law (atoms 1/N) and the
// piecewise-linear CDF of the density's v-marginal, via the CDF-difference
// integral.
double v_marginal_w1(const particles::ParticleEnsemble& e, const pde::DensityField& f);

// Reconstructs the martingale part of the empirical-measure identity: feed
// every pre-step state (and the final state once); generator terms use
// left-endpoint sums matching the Euler-Maruyama discretization.
class MartingaleAccumulator {
public:
    MartingaleAccumulator(const TestFunctionFamily& fam, const model::ModelParams& p,
                          double dt);

    void observe(const particles::ParticleEnsemble& e, std::span<const double> averages);

    std::span<const double> sup_magnitude() const { return sup_; }
    std::span<const double> current() const { return martingale_; }

private:
    const TestFunctionFamily& fam_;
    const model::ModelParams& params_;
    double dt_;
    bool first_ = true;
    std::vector<double> pairing0_, generator_sum_, martingale_, sup_, work_;
};

}  // namespace kflk::meanfield
