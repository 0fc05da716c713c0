#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "kflk/model.hpp"
#include "kflk/pde.hpp"

namespace kflk::particles {

// Positions on the torus [0, 1) and velocities of N particles.
struct ParticleEnsemble {
    std::vector<double> x;
    std::vector<double> v;
    double time = 0.0;

    int n() const { return static_cast<int>(x.size()); }
    void validate() const;
};

enum class ForcePath { Direct, Fourier };

struct SdeConfig {
    double dt = 5e-3;
    double t_final = 20.0;
    std::uint64_t seed = 1;
    ForcePath force_path = ForcePath::Fourier;
    int n_modes = 0;       // 0: choose from the kernel's coefficient tail
    int record_stride = 1;
    double noise_sign = 1.0;  // +-1; -1 mirrors every Brownian increment

    void validate() const;
};

// Weighted local mean velocities
//   M_i = sum_j phi(x_i - x_j) v_j / sum_j phi(x_i - x_j).
// The Direct path evaluates both sums in O(N^2). The Fourier path expands
// phi in n_modes cosine harmonics and accumulates per-mode sums in
// O(N n_modes); it is exact for band-limited kernels and within the
// coefficient tail for VonMises.
class ForceEvaluator {
public:
    ForceEvaluator(model::InteractionKernel kernel, ForcePath path, int n_modes = 0);

    void compute(const ParticleEnsemble& e, std::vector<double>& out);
    int modes() const { return static_cast<int>(coeff_.size()) - 1; }

private:
    model::InteractionKernel kernel_;
    ForcePath path_;
    std::vector<double> coeff_;
    std::vector<double> cos_sum_, sin_sum_, cos_vsum_, sin_vsum_;
    std::vector<double> cs_;  // per-particle cos/sin cache, 2 * n_modes per particle
};

std::vector<double> compute_local_averages(const ParticleEnsemble& e,
                                           const model::InteractionKernel& kernel,
                                           ForcePath path, int n_modes = 0);

// One Euler-Maruyama step:
//   x <- wrap(x + v dt),  v <- v + [G(M_i) - v] dt + sqrt(2 sigma dt) xi_i,
// with xi_i a standard normal drawn from the counter stream
// (seed, particle index, step index). averages must hold M_i of the current
// state.
void em_step(ParticleEnsemble& e, const model::ModelParams& p, const SdeConfig& cfg,
             std::uint64_t step_index, std::span<const double> averages);

struct SimulateSeries {
    std::vector<double> t, mean_v, var_v, order_param;
};

// Called with the pre-step state (and once more with the final state); the
// averages span holds M_i for exactly that state.
using Observer =
    std::function<void(long step, const ParticleEnsemble&, std::span<const double>)>;

SimulateSeries simulate(ParticleEnsemble& e, const model::ModelParams& p,
                        const SdeConfig& cfg, const Observer& observer = {});

struct HistogramResult {
    pde::DensityField density;
    long out_of_range = 0;  // velocities clamped into boundary cells
};

HistogramResult empirical_histogram(const ParticleEnsemble& e, const pde::PhaseGrid& grid);

// Product initial data: positions from the profile 1 + amp cos(2 pi k x)
// (inverse CDF), velocities i.i.d. N(mean, variance). amp = 0 gives uniform
// positions.
ParticleEnsemble sample_product(int n, double x_bump_amp, int x_bump_k, double v_mean,
                                double v_variance, std::uint64_t seed);

}  // namespace kflk::particles
