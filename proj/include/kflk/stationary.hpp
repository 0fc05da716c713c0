#pragma once

#include <vector>

#include "kflk/homogeneous.hpp"
#include "kflk/model.hpp"
#include "kflk/pde.hpp"

namespace kflk::stationary {

// The three space-homogeneous Gaussian equilibria N(0, sigma), N(+1, sigma),
// N(-1, sigma).
enum class Branch { Zero, Plus, Minus };

double branch_mean(Branch b);

// Cell-averaged discrete Gaussian of the branch, renormalized.
homogeneous::VDensity equilibrium_density(Branch b, const model::ModelParams& p,
                                          const homogeneous::VGrid& grid);
// Branch density tensorized with the uniform x-profile.
pde::DensityField equilibrium_field(Branch b, const model::ModelParams& p,
                                    const pde::PhaseGrid& grid);

struct ResidualScan {
    double zero, plus, minus;
    double control;  // N(0.3, sigma) x uniform: not stationary, G(0.3) != 0.3
};

// Stationarity residuals of the three branches plus the positive control.
ResidualScan residual_scan(const model::ModelParams& p, const pde::PhaseGrid& grid);

// Per-x-cell first velocity moment alpha(x) = int v f dv.
std::vector<double> momentum_profile(const pde::DensityField& f);

struct PerturbationOptions {
    double dt = 5e-3;
    double residual_tol = 1e-8;   // stop when |f_{k+1} - f_k|_L1 / dt <= tol
    long max_steps = 400000;
    long check_stride = 20;       // residual evaluated every this many steps
    // Initial-guess shaping: x-profile 1 + amp cos(2 pi k x) around the
    // Gaussian branch. amp = 0 starts at the product guess itself.
    double x_bump_amplitude = 0.0;
    int x_bump_k = 1;
};

struct PerturbationResult {
    double lambda = 0.0;
    pde::DensityField steady;
    std::vector<double> alpha;     // momentum profile of the steady state
    double deviation_l1 = 0.0;     // plain L1 gap to N(1, sigma) x uniform
    double alpha_variation = 0.0;  // max alpha - min alpha
    long steps = 0;
};

// Pseudo-time relaxation of the full solver toward the positive branch,
// started from (1 + amp cos) x N(1, sigma). Throws NumericalError if the
// residual fails to reach the tolerance within max_steps.
PerturbationResult perturbed_steady_state(const model::ModelParams& p,
                                          const pde::PhaseGrid& grid,
                                          const PerturbationOptions& options = {});

}  // namespace kflk::stationary
