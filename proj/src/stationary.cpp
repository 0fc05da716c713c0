#include "kflk/stationary.hpp"

#include <algorithm>
#include <cmath>

#include "kflk/math_util.hpp"

namespace kflk::stationary {

double branch_mean(Branch b) {
    switch (b) {
        case Branch::Zero: return 0.0;
        case Branch::Plus: return 1.0;
        case Branch::Minus: return -1.0;
    }
    return 0.0;
}

homogeneous::VDensity equilibrium_density(Branch b, const model::ModelParams& p,
                                          const homogeneous::VGrid& grid) {
    return homogeneous::VDensity::gaussian(grid, branch_mean(b), p.sigma);
}

pde::DensityField equilibrium_field(Branch b, const model::ModelParams& p,
                                    const pde::PhaseGrid& grid) {
    return pde::DensityField::uniform_in_x(grid, equilibrium_density(b, p, grid.vgrid()));
}

ResidualScan residual_scan(const model::ModelParams& p, const pde::PhaseGrid& grid) {
    ResidualScan scan{};
    scan.zero = pde::stationarity_residual(equilibrium_field(Branch::Zero, p, grid), p);
    scan.plus = pde::stationarity_residual(equilibrium_field(Branch::Plus, p, grid), p);
    scan.minus = pde::stationarity_residual(equilibrium_field(Branch::Minus, p, grid), p);
    const auto control = pde::DensityField::uniform_in_x(
        grid, homogeneous::VDensity::gaussian(grid.vgrid(), 0.3, p.sigma));
    scan.control = pde::stationarity_residual(control, p);
    return scan;
}

std::vector<double> momentum_profile(const pde::DensityField& f) {
    return f.momentum_density();
}

PerturbationResult perturbed_steady_state(const model::ModelParams& p,
                                          const pde::PhaseGrid& grid,
                                          const PerturbationOptions& options) {
    using model::KernelFamily;
    const auto family = p.kernel.family();
    if (family == KernelFamily::CosinePerturbation && p.kernel.lambda() > 0.5)
        throw ConfigError("perturbation experiment expects lambda in (0, 0.5]");
    if (family == KernelFamily::VonMises)
        throw ConfigError("perturbation experiment needs Uniform or CosinePerturbation");
    if (!(std::abs(options.x_bump_amplitude) < 1.0))
        throw ConfigError("|x bump amplitude| must be < 1");

    // Initial guess: (1 + amp cos(2 pi k x)) x N(1, sigma), cell averages.
    std::vector<double> xw(grid.n_x());
    for (int i = 0; i < grid.n_x(); ++i) {
        // Cell average of 1 + amp cos over [x_i - dx/2, x_i + dx/2].
        const double w = two_pi * options.x_bump_k;
        const double a = (i)*grid.dx(), b = (i + 1) * grid.dx();
        xw[i] = 1.0 + options.x_bump_amplitude * (std::sin(w * b) - std::sin(w * a)) /
                          (w * grid.dx());
    }
    const auto fv = homogeneous::VDensity::gaussian(grid.vgrid(), 1.0, p.sigma);
    pde::DensityField f = pde::DensityField::product(grid, xw, fv);

    pde::KineticStepper stepper(grid, p);
    std::vector<double> previous(f.values().begin(), f.values().end());
    const double cell = grid.dx() * grid.vgrid().dv();

    PerturbationResult result{.lambda = family == KernelFamily::CosinePerturbation
                                            ? p.kernel.lambda()
                                            : 0.0,
                              .steady = f};
    long k = 0;
    bool converged = false;
    for (; k < options.max_steps && !converged; ++k) {
        // Single-step residual |f_{k+1} - f_k|_L1 / dt, sampled every
        // check_stride steps.
        const bool check = (k + 1) % options.check_stride == 0;
        if (check) std::copy(f.values().begin(), f.values().end(), previous.begin());
        stepper.step(f, options.dt);
        if (check) {
            double gap = 0.0;
            for (std::size_t c = 0; c < previous.size(); ++c)
                gap += std::abs(f.values()[c] - previous[c]);
            gap *= cell;
            converged = gap / options.dt <= options.residual_tol;
        }
    }
    if (!converged) throw NumericalError("perturbed steady state did not converge");

    result.steps = k;
    result.alpha = momentum_profile(f);
    const auto [amin, amax] = std::minmax_element(result.alpha.begin(), result.alpha.end());
    result.alpha_variation = *amax - *amin;
    const auto reference = equilibrium_field(Branch::Plus, p, grid);
    result.deviation_l1 = pde::weighted_l1_distance(f, reference).first;
    result.steady = std::move(f);
    return result;
}

}  // namespace kflk::stationary
