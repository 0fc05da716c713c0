#pragma once

#include <span>

namespace kflk::homogeneous {
class VGrid;
}

namespace kflk::cc {

// One implicit-Euler step of the velocity-space drift-diffusion operator
//   d/dt f = d/dv [ (v - g) f ] + sigma d2/dv2 f
// with zero-flux walls, discretized with Chang-Cooper flux weighting.
//
// The weighting makes the cell-centered profile exp(-(v - g)^2 / (2 sigma))
// an exact zero-flux state, so discrete Gaussians with the consistent drift
// are stationary to machine precision. The step is conservative (column sums
// of the generator vanish) and positivity-preserving (M-matrix).
//
// f holds cell averages and is updated in place. work needs 4 * n doubles.
void step(const homogeneous::VGrid& grid, double g, double sigma, double dt,
          std::span<double> f, std::span<double> work);

// Generator applied to f (no time step): out_j = (J_{j+1/2} - J_{j-1/2}) / dv.
void apply_generator(const homogeneous::VGrid& grid, double g, double sigma,
                     std::span<const double> f, std::span<double> out);

}  // namespace kflk::cc
