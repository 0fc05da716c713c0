#include "kflk/chang_cooper.hpp"

#include <cmath>
#include <stdexcept>

#include "kflk/homogeneous.hpp"

namespace kflk::cc {

namespace {

// W-(w) = w / (e^w - 1), W+(w) = w + W-(w). Flux through edge j+1/2:
//   J = a_e f_j + b_e f_{j+1},  a_e = -(sigma/dv) W-(w),  b_e = (sigma/dv) W+(w),
// with w = (v_edge - g) dv / sigma. W-( w) and W+(w) are nonnegative for all
// w, so -a_e, b_e >= 0: the implicit matrix is an M-matrix and the update is
// positivity-preserving. J = 0 forces f_{j+1}/f_j = e^{-w}, the cell-centered
// Gaussian ratio, which is what makes discrete Gaussians exactly stationary.
inline double w_minus(double w) {
    if (std::abs(w) < 1e-12) return 1.0 - 0.5 * w;
    return w / std::expm1(w);
}

}  // namespace

void apply_generator(const homogeneous::VGrid& grid, double g, double sigma,
                     std::span<const double> f, std::span<double> out) {
    const int n = grid.size();
    const double dv = grid.dv();
    double j_below = 0.0;  // zero-flux wall
    for (int j = 0; j < n; ++j) {
        double j_above = 0.0;
        if (j < n - 1) {
            const double w = (grid.edge(j + 1) - g) * dv / sigma;
            const double wm = w_minus(w);
            j_above = (sigma / dv) * ((w + wm) * f[j + 1] - wm * f[j]);
        }
        out[j] = (j_above - j_below) / dv;
        j_below = j_above;
    }
}

void step(const homogeneous::VGrid& grid, double g, double sigma, double dt,
          std::span<double> f, std::span<double> work) {
    const int n = grid.size();
    if (work.size() < static_cast<std::size_t>(4 * n))
        throw std::invalid_argument("chang_cooper work span too small");
    const double dv = grid.dv();
    const double r = dt / dv;
    auto lower = work.subspan(0, n);
    auto diag = work.subspan(n, n);
    auto upper = work.subspan(2 * n, n);
    auto edge_a = work.subspan(3 * n, n);  // a_e of edge j+1/2, j = 0..n-2

    // Per-edge coefficients; edge_a holds a_e, and b_e = S - a_e (S = v_e - g).
    for (int j = 0; j < n - 1; ++j) {
        const double s = grid.edge(j + 1) - g;
        edge_a[j] = -(sigma / dv) * w_minus(s * dv / sigma);
    }

    // Solve (I - dt A) f_new = f, row j of A = (J_{j+1/2} - J_{j-1/2}) / dv.
    for (int j = 0; j < n; ++j) {
        const double a_up = (j < n - 1) ? edge_a[j] : 0.0;
        const double b_up = (j < n - 1) ? (grid.edge(j + 1) - g) - a_up : 0.0;
        const double a_dn = (j > 0) ? edge_a[j - 1] : 0.0;
        const double b_dn = (j > 0) ? (grid.edge(j) - g) - a_dn : 0.0;
        diag[j] = 1.0 - r * (a_up - b_dn);
        upper[j] = (j < n - 1) ? -r * b_up : 0.0;
        lower[j] = (j > 0) ? r * a_dn : 0.0;
    }

    // Thomas algorithm.
    for (int j = 1; j < n; ++j) {
        const double m = lower[j] / diag[j - 1];
        diag[j] -= m * upper[j - 1];
        f[j] -= m * f[j - 1];
    }
    f[n - 1] /= diag[n - 1];
    for (int j = n - 2; j >= 0; --j) f[j] = (f[j] - upper[j] * f[j + 1]) / diag[j];
}

}  // namespace kflk::cc
