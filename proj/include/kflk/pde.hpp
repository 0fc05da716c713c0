#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "kflk/homogeneous.hpp"
#include "kflk/model.hpp"

namespace kflk::pde {

// Periodic x-grid on [0, 1) times a velocity grid. n_x must be a power of
// two (spectral transport and FFT convolution).
class PhaseGrid {
public:
    PhaseGrid(int n_x, homogeneous::VGrid vgrid);

    int n_x() const { return n_x_; }
    double dx() const { return dx_; }
    double x_center(int i) const { return (i + 0.5) * dx_; }
    const homogeneous::VGrid& vgrid() const { return vgrid_; }
    std::size_t cells() const { return static_cast<std::size_t>(n_x_) * vgrid_.size(); }

    bool operator==(const PhaseGrid&) const = default;

private:
    int n_x_;
    homogeneous::VGrid vgrid_;
    double dx_;
};

// Phase-space density, row-major (ix, iv), cell averages, unit mass.
class DensityField {
public:
    DensityField(PhaseGrid grid, std::vector<double> values);

    // f(x, v) = x_weights(x) * fv(v); x_weights are per-cell averages of a
    // positive profile and get normalized together with fv.
    static DensityField product(const PhaseGrid& grid, std::span<const double> x_weights,
                                const homogeneous::VDensity& fv);
    // Spatially uniform product with the given v-density.
    static DensityField uniform_in_x(const PhaseGrid& grid, const homogeneous::VDensity& fv);

    const PhaseGrid& grid() const { return grid_; }
    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }
    double operator()(int ix, int iv) const {
        return values_[static_cast<std::size_t>(ix) * grid_.vgrid().size() + iv];
    }
    std::span<double> column(int ix) {
        return std::span<double>(values_).subspan(
            static_cast<std::size_t>(ix) * grid_.vgrid().size(), grid_.vgrid().size());
    }
    std::span<const double> column(int ix) const {
        return std::span<const double>(values_).subspan(
            static_cast<std::size_t>(ix) * grid_.vgrid().size(), grid_.vgrid().size());
    }

    double mass() const;
    std::vector<double> x_marginal() const;       // rho_i = sum_v f dv
    std::vector<double> momentum_density() const; // j_i = sum_v v f dv
    homogeneous::VDensity v_marginal() const;     // sum_x f dx, renormalized? no: exact cell sums
    double mean_velocity() const;

    void validate() const;

private:
    PhaseGrid grid_;
    std::vector<double> values_;
};

// Local mean field M(x) = (phi * j)(x) / (phi * rho)(x). Numerator and
// denominator are retained per cell.
struct MeanField {
    std::vector<double> values;
    std::vector<double> numerator;
    std::vector<double> denominator;
};

// Direct quadrature for n_x <= 64, FFT otherwise; both evaluate the same
// discrete circular sum and agree to machine precision.
MeanField local_mean_field(const DensityField& f, const model::InteractionKernel& kernel);
MeanField local_mean_field(const PhaseGrid& grid, std::span<const double> values,
                           const model::InteractionKernel& kernel);

// Strang-split step: half x-transport (exact spectral shift per v-row),
// full Chang-Cooper v-step with drift G(M(x)) - v and M frozen at the step
// start, half x-transport. Keeps its plans and workspaces across steps.
class KineticStepper {
public:
    KineticStepper(PhaseGrid grid, model::ModelParams params);
    ~KineticStepper();
    KineticStepper(KineticStepper&&) noexcept;

    // Self-consistent step: M computed from f.
    void step(DensityField& f, double dt);
    // Linear step with a prescribed per-x-cell mean field (Picard inner solve).
    void step_with_field(DensityField& f, std::span<const double> m_values, double dt);
    // Pure transport, full dt (testing / diagnostics).
    void transport(DensityField& f, double dt);

    const MeanField& last_mean_field() const { return last_m_; }
    const model::ModelParams& params() const { return params_; }

private:
    void transport_half(DensityField& f, double dt);
    void clip_and_renormalize(DensityField& f);

    PhaseGrid grid_;
    model::ModelParams params_;
    MeanField last_m_;
    struct Workspace;
    std::unique_ptr<Workspace> ws_;
};

DensityField kinetic_step(const DensityField& f, const model::ModelParams& p, double dt);

struct SolveSeries {
    std::vector<double> t, mass, mean_v, var_v, m_min, m_max;
};

struct SolveOptions {
    int record_stride = 1;
    // Called at every recorded time with the current state.
    std::function<void(long step, double t, const DensityField&, const MeanField&)> observer;
};

struct SolveResult {
    SolveSeries series;
    DensityField final_state;
};

SolveResult solve(const DensityField& f0, const model::ModelParams& p, double t_final,
                  double dt, const SolveOptions& options = {});

// Picard iteration of the nonlinear problem on [0, t_final]: f^0 is f0
// frozen in time; f^n solves the linear equation driven by M^{n-1}(t, x)
// read from the stored previous iterate. xi_n tracks
//   max_t ( |f^n - f^{n-1}|_L1 + |h^n - h^{n-1}|_L1 ),  h = f sqrt(1 + v^2).
struct PicardReport {
    std::vector<double> xi;             // xi[n-1] = xi^n, n = 1..n_iters
    std::vector<double> ratio;          // ratio[n-2] = xi^n / xi^{n-1}, n >= 2
    std::vector<double> duhamel_excess; // max_t (gap_L1 - Duhamel bound), n >= 2
};

struct PicardOptions {
    std::size_t memory_budget_bytes = 512ull << 20;
};

PicardReport picard_iterate(const DensityField& f0, const model::ModelParams& p,
                            double t_final, double dt, int n_iters,
                            const PicardOptions& options = {});

// (plain L1, L1 weighted by sqrt(1 + v^2)); grids must match.
std::pair<double, double> weighted_l1_distance(const DensityField& f, const DensityField& g);

// L1 norm of the discretized gap in the stationary equation
//   v df/dx + G(M(x)) df/dv = d/dv (sigma df/dv + v f),
// centered differences, interior v-cells.
double stationarity_residual(const DensityField& f, const model::ModelParams& p);

}  // namespace kflk::pde
