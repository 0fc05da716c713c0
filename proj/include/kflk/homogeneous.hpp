#pragma once

#include <functional>
#include <span>
#include <vector>

#include "kflk/errors.hpp"
#include "kflk/model.hpp"

namespace kflk::homogeneous {

// Uniform cell-centered velocity grid on [v_min, v_max].
class VGrid {
public:
    VGrid(double v_min, double v_max, int n_points);

    // Truncation rule: half-width 6 sqrt(max(sigma, initial variance)) past
    // max(|mean|, 1), symmetric about 0. Gaussian mass beyond six standard
    // deviations is < 1e-8, and zero-flux walls keep what is inside exact.
    static VGrid standard(double mean0, double sigma, int n_points,
                          double initial_variance = 0.0);

    int size() const { return n_; }
    double dv() const { return dv_; }
    double v_min() const { return v_min_; }
    double v_max() const { return v_max_; }
    double center(int j) const { return v_min_ + (j + 0.5) * dv_; }
    double edge(int j) const { return v_min_ + j * dv_; }

    bool operator==(const VGrid&) const = default;

private:
    double v_min_, v_max_, dv_;
    int n_;
};

// Probability density on a VGrid (cell averages, unit mass).
class VDensity {
public:
    VDensity(VGrid grid, std::vector<double> values);

    // Cell-averaged Gaussian N(mean, variance), renormalized to unit mass.
    static VDensity gaussian(const VGrid& grid, double mean, double variance);
    // Cell-centered (point-sampled) Gaussian, renormalized. This is the
    // Chang-Cooper scheme's own discrete equilibrium when the drift fixed
    // point equals `mean`; use it when a trajectory limit is compared at
    // machine precision rather than at quadrature order.
    static VDensity point_gaussian(const VGrid& grid, double mean, double variance);

    const VGrid& grid() const { return grid_; }
    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }

    double mass() const;
    double moment(int n) const;  // int v^n f dv
    double mean() const { return moment(1); }
    double variance() const;

    // Throws NumericalError unless values >= 0 and mass = 1 +- 1e-10.
    void validate() const;

private:
    VGrid grid_;
    std::vector<double> values_;
};

// Velocity moments (M_0, ..., M_K) at a given time.
struct MomentState {
    std::vector<double> moments;
    double time = 0.0;

    int order() const { return static_cast<int>(moments.size()) - 1; }
    void validate() const;

    // Gaussian moment vector with unit mass.
    static MomentState gaussian(double mean, double variance, int order);
};

// Cumulants (C_1, ..., C_K).
struct CumulantState {
    std::vector<double> cumulants;
    double time = 0.0;

    int order() const { return static_cast<int>(cumulants.size()); }
    void validate() const;
};

// Mean/variance of the Gaussian evolution system: B_t = e^{-2t} B_0 +
// sigma (1 - e^{-2t}), mean following dm/dt = G(m) - m.
struct GaussianEvolution {
    double mean;
    double variance;
};

// d/dt of the moment vector: component n is
//   n G(M_1) M_{n-1} - n M_n + sigma n (n-1) M_{n-2},
// with M_{-1} := M_0 = 1; component 0 is identically zero.
std::vector<double> moment_rhs(const MomentState& s, const model::ModelParams& p);

// Classical RK4 with fixed dt in (0, 0.1]; the final partial step is shortened.
MomentState integrate_moments(const MomentState& s0, const model::ModelParams& p,
                              double t_final, double dt);
// Same, invoking sample(state) after every accepted step (and at t = 0).
MomentState integrate_moments(const MomentState& s0, const model::ModelParams& p,
                              double t_final, double dt,
                              const std::function<void(const MomentState&)>& sample);

CumulantState moments_to_cumulants(const MomentState& s);
MomentState cumulants_to_moments(const CumulantState& c);

// C_1 by solving dC_1/dt = G(C_1) - C_1 numerically; C_2 = sigma +
// (C_2(0) - sigma) e^{-2t}; C_n = C_n(0) e^{-nt} for n >= 3.
CumulantState cumulant_closed_form(const CumulantState& c0, const model::ModelParams& p,
                                   double t);

// One Chang-Cooper implicit step of the space-homogeneous equation with
// drift G(<w>_f) - v frozen at the step start.
VDensity homogeneous_step(const VDensity& f, const model::ModelParams& p, double dt);
void homogeneous_step_inplace(VDensity& f, const model::ModelParams& p, double dt,
                              std::span<double> work);

// S(f) = int [f log f + v^2 f / (2 sigma)] dv + V(<w>_f) / sigma, with
// 0 log 0 = 0 per cell.
double entropy(const VDensity& f, const model::ModelParams& p);

// D_S(f) = int (1/(sigma f)) [sigma f' + (v - G(M_1)) f]^2 dv, centered
// differences for f'; cells below 1e-300 are skipped.
double entropy_production(const VDensity& f, const model::ModelParams& p);

struct DecayReport {
    std::vector<double> times;
    std::vector<double> relative_entropy;  // S(f_t) - S(mu_pm)
    double fitted_rate = 0.0;              // least-squares slope of log S_rel on the tail window
    bool nonnegative = true;               // S_rel >= -1e-12 along the whole trajectory
};

// Evolve f0 and report S(f_t | mu_pm) against the branch selected by the
// sign of the initial mean; the rate is fitted on the last half of the
// horizon. Rejects |M_1(0)| < 1e-8.
DecayReport entropy_decay_experiment(const VDensity& f0, const model::ModelParams& p,
                                     double t_final, double dt = 1e-3,
                                     int record_stride = 10);

GaussianEvolution gaussian_evolution(double m0, double B0, const model::ModelParams& p,
                                     double t);

}  // namespace kflk::homogeneous
