#include "kflk/homogeneous.hpp"

#include <algorithm>
#include <cmath>

#include "kflk/chang_cooper.hpp"
#include "kflk/math_util.hpp"

namespace kflk::homogeneous {

VGrid::VGrid(double v_min, double v_max, int n_points)
    : v_min_(v_min), v_max_(v_max), n_(n_points) {
    if (!(v_min < 0.0 && 0.0 < v_max) || !std::isfinite(v_min) || !std::isfinite(v_max))
        throw ConfigError("velocity grid must satisfy v_min < 0 < v_max");
    if (n_points < 16) throw ConfigError("velocity grid needs at least 16 cells");
    dv_ = (v_max - v_min) / n_points;
}

VGrid VGrid::standard(double mean0, double sigma, int n_points, double initial_variance) {
    const double spread = 6.0 * std::sqrt(std::max(sigma, initial_variance));
    const double v_max = std::max(std::abs(mean0), 1.0) + spread;
    return VGrid(-v_max, v_max, n_points);
}

VDensity::VDensity(VGrid grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
    if (values_.size() != static_cast<std::size_t>(grid_.size()))
        throw ConfigError("density values do not match grid size");
    validate();
}

VDensity VDensity::gaussian(const VGrid& grid, double mean, double variance) {
    if (!(variance > 0.0)) throw ConfigError("gaussian variance must be > 0");
    const double s = std::sqrt(variance);
    if (grid.v_max() < mean + 6.0 * s || grid.v_min() > mean - 6.0 * s)
        throw ConfigError("grid too narrow for requested gaussian");
    std::vector<double> f(grid.size());
    double mass = 0.0;
    for (int j = 0; j < grid.size(); ++j) {
        const double lo = (grid.edge(j) - mean) / s;
        const double hi = (grid.edge(j + 1) - mean) / s;
        f[j] = (normal_cdf(hi) - normal_cdf(lo)) / grid.dv();
        mass += f[j] * grid.dv();
    }
    for (double& v : f) v /= mass;
    return VDensity(grid, std::move(f));
}

VDensity VDensity::point_gaussian(const VGrid& grid, double mean, double variance) {
    if (!(variance > 0.0)) throw ConfigError("gaussian variance must be > 0");
    const double s = std::sqrt(variance);
    if (grid.v_max() < mean + 6.0 * s || grid.v_min() > mean - 6.0 * s)
        throw ConfigError("grid too narrow for requested gaussian");
    std::vector<double> f(grid.size());
    double mass = 0.0;
    for (int j = 0; j < grid.size(); ++j) {
        f[j] = std::exp(-sqr(grid.center(j) - mean) / (2.0 * variance));
        mass += f[j] * grid.dv();
    }
    for (double& v : f) v /= mass;
    return VDensity(grid, std::move(f));
}

double VDensity::mass() const {
    double m = 0.0;
    for (double v : values_) m += v;
    return m * grid_.dv();
}

double VDensity::moment(int n) const {
    double m = 0.0;
    for (int j = 0; j < grid_.size(); ++j)
        m += std::pow(grid_.center(j), n) * values_[j];
    return m * grid_.dv();
}

double VDensity::variance() const {
    const double m1 = moment(1);
    return moment(2) - m1 * m1;
}

void VDensity::validate() const {
    for (double v : values_)
        if (!(v >= 0.0)) throw NumericalError("density has negative or NaN cells");
    const double m = mass();
    if (std::abs(m - 1.0) > 1e-10)
        throw NumericalError("density mass deviates from 1 beyond 1e-10");
}

void MomentState::validate() const {
    if (moments.size() < 2) throw ConfigError("moment state needs order K >= 1");
    if (std::abs(moments[0] - 1.0) > 1e-12)
        throw NumericalError("M_0 must equal 1 (unit mass)");
    if (moments.size() >= 3 && moments[2] < moments[1] * moments[1] - 1e-12)
        throw NumericalError("M_2 < M_1^2: negative variance");
}

MomentState MomentState::gaussian(double mean, double variance, int order) {
    MomentState s;
    s.moments.assign(static_cast<std::size_t>(order) + 1, 0.0);
    s.moments[0] = 1.0;
    if (order >= 1) s.moments[1] = mean;
    // E X^n = mean E X^{n-1} + (n-1) variance E X^{n-2}.
    for (int n = 2; n <= order; ++n)
        s.moments[n] = mean * s.moments[n - 1] + (n - 1) * variance * s.moments[n - 2];
    return s;
}

void CumulantState::validate() const {
    if (cumulants.empty()) throw ConfigError("cumulant state needs order K >= 1");
    if (cumulants.size() >= 2 && cumulants[1] < 0.0)
        throw NumericalError("C_2 < 0: negative variance");
}

std::vector<double> moment_rhs(const MomentState& s, const model::ModelParams& p) {
    if (s.order() < 2) throw ConfigError("moment_rhs needs K >= 2");
    const auto& m = s.moments;
    const double g1 = p.herding(m[1]);
    std::vector<double> rhs(m.size(), 0.0);
    for (int n = 1; n <= s.order(); ++n) {
        const double m_nm1 = m[n - 1];
        const double m_nm2 = (n >= 2) ? m[n - 2] : 1.0;  // M_{-1} := M_0 = 1
        rhs[n] = n * g1 * m_nm1 - n * m[n] + p.sigma * n * (n - 1) * m_nm2;
    }
    return rhs;
}

namespace {

void rk4_step(std::vector<double>& y, double dt, const model::ModelParams& p,
              double time) {
    MomentState tmp{y, time};
    const auto k1 = moment_rhs(tmp, p);
    std::vector<double> yt(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) yt[i] = y[i] + 0.5 * dt * k1[i];
    const auto k2 = moment_rhs(MomentState{yt, time}, p);
    for (std::size_t i = 0; i < y.size(); ++i) yt[i] = y[i] + 0.5 * dt * k2[i];
    const auto k3 = moment_rhs(MomentState{yt, time}, p);
    for (std::size_t i = 0; i < y.size(); ++i) yt[i] = y[i] + dt * k3[i];
    const auto k4 = moment_rhs(MomentState{yt, time}, p);
    for (std::size_t i = 0; i < y.size(); ++i)
        y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

}  // namespace

MomentState integrate_moments(const MomentState& s0, const model::ModelParams& p,
                              double t_final, double dt) {
    return integrate_moments(s0, p, t_final, dt, {});
}

MomentState integrate_moments(const MomentState& s0, const model::ModelParams& p,
                              double t_final, double dt,
                              const std::function<void(const MomentState&)>& sample) {
    if (!(dt > 0.0 && dt <= 0.1)) throw ConfigError("moment ODE dt must lie in (0, 0.1]");
    if (t_final < s0.time) throw ConfigError("t_final precedes initial time");
    s0.validate();
    if (s0.order() < 2) throw ConfigError("integrate_moments needs K >= 2");

    MomentState s = s0;
    if (sample) sample(s);
    while (s.time < t_final - 1e-15) {
        const double h = std::min(dt, t_final - s.time);
        rk4_step(s.moments, h, p, s.time);
        s.time += h;
        if (sample) sample(s);
    }
    return s;
}

CumulantState moments_to_cumulants(const MomentState& s) {
    const int order = s.order();
    if (order < 1) throw ConfigError("moments_to_cumulants needs K >= 1");
    const auto binom = pascal_triangle(std::max(0, order - 1));
    CumulantState c;
    c.time = s.time;
    c.cumulants.assign(order, 0.0);
    for (int n = 1; n <= order; ++n) {
        double acc = s.moments[n];
        for (int j = 1; j <= n - 1; ++j)
            acc -= binom[n - 1][j] * s.moments[j] * c.cumulants[n - j - 1];
        c.cumulants[n - 1] = acc;
    }
    return c;
}

MomentState cumulants_to_moments(const CumulantState& c) {
    const int order = c.order();
    if (order < 1) throw ConfigError("cumulants_to_moments needs K >= 1");
    const auto binom = pascal_triangle(std::max(0, order - 1));
    MomentState s;
    s.time = c.time;
    s.moments.assign(static_cast<std::size_t>(order) + 1, 0.0);
    s.moments[0] = 1.0;
    for (int n = 1; n <= order; ++n) {
        double acc = c.cumulants[n - 1];
        for (int j = 1; j <= n - 1; ++j)
            acc += binom[n - 1][j] * s.moments[j] * c.cumulants[n - j - 1];
        s.moments[n] = acc;
    }
    return s;
}

CumulantState cumulant_closed_form(const CumulantState& c0, const model::ModelParams& p,
                                   double t) {
    if (t < 0.0) throw ConfigError("cumulant_closed_form needs t >= 0");
    CumulantState c = c0;
    c.time = c0.time + t;

    // dC_1/dt = G(C_1) - C_1, integrated with RK4 at fine fixed step.
    double m = c0.cumulants[0];
    const double h = 1e-3;
    double remaining = t;
    while (remaining > 1e-15) {
        const double step = std::min(h, remaining);
        auto f = [&](double u) { return p.herding(u) - u; };
        const double k1 = f(m);
        const double k2 = f(m + 0.5 * step * k1);
        const double k3 = f(m + 0.5 * step * k2);
        const double k4 = f(m + step * k3);
        m += step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        remaining -= step;
    }
    c.cumulants[0] = m;
    if (c.order() >= 2)
        c.cumulants[1] = p.sigma + (c0.cumulants[1] - p.sigma) * std::exp(-2.0 * t);
    for (int n = 3; n <= c.order(); ++n)
        c.cumulants[n - 1] = c0.cumulants[n - 1] * std::exp(-static_cast<double>(n) * t);
    return c;
}

void homogeneous_step_inplace(VDensity& f, const model::ModelParams& p, double dt,
                              std::span<double> work) {
    if (!(dt > 0.0)) throw ConfigError("homogeneous_step needs dt > 0");
    const double g = p.herding(f.mean());
    cc::step(f.grid(), g, p.sigma, dt, f.values(), work);
}

VDensity homogeneous_step(const VDensity& f, const model::ModelParams& p, double dt) {
    f.validate();
    VDensity out = f;
    std::vector<double> work(4 * static_cast<std::size_t>(f.grid().size()));
    homogeneous_step_inplace(out, p, dt, work);
    return out;
}

double entropy(const VDensity& f, const model::ModelParams& p) {
    const auto& grid = f.grid();
    double s = 0.0;
    for (int j = 0; j < grid.size(); ++j) {
        const double fj = f.values()[j];
        const double v = grid.center(j);
        if (fj > 1e-300) s += fj * std::log(fj);
        s += v * v * fj / (2.0 * p.sigma);
    }
    return s * grid.dv() + p.herding.potential(f.mean()) / p.sigma;
}

double entropy_production(const VDensity& f, const model::ModelParams& p) {
    const auto& grid = f.grid();
    const double g1 = p.herding(f.mean());
    const double dv = grid.dv();
    double d = 0.0;
    for (int j = 1; j + 1 < grid.size(); ++j) {
        const double fj = f.values()[j];
        if (fj <= 1e-300) continue;
        const double dfdv = (f.values()[j + 1] - f.values()[j - 1]) / (2.0 * dv);
        const double flux = p.sigma * dfdv + (grid.center(j) - g1) * fj;
        d += flux * flux / (p.sigma * fj);
    }
    return d * dv;
}

DecayReport entropy_decay_experiment(const VDensity& f0, const model::ModelParams& p,
                                     double t_final, double dt, int record_stride) {
    f0.validate();
    const double m0 = f0.mean();
    if (std::abs(m0) < 1e-8)
        throw ConfigError("entropy decay experiment needs a nonzero initial mean");
    if (!(t_final > 0.0) || !(dt > 0.0)) throw ConfigError("invalid time parameters");
    if (record_stride < 1) throw ConfigError("record_stride must be >= 1");

    // Reference: the scheme's own discrete realization of mu_pm, so the
    // recorded relative entropy decays to zero instead of to a quadrature
    // offset.
    const double branch_mean = m0 > 0.0 ? 1.0 : -1.0;
    const VDensity ref = VDensity::point_gaussian(f0.grid(), branch_mean, p.sigma);
    const double s_ref = entropy(ref, p);

    DecayReport report;
    VDensity f = f0;
    std::vector<double> work(4 * static_cast<std::size_t>(f.grid().size()));
    const long n_steps = std::lround(t_final / dt);
    for (long k = 0; k <= n_steps; ++k) {
        if (k % record_stride == 0 || k == n_steps) {
            const double rel = entropy(f, p) - s_ref;
            report.times.push_back(k * dt);
            report.relative_entropy.push_back(rel);
            if (rel < -1e-12) report.nonnegative = false;
        }
        if (k < n_steps) homogeneous_step_inplace(f, p, dt, work);
    }

    // Log-linear fit on the last half of the horizon.
    std::vector<double> ts, logs;
    for (std::size_t i = 0; i < report.times.size(); ++i) {
        if (report.times[i] >= 0.5 * t_final && report.relative_entropy[i] > 1e-300) {
            ts.push_back(report.times[i]);
            logs.push_back(std::log(report.relative_entropy[i]));
        }
    }
    if (ts.size() >= 2) report.fitted_rate = fit_line(ts, logs).slope;
    return report;
}

GaussianEvolution gaussian_evolution(double m0, double B0, const model::ModelParams& p,
                                     double t) {
    if (!(B0 > 0.0)) throw ConfigError("gaussian_evolution needs B0 > 0");
    if (t < 0.0) throw ConfigError("gaussian_evolution needs t >= 0");
    CumulantState c;
    c.cumulants = {m0};
    const double mean = cumulant_closed_form(c, p, t).cumulants[0];
    const double variance = std::exp(-2.0 * t) * B0 + p.sigma * (1.0 - std::exp(-2.0 * t));
    return GaussianEvolution{mean, variance};
}

}  // namespace kflk::homogeneous
