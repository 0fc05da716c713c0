#include "kflk/meanfield.hpp"

#include <algorithm>
#include <cmath>

#include "kflk/math_util.hpp"

namespace kflk::meanfield {

namespace {

// Quintic smoothstep q on [0, 1]: q(0) = 1, q(1) = 0, q' = q'' = 0 at both
// ends, so the bump is C^2 everywhere including the plateau edge.
inline double q0(double s) { return 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s); }
inline double q1(double s) { return -30.0 * s * s * sqr(1.0 - s); }
inline double q2(double s) { return -60.0 * s * (1.0 - s) * (1.0 - 2.0 * s); }

}  // namespace

double Bump::value(double v) const {
    const double r = std::abs(v - center);
    if (r <= plateau) return 1.0;
    if (r >= support) return 0.0;
    return q0((r - plateau) / (support - plateau));
}

double Bump::d1(double v) const {
    const double d = v - center;
    const double r = std::abs(d);
    if (r <= plateau || r >= support) return 0.0;
    const double w = support - plateau;
    return q1((r - plateau) / w) / w * (d < 0.0 ? -1.0 : 1.0);
}

double Bump::d2(double v) const {
    const double r = std::abs(v - center);
    if (r <= plateau || r >= support) return 0.0;
    const double w = support - plateau;
    return q2((r - plateau) / w) / (w * w);
}

TestFunctionFamily::TestFunctionFamily(int k_max, std::vector<Bump> bumps)
    : k_max_(k_max), bumps_(std::move(bumps)) {
    if (k_max < 0 || k_max > 8) throw ConfigError("test family k_max must lie in [0, 8]");
    if (bumps_.empty()) throw ConfigError("test family needs at least one bump");
    for (const auto& b : bumps_)
        if (!(b.plateau >= 0.0 && b.support > b.plateau))
            throw ConfigError("bump needs 0 <= plateau < support");
    for (std::size_t ib = 0; ib < bumps_.size(); ++ib) {
        terms_.push_back({0, static_cast<int>(ib)});
        names_.push_back("bump" + std::to_string(ib));
        for (int k = 1; k <= k_max_; ++k) {
            terms_.push_back({k, static_cast<int>(ib)});
            names_.push_back("cos" + std::to_string(k) + "_bump" + std::to_string(ib));
            terms_.push_back({-k, static_cast<int>(ib)});
            names_.push_back("sin" + std::to_string(k) + "_bump" + std::to_string(ib));
        }
    }
}

TestFunctionFamily TestFunctionFamily::standard() {
    return TestFunctionFamily(3, {Bump{0.0, 2.0, 4.5}, Bump{1.0, 0.5, 2.5}});
}

double TestFunctionFamily::trig_value(int trig, double x) const {
    if (trig == 0) return 1.0;
    if (trig > 0) return std::cos(two_pi * trig * x);
    return std::sin(-two_pi * trig * x);
}

double TestFunctionFamily::trig_derivative(int trig, double x) const {
    if (trig == 0) return 0.0;
    if (trig > 0) return -two_pi * trig * std::sin(two_pi * trig * x);
    return -two_pi * trig * std::cos(-two_pi * trig * x);
}

double TestFunctionFamily::value(int idx, double x, double v) const {
    const Term& t = terms_[idx];
    return trig_value(t.trig, x) * bumps_[t.bump].value(v);
}

double TestFunctionFamily::dx(int idx, double x, double v) const {
    const Term& t = terms_[idx];
    return trig_derivative(t.trig, x) * bumps_[t.bump].value(v);
}

double TestFunctionFamily::dv(int idx, double x, double v) const {
    const Term& t = terms_[idx];
    return trig_value(t.trig, x) * bumps_[t.bump].d1(v);
}

double TestFunctionFamily::dvv(int idx, double x, double v) const {
    const Term& t = terms_[idx];
    return trig_value(t.trig, x) * bumps_[t.bump].d2(v);
}

void TestFunctionFamily::accumulate_generator(double x, double v, double g, double sigma,
                                              std::span<double> out) const {
    // Shared trig table per call keeps this O(k_max + terms).
    double tc[9], ts[9], tdc[9], tds[9];
    tc[0] = 1.0;
    ts[0] = 0.0;
    tdc[0] = 0.0;
    tds[0] = 0.0;
    const double c1 = std::cos(two_pi * x), s1 = std::sin(two_pi * x);
    for (int k = 1; k <= k_max_; ++k) {
        tc[k] = tc[k - 1] * c1 - ts[k - 1] * s1;
        ts[k] = ts[k - 1] * c1 + tc[k - 1] * s1;
        tdc[k] = -two_pi * k * ts[k];
        tds[k] = two_pi * k * tc[k];
    }
    for (std::size_t i = 0; i < terms_.size(); ++i) {
        const Term& t = terms_[i];
        const Bump& b = bumps_[t.bump];
        const double bv = b.value(v), b1 = b.d1(v), b2 = b.d2(v);
        double tv, td;
        if (t.trig >= 0) {
            tv = tc[t.trig];
            td = tdc[t.trig];
        } else {
            tv = ts[-t.trig];
            td = tds[-t.trig];
        }
        out[i] += td * bv * v + tv * b1 * (g - v) + sigma * tv * b2;
    }
}

void TestFunctionFamily::accumulate_value(double x, double v, std::span<double> out) const {
    double tc[9], ts[9];
    tc[0] = 1.0;
    ts[0] = 0.0;
    const double c1 = std::cos(two_pi * x), s1 = std::sin(two_pi * x);
    for (int k = 1; k <= k_max_; ++k) {
        tc[k] = tc[k - 1] * c1 - ts[k - 1] * s1;
        ts[k] = ts[k - 1] * c1 + tc[k - 1] * s1;
    }
    for (std::size_t i = 0; i < terms_.size(); ++i) {
        const Term& t = terms_[i];
        const double tv = t.trig >= 0 ? tc[t.trig] : ts[-t.trig];
        out[i] += tv * bumps_[t.bump].value(v);
    }
}

double pairing(const particles::ParticleEnsemble& e, const TestFunctionFamily& fam,
               int idx) {
    double acc = 0.0;
    for (int i = 0; i < e.n(); ++i) acc += fam.value(idx, e.x[i], e.v[i]);
    return acc / e.n();
}

double pairing(const pde::DensityField& f, const TestFunctionFamily& fam, int idx) {
    const auto& grid = f.grid();
    const int n_v = grid.vgrid().size();
    double acc = 0.0;
    for (int i = 0; i < grid.n_x(); ++i) {
        const auto col = f.column(i);
        const double x = grid.x_center(i);
        for (int j = 0; j < n_v; ++j)
            acc += fam.value(idx, x, grid.vgrid().center(j)) * col[j];
    }
    return acc * grid.dx() * grid.vgrid().dv();
}

double empirical_vs_density_gap(const particles::ParticleEnsemble& e,
                                const pde::DensityField& f,
                                const TestFunctionFamily& fam) {
    double gap = 0.0;
    for (int idx = 0; idx < fam.count(); ++idx)
        gap = std::max(gap, std::abs(pairing(e, fam, idx) - pairing(f, fam, idx)));
    return std::min(gap, 1.0);
}

double v_marginal_w1(const particles::ParticleEnsemble& e, const pde::DensityField& f) {
    e.validate();
    std::vector<double> samples = e.v;
    std::sort(samples.begin(), samples.end());
    const auto fv = f.v_marginal();
    const auto& vg = f.grid().vgrid();
    const double n_inv = 1.0 / samples.size();

    // W1 = int |F_emp - F_den| dv over the union of supports. Between
    // consecutive breakpoints F_emp is constant and F_den is linear, so each
    // segment integrates exactly (splitting at a sign crossing).
    std::vector<double> breaks;
    breaks.reserve(samples.size() + vg.size() + 2);
    for (int j = 0; j <= vg.size(); ++j) breaks.push_back(vg.edge(j));
    for (double s : samples) breaks.push_back(s);
    breaks.push_back(std::min(samples.front(), vg.v_min()));
    breaks.push_back(std::max(samples.back(), vg.v_max()));
    std::sort(breaks.begin(), breaks.end());

    // Density CDF at a point (piecewise linear, clamped outside the grid).
    std::vector<double> cdf(vg.size() + 1, 0.0);
    for (int j = 0; j < vg.size(); ++j) cdf[j + 1] = cdf[j] + fv.values()[j] * vg.dv();
    auto f_den = [&](double v) -> double {
        if (v <= vg.v_min()) return 0.0;
        if (v >= vg.v_max()) return cdf.back();
        const int j = std::min(static_cast<int>((v - vg.v_min()) / vg.dv()),
                               vg.size() - 1);
        return cdf[j] + fv.values()[j] * (v - vg.edge(j));
    };
    auto f_emp = [&](double v) -> double {
        const auto it = std::upper_bound(samples.begin(), samples.end(), v);
        return n_inv * static_cast<double>(it - samples.begin());
    };

    double w1 = 0.0;
    for (std::size_t b = 0; b + 1 < breaks.size(); ++b) {
        const double lo = breaks[b], hi = breaks[b + 1];
        if (hi <= lo) continue;
        // d(v) = F_den(v) - F_emp(v) is linear here: d(v) = d0 + slope (v - lo).
        const double mid = 0.5 * (lo + hi);
        const double d0 = f_den(lo) - f_emp(mid);
        const double d1v = f_den(hi) - f_emp(mid);
        const double len = hi - lo;
        if (d0 * d1v >= 0.0) {
            w1 += 0.5 * std::abs(d0 + d1v) * len;
        } else {
            const double root = d0 / (d0 - d1v) * len;
            w1 += 0.5 * (std::abs(d0) * root + std::abs(d1v) * (len - root));
        }
    }
    return w1;
}

MartingaleAccumulator::MartingaleAccumulator(const TestFunctionFamily& fam,
                                             const model::ModelParams& p, double dt)
    : fam_(fam), params_(p), dt_(dt) {
    const std::size_t n = fam.count();
    pairing0_.assign(n, 0.0);
    generator_sum_.assign(n, 0.0);
    martingale_.assign(n, 0.0);
    sup_.assign(n, 0.0);
    work_.assign(n, 0.0);
}

void MartingaleAccumulator::observe(const particles::ParticleEnsemble& e,
                                    std::span<const double> averages) {
    const std::size_t nf = pairing0_.size();
    std::fill(work_.begin(), work_.end(), 0.0);
    for (int i = 0; i < e.n(); ++i) fam_.accumulate_value(e.x[i], e.v[i], work_);
    for (std::size_t j = 0; j < nf; ++j) work_[j] /= e.n();

    if (first_) {
        pairing0_ = work_;
        first_ = false;
    } else {
        for (std::size_t j = 0; j < nf; ++j) {
            martingale_[j] = work_[j] - pairing0_[j] - generator_sum_[j];
            sup_[j] = std::max(sup_[j], std::abs(martingale_[j]));
        }
    }

    // Left-endpoint generator contribution of the state just observed.
    std::fill(work_.begin(), work_.end(), 0.0);
    for (int i = 0; i < e.n(); ++i)
        fam_.accumulate_generator(e.x[i], e.v[i], params_.herding(averages[i]),
                                  params_.sigma, work_);
    for (std::size_t j = 0; j < nf; ++j) generator_sum_[j] += work_[j] * dt_ / e.n();
}

}  // namespace kflk::meanfield
