#include "kflk/particles.hpp"

#include <algorithm>
#include <cmath>

#include "kflk/math_util.hpp"
#include "kflk/rng.hpp"

namespace kflk::particles {

void ParticleEnsemble::validate() const {
    if (x.size() != v.size() || x.size() < 2)
        throw ConfigError("ensemble needs N >= 2 matching positions/velocities");
    for (double xi : x)
        if (!(xi >= 0.0 && xi < 1.0)) throw NumericalError("position outside [0, 1)");
    for (double vi : v)
        if (!std::isfinite(vi)) throw NumericalError("non-finite velocity");
}

void SdeConfig::validate() const {
    if (!(dt > 0.0 && dt <= 0.05)) throw ConfigError("particle dt must lie in (0, 0.05]");
    if (!(t_final > 0.0)) throw ConfigError("t_final must be > 0");
    if (record_stride < 1) throw ConfigError("record_stride must be >= 1");
    if (n_modes < 0) throw ConfigError("n_modes must be >= 0");
    if (noise_sign != 1.0 && noise_sign != -1.0)
        throw ConfigError("noise_sign must be +1 or -1");
}

ForceEvaluator::ForceEvaluator(model::InteractionKernel kernel, ForcePath path, int n_modes)
    : kernel_(std::move(kernel)), path_(path) {
    if (path_ == ForcePath::Fourier) {
        const int m = n_modes > 0 ? n_modes : kernel_.default_modes();
        coeff_ = kernel_.cosine_coefficients(m);
    }
}

void ForceEvaluator::compute(const ParticleEnsemble& e, std::vector<double>& out) {
    const int n = e.n();
    out.resize(n);

    if (path_ == ForcePath::Direct) {
        for (int i = 0; i < n; ++i) {
            double num = 0.0, den = 0.0;
            for (int j = 0; j < n; ++j) {
                const double w = kernel_(e.x[i] - e.x[j]);
                num += w * e.v[j];
                den += w;
            }
            out[i] = num / den;
        }
        return;
    }

    const int m = modes();
    cos_sum_.assign(m + 1, 0.0);
    sin_sum_.assign(m + 1, 0.0);
    cos_vsum_.assign(m + 1, 0.0);
    sin_vsum_.assign(m + 1, 0.0);
    cs_.resize(2 * static_cast<std::size_t>(n) * m);

    // phi(x_i - x_j) = sum_k a_k [cos(k t_i) cos(k t_j) + sin(k t_i) sin(k t_j)],
    // t = 2 pi x: accumulate per-mode sums once, then combine per particle.
    for (int i = 0; i < n; ++i) {
        const double t = two_pi * e.x[i];
        const double c1 = std::cos(t), s1 = std::sin(t);
        double ck = 1.0, sk = 0.0;
        double* cache = cs_.data() + 2 * static_cast<std::size_t>(i) * m;
        for (int k = 1; k <= m; ++k) {
            const double cn = ck * c1 - sk * s1;
            const double sn = sk * c1 + ck * s1;
            ck = cn;
            sk = sn;
            cache[2 * (k - 1)] = ck;
            cache[2 * (k - 1) + 1] = sk;
            cos_sum_[k] += ck;
            sin_sum_[k] += sk;
            cos_vsum_[k] += ck * e.v[i];
            sin_vsum_[k] += sk * e.v[i];
        }
        cos_sum_[0] += 1.0;
        cos_vsum_[0] += e.v[i];
    }

    for (int i = 0; i < n; ++i) {
        double num = coeff_[0] * cos_vsum_[0];
        double den = coeff_[0] * cos_sum_[0];
        const double* cache = cs_.data() + 2 * static_cast<std::size_t>(i) * m;
        for (int k = 1; k <= m; ++k) {
            const double ck = cache[2 * (k - 1)];
            const double sk = cache[2 * (k - 1) + 1];
            num += coeff_[k] * (ck * cos_vsum_[k] + sk * sin_vsum_[k]);
            den += coeff_[k] * (ck * cos_sum_[k] + sk * sin_sum_[k]);
        }
        out[i] = num / den;
    }
}

std::vector<double> compute_local_averages(const ParticleEnsemble& e,
                                           const model::InteractionKernel& kernel,
                                           ForcePath path, int n_modes) {
    e.validate();
    ForceEvaluator eval(kernel, path, n_modes);
    std::vector<double> out;
    eval.compute(e, out);
    return out;
}

void em_step(ParticleEnsemble& e, const model::ModelParams& p, const SdeConfig& cfg,
             std::uint64_t step_index, std::span<const double> averages) {
    const int n = e.n();
    const double noise_scale = std::sqrt(2.0 * p.sigma * cfg.dt);
    for (int i = 0; i < n; ++i) {
        const double xi = cfg.noise_sign *
                          rng::normal(cfg.seed, static_cast<std::uint64_t>(i), step_index, 0);
        e.x[i] = wrap01(e.x[i] + e.v[i] * cfg.dt);
        e.v[i] += (p.herding(averages[i]) - e.v[i]) * cfg.dt + noise_scale * xi;
    }
    e.time += cfg.dt;
}

SimulateSeries simulate(ParticleEnsemble& e, const model::ModelParams& p,
                        const SdeConfig& cfg, const Observer& observer) {
    e.validate();
    cfg.validate();
    const long n_steps = std::max(1l, std::lround(cfg.t_final / cfg.dt));

    SimulateSeries series;
    ForceEvaluator force(p.kernel, cfg.force_path, cfg.n_modes);
    std::vector<double> averages;

    auto record = [&](long step) {
        const double n = e.n();
        double s = 0.0, s2 = 0.0;
        for (double vi : e.v) {
            s += vi;
            s2 += vi * vi;
        }
        const double mean = s / n;
        series.t.push_back(step * cfg.dt);
        series.mean_v.push_back(mean);
        series.var_v.push_back(s2 / n - mean * mean);
        series.order_param.push_back(std::abs(mean));
    };

    for (long k = 0; k < n_steps; ++k) {
        force.compute(e, averages);
        if (observer) observer(k, e, averages);
        if (k % cfg.record_stride == 0) record(k);
        em_step(e, p, cfg, static_cast<std::uint64_t>(k), averages);
    }
    force.compute(e, averages);
    if (observer) observer(n_steps, e, averages);
    record(n_steps);
    return series;
}

HistogramResult empirical_histogram(const ParticleEnsemble& e, const pde::PhaseGrid& grid) {
    e.validate();
    const int n_x = grid.n_x();
    const int n_v = grid.vgrid().size();
    std::vector<double> vals(grid.cells(), 0.0);
    long clamped = 0;
    for (int i = 0; i < e.n(); ++i) {
        int ix = static_cast<int>(e.x[i] * n_x);
        ix = std::min(ix, n_x - 1);  // x < 1 always; guards rounding at the seam
        int iv = static_cast<int>(std::floor((e.v[i] - grid.vgrid().v_min()) /
                                             grid.vgrid().dv()));
        if (iv < 0 || iv >= n_v) {
            ++clamped;
            iv = std::clamp(iv, 0, n_v - 1);
        }
        vals[static_cast<std::size_t>(ix) * n_v + iv] += 1.0;
    }
    const double norm = 1.0 / (e.n() * grid.dx() * grid.vgrid().dv());
    for (double& v : vals) v *= norm;
    return HistogramResult{pde::DensityField(grid, std::move(vals)), clamped};
}

ParticleEnsemble sample_product(int n, double x_bump_amp, int x_bump_k, double v_mean,
                                double v_variance, std::uint64_t seed) {
    if (n < 2) throw ConfigError("sample_product needs N >= 2");
    if (!(std::abs(x_bump_amp) < 1.0)) throw ConfigError("|x bump amplitude| must be < 1");
    if (x_bump_k < 1) throw ConfigError("x bump harmonic must be >= 1");
    if (!(v_variance > 0.0)) throw ConfigError("velocity variance must be > 0");

    ParticleEnsemble e;
    e.x.resize(n);
    e.v.resize(n);
    const double s = std::sqrt(v_variance);
    for (int i = 0; i < n; ++i) {
        // Invert F(x) = x + amp sin(2 pi k x) / (2 pi k) by Newton; F' >= 1 - |amp| > 0.
        const double u = rng::uniform(seed, static_cast<std::uint64_t>(i), 0x11, 0);
        double x = u;
        if (x_bump_amp != 0.0) {
            for (int it = 0; it < 50; ++it) {
                const double w = two_pi * x_bump_k;
                const double fx = x + x_bump_amp * std::sin(w * x) / w - u;
                const double dfx = 1.0 + x_bump_amp * std::cos(w * x);
                const double step = fx / dfx;
                x -= step;
                if (std::abs(step) < 1e-15) break;
            }
        }
        e.x[i] = wrap01(x);
        e.v[i] = v_mean + s * rng::normal(seed, static_cast<std::uint64_t>(i), 0x22, 0);
    }
    return e;
}

}  // namespace kflk::particles
