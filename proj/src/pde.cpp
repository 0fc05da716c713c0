#include "kflk/pde.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "kflk/chang_cooper.hpp"
#include "kflk/fft.hpp"
#include "kflk/math_util.hpp"

namespace kflk::pde {

namespace {

constexpr double clip_tolerance = 1e-13;

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

PhaseGrid::PhaseGrid(int n_x, homogeneous::VGrid vgrid) : n_x_(n_x), vgrid_(vgrid) {
    if (n_x < 16 || !is_power_of_two(n_x))
        throw ConfigError("n_x must be a power of two >= 16");
    dx_ = 1.0 / n_x;
}

DensityField::DensityField(PhaseGrid grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.cells())
        throw ConfigError("density values do not match grid size");
    validate();
}

DensityField DensityField::product(const PhaseGrid& grid, std::span<const double> x_weights,
                                   const homogeneous::VDensity& fv) {
    if (x_weights.size() != static_cast<std::size_t>(grid.n_x()))
        throw ConfigError("x profile does not match grid");
    if (!(grid.vgrid() == fv.grid()))
        throw ConfigError("v density grid does not match phase grid");
    const int n_v = grid.vgrid().size();
    std::vector<double> vals(grid.cells());
    double mass = 0.0;
    for (int i = 0; i < grid.n_x(); ++i) {
        if (!(x_weights[i] >= 0.0)) throw ConfigError("x profile must be nonnegative");
        for (int j = 0; j < n_v; ++j) {
            const double v = x_weights[i] * fv.values()[j];
            vals[static_cast<std::size_t>(i) * n_v + j] = v;
            mass += v;
        }
    }
    mass *= grid.dx() * grid.vgrid().dv();
    for (double& v : vals) v /= mass;
    return DensityField(grid, std::move(vals));
}

DensityField DensityField::uniform_in_x(const PhaseGrid& grid,
                                        const homogeneous::VDensity& fv) {
    std::vector<double> w(grid.n_x(), 1.0);
    return product(grid, w, fv);
}

double DensityField::mass() const {
    double m = 0.0;
    for (double v : values_) m += v;
    return m * grid_.dx() * grid_.vgrid().dv();
}

std::vector<double> DensityField::x_marginal() const {
    const int n_v = grid_.vgrid().size();
    std::vector<double> rho(grid_.n_x(), 0.0);
    for (int i = 0; i < grid_.n_x(); ++i) {
        const auto col = column(i);
        double acc = 0.0;
        for (int j = 0; j < n_v; ++j) acc += col[j];
        rho[i] = acc * grid_.vgrid().dv();
    }
    return rho;
}

std::vector<double> DensityField::momentum_density() const {
    const int n_v = grid_.vgrid().size();
    std::vector<double> j_of_x(grid_.n_x(), 0.0);
    for (int i = 0; i < grid_.n_x(); ++i) {
        const auto col = column(i);
        double acc = 0.0;
        for (int j = 0; j < n_v; ++j) acc += grid_.vgrid().center(j) * col[j];
        j_of_x[i] = acc * grid_.vgrid().dv();
    }
    return j_of_x;
}

homogeneous::VDensity DensityField::v_marginal() const {
    const int n_v = grid_.vgrid().size();
    std::vector<double> fv(n_v, 0.0);
    for (int i = 0; i < grid_.n_x(); ++i) {
        const auto col = column(i);
        for (int j = 0; j < n_v; ++j) fv[j] += col[j];
    }
    for (double& v : fv) v *= grid_.dx();
    return homogeneous::VDensity(grid_.vgrid(), std::move(fv));
}

double DensityField::mean_velocity() const {
    const int n_v = grid_.vgrid().size();
    double acc = 0.0;
    for (int i = 0; i < grid_.n_x(); ++i) {
        const auto col = column(i);
        for (int j = 0; j < n_v; ++j) acc += grid_.vgrid().center(j) * col[j];
    }
    return acc * grid_.dx() * grid_.vgrid().dv();
}

void DensityField::validate() const {
    for (double v : values_)
        if (!(v >= 0.0)) throw NumericalError("density has negative or NaN cells");
    if (std::abs(mass() - 1.0) > 1e-10)
        throw NumericalError("density mass deviates from 1 beyond 1e-10");
}

MeanField local_mean_field(const DensityField& f, const model::InteractionKernel& kernel) {
    return local_mean_field(f.grid(), f.values(), kernel);
}

MeanField local_mean_field(const PhaseGrid& grid, std::span<const double> values,
                           const model::InteractionKernel& kernel) {
    const int n = grid.n_x();
    const int n_v = grid.vgrid().size();
    const double dx = grid.dx();
    std::vector<double> rho(n, 0.0), j(n, 0.0);
    for (int i = 0; i < n; ++i) {
        const auto col = values.subspan(static_cast<std::size_t>(i) * n_v, n_v);
        double r = 0.0, mom = 0.0;
        for (int jj = 0; jj < n_v; ++jj) {
            r += col[jj];
            mom += grid.vgrid().center(jj) * col[jj];
        }
        rho[i] = r * grid.vgrid().dv();
        j[i] = mom * grid.vgrid().dv();
    }

    // Kernel sampled at cell-center displacements (i - k) dx.
    std::vector<double> phi(n);
    for (int d = 0; d < n; ++d) phi[d] = kernel(d * dx);

    MeanField m;
    m.numerator.assign(n, 0.0);
    m.denominator.assign(n, 0.0);
    if (n <= 64) {
        for (int i = 0; i < n; ++i) {
            double num = 0.0, den = 0.0;
            for (int k = 0; k < n; ++k) {
                const double w = phi[(i - k + n) % n];
                num += w * j[k];
                den += w * rho[k];
            }
            m.numerator[i] = num * dx;
            m.denominator[i] = den * dx;
        }
    } else {
        PeriodicFft fft(n);
        fft.convolve(phi, j, m.numerator);
        fft.convolve(phi, rho, m.denominator);
        for (int i = 0; i < n; ++i) {
            m.numerator[i] *= dx;
            m.denominator[i] *= dx;
        }
    }

    double mass_x = 0.0;
    for (double r : rho) mass_x += r;
    mass_x *= dx;
    const double floor = kernel.epsilon_floor() * mass_x * (1.0 - 1e-6);
    m.values.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        if (m.denominator[i] < floor)
            throw NumericalError("mean-field denominator below kernel floor");
        m.values[i] = m.numerator[i] / m.denominator[i];
    }
    return m;
}

struct KineticStepper::Workspace {
    PeriodicFft fft;
    std::vector<double> row;
    std::vector<double> cc_work;
    explicit Workspace(int n_x, int n_v) : fft(n_x), row(n_x), cc_work(4 * n_v) {}
};

KineticStepper::KineticStepper(PhaseGrid grid, model::ModelParams params)
    : grid_(grid), params_(std::move(params)) {
    ws_ = std::make_unique<Workspace>(grid_.n_x(), grid_.vgrid().size());
}

KineticStepper::~KineticStepper() = default;
KineticStepper::KineticStepper(KineticStepper&&) noexcept = default;

void KineticStepper::transport_half(DensityField& f, double dt) {
    const int n_x = grid_.n_x();
    const int n_v = grid_.vgrid().size();
    auto vals = f.values();
    for (int j = 0; j < n_v; ++j) {
        const double shift = grid_.vgrid().center(j) * dt;
        for (int i = 0; i < n_x; ++i)
            ws_->row[i] = vals[static_cast<std::size_t>(i) * n_v + j];
        ws_->fft.shift(ws_->row, shift);
        for (int i = 0; i < n_x; ++i)
            vals[static_cast<std::size_t>(i) * n_v + j] = ws_->row[i];
    }
}

void KineticStepper::transport(DensityField& f, double dt) {
    const double mass0 = f.mass();
    transport_half(f, dt);
    clip_and_renormalize(f);
    const double scale = mass0 / f.mass();
    for (double& v : f.values()) v *= scale;
}

void KineticStepper::clip_and_renormalize(DensityField& f) {
    double mass = 0.0;
    for (double& v : f.values()) {
        if (v < 0.0) {
            if (v < -clip_tolerance)
                throw NumericalError("density went negative beyond the clip tolerance");
            v = 0.0;
        }
        mass += v;
    }
    mass *= grid_.dx() * grid_.vgrid().dv();
    const double scale = 1.0 / mass;
    for (double& v : f.values()) v *= scale;
}

void KineticStepper::step(DensityField& f, double dt) {
    last_m_ = local_mean_field(f, params_.kernel);
    step_with_field(f, last_m_.values, dt);
}

void KineticStepper::step_with_field(DensityField& f, std::span<const double> m_values,
                                     double dt) {
    if (!(dt > 0.0 && dt <= 0.1))
        throw ConfigError("kinetic step dt must lie in (0, 0.1]");
    if (m_values.size() != static_cast<std::size_t>(grid_.n_x()))
        throw ConfigError("mean-field profile does not match grid");

    transport_half(f, 0.5 * dt);
    clip_and_renormalize(f);
    for (int i = 0; i < grid_.n_x(); ++i) {
        const double g = params_.herding(m_values[i]);
        cc::step(grid_.vgrid(), g, params_.sigma, dt, f.column(i), ws_->cc_work);
    }
    transport_half(f, 0.5 * dt);
    clip_and_renormalize(f);
}

DensityField kinetic_step(const DensityField& f, const model::ModelParams& p, double dt) {
    f.validate();
    DensityField out = f;
    KineticStepper stepper(f.grid(), p);
    stepper.step(out, dt);
    return out;
}

SolveResult solve(const DensityField& f0, const model::ModelParams& p, double t_final,
                  double dt, const SolveOptions& options) {
    f0.validate();
    if (!(t_final > 0.0)) throw ConfigError("t_final must be > 0");
    if (options.record_stride < 1) throw ConfigError("record_stride must be >= 1");

    const long n_steps = std::max(1l, std::lround(t_final / dt));
    const double h = t_final / n_steps;

    DensityField f = f0;
    KineticStepper stepper(f.grid(), p);
    SolveResult result{SolveSeries{}, f};

    for (long k = 0; k <= n_steps; ++k) {
        const double t = k * h;
        if (k % options.record_stride == 0 || k == n_steps) {
            const MeanField m = local_mean_field(f, p.kernel);
            const auto fv = f.v_marginal();
            result.series.t.push_back(t);
            result.series.mass.push_back(f.mass());
            result.series.mean_v.push_back(fv.moment(1));
            result.series.var_v.push_back(fv.variance());
            const auto [mn, mx] = std::minmax_element(m.values.begin(), m.values.end());
            result.series.m_min.push_back(*mn);
            result.series.m_max.push_back(*mx);
            if (options.observer) options.observer(k, t, f, m);
        }
        if (k < n_steps) stepper.step(f, h);
    }
    result.final_state = std::move(f);
    return result;
}

namespace {

// Gap diagnostics between two states on the same grid, as flat spans.
struct GapAccumulator {
    const PhaseGrid& grid;
    std::vector<double> weight;  // sqrt(1 + v^2) per v-cell

    explicit GapAccumulator(const PhaseGrid& g) : grid(g) {
        weight.resize(g.vgrid().size());
        for (int j = 0; j < g.vgrid().size(); ++j)
            weight[j] = std::sqrt(1.0 + sqr(g.vgrid().center(j)));
    }

    // (plain L1, weighted L1)
    std::pair<double, double> gaps(std::span<const double> a, std::span<const double> b) const {
        const int n_v = grid.vgrid().size();
        double plain = 0.0, weighted = 0.0;
        for (std::size_t c = 0; c < a.size(); ++c) {
            const double d = std::abs(a[c] - b[c]);
            plain += d;
            weighted += d * weight[c % n_v];
        }
        const double cell = grid.dx() * grid.vgrid().dv();
        return {plain * cell, weighted * cell};
    }
};

// L1 norm of the centered v-derivative of a state times per-column factors.
double dv_l1_scaled(const PhaseGrid& grid, std::span<const double> f,
                    std::span<const double> column_scale) {
    const int n_x = grid.n_x();
    const int n_v = grid.vgrid().size();
    const double dv = grid.vgrid().dv();
    double acc = 0.0;
    for (int i = 0; i < n_x; ++i) {
        const double s = std::abs(column_scale[i]);
        if (s == 0.0) continue;
        const auto col = f.subspan(static_cast<std::size_t>(i) * n_v, n_v);
        for (int j = 1; j + 1 < n_v; ++j)
            acc += s * std::abs((col[j + 1] - col[j - 1]) / (2.0 * dv));
    }
    return acc * grid.dx() * dv;
}

}  // namespace

PicardReport picard_iterate(const DensityField& f0, const model::ModelParams& p,
                            double t_final, double dt, int n_iters,
                            const PicardOptions& options) {
    f0.validate();
    if (n_iters < 2) throw ConfigError("picard_iterate needs n_iters >= 2");
    if (!(t_final > 0.0)) throw ConfigError("t_final must be > 0");

    const long n_steps = std::max(1l, std::lround(t_final / dt));
    const double h = t_final / n_steps;
    const std::size_t cells = f0.grid().cells();
    const std::size_t slots = static_cast<std::size_t>(n_steps) + 1;
    const std::size_t bytes = 2 * slots * cells * sizeof(double);
    if (bytes > options.memory_budget_bytes)
        throw ConfigError("picard iterate storage exceeds the memory budget");

    const int n_x = f0.grid().n_x();
    std::vector<double> prev(slots * cells);
    std::vector<double> curr(slots * cells);
    std::vector<double> m_prev(slots * n_x);      // M^{n-1}(t_k, x)
    std::vector<double> m_prevprev(slots * n_x);  // M^{n-2}(t_k, x)

    // f^0 is f0 frozen in time.
    for (std::size_t k = 0; k < slots; ++k)
        std::memcpy(prev.data() + k * cells, f0.values().data(), cells * sizeof(double));
    {
        const MeanField m0 = local_mean_field(f0, p.kernel);
        for (std::size_t k = 0; k < slots; ++k)
            std::memcpy(m_prev.data() + k * n_x, m0.values.data(), n_x * sizeof(double));
    }

    GapAccumulator gaps(f0.grid());
    KineticStepper stepper(f0.grid(), p);
    PicardReport report;
    std::vector<double> g_gap(n_x);

    for (int n = 1; n <= n_iters; ++n) {
        DensityField f = f0;
        std::memcpy(curr.data(), f.values().data(), cells * sizeof(double));
        double xi = 0.0;
        double duhamel_bound = 0.0;
        double duhamel_excess = -1e300;

        for (long k = 0; k < n_steps; ++k) {
            const auto m_k = std::span<const double>(m_prev).subspan(
                static_cast<std::size_t>(k) * n_x, n_x);
            if (n >= 2) {
                // Duhamel forcing |[G(M^{n-1}) - G(M^{n-2})] dv f^{n-1}|_L1
                // accumulated with left-endpoint sums.
                const auto m_km1 = std::span<const double>(m_prevprev)
                                       .subspan(static_cast<std::size_t>(k) * n_x, n_x);
                for (int i = 0; i < n_x; ++i)
                    g_gap[i] = p.herding(m_k[i]) - p.herding(m_km1[i]);
                const auto prev_k = std::span<const double>(prev).subspan(
                    static_cast<std::size_t>(k) * cells, cells);
                duhamel_bound += h * dv_l1_scaled(f0.grid(), prev_k, g_gap);
            }
            stepper.step_with_field(f, m_k, h);
            std::memcpy(curr.data() + static_cast<std::size_t>(k + 1) * cells,
                        f.values().data(), cells * sizeof(double));
            const auto prev_k1 = std::span<const double>(prev).subspan(
                static_cast<std::size_t>(k + 1) * cells, cells);
            const auto [plain, weighted] = gaps.gaps(f.values(), prev_k1);
            xi = std::max(xi, plain + weighted);
            if (n >= 2) duhamel_excess = std::max(duhamel_excess, plain - duhamel_bound);
        }

        report.xi.push_back(xi);
        if (n >= 2) {
            report.ratio.push_back(xi / report.xi[n - 2]);
            report.duhamel_excess.push_back(duhamel_excess);
        }

        // Rotate buffers: curr -> prev, M^{n-1} -> M^{n-2}, recompute M of curr.
        std::swap(prev, curr);
        std::swap(m_prev, m_prevprev);
        if (n < n_iters) {
            for (std::size_t k = 0; k < slots; ++k) {
                const auto state = std::span<const double>(prev).subspan(k * cells, cells);
                const MeanField mk = local_mean_field(f0.grid(), state, p.kernel);
                std::memcpy(m_prev.data() + k * n_x, mk.values.data(),
                            n_x * sizeof(double));
            }
        }
    }
    return report;
}

std::pair<double, double> weighted_l1_distance(const DensityField& f,
                                               const DensityField& g) {
    if (!(f.grid() == g.grid())) throw ConfigError("weighted_l1_distance: grid mismatch");
    GapAccumulator gaps(f.grid());
    return gaps.gaps(f.values(), g.values());
}

double stationarity_residual(const DensityField& f, const model::ModelParams& p) {
    f.validate();
    const auto& grid = f.grid();
    const int n_x = grid.n_x();
    const int n_v = grid.vgrid().size();
    const double dx = grid.dx();
    const double dv = grid.vgrid().dv();
    const MeanField m = local_mean_field(f, p.kernel);

    double acc = 0.0;
    for (int i = 0; i < n_x; ++i) {
        const double g = p.herding(m.values[i]);
        const auto col = f.column(i);
        const auto col_e = f.column((i + 1) % n_x);
        const auto col_w = f.column((i - 1 + n_x) % n_x);
        for (int j = 1; j + 1 < n_v; ++j) {
            const double v = grid.vgrid().center(j);
            const double lhs = v * (col_e[j] - col_w[j]) / (2.0 * dx) +
                               g * (col[j + 1] - col[j - 1]) / (2.0 * dv);
            const double rhs =
                p.sigma * (col[j + 1] - 2.0 * col[j] + col[j - 1]) / (dv * dv) +
                (grid.vgrid().center(j + 1) * col[j + 1] -
                 grid.vgrid().center(j - 1) * col[j - 1]) /
                    (2.0 * dv);
            acc += std::abs(rhs - lhs);
        }
    }
    return acc * dx * dv;
}

}  // namespace kflk::pde
