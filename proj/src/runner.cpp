#include "kflk/runner.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <thread>

#include <CLI11.hpp>

#include "kflk/config.hpp"
#include "kflk/io.hpp"
#include "kflk/math_util.hpp"
#include "kflk/meanfield.hpp"
#include "kflk/particles.hpp"
#include "kflk/rng.hpp"
#include "kflk/stationary.hpp"

namespace fs = std::filesystem;

namespace kflk::cli {

namespace {

constexpr const char* version_string = "kflk 0.1.0";

struct Overrides {
    std::string config_path;
    std::optional<double> sigma, beta, kappa, lambda, dt, t, m1, c2, vmin, vmax, x_bump;
    std::optional<int> n_x, n_v, stride, threads, n, iters, seeds, cosine_k, x_bump_k,
        snapshot_stride, n_modes;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> kernel, out, force_path;
    std::optional<std::vector<int>> n_list;
    std::optional<std::vector<double>> lambdas;

    void apply(RunConfig& c) const {
        if (sigma) c.sigma = *sigma;
        if (beta) c.beta = *beta;
        if (kappa) c.kappa = *kappa;
        if (lambda) c.lambda = *lambda;
        if (dt) c.dt = *dt;
        if (t) c.t_final = *t;
        if (m1) c.m1 = *m1;
        if (c2) c.c2 = *c2;
        if (vmin) c.v_min = *vmin;
        if (vmax) c.v_max = *vmax;
        if (x_bump) c.x_bump = *x_bump;
        if (n_x) c.n_x = *n_x;
        if (n_v) c.n_v = *n_v;
        if (stride) c.record_stride = *stride;
        if (threads) c.threads = *threads;
        if (n) c.n_particles = *n;
        if (iters) c.iters = *iters;
        if (seeds) c.seeds = *seeds;
        if (cosine_k) c.cosine_k = *cosine_k;
        if (x_bump_k) c.x_bump_k = *x_bump_k;
        if (snapshot_stride) c.snapshot_stride = *snapshot_stride;
        if (n_modes) c.n_modes = *n_modes;
        if (seed) c.seed = *seed;
        if (kernel) c.kernel = *kernel;
        if (out) c.out_dir = *out;
        if (force_path) c.force_path = *force_path;
        if (n_list) c.n_list = *n_list;
        if (lambdas) c.lambdas = *lambdas;
    }
};

void add_common_options(CLI::App* cmd, Overrides& o) {
    cmd->add_option("config", o.config_path, "config file (INI sections model/grid/run/experiment)");
    cmd->add_option("--sigma", o.sigma, "noise strength sigma > 0");
    cmd->add_option("--beta", o.beta, "herding parameter beta > 0");
    cmd->add_option("--kernel", o.kernel, "uniform | von_mises | cosine");
    cmd->add_option("--kappa", o.kappa, "von Mises concentration");
    cmd->add_option("--lambda", o.lambda, "cosine perturbation amplitude");
    cmd->add_option("--cosine-k", o.cosine_k, "cosine perturbation harmonic");
    cmd->add_option("--n-x", o.n_x, "periodic x cells (power of two)");
    cmd->add_option("--n-v", o.n_v, "velocity cells");
    cmd->add_option("--v-min", o.vmin, "velocity grid lower edge");
    cmd->add_option("--v-max", o.vmax, "velocity grid upper edge");
    cmd->add_option("--dt", o.dt, "time step");
    cmd->add_option("--t", o.t, "final time");
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("--stride", o.stride, "record stride");
    cmd->add_option("--threads", o.threads, "worker cap (KFLK_THREADS as fallback)");
    cmd->add_option("--out", o.out, "output directory (default ./out/<timestamp>)");
}

int resolve_threads(const RunConfig& cfg) {
    if (cfg.threads > 0) return cfg.threads;
    if (const char* env = std::getenv("KFLK_THREADS")) {
        const int t = std::atoi(env);
        if (t > 0) return t;
    }
    return 1;
}

// Run jobs[0..n) on up to `threads` workers; each job writes only its own
// result slot, so the merged output is identical for any thread count.
void run_jobs(int threads, std::vector<std::function<void()>>& jobs) {
    if (threads <= 1) {
        for (auto& job : jobs) job();
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            jobs[i]();
        }
    };
    std::vector<std::thread> pool;
    const int n_workers = std::min<int>(threads, static_cast<int>(jobs.size()));
    pool.reserve(n_workers);
    for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

fs::path prepare_out_dir(const RunConfig& cfg) {
    fs::path dir;
    if (!cfg.out_dir.empty()) {
        dir = cfg.out_dir;
    } else {
        const auto now = std::chrono::system_clock::now();
        const std::time_t tt = std::chrono::system_clock::to_time_t(now);
        char buf[32];
        std::tm tm_utc{};
        gmtime_r(&tt, &tm_utc);
        std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", &tm_utc);
        dir = fs::path("out") / buf;
        int suffix = 1;
        while (fs::exists(dir)) dir = fs::path("out") / (std::string(buf) + "-" + std::to_string(suffix++));
    }
    fs::create_directories(dir);
    return dir;
}

std::map<std::string, std::string> config_echo(const RunConfig& c) {
    std::map<std::string, std::string> m;
    const auto d = [](double v) { return io::CsvWriter::format(v); };
    m["model.sigma"] = d(c.sigma);
    m["model.herding"] = c.herding;
    m["model.beta"] = d(c.beta);
    m["model.kernel"] = c.kernel;
    m["model.kappa"] = d(c.kappa);
    m["model.lambda"] = d(c.lambda);
    m["model.cosine_k"] = std::to_string(c.cosine_k);
    m["grid.n_x"] = std::to_string(c.n_x);
    m["grid.n_v"] = std::to_string(c.n_v);
    m["grid.v_min"] = d(c.v_min);
    m["grid.v_max"] = d(c.v_max);
    m["run.dt"] = d(c.dt);
    m["run.t_final"] = d(c.t_final);
    m["run.seed"] = std::to_string(c.seed);
    m["run.n_particles"] = std::to_string(c.n_particles);
    m["run.record_stride"] = std::to_string(c.record_stride);
    m["run.threads"] = std::to_string(c.threads);
    m["experiment.m1"] = d(c.m1);
    m["experiment.c2"] = d(c.c2);
    m["experiment.iters"] = std::to_string(c.iters);
    m["experiment.seeds"] = std::to_string(c.seeds);
    m["experiment.x_bump"] = d(c.x_bump);
    m["experiment.x_bump_k"] = std::to_string(c.x_bump_k);
    m["experiment.snapshot_stride"] = std::to_string(c.snapshot_stride);
    m["experiment.force_path"] = c.force_path;
    m["experiment.n_modes"] = std::to_string(c.n_modes);
    {
        std::string s;
        for (std::size_t i = 0; i < c.n_list.size(); ++i)
            s += (i ? "," : "") + std::to_string(c.n_list[i]);
        m["experiment.n_list"] = s;
    }
    {
        std::string s;
        for (std::size_t i = 0; i < c.lambdas.size(); ++i)
            s += (i ? "," : "") + d(c.lambdas[i]);
        m["experiment.lambdas"] = s;
    }
    return m;
}

homogeneous::VGrid make_vgrid(const RunConfig& cfg) {
    if (cfg.v_min == 0.0 && cfg.v_max == 0.0)
        return homogeneous::VGrid::standard(cfg.m1, cfg.sigma, cfg.n_v,
                                            cfg.initial_variance());
    return homogeneous::VGrid(cfg.v_min, cfg.v_max, cfg.n_v);
}

std::vector<double> x_profile_cells(const RunConfig& cfg) {
    std::vector<double> xw(cfg.n_x, 1.0);
    if (cfg.x_bump != 0.0) {
        const double w = two_pi * cfg.x_bump_k;
        const double dx = 1.0 / cfg.n_x;
        for (int i = 0; i < cfg.n_x; ++i)
            xw[i] = 1.0 + cfg.x_bump * (std::sin(w * (i + 1) * dx) - std::sin(w * i * dx)) /
                              (w * dx);
    }
    return xw;
}

pde::DensityField make_initial_field(const RunConfig& cfg) {
    const pde::PhaseGrid grid(cfg.n_x, make_vgrid(cfg));
    const auto fv = homogeneous::VDensity::gaussian(grid.vgrid(), cfg.m1,
                                                    cfg.initial_variance());
    const auto xw = x_profile_cells(cfg);
    return pde::DensityField::product(grid, xw, fv);
}

// ---- subcommand bodies ------------------------------------------------

void run_homogeneous(const RunConfig& cfg, const fs::path& out, io::RunManifest& manifest) {
    const auto params = cfg.make_params();
    const auto vgrid = make_vgrid(cfg);
    auto f = homogeneous::VDensity::gaussian(vgrid, cfg.m1, cfg.initial_variance());

    const std::vector<std::string> header{"t", "M_1", "C_2", "C_3", "C_4", "S", "D_S"};
    io::CsvWriter csv(out / "homogeneous.csv", header);

    bool mass_ok = true, entropy_monotone = true, production_nonneg = true;
    double prev_s = std::numeric_limits<double>::infinity();
    const long n_steps = std::max(1l, std::lround(cfg.t_final / cfg.dt));
    const double h = cfg.t_final / n_steps;
    std::vector<double> work(4 * static_cast<std::size_t>(vgrid.size()));

    for (long k = 0; k <= n_steps; ++k) {
        if (k % cfg.record_stride == 0 || k == n_steps) {
            homogeneous::MomentState ms;
            ms.time = k * h;
            ms.moments = {1.0, f.moment(1), f.moment(2), f.moment(3), f.moment(4)};
            const auto cs = homogeneous::moments_to_cumulants(ms);
            const double s = homogeneous::entropy(f, params);
            const double ds = homogeneous::entropy_production(f, params);
            csv.row(std::vector<double>{k * h, ms.moments[1], cs.cumulants[1],
                                        cs.cumulants[2], cs.cumulants[3], s, ds});
            mass_ok = mass_ok && std::abs(f.mass() - 1.0) <= 1e-10;
            entropy_monotone = entropy_monotone && s <= prev_s + 1e-12;
            production_nonneg = production_nonneg && ds >= 0.0;
            prev_s = s;
        }
        if (k < n_steps) homogeneous::homogeneous_step_inplace(f, params, h, work);
    }
    manifest.outputs.push_back("homogeneous.csv");
    manifest.checks["mass_conserved"] = mass_ok;
    manifest.checks["entropy_monotone"] = entropy_monotone;
    manifest.checks["entropy_production_nonnegative"] = production_nonneg;
}

void run_solve_pde(const RunConfig& cfg, const fs::path& out, io::RunManifest& manifest) {
    const auto params = cfg.make_params();
    const auto f0 = make_initial_field(cfg);

    pde::SolveOptions options;
    options.record_stride = cfg.record_stride;
    long snapshots = 0;
    if (cfg.snapshot_stride > 0) {
        options.observer = [&](long step, double, const pde::DensityField& f,
                               const pde::MeanField&) {
            if (step % cfg.snapshot_stride == 0) {
                char name[32];
                std::snprintf(name, sizeof(name), "density_%08ld.bin", step);
                io::write_density(out / name, f);
                manifest.outputs.push_back(name);
                ++snapshots;
            }
        };
    }
    const auto result = pde::solve(f0, params, cfg.t_final, cfg.dt, options);

    const std::vector<std::string> header{"t", "mass", "mean_v", "var_v", "m_min", "m_max"};
    io::CsvWriter csv(out / "diagnostics.csv", header);
    bool mass_ok = true;
    for (std::size_t i = 0; i < result.series.t.size(); ++i) {
        csv.row(std::vector<double>{result.series.t[i], result.series.mass[i],
                                    result.series.mean_v[i], result.series.var_v[i],
                                    result.series.m_min[i], result.series.m_max[i]});
        mass_ok = mass_ok && std::abs(result.series.mass[i] - 1.0) <= 1e-10;
    }
    manifest.outputs.push_back("diagnostics.csv");
    manifest.checks["mass_conserved"] = mass_ok;
}

void run_picard(const RunConfig& cfg, const fs::path& out, io::RunManifest& manifest) {
    const auto params = cfg.make_params();
    const auto f0 = make_initial_field(cfg);
    const auto report = pde::picard_iterate(f0, params, cfg.t_final, cfg.dt, cfg.iters);

    const std::vector<std::string> header{"n", "xi", "ratio"};
    io::CsvWriter csv(out / "picard.csv", header);
    bool contraction = true;
    for (std::size_t i = 0; i < report.xi.size(); ++i) {
        std::string line = std::to_string(i + 1) + "," + io::CsvWriter::format(report.xi[i]);
        if (i >= 1) {
            line += "," + io::CsvWriter::format(report.ratio[i - 1]);
            if (i + 1 >= 3) contraction = contraction && report.ratio[i - 1] < 1.0;
        } else {
            line += ",";
        }
        csv.raw_row(line);
    }
    manifest.outputs.push_back("picard.csv");
    manifest.checks["contraction_from_n3"] = contraction;
}

void run_particles(const RunConfig& cfg, const fs::path& out, io::RunManifest& manifest) {
    const auto params = cfg.make_params();
    auto ensemble = particles::sample_product(cfg.n_particles, cfg.x_bump, cfg.x_bump_k,
                                              cfg.m1, cfg.initial_variance(), cfg.seed);
    particles::SdeConfig sde;
    sde.dt = cfg.dt;
    sde.t_final = cfg.t_final;
    sde.seed = cfg.seed;
    sde.force_path = cfg.force_path == "direct" ? particles::ForcePath::Direct
                                                : particles::ForcePath::Fourier;
    sde.n_modes = cfg.n_modes;
    sde.record_stride = cfg.record_stride;

    particles::Observer observer;
    if (cfg.snapshot_stride > 0) {
        observer = [&](long step, const particles::ParticleEnsemble& e,
                       std::span<const double>) {
            if (step % cfg.snapshot_stride == 0) {
                char name[32];
                std::snprintf(name, sizeof(name), "ensemble_%08ld.csv", step);
                io::CsvWriter snap(out / name,
                                   std::vector<std::string>{"i", "x", "v"});
                for (int i = 0; i < e.n(); ++i)
                    snap.row(std::vector<double>{static_cast<double>(i), e.x[i], e.v[i]});
                manifest.outputs.push_back(name);
            }
        };
    }
    const auto series = particles::simulate(ensemble, params, sde, observer);

    const std::vector<std::string> header{"t", "mean_v", "var_v", "order_param"};
    io::CsvWriter csv(out / "trajectory.csv", header);
    for (std::size_t i = 0; i < series.t.size(); ++i)
        csv.row(std::vector<double>{series.t[i], series.mean_v[i], series.var_v[i],
                                    series.order_param[i]});
    manifest.outputs.push_back("trajectory.csv");
    manifest.checks["velocities_finite"] = true;
}

void run_meanfield(const RunConfig& cfg, const fs::path& out, io::RunManifest& manifest) {
    const auto params = cfg.make_params();
    const auto f0 = make_initial_field(cfg);
    const auto fam = meanfield::TestFunctionFamily::standard();

    // One deterministic PDE run, shared by every (N, seed) pair.
    const auto pde_result = pde::solve(f0, params, cfg.t_final, cfg.dt);
    const auto& f_final = pde_result.final_state;

    struct Row {
        int n;
        int seed_index;
        double gap, w1, sup_martingale;
    };
    std::vector<Row> rows(cfg.n_list.size() * static_cast<std::size_t>(cfg.seeds));
    std::vector<std::function<void()>> jobs;
    for (std::size_t in = 0; in < cfg.n_list.size(); ++in) {
        for (int is = 0; is < cfg.seeds; ++is) {
            jobs.push_back([&, in, is] {
                const int n = cfg.n_list[in];
                const std::uint64_t seed =
                    rng::derive(cfg.seed, 1000 * static_cast<std::uint64_t>(n) + is);
                auto e = particles::sample_product(n, cfg.x_bump, cfg.x_bump_k, cfg.m1,
                                                   cfg.initial_variance(), seed);
                particles::SdeConfig sde;
                sde.dt = cfg.dt;
                sde.t_final = cfg.t_final;
                sde.seed = seed;
                sde.force_path = cfg.force_path == "direct"
                                     ? particles::ForcePath::Direct
                                     : particles::ForcePath::Fourier;
                sde.n_modes = cfg.n_modes;
                meanfield::MartingaleAccumulator acc(fam, params, sde.dt);
                particles::simulate(e, params, sde,
                                    [&](long, const particles::ParticleEnsemble& pe,
                                        std::span<const double> av) { acc.observe(pe, av); });
                double sup_m = 0.0;
                for (double m : acc.sup_magnitude()) sup_m = std::max(sup_m, m);
                rows[in * cfg.seeds + is] =
                    Row{n, is, meanfield::empirical_vs_density_gap(e, f_final, fam),
                        meanfield::v_marginal_w1(e, f_final), sup_m};
            });
        }
    }
    run_jobs(resolve_threads(cfg), jobs);

    const std::vector<std::string> header{"N", "seed", "gap", "w1", "sup_martingale"};
    io::CsvWriter csv(out / "convergence.csv", header);
    for (const auto& r : rows)
        csv.row(std::vector<double>{static_cast<double>(r.n),
                                    static_cast<double>(r.seed_index), r.gap, r.w1,
                                    r.sup_martingale});

    // Fitted orders in N (log-log least squares of seed means / RMS).
    std::vector<double> log_n, log_gap, log_w1, log_mart;
    for (std::size_t in = 0; in < cfg.n_list.size(); ++in) {
        double g = 0, w = 0, m2 = 0;
        for (int is = 0; is < cfg.seeds; ++is) {
            const auto& r = rows[in * cfg.seeds + is];
            g += r.gap;
            w += r.w1;
            m2 += r.sup_martingale * r.sup_martingale;
        }
        log_n.push_back(std::log(static_cast<double>(cfg.n_list[in])));
        log_gap.push_back(std::log(g / cfg.seeds));
        log_w1.push_back(std::log(w / cfg.seeds));
        log_mart.push_back(std::log(std::sqrt(m2 / cfg.seeds)));
    }
    const double order_gap = fit_line(log_n, log_gap).slope;
    const double order_w1 = fit_line(log_n, log_w1).slope;
    const double order_mart = fit_line(log_n, log_mart).slope;
    // Summary row: N = 0, seed = -1, fitted orders in the value columns.
    csv.row(std::vector<double>{0.0, -1.0, order_gap, order_w1, order_mart});

    manifest.outputs.push_back("convergence.csv");
    manifest.checks["gap_order_near_half"] = std::abs(order_gap + 0.5) <= 0.15;
    manifest.checks["martingale_order_near_half"] = std::abs(order_mart + 0.5) <= 0.15;
}

void run_stationary(const RunConfig& cfg, const fs::path& out, io::RunManifest& manifest) {
    const auto params = cfg.make_params();
    const std::vector<std::string> header{"branch", "n_x", "n_v", "residual"};
    io::CsvWriter csv(out / "residuals.csv", header);

    auto scan_at = [&](int n_x, int n_v) {
        const pde::PhaseGrid grid(
            n_x, homogeneous::VGrid(make_vgrid(cfg).v_min(), make_vgrid(cfg).v_max(), n_v));
        const auto scan = stationary::residual_scan(params, grid);
        auto emit = [&](const char* name, double r) {
            csv.raw_row(std::string(name) + "," + std::to_string(n_x) + "," +
                        std::to_string(n_v) + "," + io::CsvWriter::format(r));
        };
        emit("zero", scan.zero);
        emit("plus", scan.plus);
        emit("minus", scan.minus);
        emit("control", scan.control);
        return scan;
    };
    const auto coarse = scan_at(cfg.n_x, cfg.n_v);
    const auto fine = scan_at(2 * cfg.n_x, 2 * cfg.n_v);

    manifest.outputs.push_back("residuals.csv");
    manifest.checks["branches_second_order"] = coarse.zero / fine.zero >= 3.5 &&
                                               coarse.plus / fine.plus >= 3.5 &&
                                               coarse.minus / fine.minus >= 3.5;
    manifest.checks["control_resolution_stable"] =
        std::abs(fine.control / coarse.control - 1.0) < 0.1;
}

void run_perturb(const RunConfig& cfg, const fs::path& out, io::RunManifest& manifest) {
    const std::vector<std::string> header{"lambda", "k", "deviation_L1", "alpha_variation",
                                          "steps_to_converge"};
    io::CsvWriter csv(out / "perturb.csv", header);

    bool alpha_flat = true;
    for (double lam : cfg.lambdas) {
        auto kernel = lam > 0.0 ? model::InteractionKernel::cosine_perturbation(lam, cfg.x_bump_k)
                                : model::InteractionKernel::uniform();
        const model::ModelParams params(cfg.sigma, model::HerdingFunction::rational(cfg.beta),
                                        std::move(kernel));
        const pde::PhaseGrid grid(cfg.n_x, make_vgrid(cfg));
        stationary::PerturbationOptions options;
        options.dt = cfg.dt;
        options.x_bump_amplitude = cfg.x_bump;
        options.x_bump_k = cfg.x_bump_k;
        const auto result = stationary::perturbed_steady_state(params, grid, options);
        csv.row(std::vector<double>{lam, static_cast<double>(cfg.x_bump_k),
                                    result.deviation_l1, result.alpha_variation,
                                    static_cast<double>(result.steps)});
        alpha_flat = alpha_flat && result.alpha_variation <= 1e-6;
    }
    manifest.outputs.push_back("perturb.csv");
    manifest.checks["alpha_spatially_constant"] = alpha_flat;
}

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"kinetic flocking suite: PDE, particles, equilibria"};
    app.require_subcommand(1);

    Overrides o;
    auto* homogeneous_cmd =
        app.add_subcommand("homogeneous", "space-homogeneous moments/cumulants/entropy");
    auto* solve_cmd = app.add_subcommand("solve-pde", "full kinetic equation");
    auto* picard_cmd = app.add_subcommand("picard", "Picard iteration contraction");
    auto* particles_cmd = app.add_subcommand("particles", "N-particle SDE simulation");
    auto* meanfield_cmd = app.add_subcommand("meanfield", "particle-to-PDE convergence");
    auto* stationary_cmd = app.add_subcommand("stationary", "equilibrium residual scan");
    auto* perturb_cmd = app.add_subcommand("perturb", "perturbed-kernel steady states");

    for (auto* cmd : {homogeneous_cmd, solve_cmd, picard_cmd, particles_cmd, meanfield_cmd,
                      stationary_cmd, perturb_cmd})
        add_common_options(cmd, o);
    for (auto* cmd : {homogeneous_cmd, solve_cmd, picard_cmd, particles_cmd, meanfield_cmd}) {
        cmd->add_option("--m1", o.m1, "initial mean velocity");
        cmd->add_option("--c2", o.c2, "initial velocity variance (0: sigma)");
    }
    for (auto* cmd : {solve_cmd, picard_cmd, meanfield_cmd, perturb_cmd, particles_cmd}) {
        cmd->add_option("--x-bump", o.x_bump, "x profile amplitude 1 + a cos(2 pi k x)");
        cmd->add_option("--x-bump-k", o.x_bump_k, "x profile harmonic");
    }
    for (auto* cmd : {solve_cmd, particles_cmd})
        cmd->add_option("--snapshot-stride", o.snapshot_stride, "write snapshots every k records");
    picard_cmd->add_option("--iters", o.iters, "number of Picard iterates");
    particles_cmd->add_option("--n", o.n, "particle count");
    for (auto* cmd : {particles_cmd, meanfield_cmd}) {
        cmd->add_option("--force-path", o.force_path, "direct | fourier");
        cmd->add_option("--modes", o.n_modes, "Fourier modes (0: auto)");
    }
    meanfield_cmd->add_option("--n-list", o.n_list, "ensemble sizes")->delimiter(',');
    meanfield_cmd->add_option("--seeds", o.seeds, "repetitions per N");
    perturb_cmd->add_option("--lambdas", o.lambdas, "perturbation amplitudes")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    RunConfig cfg;
    try {
        if (!o.config_path.empty()) {
            const auto issues = load_config_file(o.config_path, cfg);
            if (!issues.empty()) {
                for (const auto& issue : issues)
                    std::cerr << "config error: " << issue.field << ": " << issue.message
                              << "\n";
                return 2;
            }
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    o.apply(cfg);

    const auto issues = validate(cfg);
    if (!issues.empty()) {
        for (const auto& issue : issues)
            std::cerr << "config error: " << issue.field << ": " << issue.message << "\n";
        return 2;
    }

    io::RunManifest manifest;
    manifest.version = version_string;
    manifest.config = config_echo(cfg);

    fs::path out;
    const auto start = std::chrono::steady_clock::now();
    try {
        out = prepare_out_dir(cfg);
        if (homogeneous_cmd->parsed()) {
            manifest.subcommand = "homogeneous";
            run_homogeneous(cfg, out, manifest);
        } else if (solve_cmd->parsed()) {
            manifest.subcommand = "solve-pde";
            run_solve_pde(cfg, out, manifest);
        } else if (picard_cmd->parsed()) {
            manifest.subcommand = "picard";
            run_picard(cfg, out, manifest);
        } else if (particles_cmd->parsed()) {
            manifest.subcommand = "particles";
            run_particles(cfg, out, manifest);
        } else if (meanfield_cmd->parsed()) {
            manifest.subcommand = "meanfield";
            run_meanfield(cfg, out, manifest);
        } else if (stationary_cmd->parsed()) {
            manifest.subcommand = "stationary";
            run_stationary(cfg, out, manifest);
        } else if (perturb_cmd->parsed()) {
            manifest.subcommand = "perturb";
            run_perturb(cfg, out, manifest);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        manifest.checks["numerical_failure"] = true;
        manifest.duration_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!out.empty()) io::write_manifest(out / "manifest.json", manifest);
        return 3;
    }

    manifest.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    io::write_manifest(out / "manifest.json", manifest);
    std::cout << out.string() << "\n";
    return 0;
}

}  // namespace kflk::cli
