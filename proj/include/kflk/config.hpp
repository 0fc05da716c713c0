#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kflk/model.hpp"

namespace kflk::cli {

// One validation failure: field path (section.key) plus the violated rule.
struct ConfigIssue {
    std::string field;
    std::string message;
};

// Flat run configuration shared by all subcommands. Defaults reproduce the
// paper-scale desk experiments.
struct RunConfig {
    // [model]
    double sigma = 0.25;
    std::string herding = "rational_beta";
    double beta = 1.0;
    std::string kernel = "von_mises";
    double kappa = 4.0;
    double lambda = 0.1;
    int cosine_k = 1;

    // [grid]
    int n_x = 64;
    int n_v = 256;
    double v_min = 0.0;  // both zero: use the truncation rule
    double v_max = 0.0;

    // [run]
    double dt = 5e-3;
    double t_final = 20.0;
    std::uint64_t seed = 12345;
    int n_particles = 2000;
    int record_stride = 10;
    int threads = 0;  // 0: KFLK_THREADS env var, else 1
    std::string out_dir;

    // [experiment]
    double m1 = 0.5;
    double c2 = 0.0;  // initial velocity variance; 0: sigma
    int iters = 6;
    int seeds = 20;
    std::vector<int> n_list{500, 2000, 8000};
    std::vector<double> lambdas{0.0, 0.05, 0.1, 0.2};
    double x_bump = 0.0;
    int x_bump_k = 1;
    int snapshot_stride = 0;
    std::string force_path = "fourier";
    int n_modes = 0;

    model::ModelParams make_params() const;  // throws ConfigError on bad values
    double initial_variance() const { return c2 > 0.0 ? c2 : sigma; }
};

// Parse an INI-style config file into cfg. Returns parse/unknown-key issues;
// throws ConfigError only if the file cannot be read.
std::vector<ConfigIssue> load_config_file(const std::string& path, RunConfig& cfg);

// Check every documented precondition; empty result means valid.
std::vector<ConfigIssue> validate(const RunConfig& cfg);

}  // namespace kflk::cli
