#include "kflk/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace kflk::cli {

model::ModelParams RunConfig::make_params() const {
    model::HerdingFunction h = model::HerdingFunction::rational(beta);
    model::InteractionKernel k = model::InteractionKernel::uniform();
    if (kernel == "von_mises")
        k = model::InteractionKernel::von_mises(kappa);
    else if (kernel == "cosine")
        k = model::InteractionKernel::cosine_perturbation(lambda, cosine_k);
    else if (kernel != "uniform")
        throw ConfigError("unknown kernel family: " + kernel);
    if (herding != "rational_beta")
        throw ConfigError("unknown herding family: " + herding);
    return model::ModelParams(sigma, std::move(h), std::move(k));
}

namespace {

struct Setter {
    std::function<bool(const std::string&, RunConfig&)> apply;  // false: parse error
};

bool parse_double(const std::string& s, double& out) {
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    const auto r = std::from_chars(begin, end, out);
    return r.ec == std::errc() && r.ptr == end;
}

bool parse_int(const std::string& s, int& out) {
    const char* end = s.data() + s.size();
    const auto r = std::from_chars(s.data(), end, out);
    return r.ec == std::errc() && r.ptr == end;
}

bool parse_u64(const std::string& s, std::uint64_t& out) {
    const char* end = s.data() + s.size();
    const auto r = std::from_chars(s.data(), end, out);
    return r.ec == std::errc() && r.ptr == end;
}

template <typename T, typename Parse>
std::vector<T> parse_list(const std::string& s, Parse parse, bool& ok) {
    std::vector<T> out;
    std::stringstream ss(s);
    std::string item;
    ok = true;
    while (std::getline(ss, item, ',')) {
        T value{};
        if (!parse(item, value)) {
            ok = false;
            return out;
        }
        out.push_back(value);
    }
    ok = !out.empty();
    return out;
}

std::map<std::string, Setter> make_schema() {
    std::map<std::string, Setter> schema;
    auto dbl = [&](const std::string& key, double RunConfig::* field) {
        schema[key] = Setter{[field](const std::string& s, RunConfig& c) {
            return parse_double(s, c.*field);
        }};
    };
    auto integer = [&](const std::string& key, int RunConfig::* field) {
        schema[key] = Setter{[field](const std::string& s, RunConfig& c) {
            return parse_int(s, c.*field);
        }};
    };
    auto str = [&](const std::string& key, std::string RunConfig::* field) {
        schema[key] = Setter{[field](const std::string& s, RunConfig& c) {
            c.*field = s;
            return true;
        }};
    };

    dbl("model.sigma", &RunConfig::sigma);
    str("model.herding", &RunConfig::herding);
    dbl("model.beta", &RunConfig::beta);
    str("model.kernel", &RunConfig::kernel);
    dbl("model.kappa", &RunConfig::kappa);
    dbl("model.lambda", &RunConfig::lambda);
    integer("model.cosine_k", &RunConfig::cosine_k);

    integer("grid.n_x", &RunConfig::n_x);
    integer("grid.n_v", &RunConfig::n_v);
    dbl("grid.v_min", &RunConfig::v_min);
    dbl("grid.v_max", &RunConfig::v_max);

    dbl("run.dt", &RunConfig::dt);
    dbl("run.t_final", &RunConfig::t_final);
    schema["run.seed"] = Setter{[](const std::string& s, RunConfig& c) {
        return parse_u64(s, c.seed);
    }};
    integer("run.n_particles", &RunConfig::n_particles);
    integer("run.record_stride", &RunConfig::record_stride);
    integer("run.threads", &RunConfig::threads);
    str("run.out", &RunConfig::out_dir);

    dbl("experiment.m1", &RunConfig::m1);
    dbl("experiment.c2", &RunConfig::c2);
    integer("experiment.iters", &RunConfig::iters);
    integer("experiment.seeds", &RunConfig::seeds);
    schema["experiment.n_list"] = Setter{[](const std::string& s, RunConfig& c) {
        bool ok = false;
        auto v = parse_list<int>(s, parse_int, ok);
        if (ok) c.n_list = std::move(v);
        return ok;
    }};
    schema["experiment.lambdas"] = Setter{[](const std::string& s, RunConfig& c) {
        bool ok = false;
        auto v = parse_list<double>(s, parse_double, ok);
        if (ok) c.lambdas = std::move(v);
        return ok;
    }};
    dbl("experiment.x_bump", &RunConfig::x_bump);
    integer("experiment.x_bump_k", &RunConfig::x_bump_k);
    integer("experiment.snapshot_stride", &RunConfig::snapshot_stride);
    str("experiment.force_path", &RunConfig::force_path);
    integer("experiment.n_modes", &RunConfig::n_modes);
    return schema;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<ConfigIssue> load_config_file(const std::string& path, RunConfig& cfg) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    static const auto schema = make_schema();

    std::vector<ConfigIssue> issues;
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                issues.push_back({path + ":" + std::to_string(line_no), "malformed section"});
                continue;
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            issues.push_back({path + ":" + std::to_string(line_no), "expected key = value"});
            continue;
        }
        const std::string key = section + "." + trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = schema.find(key);
        if (it == schema.end()) {
            issues.push_back({key, "unknown key"});
            continue;
        }
        if (!it->second.apply(value, cfg))
            issues.push_back({key, "cannot parse value '" + value + "'"});
    }
    return issues;
}

std::vector<ConfigIssue> validate(const RunConfig& cfg) {
    std::vector<ConfigIssue> issues;
    auto require = [&](bool ok, const std::string& field, const std::string& message) {
        if (!ok) issues.push_back({field, message});
    };

    require(cfg.sigma > 0.0 && std::isfinite(cfg.sigma), "model.sigma", "sigma must be > 0");
    require(cfg.herding == "rational_beta", "model.herding",
            "herding family must be rational_beta");
    require(cfg.beta > 0.0 && std::isfinite(cfg.beta), "model.beta", "beta must be > 0");
    const bool known_kernel =
        cfg.kernel == "uniform" || cfg.kernel == "von_mises" || cfg.kernel == "cosine";
    require(known_kernel, "model.kernel", "kernel must be uniform, von_mises or cosine");
    if (cfg.kernel == "von_mises")
        require(cfg.kappa > 0.0, "model.kappa", "kappa must be > 0");
    if (cfg.kernel == "cosine") {
        require(cfg.lambda > 0.0 && cfg.lambda < 1.0, "model.lambda",
                "lambda in (0,1) required for phi >= epsilon > 0");
        require(cfg.cosine_k >= 1, "model.cosine_k", "harmonic must be >= 1");
    }

    require(cfg.n_x >= 16 && (cfg.n_x & (cfg.n_x - 1)) == 0, "grid.n_x",
            "n_x must be a power of two >= 16");
    require(cfg.n_v >= 16, "grid.n_v", "n_v must be >= 16");
    const bool auto_grid = cfg.v_min == 0.0 && cfg.v_max == 0.0;
    if (!auto_grid)
        require(cfg.v_min < 0.0 && cfg.v_max > 0.0, "grid.v_min",
                "explicit grid needs v_min < 0 < v_max");

    require(cfg.dt > 0.0 && cfg.dt <= 0.1, "run.dt", "dt must lie in (0, 0.1]");
    require(cfg.t_final > 0.0, "run.t_final", "t_final must be > 0");
    require(cfg.n_particles >= 2, "run.n_particles", "need at least 2 particles");
    require(cfg.record_stride >= 1, "run.record_stride", "record_stride must be >= 1");
    require(cfg.threads >= 0, "run.threads", "threads must be >= 0");

    require(std::abs(cfg.x_bump) < 1.0, "experiment.x_bump", "|x_bump| must be < 1");
    require(cfg.x_bump_k >= 1, "experiment.x_bump_k", "x_bump_k must be >= 1");
    require(cfg.iters >= 2, "experiment.iters", "picard needs iters >= 2");
    require(cfg.seeds >= 1, "experiment.seeds", "seeds must be >= 1");
    require(cfg.c2 >= 0.0, "experiment.c2", "c2 must be >= 0 (0 selects sigma)");
    require(cfg.snapshot_stride >= 0, "experiment.snapshot_stride",
            "snapshot_stride must be >= 0");
    require(cfg.force_path == "direct" || cfg.force_path == "fourier",
            "experiment.force_path", "force_path must be direct or fourier");
    require(cfg.n_modes >= 0, "experiment.n_modes", "n_modes must be >= 0");
    for (int n : cfg.n_list)
        require(n >= 2, "experiment.n_list", "every N must be >= 2");
    for (double l : cfg.lambdas)
        require(l >= 0.0 && l <= 0.5, "experiment.lambdas",
                "perturbation lambdas must lie in [0, 0.5]");
    return issues;
}

}  // namespace kflk::cli
