#include "kflk/io.hpp"

#include <charconv>
#include <cstring>

#include <nlohmann/json.hpp>

#include "kflk/errors.hpp"

namespace kflk::io {

CsvWriter::CsvWriter(const std::filesystem::path& path, std::span<const std::string> header)
    : path_(path), columns_(header.size()) {
    out_.open(path, std::ios::binary);
    if (!out_) throw NumericalError("cannot open output file " + path.string());
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out_ << ',';
        out_ << header[i];
    }
    out_ << '\n';
}

std::string CsvWriter::format(double value) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, r.ptr);
}

void CsvWriter::row(std::span<const double> values) {
    if (values.size() != columns_)
        throw NumericalError("csv row width does not match header");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out_ << ',';
        out_ << format(values[i]);
    }
    out_ << '\n';
}

void CsvWriter::raw_row(const std::string& line) { out_ << line << '\n'; }

void write_density(const std::filesystem::path& path, const pde::DensityField& f) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw NumericalError("cannot open snapshot file " + path.string());
    const char magic[4] = {'K', 'F', 'L', 'K'};
    const std::uint32_t version = density_format_version;
    const std::uint32_t n_x = static_cast<std::uint32_t>(f.grid().n_x());
    const std::uint32_t n_v = static_cast<std::uint32_t>(f.grid().vgrid().size());
    const double v_min = f.grid().vgrid().v_min();
    const double v_max = f.grid().vgrid().v_max();
    out.write(magic, 4);
    out.write(reinterpret_cast<const char*>(&version), 4);
    out.write(reinterpret_cast<const char*>(&n_x), 4);
    out.write(reinterpret_cast<const char*>(&n_v), 4);
    out.write(reinterpret_cast<const char*>(&v_min), 8);
    out.write(reinterpret_cast<const char*>(&v_max), 8);
    out.write(reinterpret_cast<const char*>(f.values().data()),
              static_cast<std::streamsize>(f.values().size() * sizeof(double)));
    if (!out) throw NumericalError("snapshot write failed: " + path.string());
}

pde::DensityField read_density(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NumericalError("cannot open snapshot file " + path.string());
    char magic[4];
    std::uint32_t version = 0, n_x = 0, n_v = 0;
    double v_min = 0, v_max = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&version), 4);
    in.read(reinterpret_cast<char*>(&n_x), 4);
    in.read(reinterpret_cast<char*>(&n_v), 4);
    in.read(reinterpret_cast<char*>(&v_min), 8);
    in.read(reinterpret_cast<char*>(&v_max), 8);
    if (!in || std::memcmp(magic, "KFLK", 4) != 0)
        throw NumericalError("bad snapshot header in " + path.string());
    if (version != density_format_version)
        throw NumericalError("unsupported snapshot version in " + path.string());
    pde::PhaseGrid grid(static_cast<int>(n_x),
                        homogeneous::VGrid(v_min, v_max, static_cast<int>(n_v)));
    std::vector<double> values(grid.cells());
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!in) throw NumericalError("snapshot truncated: " + path.string());
    return pde::DensityField(grid, std::move(values));
}

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest) {
    nlohmann::json j;
    j["subcommand"] = manifest.subcommand;
    j["config"] = manifest.config;
    j["version"] = manifest.version;
    j["duration_seconds"] = manifest.duration_seconds;
    j["outputs"] = manifest.outputs;
    j["checks"] = manifest.checks;

    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw NumericalError("cannot open manifest file " + tmp);
        out << j.dump(2) << '\n';
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace kflk::io
