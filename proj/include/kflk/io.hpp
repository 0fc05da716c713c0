#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "kflk/pde.hpp"

namespace kflk::io {

// CSV writer emitting shortest round-trip decimal for doubles, so outputs
// are lossless and byte-reproducible.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, std::span<const std::string> header);

    void row(std::span<const double> values);
    void raw_row(const std::string& line);
    const std::filesystem::path& path() const { return path_; }

    static std::string format(double value);

private:
    std::filesystem::path path_;
    std::ofstream out_;
    std::size_t columns_;
};

// Binary density snapshot: 32-byte header (magic "KFLK", version u32,
// n_x u32, n_v u32, v_min f64, v_max f64), then row-major little-endian f64
// cell values.
inline constexpr std::uint32_t density_format_version = 1;

void write_density(const std::filesystem::path& path, const pde::DensityField& f);
pde::DensityField read_density(const std::filesystem::path& path);

// Run manifest written atomically (temp file + rename) at the end of a run.
struct RunManifest {
    std::string subcommand;
    std::map<std::string, std::string> config;
    std::string version;
    double duration_seconds = 0.0;
    std::vector<std::string> outputs;
    std::map<std::string, bool> checks;
};

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);

}  // namespace kflk::io
