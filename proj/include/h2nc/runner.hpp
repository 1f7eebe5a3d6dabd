#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "h2nc/dense.hpp"

namespace h2nc {

/// Invalid or inconsistent run configuration; message names the field.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string problem = "nbody"; // nbody | solvation | separable
    Index n = 1000;                // point count for generated problems
    std::string mesh_path;         // solvation input mesh
    int rank = 5;                  // separable kernel rank
    double tau = 1e-4;
    int block_size = 50;
    double eta = 0.0;
    int iterations = 1;
    std::string method = "mcbh"; // mcbh | acageo
    int acageo_m = 3;            // proxy points per axis
    std::uint64_t seed = 0;
    double epsilon = 78.5;     // solvent permittivity
    int error_power_iters = 30; // power-iteration steps per norm estimate
    std::string output_path;   // report base path; empty writes stdout only
    std::string save_h2_path;  // optional serialized matrix output
};

struct IterationRecord {
    int iteration = 0;
    double error = 0;
    double time_s = 0;
    std::uint64_t far_bytes = 0;
    std::uint64_t close_bytes = 0;
    std::uint64_t oracle_entries = 0;
};

struct RunReport {
    RunConfig config;
    Index n_rows = 0;
    Index n_cols = 0;
    double build_time_s = 0;
    std::uint64_t far_memory_bytes = 0;
    std::uint64_t close_memory_bytes = 0;
    std::uint64_t oracle_entries = 0;
    double far_field_error = 0;
    double compress_ratio = 0; // (far + close bytes) / (n_rows * n_cols * 8)
    std::vector<IterationRecord> trace;
};

/// Flat key=value file, '#' starts a comment. Unknown keys are errors.
RunConfig load_config(const std::string& path);

/// Applies one key=value pair (same keys as the config file).
void apply_config_entry(RunConfig& config, const std::string& key, const std::string& value);

/// Throws ConfigError naming the offending field.
void validate_config(const RunConfig& config);

/// Builds the configured problem, compresses it, estimates the far-field
/// error per iteration, and writes <output>.txt, <output>.csv and
/// <output>.iters.csv when an output path is set. Deterministic given seed.
RunReport run(const RunConfig& config);

/// Sequential runs; per-run failures are recorded in the aggregate CSV
/// (status column) and the sweep continues. Returns successful reports.
std::vector<RunReport> sweep(const std::vector<RunConfig>& configs,
                             const std::string& csv_path);

std::string report_text(const RunReport& report);
std::string report_csv_header();
std::string report_csv_row(const RunReport& report);

} // namespace h2nc
