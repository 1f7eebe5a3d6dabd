#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "h2nc/densecore.hpp"
#include "h2nc/h2matrix.hpp"
#include "h2nc/kernels.hpp"
#include "h2nc/runner.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNumerical = 2;

struct CommonFlags {
    std::string config_path;
    std::vector<std::pair<std::string, std::string>> overrides;
};

void add_override_flags(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "flat key=value config file");
    auto opt = [&flags, cmd](const std::string& flag, const std::string& key,
                             const std::string& help) {
        cmd->add_option_function<std::string>(
            flag, [&flags, key](const std::string& v) { flags.overrides.emplace_back(key, v); },
            help);
    };
    opt("--problem", "problem", "nbody | solvation | separable");
    opt("--n", "n", "point count for generated problems");
    opt("--mesh", "mesh", "surface mesh path (solvation)");
    opt("--rank", "rank", "separable kernel rank");
    opt("--tau", "tau", "relative accuracy target in (0,1)");
    opt("--block-size", "block_size", "cluster tree leaf size");
    opt("--eta", "eta", "admissibility parameter");
    opt("--iters", "iterations", "representor-set refinement iterations");
    opt("--method", "method", "mcbh | acageo");
    opt("--acageo-m", "acageo_m", "proxy points per axis (acageo)");
    opt("--seed", "seed", "random seed");
    opt("--epsilon", "epsilon", "solvent permittivity (solvation)");
    opt("--power-iters", "power_iters", "power-iteration steps per norm estimate");
    opt("--out", "out", "report base path (.txt/.csv/.iters.csv)");
    opt("--save-h2", "save_h2", "write the compressed matrix to this file");
}

h2nc::RunConfig resolve_config(const CommonFlags& flags) {
    h2nc::RunConfig config =
        flags.config_path.empty() ? h2nc::RunConfig{} : h2nc::load_config(flags.config_path);
    for (const auto& [key, value] : flags.overrides)
        h2nc::apply_config_entry(config, key, value);
    return config;
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stod(item));
    }
    return out;
}

int run_command(const CommonFlags& flags) {
    const h2nc::RunReport report = h2nc::run(resolve_config(flags));
    std::cout << h2nc::report_text(report);
    return kExitOk;
}

int sweep_command(const CommonFlags& flags, const std::string& tau_list,
                  const std::string& n_list, const std::string& csv_path) {
    const h2nc::RunConfig base = resolve_config(flags);
    std::vector<h2nc::RunConfig> configs;
    if (!tau_list.empty()) {
        for (double tau : parse_list(tau_list)) {
            h2nc::RunConfig c = base;
            c.tau = tau;
            c.output_path.clear();
            configs.push_back(std::move(c));
        }
    } else if (!n_list.empty()) {
        for (double n : parse_list(n_list)) {
            h2nc::RunConfig c = base;
            c.n = static_cast<h2nc::Index>(n);
            c.output_path.clear();
            configs.push_back(std::move(c));
        }
    } else {
        configs.push_back(base);
    }
    const auto reports = h2nc::sweep(configs, csv_path);
    std::cout << h2nc::report_csv_header() << '\n';
    for (const auto& report : reports) std::cout << h2nc::report_csv_row(report) << '\n';
    return reports.size() == configs.size() ? kExitOk : kExitNumerical;
}

int sphere_command(int subdivisions, double radius, const std::string& out_path) {
    const h2nc::SurfaceMesh mesh = h2nc::sphere_mesh(subdivisions, radius);
    h2nc::save_mesh(mesh, out_path);
    std::cout << "wrote " << mesh.count() << " elements to " << out_path << '\n';
    return kExitOk;
}

int apply_command(const std::string& h2_path, const std::string& in_path,
                  const std::string& out_path, std::uint64_t seed) {
    const h2nc::H2Matrix h2 = h2nc::H2Matrix::load(h2_path);
    h2nc::Vector x(h2.cols());
    if (in_path.empty()) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> gauss;
        for (h2nc::Index i = 0; i < x.size(); ++i) x[i] = gauss(rng);
    } else {
        std::ifstream in(in_path);
        if (!in) throw h2nc::ConfigError("cannot open input vector: " + in_path);
        for (h2nc::Index i = 0; i < x.size(); ++i)
            if (!(in >> x[i]))
                throw h2nc::ConfigError("input vector too short: " + in_path);
    }
    const h2nc::Vector y = h2.matvec(x);
    std::ofstream out(out_path);
    if (!out) throw h2nc::ConfigError("cannot write " + out_path);
    out.precision(17);
    for (h2nc::Index i = 0; i < y.size(); ++i) out << y[i] << '\n';
    std::cout << "wrote " << y.size() << " values to " << out_path << '\n';
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"H2-matrix compression of kernel matrices from entries"};
    app.require_subcommand(1);

    // reserved for future parallel builds; the sequential reference ignores it
    (void)std::getenv("H2NC_THREADS");

    CommonFlags run_flags;
    CLI::App* run_cmd = app.add_subcommand("run", "build one problem and report");
    add_override_flags(run_cmd, run_flags);

    CommonFlags sweep_flags;
    std::string tau_list, n_list, sweep_csv = "sweep.csv";
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "run a parameter sweep, aggregate CSV");
    add_override_flags(sweep_cmd, sweep_flags);
    sweep_cmd->add_option("--tau-list", tau_list, "comma-separated tau values");
    sweep_cmd->add_option("--n-list", n_list, "comma-separated point counts");
    sweep_cmd->add_option("--csv", sweep_csv, "aggregate CSV output path");

    int sphere_subdivisions = 3;
    double sphere_radius = 1.0;
    std::string sphere_out = "sphere.txt";
    CLI::App* sphere_cmd = app.add_subcommand("sphere", "generate a sphere surface mesh");
    sphere_cmd->add_option("--subdivisions", sphere_subdivisions, "icosahedron subdivisions");
    sphere_cmd->add_option("--radius", sphere_radius, "sphere radius");
    sphere_cmd->add_option("--out", sphere_out, "mesh output path");

    std::string apply_h2, apply_in, apply_out = "y.txt";
    std::uint64_t apply_seed = 0;
    CLI::App* apply_cmd = app.add_subcommand("apply", "apply a saved matrix to a vector");
    apply_cmd->add_option("--h2", apply_h2, "serialized matrix file")->required();
    apply_cmd->add_option("--in", apply_in, "input vector file (one value per line)");
    apply_cmd->add_option("--out", apply_out, "output vector path");
    apply_cmd->add_option("--seed", apply_seed, "seed for the generated input vector");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (run_cmd->parsed()) return run_command(run_flags);
        if (sweep_cmd->parsed()) return sweep_command(sweep_flags, tau_list, n_list, sweep_csv);
        if (sphere_cmd->parsed()) return sphere_command(sphere_subdivisions, sphere_radius, sphere_out);
        return apply_command(apply_h2, apply_in, apply_out, apply_seed);
    } catch (const h2nc::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }
}
