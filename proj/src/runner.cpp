#include "h2nc/runner.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "h2nc/baselines.hpp"
#include "h2nc/kernels.hpp"
#include "h2nc/mcbh.hpp"

namespace h2nc {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    std::istringstream in(value);
    T out;
    in >> out;
    if (in.fail() || !(in >> std::ws).eof())
        throw ConfigError("invalid value for " + key + ": '" + value + "'");
    return out;
}

struct Problem {
    std::shared_ptr<const MatrixOracle> oracle;
    std::unique_ptr<KernelFunction> kernel;
    PointSet points;
};

Problem make_problem(const RunConfig& config) {
    Problem p;
    if (config.problem == "nbody") {
        ParticleSystem system = random_particles(config.n, config.seed);
        p.points = system.points;
        p.kernel = std::make_unique<CoulombKernel>(system);
        p.oracle = std::make_shared<CoulombOracle>(std::move(system));
    } else if (config.problem == "solvation") {
        SurfaceMesh mesh;
        try {
            mesh = load_mesh(config.mesh_path);
        } catch (const std::exception& e) {
            throw ConfigError(std::string("mesh: ") + e.what());
        }
        p.points = mesh.point_set();
        p.kernel = std::make_unique<DoubleLayerKernel>(mesh, config.epsilon);
        p.oracle = std::make_shared<DoubleLayerOracle>(std::move(mesh), config.epsilon);
    } else { // separable, validated upstream
        const ParticleSystem system = random_particles(config.n, config.seed);
        p.points = system.points;
        p.kernel = std::make_unique<SeparableKernel>(system.points, config.rank);
        p.oracle = std::make_shared<SeparableOracle>(system.points, system.points, config.rank);
    }
    return p;
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

} // namespace

void apply_config_entry(RunConfig& config, const std::string& key, const std::string& value) {
    if (key == "problem") config.problem = value;
    else if (key == "n") config.n = parse_number<Index>(key, value);
    else if (key == "mesh") config.mesh_path = value;
    else if (key == "rank") config.rank = parse_number<int>(key, value);
    else if (key == "tau") config.tau = parse_number<double>(key, value);
    else if (key == "block_size") config.block_size = parse_number<int>(key, value);
    else if (key == "eta") config.eta = parse_number<double>(key, value);
    else if (key == "iterations") config.iterations = parse_number<int>(key, value);
    else if (key == "method") config.method = value;
    else if (key == "acageo_m") config.acageo_m = parse_number<int>(key, value);
    else if (key == "seed") config.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "epsilon") config.epsilon = parse_number<double>(key, value);
    else if (key == "power_iters") config.error_power_iters = parse_number<int>(key, value);
    else if (key == "out") config.output_path = value;
    else if (key == "save_h2") config.save_h2_path = value;
    else throw ConfigError("unknown config key: " + key);
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    RunConfig config;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key=value");
        apply_config_entry(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return config;
}

void validate_config(const RunConfig& config) {
    if (config.problem != "nbody" && config.problem != "solvation" &&
        config.problem != "separable")
        throw ConfigError("problem: must be nbody, solvation or separable");
    if (config.problem == "solvation" && config.mesh_path.empty())
        throw ConfigError("mesh: required for the solvation problem");
    if (config.problem != "solvation" && config.n < 1)
        throw ConfigError("n: must be >= 1");
    if (config.problem == "separable" && config.rank < 1)
        throw ConfigError("rank: must be >= 1");
    if (!(config.tau > 0.0 && config.tau < 1.0)) throw ConfigError("tau: must lie in (0,1)");
    if (config.block_size < 1) throw ConfigError("block_size: must be >= 1");
    if (config.eta < 0.0) throw ConfigError("eta: must be >= 0");
    if (config.iterations < 0) throw ConfigError("iterations: must be >= 0");
    if (config.method != "mcbh" && config.method != "acageo")
        throw ConfigError("method: must be mcbh or acageo");
    if (config.acageo_m < 1) throw ConfigError("acageo_m: must be >= 1");
    if (config.epsilon <= 0.0) throw ConfigError("epsilon: must be > 0");
    if (config.error_power_iters < 2) throw ConfigError("power_iters: must be >= 2");
}

RunReport run(const RunConfig& config) {
    validate_config(config);
    Problem problem = make_problem(config);

    const auto tree = std::make_shared<const ClusterTree>(
        build_cluster_tree(problem.points, config.block_size));
    const BlockPartition partition = build_partition(*tree, *tree, config.eta);

    RunReport report;
    report.config = config;
    report.n_rows = tree->count();
    report.n_cols = tree->count();

    auto record = [&](int iteration, const H2Matrix& h2, double time_s) {
        IterationRecord rec;
        rec.iteration = iteration;
        rec.time_s = time_s;
        const auto [far_b, close_b] = h2.memory_bytes();
        rec.far_bytes = far_b;
        rec.close_bytes = close_b;
        rec.oracle_entries = h2.stats.oracle_entries;
        rec.error = far_field_error(h2, *problem.oracle, config.error_power_iters, config.seed);
        report.trace.push_back(rec);
    };

    H2Matrix h2;
    if (config.method == "mcbh") {
        h2 = mcbh_build(problem.oracle, tree, tree, partition, config.tau, config.iterations,
                        record);
    } else {
        h2 = acageo_build(problem.oracle, *problem.kernel, tree, tree, partition, config.tau,
                          config.acageo_m);
        record(0, h2, h2.stats.build_time_s);
    }

    report.build_time_s = h2.stats.build_time_s;
    report.oracle_entries = h2.stats.oracle_entries;
    const auto [far_b, close_b] = h2.memory_bytes();
    report.far_memory_bytes = far_b;
    report.close_memory_bytes = close_b;
    report.far_field_error = report.trace.back().error;
    report.compress_ratio = static_cast<double>(far_b + close_b) /
                            (static_cast<double>(report.n_rows) *
                             static_cast<double>(report.n_cols) * 8.0);

    if (!config.save_h2_path.empty()) h2.save(config.save_h2_path);

    if (!config.output_path.empty()) {
        write_file(config.output_path + ".txt", report_text(report));
        write_file(config.output_path + ".csv",
                   report_csv_header() + "\n" + report_csv_row(report) + "\n");
        std::ostringstream iters;
        iters << "iteration,error,time_s,far_bytes,close_bytes,oracle_entries\n";
        for (const IterationRecord& rec : report.trace)
            iters << rec.iteration << ',' << rec.error << ',' << rec.time_s << ','
                  << rec.far_bytes << ',' << rec.close_bytes << ',' << rec.oracle_entries
                  << '\n';
        write_file(config.output_path + ".iters.csv", iters.str());
    }
    return report;
}

std::vector<RunReport> sweep(const std::vector<RunConfig>& configs, const std::string& csv_path) {
    std::vector<RunReport> reports;
    std::ostringstream csv;
    csv << report_csv_header() << ",status\n";
    for (const RunConfig& config : configs) {
        try {
            RunReport report = run(config);
            csv << report_csv_row(report) << ",ok\n";
            reports.push_back(std::move(report));
        } catch (const std::exception& e) {
            RunReport failed;
            failed.config = config;
            csv << report_csv_row(failed) << ',' << csv_escape(std::string("error: ") + e.what())
                << '\n';
            std::cerr << "sweep: run failed: " << e.what() << '\n';
        }
    }
    if (!csv_path.empty()) write_file(csv_path, csv.str());
    return reports;
}

std::string report_text(const RunReport& r) {
    std::ostringstream out;
    out.precision(6);
    out << "problem            " << r.config.problem << '\n'
        << "method             " << r.config.method << '\n'
        << "n                  " << r.n_rows << '\n'
        << "tau                " << r.config.tau << '\n'
        << "block_size         " << r.config.block_size << '\n'
        << "eta                " << r.config.eta << '\n'
        << "iterations         " << r.config.iterations << '\n'
        << "seed               " << r.config.seed << '\n'
        << "build_time_s       " << r.build_time_s << '\n'
        << "far_memory_bytes   " << r.far_memory_bytes << '\n'
        << "close_memory_bytes " << r.close_memory_bytes << '\n'
        << "oracle_entries     " << r.oracle_entries << '\n'
        << "far_field_error    " << r.far_field_error << '\n'
        << "compress_ratio     " << r.compress_ratio << '\n';
    out << "iteration_trace    ";
    for (const IterationRecord& rec : r.trace)
        out << '(' << rec.iteration << ": " << rec.error << ") ";
    out << '\n';
    return out.str();
}

std::string report_csv_header() {
    return "problem,method,n,tau,block_size,eta,iterations,acageo_m,seed,epsilon,"
           "build_time_s,far_memory_bytes,close_memory_bytes,oracle_entries,"
           "far_field_error,compress_ratio";
}

std::string report_csv_row(const RunReport& r) {
    std::ostringstream out;
    out.precision(12);
    out << r.config.problem << ',' << r.config.method << ',' << r.n_rows << ',' << r.config.tau
        << ',' << r.config.block_size << ',' << r.config.eta << ',' << r.config.iterations << ','
        << r.config.acageo_m << ',' << r.config.seed << ',' << r.config.epsilon << ','
        << r.build_time_s << ',' << r.far_memory_bytes << ',' << r.close_memory_bytes << ','
        << r.oracle_entries << ',' << r.far_field_error << ',' << r.compress_ratio;
    return out.str();
}

} // namespace h2nc
