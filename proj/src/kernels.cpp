#include "h2nc/kernels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

namespace h2nc {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

// ---------------------------------------------------------------------------
// Coulomb

CoulombOracle::CoulombOracle(ParticleSystem system)
    : system_(std::move(system)), n_(system_.points.count()) {
    if (n_ < 1) throw std::invalid_argument("empty particle system");
}

double CoulombOracle::eval_impl(Index i, Index j) const {
    if (i == j) return 0.0;
    const Point& a = system_.points.coords[static_cast<std::size_t>(i)];
    const Point& b = system_.points.coords[static_cast<std::size_t>(j)];
    const double r2 = (a - b).squaredNorm();
    if (r2 == 0) throw std::runtime_error("singular entry: coincident particles");
    return 1.0 / std::sqrt(r2);
}

Matrix CoulombOracle::eval_block_impl(const std::vector<Index>& row_ids,
                                      const std::vector<Index>& col_ids) const {
    Matrix out(static_cast<Index>(row_ids.size()), static_cast<Index>(col_ids.size()));
    const auto& pts = system_.points.coords;
    for (Index b = 0; b < out.cols(); ++b) {
        const Index j = col_ids[static_cast<std::size_t>(b)];
        const Point& q = pts[static_cast<std::size_t>(j)];
        for (Index a = 0; a < out.rows(); ++a) {
            const Index i = row_ids[static_cast<std::size_t>(a)];
            if (i == j) {
                out(a, b) = 0.0;
                continue;
            }
            const double r2 = (pts[static_cast<std::size_t>(i)] - q).squaredNorm();
            if (r2 == 0) throw std::runtime_error("singular entry: coincident particles");
            out(a, b) = 1.0 / std::sqrt(r2);
        }
    }
    return out;
}

double CoulombKernel::evaluate(const Point& x, const Point& y) const {
    const double r = (x - y).norm();
    if (r == 0) throw std::runtime_error("singular entry: coincident points");
    return 1.0 / r;
}

// ---------------------------------------------------------------------------
// Double layer

DoubleLayerOracle::DoubleLayerOracle(SurfaceMesh mesh, double epsilon)
    : mesh_(std::move(mesh)), epsilon_(epsilon), n_(mesh_.count()) {
    if (n_ < 1) throw std::invalid_argument("empty mesh");
    if (!(epsilon > 0)) throw std::invalid_argument("epsilon must be positive");
    coeff_ = (epsilon_ - 1.0) / (4.0 * kPi * (1.0 + epsilon_));
    diag_cache_.assign(static_cast<std::size_t>(n_), 0.0);
    diag_known_.assign(static_cast<std::size_t>(n_), 0);
}

double DoubleLayerOracle::off_diagonal(Index i, Index j) const {
    const Point d = mesh_.centers[static_cast<std::size_t>(i)] - mesh_.centers[static_cast<std::size_t>(j)];
    const double r2 = d.squaredNorm();
    if (r2 == 0) throw std::runtime_error("singular entry: coincident element centers");
    const double r = std::sqrt(r2);
    return coeff_ * d.dot(mesh_.normals[static_cast<std::size_t>(i)]) *
           mesh_.areas[static_cast<std::size_t>(i)] / (r2 * r);
}

double DoubleLayerOracle::diagonal(Index j) const {
    {
        std::lock_guard<std::mutex> lock(diag_mutex_);
        if (diag_known_[static_cast<std::size_t>(j)]) return diag_cache_[static_cast<std::size_t>(j)];
    }
    double colsum = 0.0;
    for (Index k = 0; k < n_; ++k)
        if (k != j) colsum += off_diagonal(k, j);
    const double value = epsilon_ / (1.0 + epsilon_) - colsum;
    std::lock_guard<std::mutex> lock(diag_mutex_);
    diag_cache_[static_cast<std::size_t>(j)] = value;
    diag_known_[static_cast<std::size_t>(j)] = 1;
    return value;
}

double DoubleLayerOracle::eval_impl(Index i, Index j) const {
    return i == j ? diagonal(j) : off_diagonal(i, j);
}

Matrix DoubleLayerOracle::eval_block_impl(const std::vector<Index>& row_ids,
                                          const std::vector<Index>& col_ids) const {
    Matrix out(static_cast<Index>(row_ids.size()), static_cast<Index>(col_ids.size()));
    for (Index b = 0; b < out.cols(); ++b) {
        const Index j = col_ids[static_cast<std::size_t>(b)];
        for (Index a = 0; a < out.rows(); ++a) {
            const Index i = row_ids[static_cast<std::size_t>(a)];
            out(a, b) = i == j ? diagonal(j) : off_diagonal(i, j);
        }
    }
    return out;
}

DoubleLayerKernel::DoubleLayerKernel(const SurfaceMesh& mesh, double epsilon)
    : centers_(mesh.centers), normals_(mesh.normals) {
    coeff_ = (epsilon - 1.0) / (4.0 * kPi * (1.0 + epsilon));
}

double DoubleLayerKernel::evaluate(const Point& x, const Point& y) const {
    const double r2 = (x - y).squaredNorm();
    if (r2 == 0) throw std::runtime_error("singular entry: coincident points");
    return coeff_ / r2;
}

double DoubleLayerKernel::evaluate_receiver(Index i, const Point& y) const {
    const Point d = centers_[static_cast<std::size_t>(i)] - y;
    const double r2 = d.squaredNorm();
    if (r2 == 0) throw std::runtime_error("singular entry: coincident points");
    const double r = std::sqrt(r2);
    return coeff_ * d.dot(normals_[static_cast<std::size_t>(i)]) / (r2 * r);
}

// ---------------------------------------------------------------------------
// Separable exact-rank kernel

Vector separable_features(const Point& p, int rank) {
    Vector f(rank);
    // 1, x, y, z, xy, yz, zx, x^2, y^2, z^2, x^2 y, ...
    static const int pows[][3] = {
        {0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 0}, {0, 1, 1},
        {1, 0, 1}, {2, 0, 0}, {0, 2, 0}, {0, 0, 2}, {2, 1, 0}, {0, 2, 1},
        {1, 0, 2}, {1, 1, 1}, {2, 2, 0}, {0, 2, 2},
    };
    constexpr int kMax = static_cast<int>(sizeof(pows) / sizeof(pows[0]));
    if (rank > kMax) throw std::invalid_argument("separable rank too large");
    for (int k = 0; k < rank; ++k)
        f(k) = std::pow(p.x(), pows[k][0]) * std::pow(p.y(), pows[k][1]) * std::pow(p.z(), pows[k][2]);
    return f;
}

namespace {

Matrix feature_matrix(const PointSet& pts, int rank) {
    Matrix f(pts.count(), rank);
    for (Index i = 0; i < pts.count(); ++i)
        f.row(i) = separable_features(pts.coords[static_cast<std::size_t>(i)], rank).transpose();
    return f;
}

} // namespace

SeparableOracle::SeparableOracle(const PointSet& row_points, const PointSet& col_points, int rank) {
    if (rank < 1) throw std::invalid_argument("rank must be >= 1");
    row_features_ = feature_matrix(row_points, rank);
    col_features_ = feature_matrix(col_points, rank);
}

double SeparableOracle::eval_impl(Index i, Index j) const {
    return row_features_.row(i).dot(col_features_.row(j));
}

Matrix SeparableOracle::eval_block_impl(const std::vector<Index>& row_ids,
                                        const std::vector<Index>& col_ids) const {
    Matrix rf(static_cast<Index>(row_ids.size()), row_features_.cols());
    for (Index a = 0; a < rf.rows(); ++a)
        rf.row(a) = row_features_.row(row_ids[static_cast<std::size_t>(a)]);
    Matrix cf(static_cast<Index>(col_ids.size()), col_features_.cols());
    for (Index b = 0; b < cf.rows(); ++b)
        cf.row(b) = col_features_.row(col_ids[static_cast<std::size_t>(b)]);
    return rf * cf.transpose();
}

SeparableKernel::SeparableKernel(const PointSet& row_points, int rank)
    : row_points_(row_points.coords), rank_(rank) {}

double SeparableKernel::evaluate(const Point& x, const Point& y) const {
    return separable_features(x, rank_).dot(separable_features(y, rank_));
}

double SeparableKernel::evaluate_receiver(Index i, const Point& y) const {
    return evaluate(row_points_[static_cast<std::size_t>(i)], y);
}

// ---------------------------------------------------------------------------
// Generators and mesh IO

ParticleSystem random_particles(Index n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("need at least one particle");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    ParticleSystem sys;
    sys.points.coords.resize(static_cast<std::size_t>(n));
    for (auto& p : sys.points.coords) {
        p.x() = uni(rng);
        p.y() = uni(rng);
        p.z() = uni(rng);
    }
    return sys;
}

SurfaceMesh load_mesh(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open mesh file: " + path);
    SurfaceMesh mesh;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        Point c, n;
        double area;
        if (!(ls >> c.x())) continue; // blank / comment-only line
        if (!(ls >> c.y() >> c.z() >> n.x() >> n.y() >> n.z() >> area)) {
            throw std::runtime_error("malformed mesh line " + std::to_string(line_no) +
                                     " in " + path);
        }
        if (std::abs(n.norm() - 1.0) > 1e-8)
            throw std::runtime_error("non-unit normal at mesh line " + std::to_string(line_no) +
                                     " in " + path);
        if (!(area > 0))
            throw std::runtime_error("non-positive area at mesh line " + std::to_string(line_no) +
                                     " in " + path);
        mesh.centers.push_back(c);
        mesh.normals.push_back(n);
        mesh.areas.push_back(area);
    }
    if (mesh.count() == 0) throw std::runtime_error("empty mesh file: " + path);
    return mesh;
}

void save_mesh(const SurfaceMesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write mesh file: " + path);
    out.precision(17);
    out << "# cx cy cz nx ny nz area\n";
    for (Index i = 0; i < mesh.count(); ++i) {
        const auto s = static_cast<std::size_t>(i);
        const Point& c = mesh.centers[s];
        const Point& n = mesh.normals[s];
        out << c.x() << ' ' << c.y() << ' ' << c.z() << ' '
            << n.x() << ' ' << n.y() << ' ' << n.z() << ' ' << mesh.areas[s] << '\n';
    }
}

SurfaceMesh sphere_mesh(int subdivisions, double radius) {
    if (subdivisions < 0) throw std::invalid_argument("subdivisions must be >= 0");
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Point> verts = {
        {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
        {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
        {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1},
    };
    for (auto& v : verts) v.normalize();
    std::vector<std::array<int, 3>> faces = {
        {0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11},
        {1, 5, 9}, {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
        {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8}, {3, 8, 9},
        {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1},
    };

    for (int s = 0; s < subdivisions; ++s) {
        std::vector<std::array<int, 3>> next;
        next.reserve(faces.size() * 4);
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            Point m = (verts[static_cast<std::size_t>(a)] + verts[static_cast<std::size_t>(b)]).normalized();
            verts.push_back(m);
            const int id = static_cast<int>(verts.size()) - 1;
            midpoint.emplace(key, id);
            return id;
        };
        for (const auto& f : faces) {
            const int ab = mid(f[0], f[1]);
            const int bc = mid(f[1], f[2]);
            const int ca = mid(f[2], f[0]);
            next.push_back({f[0], ab, ca});
            next.push_back({f[1], bc, ab});
            next.push_back({f[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        faces = std::move(next);
    }

    SurfaceMesh mesh;
    mesh.centers.reserve(faces.size());
    for (const auto& f : faces) {
        const Point a = radius * verts[static_cast<std::size_t>(f[0])];
        const Point b = radius * verts[static_cast<std::size_t>(f[1])];
        const Point c = radius * verts[static_cast<std::size_t>(f[2])];
        const Point centroid = (a + b + c) / 3.0;
        Point cross = (b - a).cross(c - a);
        const double area = 0.5 * cross.norm();
        Point normal = cross.normalized();
        if (normal.dot(centroid) < 0) normal = -normal;
        mesh.centers.push_back(centroid);
        mesh.normals.push_back(normal);
        mesh.areas.push_back(area);
    }
    return mesh;
}

} // namespace h2nc
