#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "h2nc/geometry.hpp"
#include "h2nc/oracle.hpp"

namespace h2nc {

struct ParticleSystem {
    PointSet points;              // coordinates in [0,1]^3 for the generator
    std::vector<double> charges;  // optional
};

struct SurfaceMesh {
    std::vector<Point> centers;
    std::vector<Point> normals;  // unit outward normals
    std::vector<double> areas;   // positive

    Index count() const { return static_cast<Index>(centers.size()); }
    PointSet point_set() const { return PointSet{centers}; }
};

/// Coordinate-level kernel, used by the geometric (proxy-grid) baseline where
/// candidate points are not matrix indices.
class KernelFunction {
public:
    virtual ~KernelFunction() = default;
    virtual double evaluate(const Point& x, const Point& y) const = 0;
    /// Row i of the discretized matrix evaluated against an arbitrary source
    /// point (receiver-side data such as normals applied, unit area).
    virtual double evaluate_receiver(Index i, const Point& y) const = 0;
};

/// A_ij = 1/|X_i - X_j| off the diagonal, 0 on it.
class CoulombOracle : public MatrixOracle {
public:
    explicit CoulombOracle(ParticleSystem system);

    Index rows() const override { return n_; }
    Index cols() const override { return n_; }
    const ParticleSystem& system() const { return system_; }

protected:
    double eval_impl(Index i, Index j) const override;
    Matrix eval_block_impl(const std::vector<Index>& row_ids,
                           const std::vector<Index>& col_ids) const override;

private:
    ParticleSystem system_;
    Index n_;
};

class CoulombKernel : public KernelFunction {
public:
    explicit CoulombKernel(const ParticleSystem& system) : points_(system.points.coords) {}
    double evaluate(const Point& x, const Point& y) const override;
    double evaluate_receiver(Index i, const Point& y) const override {
        return evaluate(points_[static_cast<std::size_t>(i)], y);
    }

private:
    std::vector<Point> points_;
};

/// Double-layer solvation matrix: off-diagonal entries
///   A_ij = (eps-1)/(4 pi (1+eps)) * ((r_i - r_j) . n_i) S_i / |r_i - r_j|^3,
/// diagonal A_jj = eps/(1+eps) - sum_{k != j} A_kj (cached lazily per column).
class DoubleLayerOracle : public MatrixOracle {
public:
    DoubleLayerOracle(SurfaceMesh mesh, double epsilon);

    Index rows() const override { return n_; }
    Index cols() const override { return n_; }
    const SurfaceMesh& mesh() const { return mesh_; }
    double epsilon() const { return epsilon_; }

protected:
    double eval_impl(Index i, Index j) const override;
    Matrix eval_block_impl(const std::vector<Index>& row_ids,
                           const std::vector<Index>& col_ids) const override;

private:
    double off_diagonal(Index i, Index j) const;
    double diagonal(Index j) const;

    SurfaceMesh mesh_;
    double epsilon_;
    double coeff_;
    Index n_;
    mutable std::mutex diag_mutex_;
    mutable std::vector<double> diag_cache_;
    mutable std::vector<char> diag_known_;
};

/// Proxy-kernel counterpart of the double-layer matrix: receiver rows use the
/// element normal with unit area; pure proxy points fall back to the radial
/// direction, giving coeff/|x-y|^2.
class DoubleLayerKernel : public KernelFunction {
public:
    DoubleLayerKernel(const SurfaceMesh& mesh, double epsilon);
    double evaluate(const Point& x, const Point& y) const override;
    double evaluate_receiver(Index i, const Point& y) const override;

private:
    std::vector<Point> centers_;
    std::vector<Point> normals_;
    double coeff_;
};

/// Exact rank-r kernel A_ij = sum_k g_k(x_i) h_k(y_j) with fixed smooth
/// monomial features; every submatrix has rank <= r.
class SeparableOracle : public MatrixOracle {
public:
    SeparableOracle(const PointSet& row_points, const PointSet& col_points, int rank);

    Index rows() const override { return row_features_.rows(); }
    Index cols() const override { return col_features_.rows(); }
    int rank() const { return static_cast<int>(row_features_.cols()); }

protected:
    double eval_impl(Index i, Index j) const override;
    Matrix eval_block_impl(const std::vector<Index>& row_ids,
                           const std::vector<Index>& col_ids) const override;

private:
    Matrix row_features_; // n x r
    Matrix col_features_; // m x r
};

class SeparableKernel : public KernelFunction {
public:
    SeparableKernel(const PointSet& row_points, int rank);
    double evaluate(const Point& x, const Point& y) const override;
    double evaluate_receiver(Index i, const Point& y) const override;

private:
    std::vector<Point> row_points_;
    int rank_;
};

/// Monomial feature vector used by the separable kernel (feature 0 is 1).
Vector separable_features(const Point& p, int rank);

/// n i.i.d. uniform points in [0,1]^3, deterministic given seed.
ParticleSystem random_particles(Index n, std::uint64_t seed);

/// Parses the text mesh format: one element per line,
/// "cx cy cz nx ny nz area", '#' starts a comment.
SurfaceMesh load_mesh(const std::string& path);

void save_mesh(const SurfaceMesh& mesh, const std::string& path);

/// Recursively subdivided icosahedron; 20 * 4^subdivisions flat triangles with
/// centroid/outward-normal/area per element.
SurfaceMesh sphere_mesh(int subdivisions, double radius = 1.0);

} // namespace h2nc
