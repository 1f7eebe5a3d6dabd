#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "h2nc/densecore.hpp"
#include "h2nc/kernels.hpp"

using namespace h2nc;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name, const std::string& content)
        : path("/tmp/h2nc_test_" + name) {
        std::ofstream out(path);
        out << content;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

std::vector<Index> iota(Index n) {
    std::vector<Index> v(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = i;
    return v;
}

} // namespace

TEST_CASE("Coulomb entries") {
    ParticleSystem sys;
    sys.points.coords = {Point(0, 0, 0), Point(1, 0, 0), Point(0, 3, 4)};
    const CoulombOracle oracle(sys);
    CHECK(oracle.eval(0, 1) == doctest::Approx(1.0));
    CHECK(oracle.eval(0, 0) == 0.0);
    CHECK(oracle.eval(1, 1) == 0.0);
    CHECK(oracle.eval(0, 2) == doctest::Approx(0.2));
    CHECK(oracle.eval(1, 2) == oracle.eval(2, 1)); // symmetric kernel

    ParticleSystem dup;
    dup.points.coords = {Point(0, 0, 0), Point(0, 0, 0)};
    const CoulombOracle bad(dup);
    CHECK_THROWS_WITH_AS(bad.eval(0, 1), doctest::Contains("singular entry"),
                         std::runtime_error);
}

TEST_CASE("double layer off-diagonal entry and orthogonality") {
    SurfaceMesh mesh;
    mesh.centers = {Point(1, 0, 0), Point(0, 0, 0)};
    mesh.normals = {Point(1, 0, 0), Point(0, 0, 1)};
    mesh.areas = {1.0, 1.0};
    const DoubleLayerOracle oracle(mesh, 2.0);
    // (eps-1)/(4 pi (1+eps)) * ((r_0 - r_1).n_0) S_0 / |r_0 - r_1|^3 = 1/(12 pi)
    CHECK(oracle.eval(0, 1) == doctest::Approx(1.0 / (12.0 * std::numbers::pi)).epsilon(1e-12));
    // (r_1 - r_0) is orthogonal to n_1
    CHECK(oracle.eval(1, 0) == doctest::Approx(0.0));
}

TEST_CASE("double layer column sums equal eps/(1+eps)") {
    const SurfaceMesh mesh = sphere_mesh(1); // 80 elements
    const double eps = 78.5;
    const DoubleLayerOracle oracle(mesh, eps);
    const Matrix a = oracle.eval_block(iota(mesh.count()), iota(mesh.count()));
    for (Index j = 0; j < mesh.count(); ++j)
        CHECK(a.col(j).sum() == doctest::Approx(eps / (1.0 + eps)).epsilon(1e-12));
}

TEST_CASE("random particle generator") {
    CHECK_THROWS_AS(random_particles(0, 1), std::invalid_argument);

    const ParticleSystem a = random_particles(500, 77);
    const ParticleSystem b = random_particles(500, 77);
    REQUIRE(a.points.count() == 500);
    for (Index i = 0; i < 500; ++i)
        CHECK(a.points.coords[static_cast<std::size_t>(i)] ==
              b.points.coords[static_cast<std::size_t>(i)]);

    const ParticleSystem big = random_particles(10000, 5);
    Point mean = Point::Zero();
    for (const Point& p : big.points.coords) {
        for (int d = 0; d < 3; ++d) {
            CHECK(p[d] >= 0.0);
            CHECK(p[d] <= 1.0);
        }
        mean += p;
    }
    mean /= 10000.0;
    for (int d = 0; d < 3; ++d) CHECK(std::abs(mean[d] - 0.5) <= 0.02);
}

TEST_CASE("separable oracle has exact bounded rank") {
    const ParticleSystem sys = random_particles(60, 13);

    // rank 1 uses the constant feature only: the all-ones matrix
    const SeparableOracle ones(sys.points, sys.points, 1);
    const Matrix a1 = ones.eval_block(iota(20), iota(20));
    CHECK((a1 - Matrix::Ones(20, 20)).cwiseAbs().maxCoeff() == 0.0);

    for (int r : {2, 3, 5, 7}) {
        const SeparableOracle oracle(sys.points, sys.points, r);
        const Matrix block = oracle.eval_block(iota(20), iota(20));
        const Eigen::JacobiSVD<Matrix> svd(block);
        int rank = 0;
        for (Index k = 0; k < svd.singularValues().size(); ++k)
            if (svd.singularValues()[k] > 1e-10 * svd.singularValues()[0]) ++rank;
        CHECK(rank <= r);
    }
    CHECK(separable_features(Point(0.3, 0.7, 0.1), 5).size() == 5);
    CHECK(separable_features(Point(0.3, 0.7, 0.1), 5)[0] == 1.0);
}

TEST_CASE("mesh text format round trip and validation") {
    const TempFile one("mesh1.txt", "# comment\n0 0 0 0 0 1 2.5\n");
    const SurfaceMesh m1 = load_mesh(one.path);
    REQUIRE(m1.count() == 1);
    CHECK(m1.centers[0] == Point(0, 0, 0));
    CHECK(m1.normals[0] == Point(0, 0, 1));
    CHECK(m1.areas[0] == 2.5);

    const TempFile bad("mesh_bad.txt", "0 0 0 0 0 1 1\n1 2 3 4\n");
    CHECK_THROWS_WITH_AS(load_mesh(bad.path), doctest::Contains("line 2"), std::runtime_error);

    const TempFile nonunit("mesh_nonunit.txt", "0 0 0 0 0 2 1\n");
    CHECK_THROWS_WITH_AS(load_mesh(nonunit.path), doctest::Contains("non-unit"),
                         std::runtime_error);

    const TempFile badarea("mesh_badarea.txt", "0 0 0 0 0 1 -1\n");
    CHECK_THROWS_AS(load_mesh(badarea.path), std::runtime_error);

    const SurfaceMesh sphere = sphere_mesh(2, 1.5);
    const TempFile rt("mesh_rt.txt", "");
    save_mesh(sphere, rt.path);
    const SurfaceMesh back = load_mesh(rt.path);
    REQUIRE(back.count() == sphere.count());
    for (Index i = 0; i < back.count(); ++i) {
        CHECK((back.centers[static_cast<std::size_t>(i)] -
               sphere.centers[static_cast<std::size_t>(i)]).norm() <= 1e-12);
        CHECK(back.areas[static_cast<std::size_t>(i)] ==
              doctest::Approx(sphere.areas[static_cast<std::size_t>(i)]).epsilon(1e-12));
    }
}

TEST_CASE("icosphere: element count, unit normals, total area") {
    for (int sub : {0, 1, 2, 3}) {
        const SurfaceMesh mesh = sphere_mesh(sub, 2.0);
        CHECK(mesh.count() == 20 * (1 << (2 * sub)));
        double area = 0.0;
        for (Index i = 0; i < mesh.count(); ++i) {
            const auto k = static_cast<std::size_t>(i);
            CHECK(std::abs(mesh.normals[k].norm() - 1.0) <= 1e-8);
            CHECK(mesh.areas[k] > 0.0);
            // outward orientation: normal aligned with the centroid direction
            CHECK(mesh.normals[k].dot(mesh.centers[k].normalized()) > 0.9);
            area += mesh.areas[k];
        }
        const double exact = 4.0 * std::numbers::pi * 4.0;
        if (sub >= 2) CHECK(std::abs(area - exact) / exact <= 0.02);
        CHECK(area < exact); // inscribed polyhedron
    }
}

TEST_CASE("kernel functions agree with their oracles where applicable") {
    const ParticleSystem sys = random_particles(10, 3);
    const CoulombOracle oracle(sys);
    const CoulombKernel kernel(sys);
    CHECK(kernel.evaluate_receiver(2, sys.points.coords[7]) == oracle.eval(2, 7));

    const SurfaceMesh mesh = sphere_mesh(0);
    const DoubleLayerOracle dl(mesh, 2.0);
    const DoubleLayerKernel dlk(mesh, 2.0);
    // receiver-side evaluation matches the matrix entry up to the area factor
    const double entry = dl.eval(3, 11);
    const double per_area = dlk.evaluate_receiver(3, mesh.centers[11]);
    CHECK(entry == doctest::Approx(per_area * mesh.areas[3]).epsilon(1e-12));
}
