#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <set>
#include <vector>

#include "h2nc/baselines.hpp"
#include "h2nc/kernels.hpp"

using namespace h2nc;

namespace {

ClusterNode node_with_box(const Point& lo, const Point& hi) {
    ClusterNode n;
    n.id = 0;
    n.bbox.lo = lo;
    n.bbox.hi = hi;
    return n;
}

bool contains_close(const std::vector<Point>& pts, const Point& q) {
    return std::any_of(pts.begin(), pts.end(),
                       [&](const Point& p) { return (p - q).norm() <= 1e-12; });
}

} // namespace

TEST_CASE("one proxy point per axis is the box center") {
    const ProxyGrid g = chebyshev_proxies(node_with_box({0, 2, 4}, {1, 3, 5}), 1);
    REQUIRE(g.points.size() == 1);
    CHECK((g.points[0] - Point(0.5, 2.5, 4.5)).norm() <= 1e-14);
}

TEST_CASE("two points per axis on the symmetric cube") {
    const ProxyGrid g = chebyshev_proxies(node_with_box({-1, -1, -1}, {1, 1, 1}), 2);
    REQUIRE(g.points.size() == 8);
    const double c = 1.0 / std::sqrt(2.0);
    for (double sx : {-c, c})
        for (double sy : {-c, c})
            for (double sz : {-c, c}) CHECK(contains_close(g.points, Point(sx, sy, sz)));
}

TEST_CASE("three points per axis use the half-root-three nodes") {
    const ProxyGrid g = chebyshev_proxies(node_with_box({-1, -1, -1}, {1, 1, 1}), 3);
    REQUIRE(g.points.size() == 27);
    std::set<double> xs;
    for (const Point& p : g.points) xs.insert(std::round(p.x() * 1e12) / 1e12);
    REQUIRE(xs.size() == 3);
    const double h = std::sqrt(3.0) / 2.0;
    auto it = xs.begin();
    CHECK(*it++ == doctest::Approx(-h));
    CHECK(*it++ == doctest::Approx(0.0));
    CHECK(*it == doctest::Approx(h));
}

TEST_CASE("proxies stay inside the box; degenerate axes collapse to midpoints") {
    const ClusterNode box = node_with_box({0.2, -1, 3}, {0.9, 2, 3});
    for (int m : {1, 2, 3, 4, 5}) {
        const ProxyGrid g = chebyshev_proxies(box, m);
        // z axis is flat: the tensor grid has m^2 distinct points
        CHECK(g.points.size() == static_cast<std::size_t>(m) * static_cast<std::size_t>(m));
        for (const Point& p : g.points) {
            for (int d = 0; d < 3; ++d) {
                CHECK(p[d] >= box.bbox.lo[d] - 1e-14);
                CHECK(p[d] <= box.bbox.hi[d] + 1e-14);
            }
            CHECK(p.z() == 3.0);
        }
    }
    const ProxyGrid cube = chebyshev_proxies(node_with_box({0, 0, 0}, {1, 1, 1}), 4);
    CHECK(cube.points.size() == 64);
}

TEST_CASE("geometric baseline produces a valid compressed matrix") {
    const ParticleSystem sys = random_particles(800, 19);
    const auto oracle = std::make_shared<CoulombOracle>(sys);
    const CoulombKernel kernel(sys);
    const auto tree = std::make_shared<const ClusterTree>(build_cluster_tree(sys.points, 25));
    const BlockPartition partition = build_partition(*tree, *tree, 0.0);

    const H2Matrix h2 = acageo_build(oracle, kernel, tree, tree, partition, 1e-4, 3);
    CHECK(h2.stats.iterations == 0);
    CHECK(h2.interaction.size() == partition.far.size());
    CHECK(h2.close.size() == partition.close.size());

    // container invariants: nestedness and identity rows of transfer matrices
    for (const auto* bases : {&h2.row_bases, &h2.col_bases}) {
        for (const ClusterNode& n : tree->nodes) {
            const NodeBasis& basis = (*bases)[static_cast<std::size_t>(n.id)];
            std::vector<Index> stacked;
            if (n.is_leaf()) {
                stacked = tree->node_indices(n.id);
            } else {
                for (int k = 0; k < 2; ++k) {
                    const auto& son = (*bases)[static_cast<std::size_t>(n.sons[k])].indices;
                    stacked.insert(stacked.end(), son.begin(), son.end());
                }
            }
            REQUIRE(basis.transfer.rows() == static_cast<Index>(stacked.size()));
            for (std::size_t c = 0; c < basis.indices.size(); ++c) {
                const auto pos = std::find(stacked.begin(), stacked.end(), basis.indices[c]);
                REQUIRE(pos != stacked.end());
                const Index row = static_cast<Index>(pos - stacked.begin());
                Vector e = Vector::Zero(basis.transfer.cols());
                e[static_cast<Index>(c)] = 1.0;
                CHECK((basis.transfer.row(row).transpose() - e).cwiseAbs().maxCoeff() <= 1e-12);
            }
        }
    }

    // accuracy is method-typical, not tight: proxies only steer selection
    const double err = far_field_error(h2, *oracle, 30, 0);
    CHECK(err < 5e-2);

    // deterministic
    const H2Matrix again = acageo_build(oracle, kernel, tree, tree, partition, 1e-4, 3);
    for (std::size_t k = 0; k < h2.interaction.size(); ++k)
        CHECK(h2.interaction[k] == again.interaction[k]);

    // more proxy points do not make the far field worse by much
    const H2Matrix finer = acageo_build(oracle, kernel, tree, tree, partition, 1e-4, 4);
    CHECK(far_field_error(finer, *oracle, 30, 0) <= err * 3.0);
}
