#include "h2nc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace h2nc {

double box_distance(const BoundingBox& a, const BoundingBox& b) {
    Point gap;
    for (int k = 0; k < 3; ++k)
        gap[k] = std::max({0.0, b.lo[k] - a.hi[k], a.lo[k] - b.hi[k]});
    return gap.norm();
}

double node_diameter(const ClusterNode& node) { return node.bbox.diameter(); }

double node_distance(const ClusterNode& a, const ClusterNode& b) {
    return box_distance(a.bbox, b.bbox);
}

std::vector<Index> ClusterTree::node_indices(int node) const {
    const ClusterNode& n = nodes[static_cast<std::size_t>(node)];
    return std::vector<Index>(perm.begin() + n.begin, perm.begin() + n.end);
}

namespace {

BoundingBox bbox_of(const ClusterTree& tree, Index begin, Index end) {
    BoundingBox box;
    box.lo = tree.point_at(begin);
    box.hi = box.lo;
    for (Index i = begin + 1; i < end; ++i) {
        const Point& p = tree.point_at(i);
        box.lo = box.lo.cwiseMin(p);
        box.hi = box.hi.cwiseMax(p);
    }
    return box;
}

// Splits [begin, end) of the permutation in place. Returns the split point.
Index inertial_split(ClusterTree& tree, Index begin, Index end, bool& degenerate) {
    const Index n = end - begin;
    Point centroid = Point::Zero();
    for (Index i = begin; i < end; ++i)
        centroid += tree.point_at(i);
    centroid /= static_cast<double>(n);

    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (Index i = begin; i < end; ++i) {
        Point d = tree.point_at(i) - centroid;
        cov += d * d.transpose();
    }
    cov /= static_cast<double>(n);

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    const double lam = eig.eigenvalues()(2);
    if (!(lam > 1e-30)) {
        // all points geometrically indistinguishable: split by current order
        degenerate = true;
        return begin + n / 2;
    }
    const Point axis = eig.eigenvectors().col(2);

    std::vector<Index> range(tree.perm.begin() + begin, tree.perm.begin() + end);
    const auto& pts = tree.points.coords;
    std::sort(range.begin(), range.end(), [&](Index a, Index b) {
        const double pa = axis.dot(pts[static_cast<std::size_t>(a)]);
        const double pb = axis.dot(pts[static_cast<std::size_t>(b)]);
        if (pa != pb) return pa < pb;
        return a < b;
    });
    std::copy(range.begin(), range.end(), tree.perm.begin() + begin);
    return begin + n / 2;
}

void build_node(ClusterTree& tree, int node_id, int block_size) {
    // fields other than bbox/sons are set by the caller
    ClusterNode& node = tree.nodes[static_cast<std::size_t>(node_id)];
    node.bbox = bbox_of(tree, node.begin, node.end);
    if (node.size() <= block_size) return;

    bool degenerate = false;
    const Index mid = inertial_split(tree, node.begin, node.end, degenerate);
    tree.nodes[static_cast<std::size_t>(node_id)].degenerate_split = degenerate;

    const Index ranges[2][2] = {{node.begin, mid}, {mid, node.end}};
    for (int k = 0; k < 2; ++k) {
        const int son_id = static_cast<int>(tree.nodes.size());
        ClusterNode son;
        son.id = son_id;
        son.parent = node_id;
        son.level = tree.nodes[static_cast<std::size_t>(node_id)].level + 1;
        son.begin = ranges[k][0];
        son.end = ranges[k][1];
        tree.nodes.push_back(son);
        tree.nodes[static_cast<std::size_t>(node_id)].sons[k] = son_id;
        build_node(tree, son_id, block_size);
    }
}

} // namespace

ClusterTree build_cluster_tree(const PointSet& points, int block_size) {
    if (points.count() == 0) throw std::invalid_argument("empty input");
    if (block_size < 1) throw std::invalid_argument("block_size must be >= 1");
    for (const Point& p : points.coords)
        if (!p.allFinite()) throw std::invalid_argument("non-finite coordinate");

    ClusterTree tree;
    tree.points = points;
    tree.perm.resize(static_cast<std::size_t>(points.count()));
    std::iota(tree.perm.begin(), tree.perm.end(), Index{0});

    ClusterNode root;
    root.id = 0;
    root.level = 1;
    root.begin = 0;
    root.end = points.count();
    tree.nodes.push_back(root);
    build_node(tree, 0, block_size);

    tree.inv_perm.resize(tree.perm.size());
    for (std::size_t i = 0; i < tree.perm.size(); ++i)
        tree.inv_perm[static_cast<std::size_t>(tree.perm[i])] = static_cast<Index>(i);

    for (const ClusterNode& n : tree.nodes)
        tree.level_count = std::max(tree.level_count, n.level);
    tree.levels.resize(static_cast<std::size_t>(tree.level_count));
    for (const ClusterNode& n : tree.nodes)
        tree.levels[static_cast<std::size_t>(n.level - 1)].push_back(n.id);
    for (auto& lvl : tree.levels)
        std::sort(lvl.begin(), lvl.end());
    return tree;
}

} // namespace h2nc
