#pragma once

#include <vector>

#include "h2nc/dense.hpp"

namespace h2nc {

struct PointSet {
    std::vector<Point> coords;

    Index count() const { return static_cast<Index>(coords.size()); }
};

struct BoundingBox {
    Point lo{0, 0, 0};
    Point hi{0, 0, 0};

    /// Euclidean length of the box diagonal.
    double diameter() const { return (hi - lo).norm(); }
};

/// Minimal Euclidean distance between two boxes, 0 if they intersect or touch.
double box_distance(const BoundingBox& a, const BoundingBox& b);

struct ClusterNode {
    int id = -1;
    int parent = -1;
    int sons[2] = {-1, -1};
    int level = 1;          // root = 1
    Index begin = 0;        // contiguous range into the tree permutation
    Index end = 0;
    BoundingBox bbox;
    bool degenerate_split = false;

    bool is_leaf() const { return sons[0] < 0; }
    Index size() const { return end - begin; }
};

/// Binary cluster tree built by recursive inertial bisection. Immutable after
/// construction; safe for concurrent reads.
class ClusterTree {
public:
    std::vector<ClusterNode> nodes;
    std::vector<Index> perm;      // tree position -> original index
    std::vector<Index> inv_perm;  // original index -> tree position
    std::vector<std::vector<int>> levels; // levels[l-1] = node ids at level l, in id order
    int level_count = 0;
    PointSet points;              // original order

    Index count() const { return points.count(); }
    const ClusterNode& root() const { return nodes.front(); }

    /// Original indices of a node's index set, in tree order.
    std::vector<Index> node_indices(int node) const;

    const Point& point_at(Index tree_pos) const { return points.coords[static_cast<std::size_t>(perm[tree_pos])]; }
};

double node_diameter(const ClusterNode& node);
double node_distance(const ClusterNode& a, const ClusterNode& b);

/// Splits every node with more than block_size points by the hyperplane
/// through the centroid orthogonal to the principal inertia axis; points are
/// permuted so every node's index set is contiguous. Split at the median of
/// projections, ties broken by original index.
ClusterTree build_cluster_tree(const PointSet& points, int block_size);

} // namespace h2nc
