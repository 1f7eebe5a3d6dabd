#pragma once

#include <vector>

#include "h2nc/geometry.hpp"

namespace h2nc {

struct NodePair {
    int row_node = -1;
    int col_node = -1;

    friend bool operator==(const NodePair&, const NodePair&) = default;
};

/// Admissible (far) and inadmissible (close) block lists tiling the matrix.
struct BlockPartition {
    std::vector<NodePair> far;    // admissible pairs, ordered by (row level, row id, col id)
    std::vector<NodePair> close;  // inadmissible leaf x leaf pairs
    std::vector<std::vector<int>> far_by_row; // S(t): column nodes admissible with row node t
    std::vector<std::vector<int>> far_by_col; // S(s): row nodes admissible with column node s
};

/// Recursive descent from the root pair. A pair (t, s) is admissible iff
/// node_distance(t, s) > eta * max(node_diameter(t), node_diameter(s)).
/// A leaf paired with a non-leaf recurses only on the non-leaf's sons.
BlockPartition build_partition(const ClusterTree& row_tree, const ClusterTree& col_tree,
                               double eta);

/// Chain of ancestors from parent up to the root, in that order.
std::vector<int> predecessors(const ClusterTree& tree, int node);

} // namespace h2nc
