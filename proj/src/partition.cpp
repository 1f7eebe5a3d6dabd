#include "h2nc/partition.hpp"

#include <algorithm>
#include <stdexcept>

namespace h2nc {

namespace {

// Minimum gap-to-diameter ratio a pair must have on top of the eta criterion.
// Tight bounding boxes of sibling clusters are often disjoint by a hairline
// gap; such pairs are far from numerically low-rank, so a small separation
// floor keeps them in the recursion instead of the far list.
constexpr double kMinSeparationRatio = 0.082;

void descend(const ClusterTree& rt, const ClusterTree& ct, double eta,
             int t, int s, BlockPartition& out) {
    const ClusterNode& tn = rt.nodes[static_cast<std::size_t>(t)];
    const ClusterNode& sn = ct.nodes[static_cast<std::size_t>(s)];
    const double dist = node_distance(tn, sn);
    const double diam = std::max(node_diameter(tn), node_diameter(sn));
    if (dist > std::max(eta, kMinSeparationRatio) * diam) {
        out.far.push_back({t, s});
        return;
    }
    if (tn.is_leaf() && sn.is_leaf()) {
        out.close.push_back({t, s});
        return;
    }
    if (tn.is_leaf()) {
        descend(rt, ct, eta, t, sn.sons[0], out);
        descend(rt, ct, eta, t, sn.sons[1], out);
    } else if (sn.is_leaf()) {
        descend(rt, ct, eta, tn.sons[0], s, out);
        descend(rt, ct, eta, tn.sons[1], s, out);
    } else {
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                descend(rt, ct, eta, tn.sons[a], sn.sons[b], out);
    }
}

} // namespace

BlockPartition build_partition(const ClusterTree& row_tree, const ClusterTree& col_tree,
                               double eta) {
    if (eta < 0) throw std::invalid_argument("eta must be nonnegative");
    BlockPartition p;
    descend(row_tree, col_tree, eta, 0, 0, p);

    auto key = [&](const NodePair& pr) {
        return std::tuple<int, int, int>(
            row_tree.nodes[static_cast<std::size_t>(pr.row_node)].level, pr.row_node, pr.col_node);
    };
    std::sort(p.far.begin(), p.far.end(),
              [&](const NodePair& a, const NodePair& b) { return key(a) < key(b); });
    std::sort(p.close.begin(), p.close.end(),
              [&](const NodePair& a, const NodePair& b) { return key(a) < key(b); });

    p.far_by_row.resize(row_tree.nodes.size());
    p.far_by_col.resize(col_tree.nodes.size());
    for (const NodePair& pr : p.far) {
        p.far_by_row[static_cast<std::size_t>(pr.row_node)].push_back(pr.col_node);
        p.far_by_col[static_cast<std::size_t>(pr.col_node)].push_back(pr.row_node);
    }
    return p;
}

std::vector<int> predecessors(const ClusterTree& tree, int node) {
    std::vector<int> chain;
    int p = tree.nodes[static_cast<std::size_t>(node)].parent;
    while (p >= 0) {
        chain.push_back(p);
        p = tree.nodes[static_cast<std::size_t>(p)].parent;
    }
    return chain;
}

} // namespace h2nc
