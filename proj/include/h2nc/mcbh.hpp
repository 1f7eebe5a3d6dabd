#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "h2nc/h2matrix.hpp"

namespace h2nc {

/// Per-node representor set: small opposite-side index set standing in for the
/// node's far zone during basis selection.
struct RepresentorSet {
    std::vector<Index> indices;           // full set after resampling
    std::vector<Index> predecessors_part; // portion inherited from the parent
};

struct McbhParams {
    double maxvol_delta = 0.05;
    int maxvol_iters = 100;
};

struct UpwardResult {
    std::vector<NodeBasis> row_bases;
    std::vector<NodeBasis> col_bases;
};

/// Bottom-to-top basis and transfer-matrix computation; within a level all
/// column-tree nodes are processed first, then all row-tree nodes, in id
/// order. Candidate sets merge the given predecessors parts with the far-zone
/// bases (full index sets where the opposite basis is not yet defined in this
/// pass). tol is the per-SVD relative tolerance.
UpwardResult upward_pass(const ClusterTree& row_tree, const ClusterTree& col_tree,
                         const BlockPartition& partition, const MatrixOracle& oracle,
                         const std::vector<std::vector<Index>>& row_predecessor_parts,
                         const std::vector<std::vector<Index>>& col_predecessor_parts,
                         double tol, const McbhParams& params = {});

enum class TreeSide { Row, Col };

/// Top-to-bottom representor-set computation for one tree, with bases given
/// for both trees. Each node resamples (parent representor set) union
/// (far-zone opposite bases) down to its own basis size via maxvol.
std::vector<RepresentorSet> downward_pass(TreeSide side, const ClusterTree& row_tree,
                                          const ClusterTree& col_tree,
                                          const BlockPartition& partition,
                                          const MatrixOracle& oracle,
                                          const UpwardResult& bases,
                                          const McbhParams& params = {});

/// predecessors_part(child) = indices(parent) for every non-root node.
std::vector<std::vector<Index>> shift_to_predecessors(
    const std::vector<RepresentorSet>& representor_sets, const ClusterTree& tree);

/// Interaction matrices A(t,s) on basis rows x basis columns for every far
/// pair, plus dense close blocks. close_cache, when nonempty, is reused
/// verbatim (close blocks do not depend on the bases).
H2Matrix assemble_h2(std::shared_ptr<const ClusterTree> row_tree,
                     std::shared_ptr<const ClusterTree> col_tree,
                     const BlockPartition& partition, const MatrixOracle& oracle,
                     UpwardResult bases, const std::vector<Matrix>& close_cache = {});

/// Called after each completed iteration (0-based) with the assembled matrix
/// and the cumulative build time so far (callback time excluded).
using IterationCallback = std::function<void(int iteration, const H2Matrix&, double build_time_s)>;

/// Iterative MCBH build. Iteration 0 is an upward pass with empty predecessor
/// sets; each further iteration runs a downward pass on both trees, shifts the
/// representor sets to predecessor parts, and reruns the upward pass. The SVD
/// tolerance is tau / level_count.
H2Matrix mcbh_build(std::shared_ptr<const MatrixOracle> oracle,
                    std::shared_ptr<const ClusterTree> row_tree,
                    std::shared_ptr<const ClusterTree> col_tree,
                    const BlockPartition& partition, double tau, int iterations,
                    const IterationCallback& callback = {}, const McbhParams& params = {});

} // namespace h2nc
