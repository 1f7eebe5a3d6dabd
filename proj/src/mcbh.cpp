#include "h2nc/mcbh.hpp"

#include <algorithm>
#include <chrono>
#include <iterator>
#include <stdexcept>

#include "h2nc/densecore.hpp"

namespace h2nc {

namespace {

std::vector<Index> sorted_unique(std::vector<Index> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

// Candidate rows/columns a node's basis is selected from: the full index set
// at a leaf, the stacked son bases otherwise. The order fixes the transfer
// matrix row layout.
std::vector<Index> own_candidates(const ClusterTree& tree, const std::vector<NodeBasis>& bases,
                                  int node) {
    const ClusterNode& n = tree.nodes[static_cast<std::size_t>(node)];
    if (n.is_leaf()) return tree.node_indices(node);
    std::vector<Index> out = bases[static_cast<std::size_t>(n.sons[0])].indices;
    const auto& b2 = bases[static_cast<std::size_t>(n.sons[1])].indices;
    out.insert(out.end(), b2.begin(), b2.end());
    return out;
}

NodeBasis empty_basis(std::size_t candidate_count) {
    NodeBasis b;
    b.transfer = Matrix(static_cast<Index>(candidate_count), 0);
    return b;
}

NodeBasis full_basis(std::vector<Index> candidates) {
    NodeBasis b;
    b.transfer = Matrix::Identity(static_cast<Index>(candidates.size()),
                                  static_cast<Index>(candidates.size()));
    b.indices = std::move(candidates);
    return b;
}

// Whether the node's block row is nonempty: the node or one of its ancestors
// owns a far block. Nodes with an empty block row interact with nothing and
// may carry an empty basis.
std::vector<char> block_row_nonempty(const ClusterTree& tree,
                                     const std::vector<std::vector<int>>& far_lists) {
    std::vector<char> need(tree.nodes.size(), 0);
    for (int lvl = 1; lvl <= tree.level_count; ++lvl)
        for (int id : tree.levels[static_cast<std::size_t>(lvl - 1)]) {
            const ClusterNode& n = tree.nodes[static_cast<std::size_t>(id)];
            need[static_cast<std::size_t>(id)] =
                !far_lists[static_cast<std::size_t>(id)].empty() ||
                (n.parent >= 0 && need[static_cast<std::size_t>(n.parent)]);
        }
    return need;
}

// Selects the basis from an orthonormal SVD factor (candidates x rank).
NodeBasis basis_from_factor(const Matrix& factor, const std::vector<Index>& candidates,
                            const McbhParams& params) {
    NodeBasis b;
    const Index k = factor.cols();
    if (k == 0) return empty_basis(candidates.size());
    if (k == factor.rows()) {
        b.indices = candidates;
        b.transfer = Matrix::Identity(k, k);
        return b;
    }
    MaxvolResult mv = maxvol(factor, params.maxvol_delta, params.maxvol_iters);
    b.transfer = std::move(mv.coefficients);
    b.indices.reserve(mv.selected.size());
    for (Index pos : mv.selected)
        b.indices.push_back(candidates[static_cast<std::size_t>(pos)]);
    return b;
}

// Far-zone contribution of an opposite-tree node to a candidate set: its
// basis when already computed in this pass; otherwise its full index set at
// a leaf and the union of its son bases elsewhere.
void append_opposite(const ClusterTree& opp_tree, const std::vector<NodeBasis>& opp_bases,
                     const std::vector<char>& opp_defined, int node, std::vector<Index>& psi) {
    if (opp_defined[static_cast<std::size_t>(node)]) {
        const auto& idx = opp_bases[static_cast<std::size_t>(node)].indices;
        psi.insert(psi.end(), idx.begin(), idx.end());
        return;
    }
    const ClusterNode& n = opp_tree.nodes[static_cast<std::size_t>(node)];
    if (n.is_leaf()) {
        const auto idx = opp_tree.node_indices(node);
        psi.insert(psi.end(), idx.begin(), idx.end());
        return;
    }
    for (int k = 0; k < 2; ++k) {
        const auto& idx = opp_bases[static_cast<std::size_t>(n.sons[k])].indices;
        psi.insert(psi.end(), idx.begin(), idx.end());
    }
}

} // namespace

UpwardResult upward_pass(const ClusterTree& row_tree, const ClusterTree& col_tree,
                         const BlockPartition& partition, const MatrixOracle& oracle,
                         const std::vector<std::vector<Index>>& row_predecessor_parts,
                         const std::vector<std::vector<Index>>& col_predecessor_parts,
                         double tol, const McbhParams& params) {
    UpwardResult res;
    res.row_bases.resize(row_tree.nodes.size());
    res.col_bases.resize(col_tree.nodes.size());
    std::vector<char> row_defined(row_tree.nodes.size(), 0);
    std::vector<char> col_defined(col_tree.nodes.size(), 0);
    const std::vector<char> row_need = block_row_nonempty(row_tree, partition.far_by_row);
    const std::vector<char> col_need = block_row_nonempty(col_tree, partition.far_by_col);

    const int level_count = std::max(row_tree.level_count, col_tree.level_count);
    for (int lvl = level_count; lvl >= 1; --lvl) {
        if (lvl <= col_tree.level_count) {
            for (int s : col_tree.levels[static_cast<std::size_t>(lvl - 1)]) {
                std::vector<Index> psi = col_predecessor_parts.empty()
                                             ? std::vector<Index>{}
                                             : col_predecessor_parts[static_cast<std::size_t>(s)];
                for (int t : partition.far_by_col[static_cast<std::size_t>(s)])
                    append_opposite(row_tree, res.row_bases, row_defined, t, psi);
                psi = sorted_unique(std::move(psi));
                std::vector<Index> cands = own_candidates(col_tree, res.col_bases, s);
                if (psi.empty() || cands.empty()) {
                    // no sampling information, but the block column of an
                    // ancestor still covers this node: keep everything
                    res.col_bases[static_cast<std::size_t>(s)] =
                        (col_need[static_cast<std::size_t>(s)] && !cands.empty())
                            ? full_basis(std::move(cands))
                            : empty_basis(cands.size());
                } else {
                    const Matrix r_hat = oracle.eval_block(psi, cands);
                    const TruncatedSvd svd = truncated_svd(r_hat, tol);
                    res.col_bases[static_cast<std::size_t>(s)] =
                        basis_from_factor(svd.v.transpose(), cands, params);
                }
                col_defined[static_cast<std::size_t>(s)] = 1;
            }
        }
        if (lvl <= row_tree.level_count) {
            for (int t : row_tree.levels[static_cast<std::size_t>(lvl - 1)]) {
                std::vector<Index> psi = row_predecessor_parts.empty()
                                             ? std::vector<Index>{}
                                             : row_predecessor_parts[static_cast<std::size_t>(t)];
                for (int s : partition.far_by_row[static_cast<std::size_t>(t)])
                    append_opposite(col_tree, res.col_bases, col_defined, s, psi);
                psi = sorted_unique(std::move(psi));
                std::vector<Index> cands = own_candidates(row_tree, res.row_bases, t);
                if (psi.empty() || cands.empty()) {
                    res.row_bases[static_cast<std::size_t>(t)] =
                        (row_need[static_cast<std::size_t>(t)] && !cands.empty())
                            ? full_basis(std::move(cands))
                            : empty_basis(cands.size());
                } else {
                    const Matrix r_hat = oracle.eval_block(cands, psi);
                    const TruncatedSvd svd = truncated_svd(r_hat, tol);
                    res.row_bases[static_cast<std::size_t>(t)] =
                        basis_from_factor(svd.u, cands, params);
                }
                row_defined[static_cast<std::size_t>(t)] = 1;
            }
        }
    }
    return res;
}

std::vector<RepresentorSet> downward_pass(TreeSide side, const ClusterTree& row_tree,
                                          const ClusterTree& col_tree,
                                          const BlockPartition& partition,
                                          const MatrixOracle& oracle,
                                          const UpwardResult& bases,
                                          const McbhParams& params) {
    const ClusterTree& tree = side == TreeSide::Row ? row_tree : col_tree;
    const std::vector<NodeBasis>& own = side == TreeSide::Row ? bases.row_bases : bases.col_bases;
    const std::vector<NodeBasis>& opp = side == TreeSide::Row ? bases.col_bases : bases.row_bases;
    const auto& far_lists = side == TreeSide::Row ? partition.far_by_row : partition.far_by_col;

    std::vector<RepresentorSet> reps(tree.nodes.size());
    for (int lvl = 1; lvl <= tree.level_count; ++lvl) {
        for (int id : tree.levels[static_cast<std::size_t>(lvl - 1)]) {
            const ClusterNode& n = tree.nodes[static_cast<std::size_t>(id)];
            std::vector<Index> psi;
            if (n.parent >= 0) psi = reps[static_cast<std::size_t>(n.parent)].indices;
            for (int other : far_lists[static_cast<std::size_t>(id)]) {
                const auto& idx = opp[static_cast<std::size_t>(other)].indices;
                psi.insert(psi.end(), idx.begin(), idx.end());
            }
            psi = sorted_unique(std::move(psi));

            RepresentorSet& rep = reps[static_cast<std::size_t>(id)];
            const auto& basis = own[static_cast<std::size_t>(id)].indices;
            const Index r = static_cast<Index>(basis.size());
            if (r == 0) continue; // empty basis keeps an empty representor set
            if (static_cast<Index>(psi.size()) <= r) {
                rep.indices = psi;
            } else {
                const Matrix b = side == TreeSide::Row
                                     ? Matrix(oracle.eval_block(basis, psi).transpose())
                                     : oracle.eval_block(psi, basis);
                std::vector<Index> sel;
                try {
                    sel = maxvol(b, params.maxvol_delta, params.maxvol_iters).selected;
                } catch (const RankDeficiencyError&) {
                    sel = pivoted_lu_rows_upto(b, r);
                    std::sort(sel.begin(), sel.end());
                }
                rep.indices.reserve(sel.size());
                for (Index pos : sel) rep.indices.push_back(psi[static_cast<std::size_t>(pos)]);
            }
            if (n.parent >= 0) {
                const auto& parent_idx = reps[static_cast<std::size_t>(n.parent)].indices;
                std::set_intersection(rep.indices.begin(), rep.indices.end(), parent_idx.begin(),
                                      parent_idx.end(),
                                      std::back_inserter(rep.predecessors_part));
            }
        }
    }
    return reps;
}

std::vector<std::vector<Index>> shift_to_predecessors(
    const std::vector<RepresentorSet>& representor_sets, const ClusterTree& tree) {
    std::vector<std::vector<Index>> pred(tree.nodes.size());
    for (const ClusterNode& n : tree.nodes)
        if (n.parent >= 0)
            pred[static_cast<std::size_t>(n.id)] =
                representor_sets[static_cast<std::size_t>(n.parent)].indices;
    return pred;
}

H2Matrix assemble_h2(std::shared_ptr<const ClusterTree> row_tree,
                     std::shared_ptr<const ClusterTree> col_tree,
                     const BlockPartition& partition, const MatrixOracle& oracle,
                     UpwardResult bases, const std::vector<Matrix>& close_cache) {
    H2Matrix h2;
    h2.row_tree = std::move(row_tree);
    h2.col_tree = std::move(col_tree);
    h2.partition = partition;
    h2.row_bases = std::move(bases.row_bases);
    h2.col_bases = std::move(bases.col_bases);

    h2.interaction.reserve(partition.far.size());
    for (const NodePair& p : partition.far)
        h2.interaction.push_back(
            oracle.eval_block(h2.row_bases[static_cast<std::size_t>(p.row_node)].indices,
                              h2.col_bases[static_cast<std::size_t>(p.col_node)].indices));

    if (!close_cache.empty()) {
        h2.close = close_cache;
    } else {
        h2.close.reserve(partition.close.size());
        for (const NodePair& p : partition.close)
            h2.close.push_back(oracle.eval_block(h2.row_tree->node_indices(p.row_node),
                                                 h2.col_tree->node_indices(p.col_node)));
    }
    return h2;
}

H2Matrix mcbh_build(std::shared_ptr<const MatrixOracle> oracle,
                    std::shared_ptr<const ClusterTree> row_tree,
                    std::shared_ptr<const ClusterTree> col_tree,
                    const BlockPartition& partition, double tau, int iterations,
                    const IterationCallback& callback, const McbhParams& params) {
    if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("tau must lie in (0,1)");
    if (iterations < 0) throw std::invalid_argument("iterations must be >= 0");

    const int level_count = std::max(row_tree->level_count, col_tree->level_count);
    const double tol = tau / level_count;

    using Clock = std::chrono::steady_clock;
    double core_time = 0;
    auto timed = [&](auto&& fn) {
        const auto t0 = Clock::now();
        auto result = fn();
        core_time += std::chrono::duration<double>(Clock::now() - t0).count();
        return result;
    };

    std::uint64_t build_entries = 0;
    std::uint64_t entry_mark = oracle->entry_count();
    auto sync_entries = [&] {
        const std::uint64_t now = oracle->entry_count();
        build_entries += now - entry_mark;
        entry_mark = now;
    };
    // callback work (error estimation) must not pollute the build entry count
    auto discard_callback_entries = [&] { entry_mark = oracle->entry_count(); };

    std::vector<Matrix> close_cache;
    auto assemble = [&](UpwardResult b, int iter_done) {
        H2Matrix h2 = timed([&] {
            return assemble_h2(row_tree, col_tree, partition, *oracle, std::move(b), close_cache);
        });
        if (close_cache.empty()) close_cache = h2.close;
        sync_entries();
        h2.stats.build_time_s = core_time;
        h2.stats.oracle_entries = build_entries;
        h2.stats.iterations = iter_done;
        return h2;
    };

    const std::vector<std::vector<Index>> no_preds;
    UpwardResult bases = timed([&] {
        return upward_pass(*row_tree, *col_tree, partition, *oracle, no_preds, no_preds, tol,
                           params);
    });
    sync_entries();

    if (callback && iterations > 0) {
        const H2Matrix snapshot = assemble(bases, 0);
        callback(0, snapshot, snapshot.stats.build_time_s);
        discard_callback_entries();
    }

    for (int iter = 1; iter <= iterations; ++iter) {
        bases = timed([&] {
            const auto row_reps =
                downward_pass(TreeSide::Row, *row_tree, *col_tree, partition, *oracle, bases,
                              params);
            const auto col_reps =
                downward_pass(TreeSide::Col, *row_tree, *col_tree, partition, *oracle, bases,
                              params);
            const auto row_pred = shift_to_predecessors(row_reps, *row_tree);
            const auto col_pred = shift_to_predecessors(col_reps, *col_tree);
            return upward_pass(*row_tree, *col_tree, partition, *oracle, row_pred, col_pred, tol,
                               params);
        });
        sync_entries();
        if (callback && iter < iterations) {
            const H2Matrix snapshot = assemble(bases, iter);
            callback(iter, snapshot, snapshot.stats.build_time_s);
            discard_callback_entries();
        }
    }

    H2Matrix h2 = assemble(std::move(bases), iterations);
    if (callback) {
        callback(iterations, h2, h2.stats.build_time_s);
        discard_callback_entries();
    }
    return h2;
}

} // namespace h2nc
