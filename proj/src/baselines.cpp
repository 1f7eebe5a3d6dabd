#include "h2nc/baselines.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "h2nc/densecore.hpp"

namespace h2nc {

namespace {

std::vector<double> axis_nodes(double lo, double hi, int m) {
    if (hi <= lo) return {lo}; // zero-width axis: midpoint only
    const double center = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k)
        out.push_back(center + half * std::cos((2 * k + 1) * std::numbers::pi / (2 * m)));
    return out;
}

std::vector<Index> own_candidates(const ClusterTree& tree, const std::vector<NodeBasis>& bases,
                                  int node) {
    const ClusterNode& n = tree.nodes[static_cast<std::size_t>(node)];
    if (n.is_leaf()) return tree.node_indices(node);
    std::vector<Index> out = bases[static_cast<std::size_t>(n.sons[0])].indices;
    const auto& b2 = bases[static_cast<std::size_t>(n.sons[1])].indices;
    out.insert(out.end(), b2.begin(), b2.end());
    return out;
}

NodeBasis basis_from_factor(const Matrix& factor, const std::vector<Index>& candidates,
                            const McbhParams& params) {
    NodeBasis b;
    const Index k = factor.cols();
    if (k == 0) {
        b.transfer = Matrix(static_cast<Index>(candidates.size()), 0);
        return b;
    }
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

// A node needs a basis when it or any ancestor owns a far block.
std::vector<char> needed_flags(const ClusterTree& tree,
                               const std::vector<std::vector<int>>& far_lists) {
    std::vector<char> need(tree.nodes.size(), 0);
    for (int lvl = 1; lvl <= tree.level_count; ++lvl) {
        for (int id : tree.levels[static_cast<std::size_t>(lvl - 1)]) {
            const ClusterNode& n = tree.nodes[static_cast<std::size_t>(id)];
            need[static_cast<std::size_t>(id)] =
                !far_lists[static_cast<std::size_t>(id)].empty() ||
                (n.parent >= 0 && need[static_cast<std::size_t>(n.parent)]);
        }
    }
    return need;
}

} // namespace

ProxyGrid chebyshev_proxies(const ClusterNode& node, int m) {
    if (m < 1) throw std::invalid_argument("proxy points per axis must be >= 1");
    const auto xs = axis_nodes(node.bbox.lo.x(), node.bbox.hi.x(), m);
    const auto ys = axis_nodes(node.bbox.lo.y(), node.bbox.hi.y(), m);
    const auto zs = axis_nodes(node.bbox.lo.z(), node.bbox.hi.z(), m);
    ProxyGrid grid;
    grid.node = node.id;
    grid.points.reserve(xs.size() * ys.size() * zs.size());
    for (double x : xs)
        for (double y : ys)
            for (double z : zs) grid.points.emplace_back(x, y, z);
    return grid;
}

H2Matrix acageo_build(std::shared_ptr<const MatrixOracle> oracle, const KernelFunction& kernel,
                      std::shared_ptr<const ClusterTree> row_tree,
                      std::shared_ptr<const ClusterTree> col_tree,
                      const BlockPartition& partition, double tau, int m,
                      const McbhParams& params) {
    if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("tau must lie in (0,1)");
    if (m < 1) throw std::invalid_argument("proxy points per axis must be >= 1");

    const int level_count = std::max(row_tree->level_count, col_tree->level_count);
    const double tol = tau / level_count;
    const auto start = std::chrono::steady_clock::now();
    const std::uint64_t entries0 = oracle->entry_count();

    UpwardResult bases;
    bases.row_bases.resize(row_tree->nodes.size());
    bases.col_bases.resize(col_tree->nodes.size());
    const std::vector<char> row_need = needed_flags(*row_tree, partition.far_by_row);
    const std::vector<char> col_need = needed_flags(*col_tree, partition.far_by_col);

    for (int lvl = level_count; lvl >= 1; --lvl) {
        if (lvl <= col_tree->level_count) {
            for (int s : col_tree->levels[static_cast<std::size_t>(lvl - 1)]) {
                const std::vector<Index> cands = own_candidates(*col_tree, bases.col_bases, s);
                NodeBasis& basis = bases.col_bases[static_cast<std::size_t>(s)];
                if (!col_need[static_cast<std::size_t>(s)] || cands.empty()) {
                    basis.transfer = Matrix(static_cast<Index>(cands.size()), 0);
                    continue;
                }
                const ProxyGrid grid =
                    chebyshev_proxies(col_tree->nodes[static_cast<std::size_t>(s)], m);
                Matrix r_hat(static_cast<Index>(grid.points.size()),
                             static_cast<Index>(cands.size()));
                for (Index a = 0; a < r_hat.rows(); ++a)
                    for (Index b = 0; b < r_hat.cols(); ++b)
                        r_hat(a, b) = kernel.evaluate(
                            grid.points[static_cast<std::size_t>(a)],
                            col_tree->points.coords[static_cast<std::size_t>(
                                cands[static_cast<std::size_t>(b)])]);
                const TruncatedSvd svd = truncated_svd(r_hat, tol);
                basis = basis_from_factor(svd.v.transpose(), cands, params);
            }
        }
        if (lvl <= row_tree->level_count) {
            for (int t : row_tree->levels[static_cast<std::size_t>(lvl - 1)]) {
                const std::vector<Index> cands = own_candidates(*row_tree, bases.row_bases, t);
                NodeBasis& basis = bases.row_bases[static_cast<std::size_t>(t)];
                if (!row_need[static_cast<std::size_t>(t)] || cands.empty()) {
                    basis.transfer = Matrix(static_cast<Index>(cands.size()), 0);
                    continue;
                }
                const ProxyGrid grid =
                    chebyshev_proxies(row_tree->nodes[static_cast<std::size_t>(t)], m);
                Matrix r_hat(static_cast<Index>(cands.size()),
                             static_cast<Index>(grid.points.size()));
                for (Index a = 0; a < r_hat.rows(); ++a)
                    for (Index b = 0; b < r_hat.cols(); ++b)
                        r_hat(a, b) = kernel.evaluate_receiver(
                            cands[static_cast<std::size_t>(a)],
                            grid.points[static_cast<std::size_t>(b)]);
                const TruncatedSvd svd = truncated_svd(r_hat, tol);
                basis = basis_from_factor(svd.u, cands, params);
            }
        }
    }

    H2Matrix h2 = assemble_h2(std::move(row_tree), std::move(col_tree), partition, *oracle,
                              std::move(bases));
    h2.stats.build_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    h2.stats.oracle_entries = oracle->entry_count() - entries0;
    h2.stats.iterations = 0;
    return h2;
}

} // namespace h2nc
