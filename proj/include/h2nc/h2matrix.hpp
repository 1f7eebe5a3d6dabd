#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "h2nc/geometry.hpp"
#include "h2nc/oracle.hpp"
#include "h2nc/partition.hpp"

namespace h2nc {

/// Nested basis of a single cluster node: selected original indices and the
/// transfer matrix mapping this node's basis coefficients to the stacked son
/// bases (or to the node's full index set at a leaf). Rows at the positions of
/// the selected indices form the identity.
struct NodeBasis {
    std::vector<Index> indices;
    Matrix transfer; // (|son bases| or |node|) x |indices|
};

struct BuildStats {
    double build_time_s = 0;
    std::uint64_t oracle_entries = 0;
    int iterations = 0;
};

/// Compressed H^2 operator: cluster trees, block partition, nested bases with
/// transfer matrices, per-far-pair interaction matrices and dense close
/// blocks. Immutable after build; matvec is reentrant.
struct H2Matrix {
    std::shared_ptr<const ClusterTree> row_tree;
    std::shared_ptr<const ClusterTree> col_tree;
    BlockPartition partition;
    std::vector<NodeBasis> row_bases; // by row-tree node id
    std::vector<NodeBasis> col_bases; // by col-tree node id
    std::vector<Matrix> interaction;  // aligned with partition.far
    std::vector<Matrix> close;        // aligned with partition.close
    BuildStats stats;

    Index rows() const { return row_tree->count(); }
    Index cols() const { return col_tree->count(); }

    Vector matvec(const Vector& x) const;
    Vector matvec_transpose(const Vector& y) const;
    /// Far-field part only (admissible blocks, no close blocks).
    Vector matvec_far(const Vector& x) const;
    Vector matvec_far_transpose(const Vector& y) const;

    /// (far_bytes, close_bytes): exact payload of transfer + interaction
    /// matrices, and of dense close blocks, at 8 bytes per scalar.
    std::pair<std::uint64_t, std::uint64_t> memory_bytes() const;

    /// Single-file binary container, little-endian, header "H2NC\x01".
    /// Build stats are not part of the file.
    void save(const std::string& path) const;
    static H2Matrix load(const std::string& path);
};

/// Exact far field applied through the oracle, blockwise (test/error path).
Vector oracle_far_matvec(const MatrixOracle& oracle, const ClusterTree& row_tree,
                         const ClusterTree& col_tree, const BlockPartition& partition,
                         const Vector& x);
Vector oracle_far_matvec_transpose(const MatrixOracle& oracle, const ClusterTree& row_tree,
                                   const ClusterTree& col_tree, const BlockPartition& partition,
                                   const Vector& y);

/// Relative spectral error of the far-field approximation,
/// ||A_far - Afar_compressed||_2 / ||A_far||_2, both norms estimated by
/// seeded power iteration (matrix-free). Deterministic given seed.
double far_field_error(const H2Matrix& h2, const MatrixOracle& oracle,
                       int power_iters = 30, std::uint64_t seed = 0);

} // namespace h2nc
