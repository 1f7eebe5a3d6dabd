#pragma once

#include <memory>
#include <vector>

#include "h2nc/kernels.hpp"
#include "h2nc/mcbh.hpp"

namespace h2nc {

/// Tensor Chebyshev-Gauss grid in a cluster node's bounding box, used as
/// geometric proxy candidates instead of matrix-index representor sets.
struct ProxyGrid {
    int node = -1;
    std::vector<Point> points; // m^3 tensor nodes, all inside the node bbox
};

/// m Chebyshev-Gauss nodes per axis, cos((2k+1) pi / (2m)), mapped affinely
/// into the bbox; a zero-width axis contributes its midpoint only.
ProxyGrid chebyshev_proxies(const ClusterNode& node, int m);

/// Single-pass geometric build: bases are selected against kernel evaluations
/// on per-node Chebyshev proxy grids; interaction and close blocks come from
/// the oracle, so the output container matches mcbh_build's format.
H2Matrix acageo_build(std::shared_ptr<const MatrixOracle> oracle, const KernelFunction& kernel,
                      std::shared_ptr<const ClusterTree> row_tree,
                      std::shared_ptr<const ClusterTree> col_tree,
                      const BlockPartition& partition, double tau, int m,
                      const McbhParams& params = {});

} // namespace h2nc
