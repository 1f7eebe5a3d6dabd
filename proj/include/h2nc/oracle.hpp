#pragma once

#include <atomic>
#include <cstdint>
#include <vector>

#include "h2nc/dense.hpp"

namespace h2nc {

/// Entry-evaluation interface. The only access path to the underlying matrix.
/// Implementations must be pure (repeated evaluation returns identical values)
/// and tolerate concurrent eval_block calls.
class MatrixOracle {
public:
    virtual ~MatrixOracle() = default;

    virtual Index rows() const = 0;
    virtual Index cols() const = 0;

    double eval(Index i, Index j) const {
        entries_.fetch_add(1, std::memory_order_relaxed);
        return eval_impl(i, j);
    }

    Matrix eval_block(const std::vector<Index>& row_ids,
                      const std::vector<Index>& col_ids) const {
        entries_.fetch_add(static_cast<std::uint64_t>(row_ids.size()) * col_ids.size(),
                           std::memory_order_relaxed);
        return eval_block_impl(row_ids, col_ids);
    }

    /// Number of entries evaluated so far (monotone counter).
    std::uint64_t entry_count() const { return entries_.load(std::memory_order_relaxed); }

protected:
    virtual double eval_impl(Index i, Index j) const = 0;

    virtual Matrix eval_block_impl(const std::vector<Index>& row_ids,
                                   const std::vector<Index>& col_ids) const {
        Matrix out(static_cast<Index>(row_ids.size()), static_cast<Index>(col_ids.size()));
        for (Index a = 0; a < out.rows(); ++a)
            for (Index b = 0; b < out.cols(); ++b)
                out(a, b) = eval_impl(row_ids[static_cast<std::size_t>(a)],
                                      col_ids[static_cast<std::size_t>(b)]);
        return out;
    }

private:
    mutable std::atomic<std::uint64_t> entries_{0};
};

} // namespace h2nc
