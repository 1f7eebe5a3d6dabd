#pragma once

#include <stdexcept>
#include <vector>

#include "h2nc/dense.hpp"
#include "h2nc/oracle.hpp"

namespace h2nc {

/// Thrown when a matrix turns out to have numerical rank below the requested
/// one; carries the detected rank so the caller can shrink.
class RankDeficiencyError : public std::runtime_error {
public:
    explicit RankDeficiencyError(Index detected)
        : std::runtime_error("numerical rank deficiency"), detected_rank(detected) {}

    Index detected_rank;
};

/// Row indices of a nonsingular r x r submatrix of the n x r input, found by
/// LU with row pivoting. Throws RankDeficiencyError when a pivot falls below
/// 1e-14 times the largest initial pivot.
std::vector<Index> pivoted_lu_rows(const Matrix& a);

/// Non-throwing variant: selects rows until the pivot floor is hit and
/// reports how many were found.
std::vector<Index> pivoted_lu_rows_upto(const Matrix& a, Index max_rank);

struct MaxvolResult {
    std::vector<Index> selected; // r row indices, ascending
    Matrix coefficients;         // n x r, identity on selected rows
};

/// Greedy dominant-submatrix search: swaps rows until every entry of
/// C = A * Ahat^{-1} satisfies |C_ij| <= 1 + delta or max_iters swaps were
/// made. argmax ties broken by smallest row-major linear index.
MaxvolResult maxvol(const Matrix& a, double delta = 0.05, int max_iters = 100);

struct TruncatedSvd {
    Matrix u;  // n x k, orthonormal columns
    Vector s;  // k singular values, descending
    Matrix v;  // k x m, orthonormal rows
    Index rank() const { return s.size(); }
};

/// Dense SVD cut at the smallest k with sigma_{k+1} <= rel_tol * sigma_1
/// (k = 0 when sigma_1 = 0 or everything is below the threshold).
TruncatedSvd truncated_svd(const Matrix& a, double rel_tol);

/// C * Ahat^{-1} * R with C = A(:, basis_cols), R = A(basis_rows, :).
/// Test oracle for small sizes only. Throws on singular Ahat.
Matrix skeleton_reconstruct(const MatrixOracle& oracle,
                            const std::vector<Index>& basis_rows,
                            const std::vector<Index>& basis_cols);

} // namespace h2nc
