#include "h2nc/densecore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace h2nc {

namespace {

constexpr double kPivotFloor = 1e-14;

std::vector<Index> lu_rows(const Matrix& a, Index max_rank, bool throw_on_deficiency) {
    const Index n = a.rows();
    const Index r = std::min(max_rank, a.cols());
    if (n < r || r < 1) throw std::invalid_argument("pivoted_lu_rows: need n >= r >= 1");

    Matrix work = a;
    std::vector<Index> rows(static_cast<std::size_t>(n));
    std::iota(rows.begin(), rows.end(), Index{0});

    double first_pivot = 0;
    std::vector<Index> selected;
    for (Index k = 0; k < r; ++k) {
        Index best = k;
        double best_abs = std::abs(work(k, k));
        for (Index i = k + 1; i < n; ++i) {
            const double v = std::abs(work(i, k));
            if (v > best_abs) {
                best_abs = v;
                best = i;
            }
        }
        if (k == 0) first_pivot = best_abs;
        if (best_abs <= kPivotFloor * first_pivot) {
            if (throw_on_deficiency) throw RankDeficiencyError(k);
            return selected;
        }
        if (best != k) {
            work.row(k).swap(work.row(best));
            std::swap(rows[static_cast<std::size_t>(k)], rows[static_cast<std::size_t>(best)]);
        }
        selected.push_back(rows[static_cast<std::size_t>(k)]);
        for (Index i = k + 1; i < n; ++i) {
            const double f = work(i, k) / work(k, k);
            work(i, k) = 0;
            if (f != 0) work.row(i).tail(work.cols() - k - 1) -= f * work.row(k).tail(work.cols() - k - 1);
        }
    }
    return selected;
}

} // namespace

std::vector<Index> pivoted_lu_rows(const Matrix& a) {
    return lu_rows(a, a.cols(), true);
}

std::vector<Index> pivoted_lu_rows_upto(const Matrix& a, Index max_rank) {
    if (a.size() == 0 || max_rank < 1) return {};
    return lu_rows(a, max_rank, false);
}

MaxvolResult maxvol(const Matrix& a, double delta, int max_iters) {
    const Index n = a.rows();
    const Index r = a.cols();
    if (n < r || r < 1) throw std::invalid_argument("maxvol: need n >= r >= 1");

    MaxvolResult res;
    if (n == r) {
        res.selected.resize(static_cast<std::size_t>(r));
        std::iota(res.selected.begin(), res.selected.end(), Index{0});
        res.coefficients = Matrix::Identity(n, r);
        return res;
    }

    std::vector<Index> selected = pivoted_lu_rows(a);
    Matrix ahat(r, r);
    for (Index k = 0; k < r; ++k)
        ahat.row(k) = a.row(selected[static_cast<std::size_t>(k)]);

    // C = A * Ahat^{-1}, computed as (Ahat^T \ A^T)^T
    Matrix c = ahat.transpose().partialPivLu().solve(a.transpose()).transpose();

    for (int iter = 0; iter < max_iters; ++iter) {
        Index bi = 0, bj = 0;
        double best = 0;
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < r; ++j) {
                const double v = std::abs(c(i, j));
                if (v > best) {
                    best = v;
                    bi = i;
                    bj = j;
                }
            }
        if (best <= 1.0 + delta) break;

        // swap: row bi of A replaces basis row bj
        Vector cj = c.col(bj);
        Eigen::RowVectorXd ci = c.row(bi);
        ci(bj) -= 1.0;
        c.noalias() -= cj * (ci / c(bi, bj));
        selected[static_cast<std::size_t>(bj)] = bi;
    }

    // sort the selection ascending, permute coefficient columns to match
    std::vector<Index> order(static_cast<std::size_t>(r));
    std::iota(order.begin(), order.end(), Index{0});
    std::sort(order.begin(), order.end(), [&](Index x, Index y) {
        return selected[static_cast<std::size_t>(x)] < selected[static_cast<std::size_t>(y)];
    });
    res.selected.resize(static_cast<std::size_t>(r));
    res.coefficients.resize(n, r);
    for (Index k = 0; k < r; ++k) {
        res.selected[static_cast<std::size_t>(k)] = selected[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])];
        res.coefficients.col(k) = c.col(order[static_cast<std::size_t>(k)]);
    }
    return res;
}

TruncatedSvd truncated_svd(const Matrix& a, double rel_tol) {
    TruncatedSvd out;
    if (a.rows() == 0 || a.cols() == 0) {
        out.u.resize(a.rows(), 0);
        out.s.resize(0);
        out.v.resize(0, a.cols());
        return out;
    }
    Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sv = svd.singularValues();
    const double sigma1 = sv.size() > 0 ? sv(0) : 0.0;
    Index k = 0;
    if (sigma1 > 0)
        while (k < sv.size() && sv(k) > rel_tol * sigma1) ++k;
    out.u = svd.matrixU().leftCols(k);
    out.s = sv.head(k);
    out.v = svd.matrixV().leftCols(k).transpose();
    return out;
}

Matrix skeleton_reconstruct(const MatrixOracle& oracle,
                            const std::vector<Index>& basis_rows,
                            const std::vector<Index>& basis_cols) {
    std::vector<Index> all_rows(static_cast<std::size_t>(oracle.rows()));
    std::iota(all_rows.begin(), all_rows.end(), Index{0});
    std::vector<Index> all_cols(static_cast<std::size_t>(oracle.cols()));
    std::iota(all_cols.begin(), all_cols.end(), Index{0});

    const Matrix c = oracle.eval_block(all_rows, basis_cols);
    const Matrix r = oracle.eval_block(basis_rows, all_cols);
    const Matrix ahat = oracle.eval_block(basis_rows, basis_cols);

    Eigen::FullPivLU<Matrix> lu(ahat);
    if (!lu.isInvertible()) throw std::runtime_error("skeleton_reconstruct: singular submatrix");
    return c * lu.solve(r);
}

} // namespace h2nc
