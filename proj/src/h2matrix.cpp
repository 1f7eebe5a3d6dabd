#include "h2nc/h2matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>

namespace h2nc {

namespace {

std::vector<Vector> upward(const ClusterTree& tree, const std::vector<NodeBasis>& bases,
                           const Vector& x) {
    std::vector<Vector> c(tree.nodes.size());
    for (int lvl = tree.level_count; lvl >= 1; --lvl) {
        for (int id : tree.levels[static_cast<std::size_t>(lvl - 1)]) {
            const ClusterNode& n = tree.nodes[static_cast<std::size_t>(id)];
            const NodeBasis& b = bases[static_cast<std::size_t>(id)];
            if (b.transfer.cols() == 0) {
                c[static_cast<std::size_t>(id)] = Vector(0);
                continue;
            }
            Vector in(b.transfer.rows());
            if (n.is_leaf()) {
                for (Index i = 0; i < n.size(); ++i)
                    in(i) = x(tree.perm[static_cast<std::size_t>(n.begin + i)]);
            } else {
                const Vector& c1 = c[static_cast<std::size_t>(n.sons[0])];
                const Vector& c2 = c[static_cast<std::size_t>(n.sons[1])];
                in.head(c1.size()) = c1;
                in.tail(c2.size()) = c2;
            }
            c[static_cast<std::size_t>(id)].noalias() = b.transfer.transpose() * in;
        }
    }
    return c;
}

void downward(const ClusterTree& tree, const std::vector<NodeBasis>& bases,
              std::vector<Vector>& d, Vector& y) {
    for (int lvl = 1; lvl <= tree.level_count; ++lvl) {
        for (int id : tree.levels[static_cast<std::size_t>(lvl - 1)]) {
            const ClusterNode& n = tree.nodes[static_cast<std::size_t>(id)];
            const Vector& dn = d[static_cast<std::size_t>(id)];
            if (dn.size() == 0) continue;
            const NodeBasis& b = bases[static_cast<std::size_t>(id)];
            const Vector out = b.transfer * dn;
            if (n.is_leaf()) {
                for (Index i = 0; i < n.size(); ++i)
                    y(tree.perm[static_cast<std::size_t>(n.begin + i)]) += out(i);
            } else {
                Vector& d1 = d[static_cast<std::size_t>(n.sons[0])];
                Vector& d2 = d[static_cast<std::size_t>(n.sons[1])];
                if (d1.size() > 0) d1 += out.head(d1.size());
                if (d2.size() > 0) d2 += out.tail(d2.size());
            }
        }
    }
}

std::vector<Vector> zero_coefficients(const std::vector<NodeBasis>& bases) {
    std::vector<Vector> d(bases.size());
    for (std::size_t i = 0; i < bases.size(); ++i)
        d[i] = Vector::Zero(static_cast<Index>(bases[i].indices.size()));
    return d;
}

} // namespace

Vector H2Matrix::matvec_far(const Vector& x) const {
    if (x.size() != cols()) throw std::invalid_argument("matvec: length mismatch");
    const std::vector<Vector> c = upward(*col_tree, col_bases, x);
    std::vector<Vector> d = zero_coefficients(row_bases);
    for (std::size_t k = 0; k < partition.far.size(); ++k) {
        const NodePair& p = partition.far[k];
        const Vector& cs = c[static_cast<std::size_t>(p.col_node)];
        Vector& dt = d[static_cast<std::size_t>(p.row_node)];
        if (cs.size() > 0 && dt.size() > 0) dt.noalias() += interaction[k] * cs;
    }
    Vector y = Vector::Zero(rows());
    downward(*row_tree, row_bases, d, y);
    return y;
}

Vector H2Matrix::matvec_far_transpose(const Vector& y) const {
    if (y.size() != rows()) throw std::invalid_argument("matvec_transpose: length mismatch");
    const std::vector<Vector> c = upward(*row_tree, row_bases, y);
    std::vector<Vector> d = zero_coefficients(col_bases);
    for (std::size_t k = 0; k < partition.far.size(); ++k) {
        const NodePair& p = partition.far[k];
        const Vector& ct = c[static_cast<std::size_t>(p.row_node)];
        Vector& ds = d[static_cast<std::size_t>(p.col_node)];
        if (ct.size() > 0 && ds.size() > 0) ds.noalias() += interaction[k].transpose() * ct;
    }
    Vector x = Vector::Zero(cols());
    downward(*col_tree, col_bases, d, x);
    return x;
}

Vector H2Matrix::matvec(const Vector& x) const {
    Vector y = matvec_far(x);
    for (std::size_t k = 0; k < partition.close.size(); ++k) {
        const NodePair& p = partition.close[k];
        const ClusterNode& tn = row_tree->nodes[static_cast<std::size_t>(p.row_node)];
        const ClusterNode& sn = col_tree->nodes[static_cast<std::size_t>(p.col_node)];
        Vector xs(sn.size());
        for (Index i = 0; i < sn.size(); ++i)
            xs(i) = x(col_tree->perm[static_cast<std::size_t>(sn.begin + i)]);
        const Vector ys = close[k] * xs;
        for (Index i = 0; i < tn.size(); ++i)
            y(row_tree->perm[static_cast<std::size_t>(tn.begin + i)]) += ys(i);
    }
    return y;
}

Vector H2Matrix::matvec_transpose(const Vector& yin) const {
    Vector x = matvec_far_transpose(yin);
    for (std::size_t k = 0; k < partition.close.size(); ++k) {
        const NodePair& p = partition.close[k];
        const ClusterNode& tn = row_tree->nodes[static_cast<std::size_t>(p.row_node)];
        const ClusterNode& sn = col_tree->nodes[static_cast<std::size_t>(p.col_node)];
        Vector yt(tn.size());
        for (Index i = 0; i < tn.size(); ++i)
            yt(i) = yin(row_tree->perm[static_cast<std::size_t>(tn.begin + i)]);
        const Vector xs = close[k].transpose() * yt;
        for (Index i = 0; i < sn.size(); ++i)
            x(col_tree->perm[static_cast<std::size_t>(sn.begin + i)]) += xs(i);
    }
    return x;
}

std::pair<std::uint64_t, std::uint64_t> H2Matrix::memory_bytes() const {
    std::uint64_t far_bytes = 0, close_bytes = 0;
    for (const NodeBasis& b : row_bases) far_bytes += static_cast<std::uint64_t>(b.transfer.size()) * 8;
    for (const NodeBasis& b : col_bases) far_bytes += static_cast<std::uint64_t>(b.transfer.size()) * 8;
    for (const Matrix& m : interaction) far_bytes += static_cast<std::uint64_t>(m.size()) * 8;
    for (const Matrix& m : close) close_bytes += static_cast<std::uint64_t>(m.size()) * 8;
    return {far_bytes, close_bytes};
}

// ---------------------------------------------------------------------------
// Oracle-side far field (error estimation path)

namespace {

constexpr Index kRowChunk = 1024;

} // namespace

Vector oracle_far_matvec(const MatrixOracle& oracle, const ClusterTree& row_tree,
                         const ClusterTree& col_tree, const BlockPartition& partition,
                         const Vector& x) {
    Vector y = Vector::Zero(oracle.rows());
    for (const NodePair& p : partition.far) {
        const std::vector<Index> rows = row_tree.node_indices(p.row_node);
        const std::vector<Index> cols = col_tree.node_indices(p.col_node);
        Vector xs(static_cast<Index>(cols.size()));
        for (Index b = 0; b < xs.size(); ++b) xs(b) = x(cols[static_cast<std::size_t>(b)]);
        for (std::size_t r0 = 0; r0 < rows.size(); r0 += kRowChunk) {
            const std::size_t r1 = std::min(rows.size(), r0 + kRowChunk);
            const std::vector<Index> chunk(rows.begin() + static_cast<std::ptrdiff_t>(r0),
                                           rows.begin() + static_cast<std::ptrdiff_t>(r1));
            const Vector ys = oracle.eval_block(chunk, cols) * xs;
            for (std::size_t a = 0; a < chunk.size(); ++a)
                y(chunk[a]) += ys(static_cast<Index>(a));
        }
    }
    return y;
}

Vector oracle_far_matvec_transpose(const MatrixOracle& oracle, const ClusterTree& row_tree,
                                   const ClusterTree& col_tree, const BlockPartition& partition,
                                   const Vector& yin) {
    Vector x = Vector::Zero(oracle.cols());
    for (const NodePair& p : partition.far) {
        const std::vector<Index> rows = row_tree.node_indices(p.row_node);
        const std::vector<Index> cols = col_tree.node_indices(p.col_node);
        for (std::size_t r0 = 0; r0 < rows.size(); r0 += kRowChunk) {
            const std::size_t r1 = std::min(rows.size(), r0 + kRowChunk);
            const std::vector<Index> chunk(rows.begin() + static_cast<std::ptrdiff_t>(r0),
                                           rows.begin() + static_cast<std::ptrdiff_t>(r1));
            Vector yt(static_cast<Index>(chunk.size()));
            for (std::size_t a = 0; a < chunk.size(); ++a)
                yt(static_cast<Index>(a)) = yin(chunk[a]);
            const Vector xs = oracle.eval_block(chunk, cols).transpose() * yt;
            for (std::size_t b = 0; b < cols.size(); ++b)
                x(cols[b]) += xs(static_cast<Index>(b));
        }
    }
    return x;
}

namespace {

template <typename Apply, typename ApplyT>
double spectral_norm_power(const Apply& apply, const ApplyT& apply_t, Index ncols,
                           int iters, std::mt19937_64& rng) {
    if (ncols == 0) return 0.0;
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vector z(ncols);
    for (Index i = 0; i < ncols; ++i) z(i) = gauss(rng);
    const double zn = z.norm();
    if (zn == 0) return 0.0;
    z /= zn;
    double lambda = 0.0;
    for (int it = 0; it < iters; ++it) {
        const Vector w = apply(z);
        const Vector v = apply_t(w);
        lambda = v.norm();
        if (lambda == 0) return 0.0;
        z = v / lambda;
    }
    return std::sqrt(lambda);
}

} // namespace

double far_field_error(const H2Matrix& h2, const MatrixOracle& oracle,
                       int power_iters, std::uint64_t seed) {
    if (power_iters < 2) throw std::invalid_argument("power_iters must be >= 2");
    std::mt19937_64 rng(seed);

    auto err_apply = [&](const Vector& x) {
        return Vector(oracle_far_matvec(oracle, *h2.row_tree, *h2.col_tree, h2.partition, x) -
                      h2.matvec_far(x));
    };
    auto err_apply_t = [&](const Vector& y) {
        return Vector(oracle_far_matvec_transpose(oracle, *h2.row_tree, *h2.col_tree,
                                                  h2.partition, y) -
                      h2.matvec_far_transpose(y));
    };
    const double err_norm = spectral_norm_power(err_apply, err_apply_t, h2.cols(),
                                                power_iters, rng);

    auto far_apply = [&](const Vector& x) {
        return oracle_far_matvec(oracle, *h2.row_tree, *h2.col_tree, h2.partition, x);
    };
    auto far_apply_t = [&](const Vector& y) {
        return oracle_far_matvec_transpose(oracle, *h2.row_tree, *h2.col_tree, h2.partition, y);
    };
    const double far_norm = spectral_norm_power(far_apply, far_apply_t, h2.cols(),
                                                power_iters, rng);
    if (far_norm == 0) return 0.0;
    return err_norm / far_norm;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

const char kMagic[5] = {'H', '2', 'N', 'C', '\x01'};

void write_u64(std::ostream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_i64(std::ostream& out, std::int64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_doubles(std::ostream& out, const double* p, std::size_t n) {
    out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
}

std::uint64_t read_u64(std::istream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

std::int64_t read_i64(std::istream& in) {
    std::int64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

void read_doubles(std::istream& in, double* p, std::size_t n) {
    in.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
}

void write_matrix(std::ostream& out, const Matrix& m) {
    write_u64(out, static_cast<std::uint64_t>(m.rows()));
    write_u64(out, static_cast<std::uint64_t>(m.cols()));
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) {
            const double v = m(i, j);
            write_doubles(out, &v, 1);
        }
}

Matrix read_matrix(std::istream& in) {
    const Index r = static_cast<Index>(read_u64(in));
    const Index c = static_cast<Index>(read_u64(in));
    Matrix m(r, c);
    for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < c; ++j) {
            double v;
            read_doubles(in, &v, 1);
            m(i, j) = v;
        }
    return m;
}

void write_index_list(std::ostream& out, const std::vector<Index>& v) {
    write_u64(out, v.size());
    for (Index i : v) write_i64(out, i);
}

std::vector<Index> read_index_list(std::istream& in) {
    std::vector<Index> v(read_u64(in));
    for (auto& i : v) i = static_cast<Index>(read_i64(in));
    return v;
}

void write_tree(std::ostream& out, const ClusterTree& tree) {
    write_u64(out, static_cast<std::uint64_t>(tree.count()));
    for (const Point& p : tree.points.coords) write_doubles(out, p.data(), 3);
    write_index_list(out, tree.perm);
    write_u64(out, tree.nodes.size());
    for (const ClusterNode& n : tree.nodes) {
        write_i64(out, n.parent);
        write_i64(out, n.sons[0]);
        write_i64(out, n.sons[1]);
        write_i64(out, n.level);
        write_i64(out, n.begin);
        write_i64(out, n.end);
        write_doubles(out, n.bbox.lo.data(), 3);
        write_doubles(out, n.bbox.hi.data(), 3);
        write_u64(out, n.degenerate_split ? 1 : 0);
    }
}

std::shared_ptr<ClusterTree> read_tree(std::istream& in) {
    auto tree = std::make_shared<ClusterTree>();
    const auto count = read_u64(in);
    tree->points.coords.resize(count);
    for (auto& p : tree->points.coords) read_doubles(in, p.data(), 3);
    tree->perm = read_index_list(in);
    tree->nodes.resize(read_u64(in));
    int id = 0;
    for (ClusterNode& n : tree->nodes) {
        n.id = id++;
        n.parent = static_cast<int>(read_i64(in));
        n.sons[0] = static_cast<int>(read_i64(in));
        n.sons[1] = static_cast<int>(read_i64(in));
        n.level = static_cast<int>(read_i64(in));
        n.begin = static_cast<Index>(read_i64(in));
        n.end = static_cast<Index>(read_i64(in));
        read_doubles(in, n.bbox.lo.data(), 3);
        read_doubles(in, n.bbox.hi.data(), 3);
        n.degenerate_split = read_u64(in) != 0;
    }
    tree->inv_perm.resize(tree->perm.size());
    for (std::size_t i = 0; i < tree->perm.size(); ++i)
        tree->inv_perm[static_cast<std::size_t>(tree->perm[i])] = static_cast<Index>(i);
    tree->level_count = 0;
    for (const ClusterNode& n : tree->nodes)
        tree->level_count = std::max(tree->level_count, n.level);
    tree->levels.assign(static_cast<std::size_t>(tree->level_count), {});
    for (const ClusterNode& n : tree->nodes)
        tree->levels[static_cast<std::size_t>(n.level - 1)].push_back(n.id);
    return tree;
}

void write_pairs(std::ostream& out, const std::vector<NodePair>& pairs) {
    write_u64(out, pairs.size());
    for (const NodePair& p : pairs) {
        write_i64(out, p.row_node);
        write_i64(out, p.col_node);
    }
}

std::vector<NodePair> read_pairs(std::istream& in) {
    std::vector<NodePair> pairs(read_u64(in));
    for (NodePair& p : pairs) {
        p.row_node = static_cast<int>(read_i64(in));
        p.col_node = static_cast<int>(read_i64(in));
    }
    return pairs;
}

void write_bases(std::ostream& out, const std::vector<NodeBasis>& bases) {
    write_u64(out, bases.size());
    for (const NodeBasis& b : bases) {
        write_index_list(out, b.indices);
        write_matrix(out, b.transfer);
    }
}

std::vector<NodeBasis> read_bases(std::istream& in) {
    std::vector<NodeBasis> bases(read_u64(in));
    for (NodeBasis& b : bases) {
        b.indices = read_index_list(in);
        b.transfer = read_matrix(in);
    }
    return bases;
}

} // namespace

void H2Matrix::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out.write(kMagic, sizeof(kMagic));
    write_tree(out, *row_tree);
    write_tree(out, *col_tree);
    write_pairs(out, partition.far);
    write_pairs(out, partition.close);
    write_bases(out, row_bases);
    write_bases(out, col_bases);
    write_u64(out, interaction.size());
    for (const Matrix& m : interaction) write_matrix(out, m);
    write_u64(out, close.size());
    for (const Matrix& m : close) write_matrix(out, m);
    if (!out) throw std::runtime_error("write failed: " + path);
}

H2Matrix H2Matrix::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    char magic[5];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("not an H2NC v1 file: " + path);
    H2Matrix h2;
    h2.row_tree = read_tree(in);
    h2.col_tree = read_tree(in);
    h2.partition.far = read_pairs(in);
    h2.partition.close = read_pairs(in);
    h2.partition.far_by_row.resize(h2.row_tree->nodes.size());
    h2.partition.far_by_col.resize(h2.col_tree->nodes.size());
    for (const NodePair& p : h2.partition.far) {
        h2.partition.far_by_row[static_cast<std::size_t>(p.row_node)].push_back(p.col_node);
        h2.partition.far_by_col[static_cast<std::size_t>(p.col_node)].push_back(p.row_node);
    }
    h2.row_bases = read_bases(in);
    h2.col_bases = read_bases(in);
    h2.interaction.resize(read_u64(in));
    for (Matrix& m : h2.interaction) m = read_matrix(in);
    h2.close.resize(read_u64(in));
    for (Matrix& m : h2.close) m = read_matrix(in);
    if (!in) throw std::runtime_error("truncated file: " + path);
    return h2;
}

} // namespace h2nc
