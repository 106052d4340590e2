#pragma once

// GF(2) linear algebra: sparse storage, bit-packed elimination, rank, kernel,
// row-space membership and product checks.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "qcoset/error.hpp"

namespace qcoset {

/// Dense bit vector packed into 64-bit words.
class BitVec {
public:
    BitVec() = default;
    explicit BitVec(std::size_t n) : n_(n), words_((n + 63) / 64, 0) {}

    static BitVec from_support(std::size_t n, std::span<const std::size_t> support) {
        BitVec v(n);
        for (auto i : support) v.flip(i);
        return v;
    }

    std::size_t size() const { return n_; }
    bool get(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }
    void set(std::size_t i, bool b = true) {
        if (b)
            words_[i >> 6] |= std::uint64_t(1) << (i & 63);
        else
            words_[i >> 6] &= ~(std::uint64_t(1) << (i & 63));
    }
    void flip(std::size_t i) { words_[i >> 6] ^= std::uint64_t(1) << (i & 63); }

    BitVec& operator^=(const BitVec& o) {
        for (std::size_t w = 0; w < words_.size(); ++w) words_[w] ^= o.words_[w];
        return *this;
    }
    friend BitVec operator^(BitVec a, const BitVec& b) { return a ^= b; }
    BitVec& operator|=(const BitVec& o) {
        for (std::size_t w = 0; w < words_.size(); ++w) words_[w] |= o.words_[w];
        return *this;
    }
    friend BitVec operator|(BitVec a, const BitVec& b) { return a |= b; }
    bool operator==(const BitVec& o) const = default;

    bool none() const {
        for (auto w : words_)
            if (w) return false;
        return true;
    }
    std::size_t count() const {
        std::size_t c = 0;
        for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
        return c;
    }
    std::vector<std::size_t> support() const {
        std::vector<std::size_t> s;
        for (std::size_t w = 0; w < words_.size(); ++w) {
            std::uint64_t x = words_[w];
            while (x) {
                s.push_back(w * 64 + static_cast<std::size_t>(std::countr_zero(x)));
                x &= x - 1;
            }
        }
        return s;
    }
    /// Index of the lowest set bit, or size() if none.
    std::size_t first() const {
        for (std::size_t w = 0; w < words_.size(); ++w)
            if (words_[w]) return w * 64 + static_cast<std::size_t>(std::countr_zero(words_[w]));
        return n_;
    }

    std::span<std::uint64_t> words() { return words_; }
    std::span<const std::uint64_t> words() const { return words_; }

private:
    std::size_t n_ = 0;
    std::vector<std::uint64_t> words_;
};

/// Sparse binary matrix stored as sorted per-row column lists, with a cached
/// column view.
class SparseBinMatrix {
public:
    SparseBinMatrix() = default;
    SparseBinMatrix(std::size_t rows, std::size_t cols) : cols_(cols), row_support_(rows) { rebuild_columns(); }
    SparseBinMatrix(std::size_t cols, std::vector<std::vector<std::size_t>> rows)
        : cols_(cols), row_support_(std::move(rows)) {
        for (auto& r : row_support_) {
            std::sort(r.begin(), r.end());
            if (std::adjacent_find(r.begin(), r.end()) != r.end())
                throw FormatError("duplicate entry in sparse row");
            if (!r.empty() && r.back() >= cols_) throw FormatError("column index out of range");
        }
        rebuild_columns();
    }

    std::size_t rows() const { return row_support_.size(); }
    std::size_t cols() const { return cols_; }
    std::size_t nnz() const {
        std::size_t s = 0;
        for (auto& r : row_support_) s += r.size();
        return s;
    }
    const std::vector<std::size_t>& row(std::size_t r) const { return row_support_[r]; }
    const std::vector<std::size_t>& col(std::size_t c) const { return col_support_[c]; }
    bool get(std::size_t r, std::size_t c) const {
        const auto& row = row_support_[r];
        return std::binary_search(row.begin(), row.end(), c);
    }
    std::size_t max_col_weight() const {
        std::size_t m = 0;
        for (auto& c : col_support_) m = std::max(m, c.size());
        return m;
    }

    BitVec row_bits(std::size_t r) const { return BitVec::from_support(cols_, row_support_[r]); }

    /// M x over GF(2).
    BitVec multiply(const BitVec& x) const {
        if (x.size() != cols_) throw FormatError("vector length does not match column count");
        BitVec out(rows());
        for (std::size_t r = 0; r < rows(); ++r) {
            bool parity = false;
            for (auto c : row_support_[r]) parity ^= x.get(c);
            if (parity) out.set(r);
        }
        return out;
    }
    /// Syndrome of a sparse support.
    BitVec syndrome_of(std::span<const std::size_t> support) const {
        BitVec out(rows());
        for (auto c : support)
            for (auto r : col_support_[c]) out.flip(r);
        return out;
    }

    bool operator==(const SparseBinMatrix& o) const { return cols_ == o.cols_ && row_support_ == o.row_support_; }

private:
    void rebuild_columns() {
        col_support_.assign(cols_, {});
        for (std::size_t r = 0; r < row_support_.size(); ++r)
            for (auto c : row_support_[r]) col_support_[c].push_back(r);
    }

    std::size_t cols_ = 0;
    std::vector<std::vector<std::size_t>> row_support_;
    std::vector<std::vector<std::size_t>> col_support_;
};

/// Reduced row-echelon basis of a row space, used for exact membership tests.
class RowSpaceBasis {
public:
    RowSpaceBasis() = default;

    explicit RowSpaceBasis(const SparseBinMatrix& m) : n_(m.cols()) {
        std::vector<BitVec> rows;
        rows.reserve(m.rows());
        for (std::size_t r = 0; r < m.rows(); ++r) rows.push_back(m.row_bits(r));
        reduce(std::move(rows));
    }
    RowSpaceBasis(std::size_t n, std::vector<BitVec> rows) : n_(n) { reduce(std::move(rows)); }

    std::size_t rank() const { return basis_.size(); }
    std::size_t length() const { return n_; }
    const std::vector<BitVec>& rows() const { return basis_; }
    const std::vector<std::size_t>& pivots() const { return pivots_; }

    bool contains(const BitVec& v) const {
        if (v.size() != n_) throw FormatError("vector length does not match row-space length");
        // In RREF each pivot column is hit by exactly one basis row, so the
        // combination is read off the pivot bits of v.
        BitVec acc(n_);
        for (std::size_t i = 0; i < basis_.size(); ++i)
            if (v.get(pivots_[i])) acc ^= basis_[i];
        return acc == v;
    }

private:
    void reduce(std::vector<BitVec> rows) {
        std::size_t rank = 0;
        const std::size_t words = (n_ + 63) / 64;
        for (std::size_t w = 0; w < words && rank < rows.size(); ++w) {
            for (std::size_t b = 0; b < 64; ++b) {
                const std::size_t col = w * 64 + b;
                if (col >= n_ || rank == rows.size()) break;
                const std::uint64_t mask = std::uint64_t(1) << b;
                std::size_t piv = rank;
                while (piv < rows.size() && !(rows[piv].words()[w] & mask)) ++piv;
                if (piv == rows.size()) continue;
                std::swap(rows[piv], rows[rank]);
                for (std::size_t r = 0; r < rows.size(); ++r) {
                    if (r != rank && (rows[r].words()[w] & mask)) {
                        auto dst = rows[r].words();
                        auto src = rows[rank].words();
                        for (std::size_t k = w; k < words; ++k) dst[k] ^= src[k];
                    }
                }
                pivots_.push_back(col);
                ++rank;
            }
        }
        rows.resize(rank);
        basis_ = std::move(rows);
    }

    std::size_t n_ = 0;
    std::vector<BitVec> basis_;
    std::vector<std::size_t> pivots_;
};

inline std::size_t rank_gf2(const SparseBinMatrix& m) { return RowSpaceBasis(m).rank(); }

/// Basis of {x : M x = 0}; size = cols - rank.
inline std::vector<BitVec> kernel_basis(const SparseBinMatrix& m) {
    RowSpaceBasis rref(m);
    const std::size_t n = m.cols();
    std::vector<bool> is_pivot(n, false);
    for (auto p : rref.pivots()) is_pivot[p] = true;
    std::vector<BitVec> out;
    for (std::size_t f = 0; f < n; ++f) {
        if (is_pivot[f]) continue;
        BitVec v(n);
        v.set(f);
        for (std::size_t i = 0; i < rref.rank(); ++i)
            if (rref.rows()[i].get(f)) v.set(rref.pivots()[i]);
        out.push_back(std::move(v));
    }
    return out;
}

inline bool in_row_space(const RowSpaceBasis& b, const BitVec& v) { return b.contains(v); }

/// True iff A B^T = 0 over GF(2), i.e. every row pair overlaps evenly.
inline bool product_is_zero(const SparseBinMatrix& a, const SparseBinMatrix& b) {
    if (a.cols() != b.cols()) throw FormatError("product_is_zero: column counts differ");
    for (std::size_t i = 0; i < a.rows(); ++i) {
        // parity of overlaps of row i with every row of b
        std::vector<std::uint8_t> parity(b.rows(), 0);
        for (auto c : a.row(i))
            for (auto j : b.col(c)) parity[j] ^= 1;
        for (auto p : parity)
            if (p) return false;
    }
    return true;
}

/// Result of solving H[:, candidates] x = target over GF(2).
struct LocalSolution {
    std::vector<std::size_t> support;               ///< particular solution (free variables zero), as columns of H
    std::vector<std::vector<std::size_t>> nullspace;  ///< basis of the restricted null space, as column supports
};

/// Solves H restricted to the candidate columns for the given target syndrome.
/// Returns nullopt when the system is inconsistent.
inline std::optional<LocalSolution> solve_restricted(const SparseBinMatrix& h, std::span<const std::size_t> candidates,
                                                     const BitVec& target, bool want_nullspace = false) {
    // Local row index for every check touched by the candidates.
    std::vector<std::size_t> local_row;
    std::vector<std::int64_t> row_map(h.rows(), -1);
    for (auto c : candidates)
        for (auto r : h.col(c))
            if (row_map[r] < 0) {
                row_map[r] = static_cast<std::int64_t>(local_row.size());
                local_row.push_back(r);
            }
    for (auto r : target.support())
        if (row_map[r] < 0) return std::nullopt;

    const std::size_t nc = candidates.size();
    const std::size_t width = nc + 1;  // last bit = right-hand side
    std::vector<BitVec> rows(local_row.size(), BitVec(width));
    for (std::size_t j = 0; j < nc; ++j)
        for (auto r : h.col(candidates[j])) rows[static_cast<std::size_t>(row_map[r])].set(j);
    for (std::size_t i = 0; i < local_row.size(); ++i)
        if (target.get(local_row[i])) rows[i].set(nc);

    std::vector<std::size_t> pivot_cols;
    std::size_t rank = 0;
    for (std::size_t col = 0; col < nc && rank < rows.size(); ++col) {
        std::size_t piv = rank;
        while (piv < rows.size() && !rows[piv].get(col)) ++piv;
        if (piv == rows.size()) continue;
        std::swap(rows[piv], rows[rank]);
        for (std::size_t r = 0; r < rows.size(); ++r)
            if (r != rank && rows[r].get(col)) rows[r] ^= rows[rank];
        pivot_cols.push_back(col);
        ++rank;
    }
    for (std::size_t r = rank; r < rows.size(); ++r)
        if (rows[r].get(nc)) return std::nullopt;

    LocalSolution sol;
    for (std::size_t i = 0; i < rank; ++i)
        if (rows[i].get(nc)) sol.support.push_back(candidates[pivot_cols[i]]);
    std::sort(sol.support.begin(), sol.support.end());
    if (want_nullspace) {
        std::vector<bool> is_pivot(nc, false);
        for (auto p : pivot_cols) is_pivot[p] = true;
        for (std::size_t f = 0; f < nc; ++f) {
            if (is_pivot[f]) continue;
            std::vector<std::size_t> v{candidates[f]};
            for (std::size_t i = 0; i < rank; ++i)
                if (rows[i].get(f)) v.push_back(candidates[pivot_cols[i]]);
            std::sort(v.begin(), v.end());
            sol.nullspace.push_back(std::move(v));
        }
    }
    return sol;
}

// ---------------------------------------------------------------------------
// alist import/export (1-based indices, zero padding tolerated on input)

inline void write_alist(std::ostream& os, const SparseBinMatrix& m) {
    std::size_t max_col = 0, max_row = 0;
    for (std::size_t c = 0; c < m.cols(); ++c) max_col = std::max(max_col, m.col(c).size());
    for (std::size_t r = 0; r < m.rows(); ++r) max_row = std::max(max_row, m.row(r).size());
    os << m.cols() << ' ' << m.rows() << '\n' << max_col << ' ' << max_row << '\n';
    for (std::size_t c = 0; c < m.cols(); ++c) os << m.col(c).size() << (c + 1 == m.cols() ? '\n' : ' ');
    if (m.cols() == 0) os << '\n';
    for (std::size_t r = 0; r < m.rows(); ++r) os << m.row(r).size() << (r + 1 == m.rows() ? '\n' : ' ');
    if (m.rows() == 0) os << '\n';
    for (std::size_t c = 0; c < m.cols(); ++c) {
        const auto& col = m.col(c);
        for (std::size_t i = 0; i < max_col; ++i) {
            os << (i < col.size() ? col[i] + 1 : 0);
            os << (i + 1 == max_col ? '\n' : ' ');
        }
    }
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto& row = m.row(r);
        for (std::size_t i = 0; i < max_row; ++i) {
            os << (i < row.size() ? row[i] + 1 : 0);
            os << (i + 1 == max_row ? '\n' : ' ');
        }
    }
}

/// Reads an alist matrix. Column counts are taken first (n m), as in MacKay's format.
inline SparseBinMatrix read_alist(std::istream& is) {
    std::size_t n = 0, m = 0, max_col = 0, max_row = 0;
    if (!(is >> n >> m >> max_col >> max_row)) throw FormatError("alist: bad header");
    std::vector<std::size_t> col_w(n), row_w(m);
    for (auto& w : col_w)
        if (!(is >> w)) throw FormatError("alist: bad column weights");
    for (auto& w : row_w)
        if (!(is >> w)) throw FormatError("alist: bad row weights");
    std::vector<std::vector<std::size_t>> cols(n);
    for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t i = 0; i < max_col; ++i) {
            std::size_t v;
            if (!(is >> v)) throw FormatError("alist: truncated column lists");
            if (v != 0) cols[c].push_back(v - 1);
        }
        if (cols[c].size() != col_w[c]) throw FormatError("alist: column weight mismatch");
    }
    std::vector<std::vector<std::size_t>> rows(m);
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t i = 0; i < max_row; ++i) {
            std::size_t v;
            if (!(is >> v)) throw FormatError("alist: truncated row lists");
            if (v != 0) rows[r].push_back(v - 1);
        }
        if (rows[r].size() != row_w[r]) throw FormatError("alist: row weight mismatch");
    }
    SparseBinMatrix out(n, rows);
    for (std::size_t c = 0; c < n; ++c) {
        auto a = cols[c];
        std::sort(a.begin(), a.end());
        if (a != out.col(c)) throw FormatError("alist: row and column lists disagree");
    }
    return out;
}

}  // namespace qcoset
