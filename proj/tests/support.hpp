#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "qcoset/base.hpp"
#include "qcoset/binmat.hpp"
#include "qcoset/css.hpp"

namespace qtest {

using Dense = std::vector<std::vector<int>>;

inline Dense dense(const qcoset::SparseBinMatrix& m) {
    Dense d(m.rows(), std::vector<int>(m.cols(), 0));
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (auto c : m.row(r)) d[r][c] = 1;
    return d;
}

// Plain row reduction on int arrays; deliberately unrelated to the packed implementation.
inline std::size_t dense_rank(Dense a) {
    std::size_t rank = 0;
    const std::size_t R = a.size(), C = R ? a[0].size() : 0;
    for (std::size_t c = 0; c < C && rank < R; ++c) {
        std::size_t p = rank;
        while (p < R && !a[p][c]) ++p;
        if (p == R) continue;
        std::swap(a[p], a[rank]);
        for (std::size_t r = 0; r < R; ++r)
            if (r != rank && a[r][c])
                for (std::size_t k = 0; k < C; ++k) a[r][k] ^= a[rank][k];
        ++rank;
    }
    return rank;
}

inline qcoset::SparseBinMatrix random_matrix(std::size_t rows, std::size_t cols, double density, std::mt19937_64& rng) {
    std::bernoulli_distribution bit(density);
    std::vector<std::vector<std::size_t>> rs(rows);
    for (auto& r : rs)
        for (std::size_t c = 0; c < cols; ++c)
            if (bit(rng)) r.push_back(c);
    return qcoset::SparseBinMatrix(cols, rs);
}

struct TableRow {
    std::string name;
    std::uint32_t p, e;
    std::vector<std::uint32_t> modulus;
    std::uint32_t m;
    std::vector<std::uint32_t> a0, b0, a1, b1;
    std::size_t n, k, nxz2, n6;
    std::size_t d;  // reference distance
};

inline const std::vector<TableRow>& table_rows() {
    static const std::vector<TableRow> rows = {
        {"(3,6) F7", 7, 1, {}, 3, {0, 1, 3}, {2, 4, 5}, {0, 3, 1}, {4, 2, 5}, 42, 10, 189, 168, 3},
        {"(3,8) F9", 3, 2, {1, 0, 1}, 4, {0, 1, 4}, {2, 7, 5}, {0, 4, 2}, {3, 5, 8}, 72, 22, 324, 432, 6},
        {"(3,10) F11", 11, 1, {}, 5, {0, 1, 2}, {3, 4, 5}, {0, 2, 1}, {4, 3, 5}, 110, 48, 495, 880, 6},
        {"(3,10) F16", 2, 4, {}, 5, {0, 1, 2}, {7, 3, 6}, {8, 13, 2}, {11, 10, 6}, 160, 76, 720, 800, 4},
        {"(3,12) F13", 13, 1, {}, 6, {11, 6, 5}, {12, 1, 9}, {1, 4, 10}, {2, 11, 7}, 156, 82, 702, 1560, 3},
        {"(3,16) F17", 17, 1, {}, 8, {0, 1, 2}, {3, 4, 5}, {0, 3, 6}, {5, 8, 11}, 272, 174, 1224, 3808, 6},
        {"(4,8) F13", 13, 1, {}, 4, {0, 1, 6, 5}, {12, 9, 10, 7}, {0, 10, 12, 2}, {8, 9, 3, 4}, 104, 6, 832, 1456, 12},
    };
    return rows;
}

inline qcoset::TwoBranchCoefficients coefficients(const TableRow& r) {
    return qcoset::make_coefficients(qcoset::make_field(r.p, r.e, r.modulus), r.m, r.a0, r.b0, r.a1, r.b1);
}

inline qcoset::BasePair f7_base() { return qcoset::build_base(coefficients(table_rows()[0])); }
inline qcoset::BasePair f16_base() { return qcoset::build_base(coefficients(table_rows()[3])); }

/// Random CSS pair: H_Z rows drawn from the kernel of H_X.
inline std::pair<qcoset::SparseBinMatrix, qcoset::SparseBinMatrix> random_css(std::size_t n, std::size_t rx, std::size_t rz,
                                                                              std::mt19937_64& rng) {
    auto hx = random_matrix(rx, n, 0.3, rng);
    auto ker = qcoset::kernel_basis(hx);
    std::vector<std::vector<std::size_t>> zrows;
    std::bernoulli_distribution coin(0.5);
    for (std::size_t i = 0; i < rz && !ker.empty(); ++i) {
        qcoset::BitVec v(n);
        for (auto& k : ker)
            if (coin(rng)) v ^= k;
        zrows.push_back(v.support());
    }
    return {hx, qcoset::SparseBinMatrix(n, zrows)};
}

}  // namespace qtest
