#include <gtest/gtest.h>

#include <random>
#include <set>
#include <sstream>

#include "qcoset/base.hpp"
#include "support.hpp"

using namespace qcoset;

namespace {

// Hexagons counted as 6-edge subsets of 3x3 submatrices with every vertex of degree 2.
std::size_t brute_six_cycles(const SparseBinMatrix& H) {
    const std::size_t R = H.rows();
    std::size_t total = 0;
    for (std::size_t a = 0; a < R; ++a)
        for (std::size_t b = a + 1; b < R; ++b)
            for (std::size_t c = b + 1; c < R; ++c) {
                const std::size_t rows[3] = {a, b, c};
                std::set<std::size_t> cols;
                for (auto r : rows)
                    for (auto x : H.row(r)) cols.insert(x);
                std::vector<std::size_t> cand;
                for (auto x : cols) {
                    int deg = 0;
                    for (auto r : rows) deg += H.get(r, x);
                    if (deg >= 2) cand.push_back(x);
                }
                for (std::size_t i = 0; i < cand.size(); ++i)
                    for (std::size_t j = i + 1; j < cand.size(); ++j)
                        for (std::size_t k = j + 1; k < cand.size(); ++k) {
                            const std::size_t cs[3] = {cand[i], cand[j], cand[k]};
                            std::vector<std::pair<int, int>> edges;
                            for (int r = 0; r < 3; ++r)
                                for (int q = 0; q < 3; ++q)
                                    if (H.get(rows[r], cs[q])) edges.push_back({r, q});
                            const std::size_t E = edges.size();
                            for (std::uint32_t mask = 0; mask < (1u << E); ++mask) {
                                if (std::popcount(mask) != 6) continue;
                                int dr[3] = {0, 0, 0}, dc[3] = {0, 0, 0};
                                for (std::size_t e = 0; e < E; ++e)
                                    if (mask >> e & 1) {
                                        ++dr[edges[e].first];
                                        ++dc[edges[e].second];
                                    }
                                bool ok = true;
                                for (int t = 0; t < 3; ++t) ok &= dr[t] == 2 && dc[t] == 2;
                                total += ok;
                            }
                        }
            }
    return total;
}

bool brute_four_cycle_free(const SparseBinMatrix& H) {
    for (std::size_t a = 0; a < H.rows(); ++a)
        for (std::size_t b = a + 1; b < H.rows(); ++b) {
            std::size_t shared = 0;
            for (auto c : H.row(a)) shared += H.get(b, c);
            if (shared >= 2) return false;
        }
    return true;
}

}  // namespace

TEST(Base, ExampleColumnIncidences) {
    auto b = qtest::f7_base();
    // (lambda, t, h) = (0, 0, 1): t = alpha_0, h = 1 = mu_0
    const std::size_t col = b.column(0, 0, 0);
    EXPECT_EQ(col, 0u);
    EXPECT_EQ(b.hx.col(col), (std::vector<std::size_t>{0, 8, 17}));
    EXPECT_EQ(b.hz.col(col), (std::vector<std::size_t>{2, 11, 19}));
}

TEST(Base, SmallTableRows) {
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& row = qtest::table_rows()[i];
        SCOPED_TRACE(row.name);
        auto c = qtest::coefficients(row);
        EXPECT_TRUE(check_orthogonality_certificate(c).pass);
        EXPECT_TRUE(check_4cycle_certificate(c).pass);
        auto b = build_base(c);
        CssCode code(b.hx, b.hz);
        EXPECT_EQ(code.n(), row.n);
        EXPECT_EQ(code.k(), row.k);
        auto cc = census(b);
        EXPECT_EQ(cc.nxz2, row.nxz2);
        EXPECT_EQ(cc.n6_x, row.n6);
        EXPECT_EQ(cc.n6_z, row.n6);
    }
}

TEST(Base, SixCycleCensusMatchesBruteForce) {
    auto b = qtest::f7_base();
    EXPECT_EQ(six_cycles(b.hx).size(), brute_six_cycles(b.hx));
    EXPECT_EQ(six_cycles(b.hz).size(), brute_six_cycles(b.hz));
    std::mt19937_64 rng(11);
    for (int t = 0; t < 20; ++t) {
        auto m = qtest::random_matrix(8, 14, 0.3, rng);
        ASSERT_EQ(six_cycles(m).size(), brute_six_cycles(m));
    }
}

TEST(Base, CertificatesAgreeWithDirectChecks) {
    // random (not necessarily valid) coefficient sets: certificates vs. explicit matrices
    std::mt19937_64 rng(12);
    std::size_t checked = 0;
    for (auto [p, m] : {std::pair{7u, 3u}, {11u, 5u}, {13u, 4u}}) {
        Field F(p, 1);
        for (int t = 0; t < 400; ++t) {
            std::vector<std::uint32_t> vals(p);
            std::iota(vals.begin(), vals.end(), 0u);
            std::shuffle(vals.begin(), vals.end(), rng);
            std::vector<std::uint32_t> a0(vals.begin(), vals.begin() + 3), b0(vals.begin() + 3, vals.begin() + 6);
            std::shuffle(vals.begin(), vals.end(), rng);
            std::vector<std::uint32_t> a1(vals.begin(), vals.begin() + 3), b1(vals.begin() + 3, vals.begin() + 6);
            auto c = make_coefficients(F, m, a0, b0, a1, b1);
            auto b = build_base(c);
            ASSERT_EQ(check_orthogonality_certificate(c).pass, product_is_zero(b.hx, b.hz));
            const bool free4 = brute_four_cycle_free(b.hx) && brute_four_cycle_free(b.hz);
            ASSERT_EQ(check_4cycle_certificate(c).pass, free4);
            ASSERT_EQ(verify_4cycles_directly(b).pass, free4);
            ++checked;
        }
    }
    EXPECT_GT(checked, 0u);
}

TEST(Base, SearchReturnsValidLexicographicCandidates) {
    auto res = search_coefficients(Field(7, 1), 3, 3, SearchMode::Exhaustive);
    ASSERT_FALSE(res.empty());
    for (std::size_t i = 0; i < res.size(); ++i) {
        EXPECT_TRUE(check_orthogonality_certificate(res[i]).pass);
        EXPECT_TRUE(check_4cycle_certificate(res[i]).pass);
        EXPECT_EQ(res[i].a[0][0].value, 0u);
        EXPECT_EQ(res[i].a[1][0].value, 0u);
        EXPECT_EQ(res[i].a[0][1].value, 1u);
        if (i) {
            EXPECT_LT(res[i - 1].key(), res[i].key());
        }
    }
    auto first = search_coefficients(Field(7, 1), 3, 3, SearchMode::FirstFound);
    ASSERT_EQ(first.size(), 1u);
    EXPECT_EQ(first[0].key(), res[0].key());
}

TEST(Base, InfeasibleParameters) {
    EXPECT_THROW(search_coefficients(Field(7, 1), 4, 3, SearchMode::FirstFound), InfeasibleError);  // 4 does not divide 6
    EXPECT_THROW(search_coefficients(Field(7, 1), 6, 2, SearchMode::FirstFound), InfeasibleError);  // one coset only
    EXPECT_THROW(search_coefficients(Field(5, 1), 2, 3, SearchMode::FirstFound), InfeasibleError);  // q < 2J
}

TEST(Base, CoefficientFileRoundTrip) {
    auto c = qtest::coefficients(qtest::table_rows()[1]);
    std::stringstream ss;
    write_coefficients(ss, c);
    auto d = read_coefficients(ss);
    EXPECT_EQ(c, d);
    std::stringstream missing("field 7 1\nm 3\nJ 3\na0 0 1 3\n");
    EXPECT_THROW(read_coefficients(missing), FormatError);
    std::stringstream dup("field 7 1\nm 3\nJ 3\na0 0 1 3\nb0 0 4 5\na1 0 3 1\nb1 4 2 5\n");
    EXPECT_THROW(read_coefficients(dup), FormatError);
}

TEST(Base, SymmetryExpansionPreservesValidity) {
    auto c = qtest::coefficients(qtest::table_rows()[0]);
    auto ex = expand_symmetry(c);
    EXPECT_EQ(ex.size(), 7u * 7u * 6u);
    for (const auto& d : ex) {
        EXPECT_TRUE(check_orthogonality_certificate(d).pass);
        EXPECT_TRUE(check_4cycle_certificate(d).pass);
    }
}
