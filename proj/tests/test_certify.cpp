#include <gtest/gtest.h>

#include <bit>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "qcoset/certify.hpp"
#include "support.hpp"

using namespace qcoset;

namespace {

// Minimum weights by walking every kernel element in Gray-code order.
struct BruteWeights {
    std::size_t kernel = 0;   // min nonzero weight of ker H (0 if trivial)
    std::size_t logical = 0;  // min weight outside the row space S (0 if none)
};

BruteWeights brute(const SparseBinMatrix& H, const RowSpaceBasis* S) {
    auto ker = kernel_basis(H);
    BruteWeights w;
    if (ker.empty()) return w;
    EXPECT_LE(ker.size(), 20u);
    BitVec v(H.cols());
    for (std::uint64_t i = 1; i < (std::uint64_t(1) << ker.size()); ++i) {
        v ^= ker[static_cast<std::size_t>(std::countr_zero(i))];
        const std::size_t c = v.count();
        if (c == 0) continue;
        if (w.kernel == 0 || c < w.kernel) w.kernel = c;
        if (S && !S->contains(v) && (w.logical == 0 || c < w.logical)) w.logical = c;
    }
    return w;
}

SearchBudget one_thread() {
    SearchBudget b;
    b.threads = 1;
    return b;
}

}  // namespace

TEST(Certify, KernelSearchMatchesBruteForceOnRandomMatrices) {
    std::mt19937_64 rng(31);
    for (int t = 0; t < 60; ++t) {
        const std::size_t n = 12 + rng() % 17;  // 12..28
        const std::size_t rows = n / 2 + rng() % (n / 3);
        auto H = qtest::random_matrix(rows, n, 0.12 + 0.1 * double(rng() % 3), rng);
        const auto truth = brute(H, nullptr);
        for (std::size_t D = 1; D <= n + 1; ++D) {
            auto r = min_kernel_weight_below(H, D, one_thread());
            const bool expect = truth.kernel && truth.kernel < D;
            ASSERT_EQ(r.status == KernelSearchStatus::Found, expect) << "t=" << t << " D=" << D;
            if (expect) {
                EXPECT_LT(r.support.size(), D);
                EXPECT_TRUE(H.syndrome_of(r.support).none());
            } else {
                EXPECT_EQ(r.status, KernelSearchStatus::NoneBelow);
            }
        }
        if (truth.kernel) {
            EXPECT_EQ(min_kernel_weight(H, n), truth.kernel);
        }
    }
}

TEST(Certify, LowerBoundMatchesBruteForceLogicalWeight) {
    std::mt19937_64 rng(32);
    int tested = 0;
    for (int t = 0; t < 40; ++t) {
        const std::size_t n = 14 + rng() % 11;
        auto [hx, hz] = qtest::random_css(n, 5 + rng() % 3, 5 + rng() % 3, rng);
        if (!product_is_zero(hx, hz)) continue;
        CssCode code(hx, hz);
        if (code.k() == 0) continue;
        const auto bx = brute(code.hz(), &code.row_x());
        const auto bz = brute(code.hx(), &code.row_z());
        std::size_t d = std::min(bx.logical ? bx.logical : SIZE_MAX, bz.logical ? bz.logical : SIZE_MAX);
        ASSERT_NE(d, SIZE_MAX);
        auto acc = certify_lower_bound(code, d, one_thread());
        EXPECT_EQ(acc.verdict, CertifyVerdict::Accepted);
        EXPECT_EQ(*code.dist_x.lower, d);
        auto rej = certify_lower_bound(code, d + 1, one_thread());
        ASSERT_EQ(rej.verdict, CertifyVerdict::Rejected);
        EXPECT_EQ(rej.logical.size(), d);
        ++tested;
    }
    EXPECT_GT(tested, 10);
}

TEST(Certify, ThreadCountDoesNotChangeVerdicts) {
    auto b = build_base(qtest::coefficients(qtest::table_rows()[1]));
    CssCode code(b.hx, b.hz);
    for (unsigned th : {1u, 2u, 4u}) {
        SearchBudget bu;
        bu.threads = th;
        EXPECT_EQ(certify_lower_bound(code, 6, bu).verdict, CertifyVerdict::Accepted);
        EXPECT_EQ(certify_lower_bound(code, 7, bu).verdict, CertifyVerdict::Rejected);
    }
}

TEST(Certify, BudgetExhaustionIsInconclusive) {
    auto b = build_base(qtest::coefficients(qtest::table_rows()[2]));
    CssCode code(b.hx, b.hz);
    SearchBudget bu;
    bu.max_nodes = 10;
    bu.threads = 1;
    auto r = certify_lower_bound(code, 6, bu);
    EXPECT_EQ(r.verdict, CertifyVerdict::Inconclusive);
    EXPECT_FALSE(code.dist_x.lower);
    EXPECT_EQ(min_kernel_weight_below(code.hx(), 6, bu).status, KernelSearchStatus::BudgetExhausted);
}

TEST(Certify, IdentityHasNoKernel) {
    std::vector<std::vector<std::size_t>> rows;
    for (std::size_t i = 0; i < 10; ++i) rows.push_back({i});
    SparseBinMatrix I(10, rows);
    for (std::size_t D = 1; D <= 11; ++D) EXPECT_EQ(min_kernel_weight_below(I, D).status, KernelSearchStatus::NoneBelow);
}

TEST(Certify, WitnessClassification) {
    auto b = qtest::f7_base();
    CssCode code(b.hx, b.hz);
    auto rej = certify_lower_bound(code, 5);
    ASSERT_EQ(rej.verdict, CertifyVerdict::Rejected);
    auto w = verify_witness(code, rej.side, rej.logical);
    EXPECT_TRUE(w.valid());
    auto& iv = rej.side == 'X' ? code.dist_x : code.dist_z;
    EXPECT_EQ(iv.upper, rej.logical.size());
    // a stabilizer is in the kernel but not a logical
    auto stab = verify_witness(code, 'X', code.hx().row(0));
    EXPECT_TRUE(stab.in_kernel);
    EXPECT_TRUE(stab.in_row_space);
    EXPECT_FALSE(stab.valid());
    // a single column is not in the kernel
    EXPECT_FALSE(verify_witness(code, 'Z', {3}).in_kernel);
    EXPECT_THROW(verify_witness(code, 'Y', {1}), FormatError);
    EXPECT_THROW(verify_witness(code, 'X', {1000}), FormatError);
}

TEST(Certify, WitnessFileRoundTrip) {
    WitnessFile w{'Z', 64, {0, 16, 32, 48}, {{64, 7}, {69, 3}}, {5}};
    std::stringstream ss;
    write_witness(ss, w);
    auto r = read_witness(ss);
    EXPECT_EQ(r.side, 'Z');
    EXPECT_EQ(r.support().size(), 9u);
    EXPECT_EQ(r.support()[0], 5u);
    EXPECT_EQ(r.support()[1], 64u * 64u + 7u);
    std::stringstream bad("pair 1 2\n");
    EXPECT_THROW(read_witness(bad), FormatError);
}

TEST(Certify, ManifestLoadsBaseAndMatrices) {
    const auto dir = std::filesystem::temp_directory_path() / "qcoset_manifest_test";
    std::filesystem::create_directories(dir);
    auto c = qtest::coefficients(qtest::table_rows()[0]);
    {
        std::ofstream f(dir / "f7.coeffs");
        write_coefficients(f, c);
        std::ofstream m(dir / "f7.code");
        m << "base f7.coeffs\n";
    }
    auto bundle = load_code((dir / "f7.code").string());
    EXPECT_EQ(bundle.code.n(), 42u);
    EXPECT_TRUE(bundle.base);
    {
        std::ofstream m(dir / "bad.code");
        m << "matrix x\n";
    }
    EXPECT_THROW(load_code((dir / "bad.code").string()), FormatError);
}
