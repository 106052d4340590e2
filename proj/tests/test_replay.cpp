#include <gtest/gtest.h>

#include "qcoset/replay.hpp"
#include "support.hpp"

using namespace qcoset;

namespace {

CssCode f7_code() {
    auto b = qtest::f7_base();
    return CssCode(b.hx, b.hz);
}

FailureDump blank(std::size_t n) {
    FailureDump d;
    d.n = n;
    d.true_x = d.true_z = d.est_x = d.est_z = BitVec(n);
    return d;
}

}  // namespace

TEST(Replay, StabilizerResidualIsDegenerate) {
    auto code = f7_code();
    auto d = blank(code.n());
    d.true_x = code.hx().row_bits(0);
    d.true_z = code.hz().row_bits(1);
    auto r = extract_logical(code, d);
    EXPECT_TRUE(r.degenerate);
    EXPECT_FALSE(r.x);
    EXPECT_FALSE(r.z);
}

TEST(Replay, LogicalResidualUpdatesUpperBound) {
    auto code = f7_code();
    CssCode probe = code;
    auto rej = certify_lower_bound(probe, 5);
    ASSERT_EQ(rej.verdict, CertifyVerdict::Rejected);
    auto d = blank(code.n());
    auto L = BitVec::from_support(code.n(), rej.logical);
    // split the logical between truth and estimate, plus a stabilizer on top
    const auto half = rej.logical.size() / 2;
    std::vector<std::size_t> a(rej.logical.begin(), rej.logical.begin() + static_cast<long>(half));
    BitVec ta = BitVec::from_support(code.n(), a);
    BitVec tb = L ^ ta;
    if (rej.side == 'X') {
        d.true_x = ta ^ code.hx().row_bits(2);
        d.est_x = tb ^ code.hx().row_bits(2);
    } else {
        d.true_z = ta;
        d.est_z = tb;
    }
    auto r = extract_logical(code, d);
    EXPECT_FALSE(r.degenerate);
    const auto& w = rej.side == 'X' ? r.x : r.z;
    ASSERT_TRUE(w);
    EXPECT_TRUE(w->valid());
    EXPECT_EQ(w->weight, rej.logical.size());
    const auto& iv = rej.side == 'X' ? code.dist_x : code.dist_z;
    ASSERT_TRUE(iv.upper);
    EXPECT_EQ(*iv.upper, rej.logical.size());
}

TEST(Replay, SyndromeMismatchThrows) {
    auto code = f7_code();
    auto d = blank(code.n());
    d.true_x.set(0);
    EXPECT_THROW(extract_logical(code, d), HypothesisError);
    auto e = blank(code.n() - 1);
    EXPECT_THROW(extract_logical(code, e), FormatError);
}
