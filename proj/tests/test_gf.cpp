#include <gtest/gtest.h>

#include "qcoset/gf.hpp"

using namespace qcoset;

namespace {

void check_axioms(const Field& F) {
    const std::uint32_t q = F.size();
    for (std::uint32_t a = 0; a < q; ++a) {
        const FieldElem x(a);
        EXPECT_EQ(F.add(x, F.neg(x)), F.zero());
        EXPECT_EQ(F.mul(x, F.one()), x);
        if (a) {
            EXPECT_EQ(F.mul(x, F.inv(x)), F.one());
        }
        for (std::uint32_t b = 0; b < q; ++b) {
            const FieldElem y(b);
            EXPECT_EQ(F.add(x, y), F.add(y, x));
            EXPECT_EQ(F.mul(x, y), F.mul(y, x));
            for (std::uint32_t c = 0; c < q; c += (q > 20 ? 3 : 1)) {
                const FieldElem z(c);
                ASSERT_EQ(F.mul(x, F.add(y, z)), F.add(F.mul(x, y), F.mul(x, z)));
                ASSERT_EQ(F.mul(F.mul(x, y), z), F.mul(x, F.mul(y, z)));
            }
        }
    }
}

}  // namespace

TEST(Gf, PrimeFieldArithmeticMatchesIntegers) {
    Field F(7, 1);
    for (std::uint32_t a = 0; a < 7; ++a)
        for (std::uint32_t b = 0; b < 7; ++b) {
            EXPECT_EQ(F.add(FieldElem(a), FieldElem(b)).value, (a + b) % 7);
            EXPECT_EQ(F.mul(FieldElem(a), FieldElem(b)).value, (a * b) % 7);
        }
}

TEST(Gf, AxiomsHoldExhaustively) {
    for (auto [p, e] : {std::pair{7u, 1u}, {3u, 2u}, {2u, 4u}, {13u, 1u}, {5u, 2u}}) {
        SCOPED_TRACE(std::to_string(p) + "^" + std::to_string(e));
        check_axioms(Field(p, e));
    }
}

TEST(Gf, DefaultModuli) {
    EXPECT_EQ(Field::default_modulus(2, 4), (std::vector<std::uint32_t>{1, 1, 0, 0, 1}));  // x^4 + x + 1
    EXPECT_EQ(Field::default_modulus(3, 2), (std::vector<std::uint32_t>{1, 0, 1}));        // x^2 + 1
}

TEST(Gf, ExtensionEncoding) {
    // F16 with x^4+x+1: alpha = 2, alpha^4 = alpha + 1 = 3
    Field F(2, 4);
    EXPECT_EQ(F.pow(FieldElem(2), 4).value, 3u);
    EXPECT_EQ(F.add(FieldElem(5), FieldElem(3)).value, 6u);  // digitwise xor
    // F9 with alpha^2 + 1: alpha = 3, alpha^2 = -1 = 2
    Field G(3, 2, {1, 0, 1});
    EXPECT_EQ(G.mul(FieldElem(3), FieldElem(3)).value, 2u);
}

TEST(Gf, GeneratorAndLogs) {
    for (auto [p, e] : {std::pair{7u, 1u}, {2u, 4u}, {3u, 2u}, {31u, 1u}}) {
        Field F(p, e);
        EXPECT_EQ(F.order(F.generator()), F.size() - 1);
        for (std::uint32_t a = 1; a < F.size(); ++a) EXPECT_EQ(F.pow(F.generator(), F.log(FieldElem(a))).value, a);
    }
}

TEST(Gf, ReducibleModulusRejected) {
    EXPECT_THROW(Field(2, 2, {1, 0, 1}), Error);  // x^2 + 1 = (x+1)^2 over F2
    EXPECT_THROW(Field(6, 1), Error);
}

TEST(Gf, SubgroupCosets) {
    Field F(2, 4);
    Subgroup M(F, 5);
    auto el = M.elements();
    ASSERT_EQ(el.size(), 5u);
    EXPECT_TRUE(std::is_sorted(el.begin(), el.end()));
    for (auto x : el) {
        EXPECT_EQ(F.pow(x, 5), F.one());
        for (auto y : el) EXPECT_TRUE(M.contains(F.mul(x, y)));
    }
    for (std::size_t i = 0; i < el.size(); ++i) EXPECT_EQ(M.index_of(el[i]), i);
    EXPECT_EQ(M.num_cosets(), 3u);
    for (std::uint32_t a = 1; a < 16; ++a)
        for (auto h : el) EXPECT_EQ(M.coset_id(FieldElem(a)), M.coset_id(F.mul(FieldElem(a), h)));
    EXPECT_THROW(M.coset_id(F.zero()), Error);
    EXPECT_THROW(Subgroup(F, 4), Error);
}
