#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "qcoset/certify.hpp"
#include "qcoset/decode.hpp"
#include "support.hpp"

using namespace qcoset;

namespace {

BitVec bits(std::size_t n, std::vector<std::size_t> s) { return BitVec::from_support(n, s); }

CssCode f7_code() {
    auto b = qtest::f7_base();
    return CssCode(b.hx, b.hz);
}

DecodeStatus run_once(const CssCode& code, Decoder& dec, const BitVec& ex, const BitVec& ez, DecodeOutcome* keep = nullptr) {
    auto [sx, sz] = syndromes(code, ex, ez);
    auto out = dec.decode(sx, sz);
    if (keep) *keep = out;
    if (!is_success(out.status)) return out.status;
    const auto c = classify_outcome(code, ex, ez, out.ex, out.ez);
    return c == DecodeStatus::BpConverged ? out.status : c;
}

}  // namespace

TEST(Decode, ZeroSyndromeGivesZeroEstimate) {
    auto code = f7_code();
    Decoder dec(code, DepolarizingPrior(0.05), DecoderConfig{});
    BitVec z(code.n());
    DecodeOutcome out;
    EXPECT_EQ(run_once(code, dec, z, z, &out), DecodeStatus::BpConverged);
    EXPECT_TRUE(out.ex.none());
    EXPECT_TRUE(out.ez.none());
    EXPECT_FALSE(out.fallback_used);
}

TEST(Decode, EverySingleQubitErrorIsCorrected) {
    auto code = f7_code();
    Decoder dec(code, DepolarizingPrior(0.05), DecoderConfig{});
    for (std::size_t v = 0; v < code.n(); ++v) {
        for (int pauli = 1; pauli <= 3; ++pauli) {
            BitVec ex(code.n()), ez(code.n());
            if (pauli & 1) ex.set(v);
            if (pauli & 2) ez.set(v);
            EXPECT_TRUE(is_success(run_once(code, dec, ex, ez))) << "qubit " << v << " pauli " << pauli;
        }
    }
}

TEST(Decode, EstimatesReproduceTheSyndromeOnSuccess) {
    auto code = f7_code();
    Decoder dec(code, DepolarizingPrior(0.06), DecoderConfig{});
    std::mt19937_64 rng(5);
    for (int t = 0; t < 300; ++t) {
        auto e = sample_error(DepolarizingPrior(0.06), code.n(), rng);
        auto [sx, sz] = syndromes(code, e.x, e.z);
        auto out = dec.decode(sx, sz);
        if (out.status == DecodeStatus::SyndromeFailure) continue;
        EXPECT_EQ(code.hx().multiply(out.ez), sx);
        EXPECT_EQ(code.hz().multiply(out.ex), sz);
        if (out.status == DecodeStatus::PpCorrected) {
            EXPECT_GE(out.rule, 1);
            EXPECT_LE(out.rule, kNumRules);
        }
    }
}

TEST(Decode, DecodingIsDeterministic) {
    auto code = f7_code();
    std::mt19937_64 rng(6);
    for (int t = 0; t < 50; ++t) {
        auto e = sample_error(DepolarizingPrior(0.1), code.n(), rng);
        auto [sx, sz] = syndromes(code, e.x, e.z);
        Decoder a(code, DepolarizingPrior(0.1), DecoderConfig{});
        Decoder b(code, DepolarizingPrior(0.1), DecoderConfig{});
        auto oa = a.decode(sx, sz);
        auto ob = b.decode(sx, sz);
        auto oa2 = a.decode(sx, sz);
        EXPECT_EQ(oa.ex, ob.ex);
        EXPECT_EQ(oa.ez, ob.ez);
        EXPECT_EQ(oa.status, ob.status);
        EXPECT_EQ(oa.iterations, ob.iterations);
        EXPECT_EQ(oa.ex, oa2.ex);
        EXPECT_EQ(oa.ez, oa2.ez);
    }
}

TEST(Decode, DampingDoesNotMoveAFixedPoint) {
    auto code = f7_code();
    BpEngine e(code, DepolarizingPrior(0.05), 30);
    BitVec sx(code.hx().rows()), sz(code.hz().rows());
    e.set_syndromes(sx, sz);
    for (int i = 0; i < 300; ++i) e.step(0.0);
    e.refresh();
    BpEngine damped = e, plain = e;
    damped.set_syndromes(sx, sz);
    plain.set_syndromes(sx, sz);
    damped.step_vars(0.3);
    plain.step_vars(0.0);
    ASSERT_EQ(damped.v2c_x().size(), plain.v2c_x().size());
    for (std::size_t i = 0; i < plain.v2c_x().size(); ++i) {
        EXPECT_NEAR(damped.v2c_x()[i], plain.v2c_x()[i], 1e-9);
        EXPECT_NEAR(plain.v2c_x()[i], e.v2c_x()[i], 1e-9);
    }
    for (std::size_t i = 0; i < plain.v2c_z().size(); ++i) EXPECT_NEAR(damped.v2c_z()[i], plain.v2c_z()[i], 1e-9);
}

TEST(Decode, DampingIsAConvexCombination) {
    auto code = f7_code();
    BpEngine e(code, DepolarizingPrior(0.05), 30);
    BitVec sx(code.hx().rows()), sz(code.hz().rows());
    sx.set(0);
    sz.set(3);
    e.set_syndromes(sx, sz);
    e.step(0.0);
    e.refresh();
    const auto before = e.v2c_x();
    BpEngine damped = e, plain = e;
    damped.set_syndromes(sx, sz);
    plain.set_syndromes(sx, sz);
    damped.step_vars(0.3);
    plain.step_vars(0.0);
    for (std::size_t i = 0; i < before.size(); ++i)
        EXPECT_NEAR(damped.v2c_x()[i], 0.3 * before[i] + 0.7 * plain.v2c_x()[i], 1e-9);
}

TEST(Decode, BpOnlyNeverReportsPostProcessing) {
    auto code = f7_code();
    std::mt19937_64 rng(7);
    for (int t = 0; t < 100; ++t) {
        auto e = sample_error(DepolarizingPrior(0.12), code.n(), rng);
        auto [sx, sz] = syndromes(code, e.x, e.z);
        auto out = bp_decode(code, sx, sz, DepolarizingPrior(0.12), DecoderConfig{});
        EXPECT_TRUE(out.status == DecodeStatus::BpConverged || out.status == DecodeStatus::SyndromeFailure);
        EXPECT_EQ(out.status == DecodeStatus::BpConverged, out.residual_unsat == 0);
    }
}

TEST(Decode, ClassifyOutcome) {
    auto code = f7_code();
    const std::size_t n = code.n();
    BitVec z(n);
    EXPECT_EQ(classify_outcome(code, z, z, z, z), DecodeStatus::BpConverged);
    // stabilizer residual is a success
    auto stab = code.hx().row_bits(0);
    EXPECT_EQ(classify_outcome(code, stab, z, z, z), DecodeStatus::BpConverged);
    // logical residual
    CssCode c2 = code;
    auto rej = certify_lower_bound(c2, 5);
    ASSERT_EQ(rej.verdict, CertifyVerdict::Rejected);
    auto L = BitVec::from_support(n, rej.logical);
    const bool xs = rej.side == 'X';
    EXPECT_EQ(classify_outcome(code, xs ? L : z, xs ? z : L, z, z), DecodeStatus::LogicalFailure);
    // non-kernel residual
    EXPECT_EQ(classify_outcome(code, bits(n, {0}), z, z, z), DecodeStatus::SyndromeFailure);
}

TEST(Decode, SampleErrorFrequencies) {
    std::mt19937_64 rng(8);
    const std::size_t n = 200000;
    const double p = 0.3;
    auto e = sample_error(DepolarizingPrior(p), n, rng);
    std::size_t x = 0, y = 0, z = 0;
    for (std::size_t v = 0; v < n; ++v) {
        const bool a = e.x.get(v), b = e.z.get(v);
        x += a && !b;
        y += a && b;
        z += !a && b;
    }
    const double mean = n * p / 3, sd = std::sqrt(n * (p / 3) * (1 - p / 3));
    for (auto c : {x, y, z}) EXPECT_NEAR(double(c), mean, 5 * sd);
    EXPECT_TRUE(sample_error(DepolarizingPrior(0), 100, rng).x.none());
    EXPECT_THROW(DepolarizingPrior(1.0), Error);
}

TEST(Decode, ConfigRoundTrip) {
    DecoderConfig c;
    c.damping = 0.25;
    c.fallback = false;
    c.rule_mask = 0x5A;
    c.circulant_size = 64;
    std::stringstream ss;
    write_config(ss, c);
    auto r = read_config(ss);
    EXPECT_EQ(r.damping, 0.25);
    EXPECT_FALSE(r.fallback);
    EXPECT_EQ(r.rule_mask, 0x5Au);
    EXPECT_EQ(r.circulant_size, 64u);
    EXPECT_EQ(r.max_correction_weight, c.max_correction_weight);
    std::stringstream bad("no_such_key = 3\n");
    EXPECT_THROW(read_config(bad), FormatError);
    std::stringstream bad2("damping = 1.5\n");
    EXPECT_THROW(read_config(bad2), Error);
    std::stringstream bad3("fallback = maybe\n");
    EXPECT_THROW(read_config(bad3), FormatError);
}

TEST(Decode, EveryRuleAloneKeepsTheSyndromeContract) {
    auto code = f7_code();
    std::mt19937_64 rng(9);
    for (int rule = 1; rule <= kNumRules; ++rule) {
        DecoderConfig cfg;
        cfg.max_iterations = 5;
        cfg.fallback = false;
        cfg.rule_mask = 1u << (rule - 1);
        Decoder dec(code, DepolarizingPrior(0.1), cfg);
        for (int t = 0; t < 40; ++t) {
            auto e = sample_error(DepolarizingPrior(0.1), code.n(), rng);
            auto [sx, sz] = syndromes(code, e.x, e.z);
            auto out = dec.decode(sx, sz);
            if (out.status == DecodeStatus::PpCorrected) {
                EXPECT_EQ(out.rule, rule);
                EXPECT_EQ(code.hx().multiply(out.ez), sx);
                EXPECT_EQ(code.hz().multiply(out.ex), sz);
            }
        }
    }
}

TEST(Decode, DumpRoundTrip) {
    FailureDump d;
    d.trial_seed = 123456789012345ull;
    d.p = 0.07;
    d.n = 10;
    d.true_x = bits(10, {1, 4});
    d.true_z = bits(10, {9});
    d.syn_x = bits(5, {0});
    d.syn_z = BitVec(5);
    d.est_x = BitVec(10);
    d.est_z = bits(10, {2});
    d.status = "logical-failure";
    d.trace = {"r1:fail", "r2:ok"};
    d.llr_x = {1.5, -0.25, 3e-5};
    d.llr_z = {};
    std::stringstream ss;
    write_dump(ss, d);
    write_dump(ss, d);
    for (int i = 0; i < 2; ++i) {
        auto r = read_dump(ss);
        ASSERT_TRUE(r);
        EXPECT_EQ(r->trial_seed, d.trial_seed);
        EXPECT_EQ(r->p, d.p);
        EXPECT_EQ(r->true_x, d.true_x);
        EXPECT_EQ(r->true_z, d.true_z);
        EXPECT_EQ(r->syn_x, d.syn_x);
        EXPECT_EQ(r->est_z, d.est_z);
        EXPECT_EQ(r->status, d.status);
        EXPECT_EQ(r->trace, d.trace);
        EXPECT_EQ(r->llr_x, d.llr_x);
        EXPECT_TRUE(r->llr_z.empty());
    }
    EXPECT_FALSE(read_dump(ss));
}
