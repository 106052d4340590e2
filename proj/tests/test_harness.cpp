#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "qcoset/harness.hpp"
#include "support.hpp"

using namespace qcoset;

namespace {

CssCode f7_code() {
    auto b = qtest::f7_base();
    return CssCode(b.hx, b.hz);
}

void expect_same(const FerRecord& a, const FerRecord& b) {
    EXPECT_EQ(a.trials, b.trials);
    EXPECT_EQ(a.failures, b.failures);
    EXPECT_EQ(a.bp_failures, b.bp_failures);
    EXPECT_EQ(a.logical_failures, b.logical_failures);
    EXPECT_EQ(a.syndrome_failures, b.syndrome_failures);
    EXPECT_EQ(a.bp_logical, b.bp_logical);
    EXPECT_EQ(a.fallback_converged, b.fallback_converged);
    EXPECT_EQ(a.corrections, b.corrections);
}

}  // namespace

TEST(Harness, HashingThreshold) {
    EXPECT_NEAR(hashing_threshold(0.0), 0.18929, 1e-4);
    for (double R : {0.1, 0.25, 0.5, 0.75}) {
        const double p = hashing_threshold(R);
        EXPECT_NEAR(1 - h2(p) - p * std::log2(3.0), R, 1e-9);
    }
    EXPECT_GT(hashing_threshold(0.1), hashing_threshold(0.4));
    EXPECT_THROW(hashing_threshold(1.0), Error);
}

TEST(Harness, WilsonInterval) {
    auto ci = wilson(0, 100);
    EXPECT_EQ(ci.lo, 0.0);
    EXPECT_NEAR(ci.hi, 0.0370, 1e-4);
    auto mid = wilson(50, 100);
    EXPECT_NEAR(mid.lo, 0.4038, 1e-4);
    EXPECT_NEAR(mid.hi, 0.5962, 1e-4);
    auto all = wilson(100, 100);
    EXPECT_EQ(all.hi, 1.0);
    EXPECT_EQ(wilson(0, 0).lo, 0.0);
    EXPECT_EQ(wilson(0, 0).hi, 1.0);
}

TEST(Harness, TrialSeedsAreDistinct) {
    std::set<std::uint64_t> s;
    for (std::size_t p = 0; p < 4; ++p)
        for (std::uint64_t t = 0; t < 1000; ++t) s.insert(trial_seed(42, p, t));
    EXPECT_EQ(s.size(), 4000u);
    EXPECT_EQ(trial_seed(42, 1, 7), trial_seed(42, 1, 7));
    EXPECT_NE(trial_seed(42, 1, 7), trial_seed(43, 1, 7));
}

TEST(Harness, ResultsDoNotDependOnThreadCountOrChunk) {
    auto code = f7_code();
    const std::vector<double> ps{0.08, 0.12};
    FerStop stop{600, 0};
    FerOptions o1;
    o1.threads = 1;
    o1.chunk = 600;
    FerOptions o3;
    o3.threads = 3;
    o3.chunk = 77;
    auto a = run_fer(code, ps, stop, DecoderConfig{}, 11, o1);
    auto b = run_fer(code, ps, stop, DecoderConfig{}, 11, o3);
    ASSERT_EQ(a.size(), 2u);
    for (std::size_t i = 0; i < 2; ++i) {
        expect_same(a[i], b[i]);
        EXPECT_TRUE(a[i].accounting_ok());
        EXPECT_TRUE(a[i].complete);
        EXPECT_EQ(a[i].trials, 600u);
    }
    EXPECT_GT(a[1].bp_failures, 0u);
}

TEST(Harness, FailureTargetStopsAtChunkBoundary) {
    auto code = f7_code();
    FerOptions o;
    o.threads = 1;
    o.chunk = 50;
    auto r = run_fer(code, {0.15}, FerStop{100000, 5}, DecoderConfig{}, 3, o);
    EXPECT_GE(r[0].failures, 5u);
    EXPECT_EQ(r[0].trials % 50, 0u);
    EXPECT_LT(r[0].trials, 100000u);
}

TEST(Harness, CheckpointResumeMatchesStraightRun) {
    auto code = f7_code();
    const auto path = (std::filesystem::temp_directory_path() / "qcoset_ckpt_test.txt").string();
    std::filesystem::remove(path);
    const std::vector<double> ps{0.1};
    FerOptions o;
    o.threads = 1;
    o.chunk = 100;
    o.checkpoint = path;
    auto first = run_fer(code, ps, FerStop{300, 0}, DecoderConfig{}, 5, o);
    // a later run with a larger budget picks up the saved counts
    std::vector<FerRecord> saved;
    {
        std::ifstream f(path);
        saved = read_records(f);
    }
    ASSERT_EQ(saved.size(), 1u);
    expect_same(saved[0], first[0]);
    saved[0].complete = false;
    write_checkpoint(path, saved);
    auto resumed = run_fer(code, ps, FerStop{500, 0}, DecoderConfig{}, 5, o);
    FerOptions plain = o;
    plain.checkpoint.clear();
    auto straight = run_fer(code, ps, FerStop{500, 0}, DecoderConfig{}, 5, plain);
    expect_same(resumed[0], straight[0]);
    EXPECT_THROW(run_fer(code, ps, FerStop{500, 0}, DecoderConfig{}, 6, o), Error);
    std::filesystem::remove(path);
}

TEST(Harness, AccountingIdentity) {
    FerRecord r;
    TrialResult ok;
    TrialResult rescued;
    rescued.bp_fail = true;
    rescued.rule = 3;
    TrialResult lost;
    lost.bp_fail = lost.fail = lost.syndrome = true;
    TrialResult wrong;
    wrong.bp_fail = wrong.fail = wrong.logical = wrong.bp_logical = true;
    for (const auto& t : {ok, rescued, lost, wrong, rescued}) accumulate(r, t);
    EXPECT_EQ(r.trials, 5u);
    EXPECT_EQ(r.bp_failures, 4u);
    EXPECT_EQ(r.failures, 2u);
    EXPECT_EQ(r.corrections[2], 2u);
    EXPECT_TRUE(r.accounting_ok());
    r.failures = 3;
    EXPECT_FALSE(r.accounting_ok());
}

TEST(Harness, RecordAndPlotRoundTrip) {
    FerRecord r;
    r.p = 0.0625;
    r.trials = 1000;
    r.failures = 7;
    r.bp_failures = 9;
    r.syndrome_failures = 7;
    r.corrections[0] = 2;
    r.seconds = 1.5;
    r.complete = true;
    r.seed = 99;
    std::stringstream ss;
    write_records(ss, {r});
    auto back = read_records(ss);
    ASSERT_EQ(back.size(), 1u);
    expect_same(back[0], r);
    EXPECT_EQ(back[0].p, r.p);
    EXPECT_EQ(back[0].seed, 99u);
    EXPECT_TRUE(back[0].complete);

    std::stringstream pd;
    emit_plot_data(pd, {r});
    auto rows = parse_plot_data(pd);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].trials, 1000u);
    EXPECT_EQ(rows[0].failures, 7u);
    EXPECT_NEAR(rows[0].fer, 0.007, 1e-12);
    EXPECT_NEAR(rows[0].lo, r.ci().lo, 1e-9);
    EXPECT_NEAR(rows[0].hi, r.ci().hi, 1e-9);
}

TEST(Harness, DumpsAreWrittenForFailures) {
    auto code = f7_code();
    std::stringstream dumps;
    FerOptions o;
    o.threads = 1;
    o.dumps = &dumps;
    o.max_dumps = 3;
    auto r = run_fer(code, {0.2}, FerStop{200, 0}, DecoderConfig{}, 8, o);
    ASSERT_GE(r[0].failures, 3u);
    int count = 0;
    while (auto d = read_dump(dumps)) {
        ++count;
        EXPECT_EQ(d->n, code.n());
        auto [sx, sz] = syndromes(code, d->true_x, d->true_z);
        EXPECT_EQ(sx, d->syn_x);
        EXPECT_EQ(sz, d->syn_z);
    }
    EXPECT_EQ(count, 3);
}
