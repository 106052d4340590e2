#pragma once

// Monte Carlo frame-error-rate runs: deterministic per-trial seeding, chunked
// parallel execution, failure-target stopping, atomic checkpoints and plot data.

#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "qcoset/css.hpp"
#include "qcoset/decode.hpp"
#include "qcoset/error.hpp"

namespace qcoset {

/// Binary entropy in bits.
inline double h2(double p) {
    if (p <= 0 || p >= 1) return 0;
    return -p * std::log2(p) - (1 - p) * std::log2(1 - p);
}

/// Depolarizing hashing bound: p with 1 - h2(p) - p log2 3 = R, for R in [0,1).
inline double hashing_threshold(double R) {
    if (!(R >= 0 && R < 1)) throw Error("rate must lie in [0,1)");
    auto f = [&](double p) { return 1 - h2(p) - p * std::log2(3.0) - R; };
    double lo = 0, hi = 0.75;  // f is decreasing on (0, 3/4)
    for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) > 0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

struct Interval {
    double lo = 0, hi = 1;
};

/// Wilson score interval for k successes in n trials (95% by default).
inline Interval wilson(std::uint64_t k, std::uint64_t n, double z = 1.959963984540054) {
    if (n == 0) return {0, 1};
    const double N = double(n), ph = double(k) / N, z2 = z * z;
    const double den = 1 + z2 / N;
    const double centre = (ph + z2 / (2 * N)) / den;
    const double half = z * std::sqrt(ph * (1 - ph) / N + z2 / (4 * N * N)) / den;
    return {k == 0 ? 0.0 : std::max(0.0, centre - half), k == n ? 1.0 : std::min(1.0, centre + half)};
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Seed of one trial; independent of thread count and chunking.
inline std::uint64_t trial_seed(std::uint64_t master, std::size_t point, std::uint64_t trial) {
    return splitmix64(splitmix64(master ^ splitmix64(point + 1)) ^ trial);
}

struct FerRecord {
    double p = 0;
    std::uint64_t trials = 0;
    std::uint64_t failures = 0;           // after post-processing
    std::uint64_t bp_failures = 0;        // BP alone: no convergence, or converged to a logical error
    std::uint64_t logical_failures = 0;   // final estimate matches the syndrome but differs by a logical
    std::uint64_t syndrome_failures = 0;  // final estimate does not match the syndrome
    std::uint64_t bp_logical = 0;         // BP converged to a logical error
    std::uint64_t fallback_converged = 0;
    std::array<std::uint64_t, kNumRules> corrections{};  // pp-corrected successes per rule
    double seconds = 0;
    bool complete = false;
    std::uint64_t seed = 0;

    double fer() const { return trials ? double(failures) / double(trials) : 0.0; }
    Interval ci() const { return wilson(failures, trials); }
    /// bp_failures - sum(corrections) == failures
    bool accounting_ok() const {
        std::uint64_t c = 0;
        for (auto x : corrections) c += x;
        return bp_failures >= c && bp_failures - c == failures && failures == logical_failures + syndrome_failures;
    }
};

struct FerStop {
    std::uint64_t max_trials = 10000;
    std::uint64_t failure_target = 0;  // 0 = run all trials
};

struct FerOptions {
    unsigned threads = 0;
    std::uint64_t chunk = 256;
    std::string checkpoint;       // empty = none
    std::ostream* dumps = nullptr;  // failure dumps
    std::size_t max_dumps = 100;
    std::function<void(const FerRecord&)> progress;
};

/// Result of one trial, reduced into a FerRecord in trial order.
struct TrialResult {
    bool bp_fail = false, fail = false, logical = false, syndrome = false, bp_logical = false, fallback = false;
    int rule = 0;
};

inline TrialResult run_trial(const CssCode& code, Decoder& dec, double p, std::uint64_t seed, FailureDump* dump) {
    std::mt19937_64 rng(seed);
    const auto e = sample_error(DepolarizingPrior(p), code.n(), rng);
    const auto [sx, sz] = syndromes(code, e.x, e.z);
    auto out = dec.decode(sx, sz);
    TrialResult t;
    t.fallback = out.fallback_used && out.status == DecodeStatus::BpConverged;
    if (out.status != DecodeStatus::SyndromeFailure) {
        // every claimed success must reproduce the syndrome
        if (!(code.hx().multiply(out.ez) == sx) || !(code.hz().multiply(out.ex) == sz))
            throw Error("decoder returned an estimate that does not match the syndrome");
    }
    const bool logical = out.status != DecodeStatus::SyndromeFailure &&
                         classify_outcome(code, e.x, e.z, out.ex, out.ez) == DecodeStatus::LogicalFailure;
    if (out.status == DecodeStatus::BpConverged) {
        t.bp_fail = logical;
        t.bp_logical = logical;
    } else {
        t.bp_fail = true;
    }
    t.syndrome = out.status == DecodeStatus::SyndromeFailure;
    t.logical = logical;
    t.fail = t.syndrome || t.logical;
    if (out.status == DecodeStatus::PpCorrected && !logical) t.rule = out.rule;
    if (t.fail && dump) {
        dump->trial_seed = seed;
        dump->p = p;
        dump->n = code.n();
        dump->true_x = e.x;
        dump->true_z = e.z;
        dump->syn_x = sx;
        dump->syn_z = sz;
        dump->est_x = out.ex;
        dump->est_z = out.ez;
        dump->status = logical ? to_string(DecodeStatus::LogicalFailure) : to_string(out.status);
        dump->trace = out.trace;
        dump->llr_x = out.llr_x;
        dump->llr_z = out.llr_z;
    }
    return t;
}

inline void accumulate(FerRecord& r, const TrialResult& t) {
    ++r.trials;
    r.bp_failures += t.bp_fail;
    r.failures += t.fail;
    r.logical_failures += t.logical;
    r.syndrome_failures += t.syndrome;
    r.bp_logical += t.bp_logical;
    r.fallback_converged += t.fallback;
    if (t.rule) ++r.corrections[static_cast<std::size_t>(t.rule - 1)];
}

// ---------------------------------------------------------------------------
// Checkpoints

inline void write_records(std::ostream& os, const std::vector<FerRecord>& recs) {
    os << "# p trials failures bp_failures logical_failures syndrome_failures bp_logical fallback_converged";
    for (int i = 1; i <= kNumRules; ++i) os << " rule" << i;
    os << " seconds complete seed\n";
    os << std::setprecision(17);
    for (const auto& r : recs) {
        os << r.p << ' ' << r.trials << ' ' << r.failures << ' ' << r.bp_failures << ' ' << r.logical_failures << ' '
           << r.syndrome_failures << ' ' << r.bp_logical << ' ' << r.fallback_converged;
        for (auto c : r.corrections) os << ' ' << c;
        os << ' ' << r.seconds << ' ' << int(r.complete) << ' ' << r.seed << '\n';
    }
}

inline std::vector<FerRecord> read_records(std::istream& is) {
    std::vector<FerRecord> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        FerRecord r;
        int complete = 0;
        ls >> r.p >> r.trials >> r.failures >> r.bp_failures >> r.logical_failures >> r.syndrome_failures >>
            r.bp_logical >> r.fallback_converged;
        for (auto& c : r.corrections) ls >> c;
        ls >> r.seconds >> complete >> r.seed;
        if (!ls) throw FormatError("fer record: malformed line '" + line + "'");
        r.complete = complete != 0;
        out.push_back(r);
    }
    return out;
}

/// Write to a temporary file and rename over the target.
inline void write_checkpoint(const std::string& path, const std::vector<FerRecord>& recs) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp);
        if (!f) throw Error("cannot write checkpoint " + tmp);
        write_records(f, recs);
        if (!f) throw Error("failed writing checkpoint " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Runner

inline std::vector<FerRecord> run_fer(const CssCode& code, const std::vector<double>& ps, const FerStop& stop,
                                      const DecoderConfig& cfg, std::uint64_t seed, const FerOptions& opt = {}) {
    if (opt.chunk == 0) throw Error("chunk size must be positive");
    std::vector<FerRecord> recs(ps.size());
    for (std::size_t i = 0; i < ps.size(); ++i) {
        recs[i].p = ps[i];
        recs[i].seed = seed;
    }
    if (!opt.checkpoint.empty() && std::filesystem::exists(opt.checkpoint)) {
        std::ifstream f(opt.checkpoint);
        auto prev = read_records(f);
        for (std::size_t i = 0; i < prev.size() && i < recs.size(); ++i) {
            if (prev[i].p != ps[i] || prev[i].seed != seed)
                throw Error("checkpoint does not match the requested points or seed");
            recs[i] = prev[i];
        }
    }
    const unsigned T = std::max(1u, opt.threads ? opt.threads : std::thread::hardware_concurrency());
    std::mutex dump_mu;
    std::size_t dumps_written = 0;

    for (std::size_t pi = 0; pi < ps.size(); ++pi) {
        FerRecord& rec = recs[pi];
        if (rec.complete) continue;
        std::vector<std::unique_ptr<Decoder>> decs;
        for (unsigned t = 0; t < T; ++t) {
            decs.push_back(std::make_unique<Decoder>(code, DepolarizingPrior(ps[pi]), cfg));
            if (t) decs[t]->share_banks(*decs[0]);
        }
        auto done = [&] {
            return rec.trials >= stop.max_trials || (stop.failure_target && rec.failures >= stop.failure_target);
        };
        while (!done()) {
            const auto t0 = std::chrono::steady_clock::now();
            const std::uint64_t begin = rec.trials;
            const std::uint64_t len = std::min<std::uint64_t>(opt.chunk, stop.max_trials - begin);
            std::vector<TrialResult> res(len);
            std::atomic<std::uint64_t> next{0};
            std::exception_ptr err;
            std::mutex err_mu;
            auto worker = [&](unsigned tid) {
                try {
                    FailureDump dump;
                    for (std::uint64_t k; (k = next.fetch_add(1)) < len;) {
                        const bool want = opt.dumps != nullptr;
                        res[k] = run_trial(code, *decs[tid], ps[pi], trial_seed(seed, pi, begin + k), want ? &dump : nullptr);
                        if (want && res[k].fail) {
                            std::lock_guard lk(dump_mu);
                            if (dumps_written < opt.max_dumps) {
                                write_dump(*opt.dumps, dump);
                                ++dumps_written;
                            }
                        }
                    }
                } catch (...) {
                    std::lock_guard lk(err_mu);
                    if (!err) err = std::current_exception();
                    next = len;
                }
            };
            std::vector<std::thread> pool;
            for (unsigned t = 1; t < T; ++t) pool.emplace_back(worker, t);
            worker(0);
            for (auto& th : pool) th.join();
            if (err) std::rethrow_exception(err);
            for (const auto& t : res) accumulate(rec, t);
            rec.seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            if (!rec.accounting_ok()) throw Error("failure accounting mismatch");
            if (!opt.checkpoint.empty()) write_checkpoint(opt.checkpoint, recs);
            if (opt.progress) opt.progress(rec);
        }
        rec.complete = true;
        if (!opt.checkpoint.empty()) write_checkpoint(opt.checkpoint, recs);
    }
    return recs;
}

// ---------------------------------------------------------------------------
// Plot data: one row per point with the Wilson interval

inline void emit_plot_data(std::ostream& os, const std::vector<FerRecord>& recs) {
    os << "# p trials failures fer ci_lo ci_hi bp_failures\n" << std::setprecision(10);
    for (const auto& r : recs) {
        const auto ci = r.ci();
        os << r.p << ' ' << r.trials << ' ' << r.failures << ' ' << r.fer() << ' ' << ci.lo << ' ' << ci.hi << ' '
           << r.bp_failures << '\n';
    }
}

struct PlotRow {
    double p = 0, fer = 0, lo = 0, hi = 0;
    std::uint64_t trials = 0, failures = 0, bp_failures = 0;
};

inline std::vector<PlotRow> parse_plot_data(std::istream& is) {
    std::vector<PlotRow> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        PlotRow r;
        ls >> r.p >> r.trials >> r.failures >> r.fer >> r.lo >> r.hi >> r.bp_failures;
        if (!ls) throw FormatError("plot data: malformed line '" + line + "'");
        out.push_back(r);
    }
    return out;
}

}  // namespace qcoset
