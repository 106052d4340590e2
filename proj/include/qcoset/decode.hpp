#pragma once

// Joint log-domain BP for CSS syndrome decoding on the depolarizing channel,
// with a zero-damping fallback and a deterministic post-processing ladder.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "qcoset/binmat.hpp"
#include "qcoset/css.hpp"
#include "qcoset/error.hpp"

namespace qcoset {

struct DepolarizingPrior {
    double p = 0;
    explicit DepolarizingPrior(double p_ = 0) : p(p_) {
        if (!(p >= 0 && p < 1)) throw Error("depolarizing probability must lie in [0,1)");
    }
    double pI() const { return 1 - p; }
    double pX() const { return p / 3; }
    double pY() const { return p / 3; }
    double pZ() const { return p / 3; }
};

struct ErrorPair {
    BitVec x, z;  // x: X component (X or Y), z: Z component (Z or Y)
};

inline double uniform01(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1.0p-53; }

inline ErrorPair sample_error(const DepolarizingPrior& prior, std::size_t n, std::mt19937_64& rng) {
    ErrorPair e{BitVec(n), BitVec(n)};
    if (prior.p == 0) return e;
    const double third = prior.p / 3;
    for (std::size_t v = 0; v < n; ++v) {
        const double u = uniform01(rng);
        if (u >= prior.p) continue;
        if (u < third) {
            e.x.set(v);  // X
        } else if (u < 2 * third) {
            e.x.set(v);  // Y
            e.z.set(v);
        } else {
            e.z.set(v);  // Z
        }
    }
    return e;
}

/// s_X = H_X e_Z, s_Z = H_Z e_X.
inline std::pair<BitVec, BitVec> syndromes(const CssCode& code, const BitVec& ex, const BitVec& ez) {
    if (ex.size() != code.n() || ez.size() != code.n()) throw FormatError("error length does not match code length");
    return {code.hx().multiply(ez), code.hz().multiply(ex)};
}

// ---------------------------------------------------------------------------
// Configuration

struct DecoderConfig {
    int max_iterations = 1000;
    double damping = 0.3;
    bool fallback = true;       // retry once with zero damping
    bool fallback_warm = false;  // reuse final messages for the retry instead of a cold start
    double llr_clamp = 30;
    std::uint32_t rule_mask = 0xFF;  // bit i enables rule i+1
    std::size_t max_correction_weight = 16;  // 0 = unlimited
    // rule 1
    double local_percentile = 0.75;
    std::size_t local_factor = 3;
    // rules 2, 3
    std::size_t prefix_cap = 1024;
    std::size_t diag_window = 8;
    std::size_t diag_null_max = 12;
    // rule 4
    std::size_t osd_cap = 2048;
    // rule 5
    std::size_t path_length = 4;
    std::size_t path_cap = 512;
    // rule 6
    std::size_t common_flips = 8;
    // rule 7
    std::size_t template_weight = 4;
    std::size_t template_budget = 2'000'000;
    std::size_t circulant_size = 0;  // lift order P when known; templates are then shift-reduced
    // rule 8
    std::size_t small_residual_max = 4;
    std::size_t w_max = 6;
    std::size_t beam_width = 64;
    std::size_t exact_nodes = 200'000;

    void validate() const {
        if (max_iterations < 1) throw Error("max_iterations must be >= 1");
        if (!(damping >= 0 && damping < 1)) throw Error("damping must lie in [0,1)");
    }
};

namespace detail {
template <class T>
void kv_field(std::map<std::string, std::string>& kv, const std::string& key, T& dst) {
    auto it = kv.find(key);
    if (it == kv.end()) return;
    std::istringstream is(it->second);
    if constexpr (std::is_same_v<T, bool>) {
        std::string s;
        is >> s;
        if (s == "true" || s == "1") dst = true;
        else if (s == "false" || s == "0") dst = false;
        else throw FormatError("config: bad boolean for " + key);
    } else {
        if (!(is >> dst)) throw FormatError("config: bad value for " + key);
    }
    kv.erase(it);
}
}  // namespace detail

#define QCOSET_DECODER_FIELDS(X)                                                                                \
    X(max_iterations) X(damping) X(fallback) X(fallback_warm) X(llr_clamp) X(rule_mask)                        \
    X(max_correction_weight) X(local_percentile) X(local_factor) X(prefix_cap) X(diag_window) X(diag_null_max) \
    X(osd_cap) X(path_length) X(path_cap) X(common_flips) X(template_weight) X(template_budget)                \
    X(circulant_size) X(small_residual_max) X(w_max) X(beam_width) X(exact_nodes)

inline void write_config(std::ostream& os, const DecoderConfig& c) {
#define QCOSET_W(f) os << #f << " = " << std::boolalpha << c.f << '\n';
    QCOSET_DECODER_FIELDS(QCOSET_W)
#undef QCOSET_W
}

inline DecoderConfig read_config(std::istream& is) {
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(is, line)) {
        if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r") != std::string::npos) throw FormatError("config: expected key = value");
            continue;
        }
        auto trim = [](std::string s) {
            s.erase(0, s.find_first_not_of(" \t\r"));
            s.erase(s.find_last_not_of(" \t\r") + 1);
            return s;
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    DecoderConfig c;
#define QCOSET_R(f) detail::kv_field(kv, #f, c.f);
    QCOSET_DECODER_FIELDS(QCOSET_R)
#undef QCOSET_R
    if (!kv.empty()) throw FormatError("config: unknown key '" + kv.begin()->first + "'");
    c.validate();
    return c;
}

// ---------------------------------------------------------------------------
// Outcomes

enum class DecodeStatus { BpConverged, PpCorrected, SyndromeFailure, LogicalFailure };

inline const char* to_string(DecodeStatus s) {
    switch (s) {
        case DecodeStatus::BpConverged: return "bp-converged";
        case DecodeStatus::PpCorrected: return "pp-corrected";
        case DecodeStatus::SyndromeFailure: return "syndrome-failure";
        default: return "logical-failure";
    }
}

constexpr int kNumRules = 8;
inline const char* rule_name(int id) {
    static const char* names[kNumRules] = {"local-linear-solve",  "prefix-size-search",  "diagnostic-prefix",
                                           "flip-history-osd",    "path-closure",        "common-column",
                                           "syndrome2-core",      "small-residual-search"};
    return id >= 1 && id <= kNumRules ? names[id - 1] : "none";
}

struct DecodeOutcome {
    BitVec ex, ez;
    DecodeStatus status = DecodeStatus::SyndromeFailure;
    int iterations = 0;
    bool fallback_used = false;
    std::size_t residual_unsat = 0;  // unsatisfied checks after BP, before post-processing
    int rule = 0;                    // rule that completed the correction (pp-corrected)
    std::vector<std::string> trace;  // rule attempts
    std::vector<double> llr_x, llr_z;  // final per-bit LLRs, log P(bit=0)/P(bit=1)
};

/// BP state exposed to post-processing.
struct BpState {
    BitVec ex, ez;
    std::vector<double> llr_x, llr_z;
    std::vector<std::size_t> flips_x, flips_z;  // bits whose hard decision changed during BP
    int iterations = 0;
    bool converged = false;
};

// ---------------------------------------------------------------------------
// BP engine

/// Quaternary variables, binary checks. X-side checks (rows of H_X) see the z
/// indicator, Z-side checks see the x indicator.
class BpEngine {
public:
    BpEngine(const CssCode& code, const DepolarizingPrior& prior, double clamp)
        : code_(&code), clamp_(clamp) {
        const double tiny = 1e-300;
        lp0_ = std::log(std::max(prior.pI(), tiny));
        lp_ = std::log(std::max(prior.pX(), tiny));
        build(code.hx(), gx_);
        build(code.hz(), gz_);
        reset();
    }

    void reset() {
        // channel LLR of one binary component: log (pI + p/3) / (2p/3)
        const double ch = clamp(logsumexp(lp0_, lp_) - (lp_ + std::log(2.0)));
        std::fill(gx_.v2c.begin(), gx_.v2c.end(), ch);
        std::fill(gz_.v2c.begin(), gz_.v2c.end(), ch);
        std::fill(gx_.c2v.begin(), gx_.c2v.end(), 0.0);
        std::fill(gz_.c2v.begin(), gz_.c2v.end(), 0.0);
    }

    void set_syndromes(const BitVec& sx, const BitVec& sz) {
        sx_ = &sx;
        sz_ = &sz;
    }

    /// One flooding iteration: checks, then variables with damping gamma.
    void step(double gamma) {
        check_update(gx_, *sx_);
        check_update(gz_, *sz_);
        totals();
        var_update(gamma);
    }
    /// Variable update only, from the current check messages.
    void step_vars(double gamma) { var_update(gamma); }
    /// Check update and totals only (used to read decisions after a step).
    void refresh() {
        check_update(gx_, *sx_);
        check_update(gz_, *sz_);
        totals();
    }

    /// Hard decision per qubit: argmax over {I,X,Z,Y}; ties prefer I, then X, Z, Y.
    void decide(BitVec& ex, BitVec& ez) const {
        const std::size_t n = code_->n();
        for (std::size_t v = 0; v < n; ++v) {
            const double A = tot_x_[v], B = tot_z_[v];
            const double q[4] = {lp0_, lp_ - B, lp_ - A, lp_ - A - B};  // I X Z Y
            int best = 0;
            for (int k = 1; k < 4; ++k)
                if (q[k] > q[best]) best = k;
            ex.set(v, best == 1 || best == 3);
            ez.set(v, best == 2 || best == 3);
        }
    }
    /// Marginal LLRs of the x and z components.
    void marginals(std::vector<double>& lx, std::vector<double>& lz) const {
        const std::size_t n = code_->n();
        lx.resize(n);
        lz.resize(n);
        for (std::size_t v = 0; v < n; ++v) {
            const double A = tot_x_[v], B = tot_z_[v];
            const double qI = lp0_, qX = lp_ - B, qZ = lp_ - A, qY = lp_ - A - B;
            lx[v] = logsumexp(qI, qZ) - logsumexp(qX, qY);
            lz[v] = logsumexp(qI, qX) - logsumexp(qZ, qY);
        }
    }

    const std::vector<double>& v2c_x() const { return gx_.v2c; }
    const std::vector<double>& v2c_z() const { return gz_.v2c; }
    const std::vector<double>& c2v_x() const { return gx_.c2v; }
    const std::vector<double>& c2v_z() const { return gz_.c2v; }

private:
    struct Graph {
        std::vector<std::size_t> row_start;  // edges of check r: [row_start[r], row_start[r+1])
        std::vector<std::size_t> edge_var;
        std::vector<std::vector<std::size_t>> var_edges;
        std::vector<double> v2c, c2v;
    };

    static double logsumexp(double a, double b) {
        const double m = std::max(a, b);
        return m + std::log1p(std::exp(-std::fabs(a - b)));
    }
    double clamp(double x) const { return std::clamp(x, -clamp_, clamp_); }

    void build(const SparseBinMatrix& H, Graph& g) {
        g.row_start.assign(H.rows() + 1, 0);
        g.var_edges.assign(H.cols(), {});
        for (std::size_t r = 0; r < H.rows(); ++r) {
            g.row_start[r + 1] = g.row_start[r] + H.row(r).size();
            for (auto c : H.row(r)) {
                g.var_edges[c].push_back(g.edge_var.size());
                g.edge_var.push_back(c);
            }
        }
        g.v2c.assign(g.edge_var.size(), 0.0);
        g.c2v.assign(g.edge_var.size(), 0.0);
    }

    void check_update(Graph& g, const BitVec& s) {
        const std::size_t R = g.row_start.size() - 1;
        for (std::size_t r = 0; r < R; ++r) {
            const std::size_t b = g.row_start[r], e = g.row_start[r + 1];
            const std::size_t d = e - b;
            t_.resize(d);
            pre_.resize(d + 1);
            suf_.resize(d + 1);
            for (std::size_t k = 0; k < d; ++k) t_[k] = std::tanh(0.5 * g.v2c[b + k]);
            pre_[0] = 1;
            for (std::size_t k = 0; k < d; ++k) pre_[k + 1] = pre_[k] * t_[k];
            suf_[d] = 1;
            for (std::size_t k = d; k-- > 0;) suf_[k] = suf_[k + 1] * t_[k];
            const double sign = s.get(r) ? -1.0 : 1.0;
            for (std::size_t k = 0; k < d; ++k) {
                double prod = pre_[k] * suf_[k + 1];
                prod = std::clamp(prod, -1 + 1e-15, 1 - 1e-15);
                g.c2v[b + k] = clamp(sign * 2.0 * std::atanh(prod));
            }
        }
    }

    void totals() {
        const std::size_t n = code_->n();
        tot_x_.assign(n, 0.0);
        tot_z_.assign(n, 0.0);
        for (std::size_t e = 0; e < gx_.edge_var.size(); ++e) tot_x_[gx_.edge_var[e]] += gx_.c2v[e];
        for (std::size_t e = 0; e < gz_.edge_var.size(); ++e) tot_z_[gz_.edge_var[e]] += gz_.c2v[e];
    }

    void var_update(double gamma) {
        // toward an X-side check: binary message on z, extrinsic in A
        for (std::size_t e = 0; e < gx_.edge_var.size(); ++e) {
            const std::size_t v = gx_.edge_var[e];
            const double A = tot_x_[v] - gx_.c2v[e], B = tot_z_[v];
            const double num = logsumexp(lp0_, lp_ - B);
            const double den = lp_ - A + logsumexp(0.0, -B);
            const double m = clamp(num - den);
            gx_.v2c[e] = clamp((1 - gamma) * m + gamma * gx_.v2c[e]);
        }
        for (std::size_t e = 0; e < gz_.edge_var.size(); ++e) {
            const std::size_t v = gz_.edge_var[e];
            const double A = tot_x_[v], B = tot_z_[v] - gz_.c2v[e];
            const double num = logsumexp(lp0_, lp_ - A);
            const double den = lp_ - B + logsumexp(0.0, -A);
            const double m = clamp(num - den);
            gz_.v2c[e] = clamp((1 - gamma) * m + gamma * gz_.v2c[e]);
        }
    }

    const CssCode* code_;
    double clamp_;
    double lp0_ = 0, lp_ = 0;
    Graph gx_, gz_;
    const BitVec* sx_ = nullptr;
    const BitVec* sz_ = nullptr;
    std::vector<double> tot_x_, tot_z_;
    std::vector<double> t_, pre_, suf_;
};

// ---------------------------------------------------------------------------
// Post-processing helpers (one side at a time: H, residual, component LLRs)

namespace pp {

struct SideInput {
    const SparseBinMatrix* H;
    BitVec residual;
    const std::vector<double>* llr;
    const std::vector<std::size_t>* flips;
};

inline std::vector<std::size_t> by_suspicion(std::vector<std::size_t> cols, const std::vector<double>& llr) {
    std::stable_sort(cols.begin(), cols.end(), [&](std::size_t a, std::size_t b) {
        const double x = std::fabs(llr[a]), y = std::fabs(llr[b]);
        return x != y ? x < y : a < b;
    });
    return cols;
}

inline std::vector<std::size_t> neighbors_of_checks(const SparseBinMatrix& H, const std::vector<std::size_t>& checks) {
    std::set<std::size_t> s;
    for (auto r : checks)
        for (auto c : H.row(r)) s.insert(c);
    return {s.begin(), s.end()};
}

/// Variables within distance <= 2 of the checks: their neighbors and the neighbors' neighbors.
inline std::vector<std::size_t> two_hop(const SparseBinMatrix& H, const std::vector<std::size_t>& checks) {
    std::set<std::size_t> s;
    for (auto r : checks)
        for (auto c : H.row(r))
            for (auto r2 : H.col(c))
                for (auto c2 : H.row(r2)) s.insert(c2);
    return {s.begin(), s.end()};
}

inline std::optional<std::vector<std::size_t>> solve_on(const SideInput& in, const std::vector<std::size_t>& cands) {
    if (cands.empty()) return std::nullopt;
    auto sol = solve_restricted(*in.H, cands, in.residual);
    if (!sol) return std::nullopt;
    return sol->support;
}

/// Exact search for a correction of weight <= w_max on the candidate set, by
/// iterative deepening; nullopt when the node cap is hit or nothing is found.
class ExactSearch {
public:
    ExactSearch(const SparseBinMatrix& H, const BitVec& residual, const std::vector<std::size_t>& cands,
                std::size_t node_cap)
        : H_(H), cap_(node_cap), allowed_(H.cols(), 0), in_(H.cols(), 0), parity_(H.rows(), 0) {
        for (auto c : cands) allowed_[c] = 1;
        for (auto r : residual.support()) {
            parity_[r] = 1;
            unsat_.insert(r);
        }
        jmax_ = std::max<std::size_t>(1, H.max_col_weight());
    }
    /// 0: not found, 1: found, 2: cap hit.
    int run(std::size_t w, std::vector<std::size_t>& out) {
        limit_ = w;
        const int r = rec();
        if (r == 1) out = chosen_;
        return r;
    }

private:
    void toggle(std::size_t c) {
        in_[c] ^= 1;
        for (auto r : H_.col(c)) {
            parity_[r] ^= 1;
            if (parity_[r]) unsat_.insert(r);
            else unsat_.erase(r);
        }
    }
    int rec() {
        if (++nodes_ > cap_) return 2;
        if (unsat_.empty()) return 1;
        const std::size_t remaining = limit_ - chosen_.size();
        if (remaining == 0 || unsat_.size() > remaining * jmax_) return 0;
        std::size_t best = 0, best_cnt = SIZE_MAX;
        for (auto r : unsat_) {
            std::size_t cnt = 0;
            for (auto c : H_.row(r)) cnt += allowed_[c] && !in_[c];
            if (cnt < best_cnt) {
                best_cnt = cnt;
                best = r;
            }
        }
        if (best_cnt == 0) return 0;
        const auto row = H_.row(best);
        for (auto c : row) {
            if (!allowed_[c] || in_[c]) continue;
            toggle(c);
            chosen_.push_back(c);
            const int r = rec();
            if (r == 1) return 1;
            chosen_.pop_back();
            toggle(c);
            if (r == 2) return 2;
        }
        return 0;
    }

    const SparseBinMatrix& H_;
    std::size_t cap_, nodes_ = 0, limit_ = 0, jmax_ = 1;
    std::vector<std::uint8_t> allowed_, in_, parity_;
    std::set<std::size_t> unsat_;
    std::vector<std::size_t> chosen_;
};

/// Weight <= w_max correction by beam search over candidate flips, scored by
/// unsatisfied count, then weight, then summed |LLR|.
inline std::optional<std::vector<std::size_t>> beam_search(const SideInput& in, const std::vector<std::size_t>& cands,
                                                           std::size_t w_max, std::size_t width) {
    struct State {
        std::vector<std::size_t> set;
        BitVec syn;
        std::size_t unsat;
        double cost;
    };
    const auto& H = *in.H;
    std::vector<State> beam{{{}, in.residual, in.residual.count(), 0.0}};
    for (std::size_t depth = 0; depth < w_max; ++depth) {
        std::vector<State> next;
        std::set<std::vector<std::size_t>> seen;
        for (const auto& s : beam) {
            for (auto c : cands) {
                if (std::find(s.set.begin(), s.set.end(), c) != s.set.end()) continue;
                bool touches = false;
                for (auto r : H.col(c)) touches |= s.syn.get(r);
                if (!touches) continue;
                State t{s.set, s.syn, 0, s.cost + std::fabs((*in.llr)[c])};
                t.set.push_back(c);
                std::sort(t.set.begin(), t.set.end());
                if (!seen.insert(t.set).second) continue;
                for (auto r : H.col(c)) t.syn.flip(r);
                t.unsat = t.syn.count();
                if (t.unsat == 0) return t.set;
                next.push_back(std::move(t));
            }
        }
        if (next.empty()) break;
        std::sort(next.begin(), next.end(), [](const State& a, const State& b) {
            if (a.unsat != b.unsat) return a.unsat < b.unsat;
            if (a.set.size() != b.set.size()) return a.set.size() < b.set.size();
            if (a.cost != b.cost) return a.cost < b.cost;
            return a.set < b.set;
        });
        if (next.size() > width) next.resize(width);
        beam = std::move(next);
    }
    return std::nullopt;
}

/// Weight-reduced solution: particular solution plus the best null-space combination.
inline std::vector<std::size_t> min_weight_solution(const LocalSolution& sol, std::size_t null_max) {
    auto weight_of = [](const std::set<std::size_t>& s) { return s.size(); };
    std::set<std::size_t> cur(sol.support.begin(), sol.support.end());
    auto xor_into = [](std::set<std::size_t>& s, const std::vector<std::size_t>& v) {
        for (auto c : v)
            if (!s.erase(c)) s.insert(c);
    };
    const std::size_t d = sol.nullspace.size();
    if (d <= null_max) {
        std::set<std::size_t> best = cur, run = cur;
        // Gray-code walk over all 2^d combinations
        for (std::uint64_t i = 1; i < (std::uint64_t(1) << d); ++i) {
            const int bit = std::countr_zero(i);
            xor_into(run, sol.nullspace[static_cast<std::size_t>(bit)]);
            if (run.size() < best.size()) best = run;
        }
        return {best.begin(), best.end()};
    }
    bool improved = true;
    while (improved) {
        improved = false;
        for (const auto& v : sol.nullspace) {
            auto t = cur;
            xor_into(t, v);
            if (weight_of(t) < weight_of(cur)) {
                cur = std::move(t);
                improved = true;
            }
        }
    }
    return {cur.begin(), cur.end()};
}

/// Syndrome-weight-2 templates keyed by their two unsatisfied checks. With a
/// known circulant size P, supports are enumerated from lift coordinate 0 only
/// and lookups are reduced by the cyclic shift (r,u) -> (r,u+1), (c,f) -> (c,f+1).
class TemplateBank {
public:
    TemplateBank(const SparseBinMatrix& H, std::size_t max_weight, std::size_t budget, std::size_t P)
        : H_(H), P_(P) {
        std::vector<std::uint8_t> in(H.cols(), 0), parity(H.rows(), 0);
        std::vector<std::size_t> set, unsat;
        std::size_t nodes = 0;
        auto toggle = [&](std::size_t c) {
            in[c] ^= 1;
            for (auto r : H.col(c)) {
                parity[r] ^= 1;
                if (parity[r]) unsat.push_back(r);
                else unsat.erase(std::find(unsat.begin(), unsat.end(), r));
            }
        };
        auto rec = [&](auto&& self, std::size_t floor) -> void {
            if (++nodes > budget) return;
            if (unsat.size() == 2) record(unsat[0], unsat[1], set);
            if (set.size() == max_weight) return;
            const auto u = unsat;  // grow through any unsatisfied check
            for (auto r : u)
                for (auto c : H.row(r)) {
                    if (c < floor || in[c]) continue;
                    toggle(c);
                    set.push_back(c);
                    self(self, floor);
                    set.pop_back();
                    toggle(c);
                    if (nodes > budget) return;
                }
        };
        for (std::size_t c0 = 0; c0 < H.cols() && nodes <= budget; ++c0) {
            if (P_ && c0 % P_ != 0) continue;
            toggle(c0);
            set.push_back(c0);
            // under shift reduction the seed need not be the smallest column
            rec(rec, P_ ? std::size_t(0) : c0 + 1);
            set.pop_back();
            toggle(c0);
        }
        complete_ = nodes <= budget;
    }

    std::optional<std::vector<std::size_t>> lookup(std::size_t r1, std::size_t r2) const {
        for (int k = 0; k < 2; ++k) {
            const std::size_t a = k ? r2 : r1, b = k ? r1 : r2;
            const std::size_t s = P_ ? a % P_ : 0;
            auto it = bank_.find(key(a, b, s));
            if (it == bank_.end()) continue;
            std::vector<std::size_t> out;
            for (auto c : it->second) out.push_back(shift_col(c, s));
            std::sort(out.begin(), out.end());
            auto syn = H_.syndrome_of(out).support();
            if (syn.size() == 2 && ((syn[0] == r1 && syn[1] == r2) || (syn[0] == r2 && syn[1] == r1))) return out;
        }
        return std::nullopt;
    }
    std::size_t size() const { return bank_.size(); }
    bool complete() const { return complete_; }

private:
    using Key = std::pair<std::size_t, std::size_t>;
    std::size_t unshift_row(std::size_t r, std::size_t s) const {
        return P_ ? (r / P_) * P_ + (r % P_ + P_ - s) % P_ : r;
    }
    std::size_t shift_col(std::size_t c, std::size_t s) const { return P_ ? (c / P_) * P_ + (c % P_ + s) % P_ : c; }
    Key key(std::size_t a, std::size_t b, std::size_t s) const {
        if (!P_) return a < b ? Key{a, b} : Key{b, a};
        return {unshift_row(a, s), unshift_row(b, s)};  // anchored at a, ordered
    }
    void record(std::size_t r1, std::size_t r2, const std::vector<std::size_t>& set) {
        for (int k = 0; k < (P_ ? 2 : 1); ++k) {
            const std::size_t a = k ? r2 : r1, b = k ? r1 : r2;
            const std::size_t s = P_ ? a % P_ : 0;
            std::vector<std::size_t> stored;
            for (auto c : set) stored.push_back(shift_col(c, P_ ? P_ - s : 0));
            std::sort(stored.begin(), stored.end());
            auto& slot = bank_[key(a, b, s)];
            if (slot.empty() || slot.size() > stored.size()) slot = std::move(stored);
        }
    }

    const SparseBinMatrix& H_;
    std::size_t P_;
    bool complete_ = true;
    std::map<Key, std::vector<std::size_t>> bank_;
};

}  // namespace pp

// ---------------------------------------------------------------------------
// Decoder

class Decoder {
public:
    Decoder(const CssCode& code, const DepolarizingPrior& prior, DecoderConfig cfg)
        : code_(&code), prior_(prior), cfg_(cfg), engine_(code, prior, cfg.llr_clamp) {
        cfg_.validate();
    }

    const DecoderConfig& config() const { return cfg_; }

    /// BP with damping, then (if enabled and not converged) one zero-damping retry.
    BpState bp(const BitVec& sx, const BitVec& sz) {
        check_lengths(sx, sz);
        BpState st = run_bp(sx, sz, cfg_.damping, true);
        if (!st.converged && cfg_.fallback) {
            BpState fb = run_bp(sx, sz, 0.0, !cfg_.fallback_warm);
            fb.iterations += st.iterations;
            // keep the union of flip histories for post-processing
            merge(fb.flips_x, st.flips_x);
            merge(fb.flips_z, st.flips_z);
            fallback_used_ = true;
            return fb;
        }
        fallback_used_ = false;
        return st;
    }

    DecodeOutcome decode(const BitVec& sx, const BitVec& sz) {
        BpState st = bp(sx, sz);
        DecodeOutcome out;
        out.fallback_used = fallback_used_;
        out.iterations = st.iterations;
        if (st.converged) {
            out.ex = st.ex;
            out.ez = st.ez;
            out.status = DecodeStatus::BpConverged;
            out.llr_x = std::move(st.llr_x);
            out.llr_z = std::move(st.llr_z);
            return out;
        }
        return post_process(sx, sz, st, out);
    }

    /// Ladder in fixed order; each rule must cancel the residual of every side it
    /// handles, and the first rule after which both sides are cancelled wins.
    DecodeOutcome post_process(const BitVec& sx, const BitVec& sz, const BpState& st, DecodeOutcome out = {}) {
        out.iterations = st.iterations;
        out.ex = st.ex;
        out.ez = st.ez;
        out.llr_x = st.llr_x;
        out.llr_z = st.llr_z;
        BitVec rx = sx ^ code_->hx().multiply(st.ez);
        BitVec rz = sz ^ code_->hz().multiply(st.ex);
        out.residual_unsat = rx.count() + rz.count();
        // side 0: X checks, corrects ez with z LLRs; side 1: Z checks, corrects ex with x LLRs
        pp::SideInput sides[2] = {{&code_->hx(), rx, &st.llr_z, &st.flips_z}, {&code_->hz(), rz, &st.llr_x, &st.flips_x}};
        std::optional<std::vector<std::size_t>> fix[2];
        bool done[2] = {rx.none(), rz.none()};
        for (int rule = 1; rule <= kNumRules; ++rule) {
            if (!(cfg_.rule_mask >> (rule - 1) & 1u)) continue;
            for (int s = 0; s < 2; ++s) {
                if (done[s]) continue;
                auto corr = apply_rule(rule, sides[s], s);
                if (corr && cfg_.max_correction_weight && corr->size() > cfg_.max_correction_weight) {
                    out.trace.push_back(std::string(rule_name(rule)) + (s ? ":Z" : ":X") + ":too-heavy");
                    corr.reset();
                }
                if (!corr) continue;
                // acceptance requires full cancellation, re-checked here
                if (!(sides[s].H->syndrome_of(*corr) == sides[s].residual)) continue;
                out.trace.push_back(std::string(rule_name(rule)) + (s ? ":Z" : ":X") + ":ok");
                fix[s] = std::move(corr);
                done[s] = true;
            }
            if (done[0] && done[1]) {
                if (fix[0])
                    for (auto c : *fix[0]) out.ez.flip(c);
                if (fix[1])
                    for (auto c : *fix[1]) out.ex.flip(c);
                out.status = DecodeStatus::PpCorrected;
                out.rule = rule;
                return out;
            }
        }
        out.status = DecodeStatus::SyndromeFailure;
        return out;
    }

    BpEngine& engine() { return engine_; }

private:
    void check_lengths(const BitVec& sx, const BitVec& sz) const {
        if (sx.size() != code_->hx().rows() || sz.size() != code_->hz().rows())
            throw FormatError("syndrome length does not match check count");
    }

    static void merge(std::vector<std::size_t>& dst, const std::vector<std::size_t>& src) {
        std::vector<std::size_t> out;
        std::set_union(dst.begin(), dst.end(), src.begin(), src.end(), std::back_inserter(out));
        dst = std::move(out);
    }

    BpState run_bp(const BitVec& sx, const BitVec& sz, double gamma, bool cold) {
        BpState st;
        const std::size_t n = code_->n();
        st.ex = BitVec(n);
        st.ez = BitVec(n);
        if (cold) engine_.reset();
        engine_.set_syndromes(sx, sz);
        // prior-only decision is all-identity
        if (sx.none() && sz.none() && cold) {
            st.converged = true;
            st.llr_x.assign(n, 0);
            st.llr_z.assign(n, 0);
            engine_.refresh();
            engine_.marginals(st.llr_x, st.llr_z);
            return st;
        }
        BitVec px(n), pz(n);
        std::vector<std::uint8_t> flipped_x(n, 0), flipped_z(n, 0);
        for (int it = 1; it <= cfg_.max_iterations; ++it) {
            engine_.refresh();
            engine_.decide(st.ex, st.ez);
            if (it > 1) {
                for (auto v : (st.ex ^ px).support()) flipped_x[v] = 1;
                for (auto v : (st.ez ^ pz).support()) flipped_z[v] = 1;
            }
            px = st.ex;
            pz = st.ez;
            st.iterations = it;
            if (code_->hx().multiply(st.ez) == sx && code_->hz().multiply(st.ex) == sz) {
                st.converged = true;
                break;
            }
            engine_.step_vars(gamma);
        }
        engine_.marginals(st.llr_x, st.llr_z);
        for (std::size_t v = 0; v < n; ++v) {
            if (flipped_x[v]) st.flips_x.push_back(v);
            if (flipped_z[v]) st.flips_z.push_back(v);
        }
        return st;
    }

    std::optional<std::vector<std::size_t>> apply_rule(int rule, const pp::SideInput& in, int side) {
        const auto& H = *in.H;
        const auto& llr = *in.llr;
        const auto unsat = in.residual.support();
        switch (rule) {
            case 1: {  // local linear solve on low-|LLR| neighbors of unsatisfied checks
                auto nb = pp::by_suspicion(pp::neighbors_of_checks(H, unsat), llr);
                std::size_t keep = static_cast<std::size_t>(std::ceil(cfg_.local_percentile * double(nb.size())));
                keep = std::min(keep, cfg_.local_factor * unsat.size());
                nb.resize(std::min(nb.size(), std::max<std::size_t>(keep, 1)));
                return pp::solve_on(in, nb);
            }
            case 2:
            case 3: {  // prefix search over suspiciousness order
                std::vector<std::size_t> all(H.cols());
                std::iota(all.begin(), all.end(), 0);
                const auto order = pp::by_suspicion(all, llr);
                const std::size_t cap = std::min(order.size(), cfg_.prefix_cap);
                auto solvable = [&](std::size_t K) {
                    return solve_restricted(H, std::span(order.data(), K), in.residual).has_value();
                };
                if (cap == 0 || !solvable(cap)) return std::nullopt;
                std::size_t lo = 1, hi = cap;
                while (lo < hi) {
                    const std::size_t mid = lo + (hi - lo) / 2;
                    if (solvable(mid)) hi = mid;
                    else lo = mid + 1;
                }
                if (rule == 2) return solve_restricted(H, std::span(order.data(), lo), in.residual)->support;
                // scan past the boundary where the local solution stops being unique
                std::optional<std::vector<std::size_t>> best;
                for (std::size_t K = lo; K <= std::min(cap, lo + cfg_.diag_window); ++K) {
                    auto sol = solve_restricted(H, std::span(order.data(), K), in.residual, true);
                    if (!sol) continue;
                    auto cand = pp::min_weight_solution(*sol, cfg_.diag_null_max);
                    if (!best || cand.size() < best->size()) best = std::move(cand);
                }
                return best;
            }
            case 4: {  // flip history, then order-0 OSD on a local reliability-sorted set
                if (!in.flips->empty()) {
                    auto f = pp::solve_on(in, pp::by_suspicion(*in.flips, llr));
                    if (f) return f;
                }
                std::set<std::size_t> cands(in.flips->begin(), in.flips->end());
                for (auto c : pp::two_hop(H, unsat)) cands.insert(c);
                auto order = pp::by_suspicion({cands.begin(), cands.end()}, llr);
                if (order.size() > cfg_.osd_cap) order.resize(cfg_.osd_cap);
                return pp::solve_on(in, order);
            }
            case 5: {  // short paths between unsatisfied checks
                std::set<std::size_t> path_vars;
                const std::size_t R = H.rows();
                std::vector<std::size_t> dist(R + H.cols(), SIZE_MAX), parent(R + H.cols(), SIZE_MAX);
                std::set<std::size_t> targets(unsat.begin(), unsat.end());
                for (auto src : unsat) {
                    std::vector<std::size_t> touched{src}, queue{src};
                    dist[src] = 0;
                    for (std::size_t h = 0; h < queue.size(); ++h) {
                        const std::size_t v = queue[h];
                        if (v != src && v < R && targets.count(v)) {
                            for (std::size_t w = v; w != src; w = parent[w])
                                if (w >= R) path_vars.insert(w - R);
                            continue;
                        }
                        if (dist[v] >= cfg_.path_length) continue;
                        auto push = [&](std::size_t w) {
                            if (dist[w] != SIZE_MAX) return;
                            dist[w] = dist[v] + 1;
                            parent[w] = v;
                            touched.push_back(w);
                            queue.push_back(w);
                        };
                        if (v < R)
                            for (auto c : H.row(v)) push(R + c);
                        else
                            for (auto r : H.col(v - R)) push(r);
                    }
                    for (auto w : touched) dist[w] = parent[w] = SIZE_MAX;
                }
                if (path_vars.empty()) return std::nullopt;
                for (auto c : pp::neighbors_of_checks(H, unsat)) path_vars.insert(c);
                auto order = pp::by_suspicion({path_vars.begin(), path_vars.end()}, llr);
                if (order.size() > cfg_.path_cap) order.resize(cfg_.path_cap);
                return pp::solve_on(in, order);
            }
            case 6: {  // flip columns hit by three or more unsatisfied checks
                BitVec res = in.residual;
                std::vector<std::size_t> flips;
                for (std::size_t round = 0; round < cfg_.common_flips && !res.none(); ++round) {
                    std::size_t pick = SIZE_MAX;
                    for (auto c : pp::neighbors_of_checks(H, res.support())) {
                        std::size_t hits = 0;
                        for (auto r : H.col(c)) hits += res.get(r);
                        if (hits >= 3) {
                            pick = c;
                            break;
                        }
                    }
                    if (pick == SIZE_MAX) break;
                    for (auto r : H.col(pick)) res.flip(r);
                    flips.push_back(pick);
                }
                if (!res.none()) return std::nullopt;
                std::sort(flips.begin(), flips.end());
                return flips;
            }
            case 7: {  // syndrome-2 residual matched against the template bank
                if (unsat.size() != 2) return std::nullopt;
                return bank(side, H).lookup(unsat[0], unsat[1]);
            }
            case 8: {  // exact / beam search for small residuals
                if (unsat.empty() || unsat.size() > cfg_.small_residual_max) return std::nullopt;
                auto cands = pp::by_suspicion(pp::two_hop(H, unsat), llr);
                pp::ExactSearch ex(H, in.residual, cands, cfg_.exact_nodes);
                std::vector<std::size_t> out;
                for (std::size_t w = 1; w <= cfg_.w_max; ++w) {
                    const int r = ex.run(w, out);
                    if (r == 1) {
                        std::sort(out.begin(), out.end());
                        return out;
                    }
                    if (r == 2) return pp::beam_search(in, cands, cfg_.w_max, cfg_.beam_width);
                }
                return std::nullopt;
            }
            default:
                return std::nullopt;
        }
    }

    const pp::TemplateBank& bank(int side, const SparseBinMatrix& H) {
        auto& b = banks_[side];
        if (!b) b = std::make_shared<pp::TemplateBank>(H, cfg_.template_weight, cfg_.template_budget, cfg_.circulant_size);
        return *b;
    }

public:
    /// Shares template banks between decoder instances on the same code.
    void share_banks(const Decoder& other) { banks_ = other.banks_; }
    void prepare_banks() {
        bank(0, code_->hx());
        bank(1, code_->hz());
    }

private:
    const CssCode* code_;
    DepolarizingPrior prior_;
    DecoderConfig cfg_;
    BpEngine engine_;
    bool fallback_used_ = false;
    std::array<std::shared_ptr<pp::TemplateBank>, 2> banks_;
};

/// BP only (no post-processing). Status is bp-converged or syndrome-failure.
inline DecodeOutcome bp_decode(const CssCode& code, const BitVec& sx, const BitVec& sz, const DepolarizingPrior& prior,
                               const DecoderConfig& cfg) {
    Decoder d(code, prior, cfg);
    BpState st = d.bp(sx, sz);
    DecodeOutcome out;
    out.ex = st.ex;
    out.ez = st.ez;
    out.iterations = st.iterations;
    out.status = st.converged ? DecodeStatus::BpConverged : DecodeStatus::SyndromeFailure;
    out.residual_unsat = (sx ^ code.hx().multiply(st.ez)).count() + (sz ^ code.hz().multiply(st.ex)).count();
    out.llr_x = st.llr_x;
    out.llr_z = st.llr_z;
    return out;
}

inline DecodeStatus classify_outcome(const CssCode& code, const BitVec& ex, const BitVec& ez, const BitVec& hx_est,
                                     const BitVec& hz_est) {
    const BitVec rx = ex ^ hx_est, rz = ez ^ hz_est;
    if (!code.hz().multiply(rx).none() || !code.hx().multiply(rz).none()) return DecodeStatus::SyndromeFailure;
    if (!code.row_x().contains(rx) || !code.row_z().contains(rz)) return DecodeStatus::LogicalFailure;
    return DecodeStatus::BpConverged;  // success; caller keeps the decoder's own status
}

inline bool is_success(DecodeStatus s) { return s == DecodeStatus::BpConverged || s == DecodeStatus::PpCorrected; }

// ---------------------------------------------------------------------------
// Failure dumps

struct FailureDump {
    std::uint64_t trial_seed = 0;
    double p = 0;
    std::size_t n = 0;
    BitVec true_x, true_z, syn_x, syn_z, est_x, est_z;
    std::string status;
    std::vector<std::string> trace;
    std::vector<double> llr_x, llr_z;
};

inline void write_dump(std::ostream& os, const FailureDump& d) {
    auto bits = [&](const char* k, const BitVec& v) {
        os << k << ' ' << v.size();
        for (auto i : v.support()) os << ' ' << i;
        os << '\n';
    };
    os << "trial_seed " << d.trial_seed << "\np " << d.p << "\nn " << d.n << '\n';
    bits("true_x", d.true_x);
    bits("true_z", d.true_z);
    bits("syn_x", d.syn_x);
    bits("syn_z", d.syn_z);
    bits("est_x", d.est_x);
    bits("est_z", d.est_z);
    os << "status " << d.status << "\ntrace";
    for (auto& t : d.trace) os << ' ' << t;
    os << '\n';
    os.precision(17);
    for (auto [k, v] : {std::pair{"llr_x", &d.llr_x}, std::pair{"llr_z", &d.llr_z}}) {
        os << k << ' ' << v->size();
        for (auto x : *v) os << ' ' << x;
        os << '\n';
    }
    os << "end\n";
}

/// Reads one dump; returns nullopt at end of stream.
inline std::optional<FailureDump> read_dump(std::istream& is) {
    FailureDump d;
    std::string key;
    bool any = false;
    auto bits = [&](BitVec& v) {
        std::size_t len, i;
        if (!(is >> len)) throw FormatError("dump: bad bit vector");
        v = BitVec(len);
        std::string rest;
        std::getline(is, rest);
        std::istringstream ls(rest);
        while (ls >> i) {
            if (i >= len) throw FormatError("dump: bit index out of range");
            v.set(i);
        }
    };
    while (is >> key) {
        any = true;
        if (key == "end") return d;
        if (key == "trial_seed") is >> d.trial_seed;
        else if (key == "p") is >> d.p;
        else if (key == "n") is >> d.n;
        else if (key == "true_x") bits(d.true_x);
        else if (key == "true_z") bits(d.true_z);
        else if (key == "syn_x") bits(d.syn_x);
        else if (key == "syn_z") bits(d.syn_z);
        else if (key == "est_x") bits(d.est_x);
        else if (key == "est_z") bits(d.est_z);
        else if (key == "status") is >> d.status;
        else if (key == "trace") {
            std::string rest;
            std::getline(is, rest);
            std::istringstream ls(rest);
            std::string t;
            while (ls >> t) d.trace.push_back(t);
        } else if (key == "llr_x" || key == "llr_z") {
            auto& v = key == "llr_x" ? d.llr_x : d.llr_z;
            std::size_t len;
            is >> len;
            v.resize(len);
            for (auto& x : v) is >> x;
        } else {
            throw FormatError("dump: unknown key '" + key + "'");
        }
        if (!is) throw FormatError("dump: malformed value for '" + key + "'");
    }
    if (any) throw FormatError("dump: missing 'end'");
    return std::nullopt;
}

}  // namespace qcoset
