#pragma once

// Distance certification: branch-and-prune enumeration of low-weight kernel
// vectors, target-distance acceptance, and explicit logical witnesses.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "qcoset/base.hpp"
#include "qcoset/binmat.hpp"
#include "qcoset/css.hpp"
#include "qcoset/error.hpp"
#include "qcoset/lift.hpp"

namespace qcoset {

struct SearchBudget {
    double seconds = 0;         // 0 = unlimited
    std::uint64_t max_nodes = 0;  // 0 = unlimited
    unsigned threads = 0;       // 0 = hardware concurrency
    bool prune = true;          // weight-budget prune; disabling only costs time
};

enum class KernelSearchStatus { NoneBelow, Found, BudgetExhausted };

struct KernelSearchResult {
    KernelSearchStatus status = KernelSearchStatus::NoneBelow;
    std::vector<std::size_t> support;
    std::uint64_t nodes = 0;
    double seconds = 0;
};

namespace detail {

/// Depth-first enumeration of kernel vectors of H with weight < D whose
/// smallest column is c0. Each step branches on the columns (> c0) of one
/// unsatisfied check: any kernel vector extending the current set that does
/// not split into two kernel vectors must contain one of them.
class KernelEnumerator {
public:
    using Visit = std::function<bool(const std::vector<std::size_t>&)>;  // return false to stop

    KernelEnumerator(const SparseBinMatrix& H, std::size_t D, bool prune)
        : H_(H), D_(D), prune_(prune), jmax_(std::max<std::size_t>(1, H.max_col_weight())),
          parity_(H.rows(), 0), pos_(H.rows(), npos), in_set_(H.cols(), 0) {}

    /// Returns false if stopped by the visitor or the budget.
    bool run(std::size_t c0, const Visit& visit, const std::function<bool()>& over_budget) {
        visit_ = &visit;
        over_ = &over_budget;
        c0_ = c0;
        add(c0);
        const bool ok = rec();
        remove(c0);
        return ok;
    }
    std::uint64_t nodes() const { return nodes_; }
    bool budget_hit() const { return budget_hit_; }

private:
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    void toggle_check(std::size_t r) {
        parity_[r] ^= 1;
        if (parity_[r]) {
            pos_[r] = unsat_.size();
            unsat_.push_back(r);
        } else {
            const std::size_t last = unsat_.back();
            unsat_[pos_[r]] = last;
            pos_[last] = pos_[r];
            unsat_.pop_back();
            pos_[r] = npos;
        }
    }
    void add(std::size_t c) {
        in_set_[c] = 1;
        set_.push_back(c);
        for (auto r : H_.col(c)) toggle_check(r);
    }
    void remove(std::size_t c) {
        in_set_[c] = 0;
        set_.pop_back();
        for (auto r : H_.col(c)) toggle_check(r);
    }

    bool rec() {
        ++nodes_;
        if ((nodes_ & 1023) == 0 && (*over_)()) {
            budget_hit_ = true;
            return false;
        }
        if (unsat_.empty()) {
            std::vector<std::size_t> s = set_;
            std::sort(s.begin(), s.end());
            return (*visit_)(s);
        }
        const std::size_t remaining = D_ - 1 - set_.size();
        if (remaining == 0) return true;
        if (prune_ && unsat_.size() > remaining * jmax_) return true;
        // branch on the unsatisfied check with the fewest admissible columns
        std::size_t best = npos, best_count = npos;
        for (auto r : unsat_) {
            std::size_t cnt = 0;
            for (auto c : H_.row(r))
                if (c > c0_ && !in_set_[c]) ++cnt;
            if (cnt < best_count) {
                best_count = cnt;
                best = r;
                if (cnt == 0) break;
            }
        }
        if (best_count == 0) return true;
        const std::vector<std::size_t> cands = H_.row(best);
        for (auto c : cands) {
            if (c <= c0_ || in_set_[c]) continue;
            add(c);
            const bool ok = rec();
            remove(c);
            if (!ok) return false;
        }
        return true;
    }

    const SparseBinMatrix& H_;
    std::size_t D_;
    bool prune_;
    std::size_t jmax_;
    std::vector<std::uint8_t> parity_;
    std::vector<std::size_t> pos_, unsat_, set_;
    std::vector<std::uint8_t> in_set_;
    std::size_t c0_ = 0;
    const Visit* visit_ = nullptr;
    const std::function<bool()>* over_ = nullptr;
    std::uint64_t nodes_ = 0;
    bool budget_hit_ = false;
};

/// Runs the enumeration over all first columns in parallel. The visitor is
/// called under a lock. Returns (completed, nodes).
inline std::pair<bool, std::uint64_t> enumerate_kernel_below(const SparseBinMatrix& H, std::size_t D,
                                                             const KernelEnumerator::Visit& visit,
                                                             const SearchBudget& budget) {
    if (D <= 1 || H.cols() == 0) return {true, 0};
    const auto start = std::chrono::steady_clock::now();
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false}, budget_hit{false};
    std::atomic<std::uint64_t> nodes{0};
    std::mutex mu;
    auto over = [&] {
        if (stop.load()) return true;
        if (budget.seconds > 0 &&
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() > budget.seconds) {
            budget_hit = true;
            return true;
        }
        if (budget.max_nodes && nodes.load() > budget.max_nodes) {
            budget_hit = true;
            return true;
        }
        return false;
    };
    KernelEnumerator::Visit locked = [&](const std::vector<std::size_t>& s) {
        std::lock_guard<std::mutex> g(mu);
        if (stop.load()) return false;
        if (!visit(s)) {
            stop = true;
            return false;
        }
        return true;
    };
    unsigned threads = budget.threads ? budget.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, H.cols()));
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            KernelEnumerator en(H, D, budget.prune);
            std::uint64_t last = 0;
            for (std::size_t c; !stop.load() && !budget_hit.load() && (c = next.fetch_add(1)) < H.cols();) {
                en.run(c, locked, over);
                nodes += en.nodes() - last;
                last = en.nodes();
                if (en.budget_hit()) break;
            }
        });
    for (auto& th : pool) th.join();
    return {!budget_hit.load() && !stop.load(), nodes.load()};
}

}  // namespace detail

/// Searches for a nonzero x with Hx = 0 and wt(x) < D.
inline KernelSearchResult min_kernel_weight_below(const SparseBinMatrix& H, std::size_t D, const SearchBudget& budget = {}) {
    if (D < 1) throw Error("target weight must be >= 1");
    const auto start = std::chrono::steady_clock::now();
    KernelSearchResult res;
    std::optional<std::vector<std::size_t>> found;
    auto [complete, nodes] = detail::enumerate_kernel_below(
        H, D,
        [&](const std::vector<std::size_t>& s) {
            if (!found || s.size() < found->size()) found = s;
            return false;
        },
        budget);
    res.nodes = nodes;
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (found) {
        res.status = KernelSearchStatus::Found;
        res.support = *found;
    } else {
        res.status = complete ? KernelSearchStatus::NoneBelow : KernelSearchStatus::BudgetExhausted;
    }
    return res;
}

/// Smallest nonzero kernel weight up to max_weight (0 if none found up to it).
inline std::size_t min_kernel_weight(const SparseBinMatrix& H, std::size_t max_weight, const SearchBudget& budget = {}) {
    for (std::size_t w = 1; w <= max_weight; ++w) {
        auto r = min_kernel_weight_below(H, w + 1, budget);
        if (r.status == KernelSearchStatus::Found) return r.support.size();
        if (r.status == KernelSearchStatus::BudgetExhausted) throw Error("min_kernel_weight: budget exhausted");
    }
    return 0;
}

enum class CertifyVerdict { Accepted, Rejected, Inconclusive };

inline const char* to_string(CertifyVerdict v) {
    switch (v) {
        case CertifyVerdict::Accepted: return "accepted";
        case CertifyVerdict::Rejected: return "rejected";
        default: return "inconclusive";
    }
}

struct CertifyResult {
    CertifyVerdict verdict = CertifyVerdict::Accepted;
    std::size_t D = 0;
    char side = 0;                       // 'X' or 'Z' for a rejecting logical vector
    std::vector<std::size_t> logical;    // rejecting vector
    std::size_t kernel_vectors_below = 0;  // distinct below-D kernel vectors examined
    std::uint64_t nodes = 0;
    double seconds = 0;
};

/// Accepted iff every nonzero kernel vector of weight < D on either side lies in
/// the opposite row space. On acceptance d_L = D is recorded on the code.
inline CertifyResult certify_lower_bound(CssCode& code, std::size_t D, const SearchBudget& budget = {}) {
    const auto start = std::chrono::steady_clock::now();
    CertifyResult res;
    res.D = D;
    // X-type logicals: ker H_Z outside row(H_X); Z-type: ker H_X outside row(H_Z).
    struct SideSpec {
        char name;
        const SparseBinMatrix* kernel_of;
        const RowSpaceBasis* stabilizers;
    };
    const SideSpec sides[2] = {{'X', &code.hz(), &code.row_x()}, {'Z', &code.hx(), &code.row_z()}};
    bool inconclusive = false;
    for (const auto& sd : sides) {
        std::set<std::vector<std::size_t>> seen;
        std::optional<std::vector<std::size_t>> logical;
        auto [complete, nodes] = detail::enumerate_kernel_below(
            *sd.kernel_of, D,
            [&](const std::vector<std::size_t>& s) {
                if (!seen.insert(s).second) return true;
                if (!sd.stabilizers->contains(BitVec::from_support(code.n(), s))) {
                    logical = s;
                    return false;
                }
                return true;
            },
            budget);
        res.nodes += nodes;
        res.kernel_vectors_below += seen.size();
        if (logical) {
            res.verdict = CertifyVerdict::Rejected;
            res.side = sd.name;
            res.logical = *logical;
            res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            return res;
        }
        if (!complete) inconclusive = true;
    }
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (inconclusive) {
        res.verdict = CertifyVerdict::Inconclusive;
        return res;
    }
    for (auto* iv : {&code.dist_x, &code.dist_z}) {
        if (!iv->lower || *iv->lower < D) {
            iv->lower = D;
            iv->provenance += "lower bound D=" + std::to_string(D) + " by exhaustive enumeration; ";
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// Witnesses

struct WitnessReport {
    char side = 'X';
    std::vector<std::size_t> support;
    std::size_t weight = 0;
    bool in_kernel = false;     // X: in ker H_Z; Z: in ker H_X
    bool in_row_space = false;  // X: in row(H_X); Z: in row(H_Z)
    bool valid() const { return in_kernel && !in_row_space; }
};

inline WitnessReport verify_witness(CssCode& code, char side, std::vector<std::size_t> support) {
    if (side != 'X' && side != 'Z') throw FormatError("witness side must be X or Z");
    std::sort(support.begin(), support.end());
    support.erase(std::unique(support.begin(), support.end()), support.end());
    for (auto c : support)
        if (c >= code.n()) throw FormatError("witness column out of range");
    WitnessReport w;
    w.side = side;
    w.support = support;
    w.weight = support.size();
    const auto& checks = side == 'X' ? code.hz() : code.hx();
    const auto& stab = side == 'X' ? code.row_x() : code.row_z();
    w.in_kernel = checks.syndrome_of(support).none();
    w.in_row_space = stab.contains(BitVec::from_support(code.n(), support));
    if (w.valid() && w.weight > 0) {
        auto& iv = side == 'X' ? code.dist_x : code.dist_z;
        if (!iv.upper || *iv.upper > w.weight) {
            iv.upper = w.weight;
            iv.provenance += "upper bound " + std::to_string(w.weight) + " by explicit witness; ";
        }
    }
    return w;
}

/// Witness file. Either lifted pair notation
///   side X / P 64 / K 0 16 32 48 / pair c r ...   -> columns cP + (r + k) mod P
/// or plain global columns
///   side Z / column j ...
struct WitnessFile {
    char side = 'X';
    std::int64_t P = 0;
    std::vector<std::int64_t> K;
    std::vector<std::pair<std::size_t, std::int64_t>> pairs;
    std::vector<std::size_t> columns;

    std::vector<std::size_t> support() const {
        std::vector<std::size_t> out = columns;
        for (auto [c, r] : pairs)
            for (auto k : K.empty() ? std::vector<std::int64_t>{0} : K)
                out.push_back(c * static_cast<std::size_t>(P) + static_cast<std::size_t>(zmod::reduce(r + k, P)));
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }
};

inline void write_witness(std::ostream& os, const WitnessFile& w) {
    os << "side " << w.side << '\n';
    if (!w.pairs.empty()) {
        os << "P " << w.P << "\nK";
        for (auto k : w.K) os << ' ' << k;
        os << '\n';
        for (auto [c, r] : w.pairs) os << "pair " << c << ' ' << r << '\n';
    }
    for (auto c : w.columns) os << "column " << c << '\n';
}

inline WitnessFile read_witness(std::istream& is) {
    WitnessFile w;
    std::string line;
    bool have_side = false;
    while (std::getline(is, line)) {
        if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;
        if (key == "side") {
            std::string s;
            ls >> s;
            if (s != "X" && s != "Z") throw FormatError("witness: side must be X or Z");
            w.side = s[0];
            have_side = true;
        } else if (key == "P") {
            ls >> w.P;
        } else if (key == "K") {
            std::int64_t k;
            while (ls >> k) w.K.push_back(k);
        } else if (key == "pair") {
            std::size_t c;
            std::int64_t r;
            if (!(ls >> c >> r)) throw FormatError("witness: bad pair line");
            w.pairs.push_back({c, r});
        } else if (key == "column") {
            std::size_t c;
            if (!(ls >> c)) throw FormatError("witness: bad column line");
            w.columns.push_back(c);
        } else {
            throw FormatError("witness: unknown key '" + key + "'");
        }
    }
    if (!have_side) throw FormatError("witness: missing side");
    if (!w.pairs.empty() && w.P <= 0) throw FormatError("witness: pair notation needs P");
    return w;
}

// ---------------------------------------------------------------------------
// Code manifest: key/path lines, paths relative to the manifest.
//   base <coefficient file>      labels <label file>
//   hx <alist>                   hz <alist>
// Matrices are read when given, otherwise built from base (+ labels).

struct CodeBundle {
    CssCode code;
    std::optional<BasePair> base;
    std::optional<LiftLabels> labels;
};

inline SparseBinMatrix load_alist(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path);
    return read_alist(in);
}

inline CodeBundle load_code(const std::string& manifest) {
    std::ifstream in(manifest);
    if (!in) throw FormatError("cannot open " + manifest);
    const auto dir = std::filesystem::path(manifest).parent_path();
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
        std::istringstream ls(line);
        std::string k, v;
        if (!(ls >> k)) continue;
        if (!(ls >> v)) throw FormatError("manifest: key '" + k + "' without a path");
        if (k != "base" && k != "labels" && k != "hx" && k != "hz") throw FormatError("manifest: unknown key '" + k + "'");
        kv[k] = (dir / v).string();
    }
    CodeBundle b;
    if (kv.count("base")) b.base = build_base(load_coefficients(kv["base"]));
    if (kv.count("labels")) {
        if (!b.base) throw FormatError("manifest: labels need a base");
        std::ifstream li(kv["labels"]);
        if (!li) throw FormatError("cannot open " + kv["labels"]);
        b.labels = read_labels(li, *b.base);
    }
    if (kv.count("hx") || kv.count("hz")) {
        if (!kv.count("hx") || !kv.count("hz")) throw FormatError("manifest: hx and hz must be given together");
        b.code = CssCode(load_alist(kv["hx"]), load_alist(kv["hz"]));
    } else if (b.base && b.labels) {
        b.code = build_lift(*b.base, *b.labels);
    } else if (b.base) {
        b.code = CssCode(b.base->hx, b.base->hz);
    } else {
        throw FormatError("manifest: needs hx/hz or base");
    }
    return b;
}

}  // namespace qcoset
