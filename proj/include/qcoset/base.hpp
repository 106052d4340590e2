#pragma once

// Two-branch multiplicative-coset base matrices: construction, coset
// certificates, direct verification, normalized coefficient search and
// cycle census.

#include <algorithm>
#include <atomic>
#include <array>
#include <cstdint>
#include <fstream>
#include <future>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "qcoset/binmat.hpp"
#include "qcoset/error.hpp"
#include "qcoset/gf.hpp"

namespace qcoset {

struct TwoBranchCoefficients {
    Field field{2, 1};
    std::uint32_t m = 1;
    std::uint32_t J = 1;
    // a[lambda][i], b[lambda][j]
    std::array<std::vector<FieldElem>, 2> a, b;

    std::size_t q() const { return field.size(); }

    /// Throws unless the arrays have length J and each branch's 2J values are distinct.
    void validate() const {
        for (int l = 0; l < 2; ++l) {
            if (a[l].size() != J || b[l].size() != J) throw FormatError("coefficient arrays must have length J");
            std::vector<FieldElem> all = a[l];
            all.insert(all.end(), b[l].begin(), b[l].end());
            for (auto x : all)
                if (x.value >= q()) throw FormatError("coefficient out of field range");
            std::sort(all.begin(), all.end());
            if (std::adjacent_find(all.begin(), all.end()) != all.end())
                throw FormatError("branch " + std::to_string(l) + " coefficients are not pairwise distinct");
        }
    }

    bool operator==(const TwoBranchCoefficients& o) const {
        return field == o.field && m == o.m && J == o.J && a == o.a && b == o.b;
    }
    /// Lexicographic key (a0, b0, a1, b1) over canonical integers.
    std::vector<std::uint32_t> key() const {
        std::vector<std::uint32_t> k;
        for (int l = 0; l < 2; ++l) {
            for (auto x : a[l]) k.push_back(x.value);
            for (auto x : b[l]) k.push_back(x.value);
        }
        return k;
    }
};

inline TwoBranchCoefficients make_coefficients(const Field& f, std::uint32_t m, const std::vector<std::uint32_t>& a0,
                                               const std::vector<std::uint32_t>& b0,
                                               const std::vector<std::uint32_t>& a1,
                                               const std::vector<std::uint32_t>& b1) {
    TwoBranchCoefficients c;
    c.field = f;
    c.m = m;
    c.J = static_cast<std::uint32_t>(a0.size());
    auto conv = [&](const std::vector<std::uint32_t>& v) {
        std::vector<FieldElem> out;
        for (auto x : v) out.push_back(f.elem(x));
        return out;
    };
    c.a = {conv(a0), conv(a1)};
    c.b = {conv(b0), conv(b1)};
    c.validate();
    return c;
}

/// Base pair with the global coordinate maps retained.
struct BasePair {
    TwoBranchCoefficients coeffs;
    Subgroup M;
    SparseBinMatrix hx, hz;

    std::size_t q() const { return coeffs.q(); }
    std::size_t m() const { return coeffs.m; }
    std::size_t J() const { return coeffs.J; }
    std::size_t n() const { return 2 * q() * m(); }

    std::size_t column(std::size_t lambda, std::size_t u, std::size_t v) const { return lambda * q() * m() + u * m() + v; }
    std::size_t row(std::size_t i, std::size_t u) const { return i * q() + u; }

    struct ColumnCoord {
        std::size_t lambda, u, v;
    };
    ColumnCoord column_coord(std::size_t c) const {
        return {c / (q() * m()), (c % (q() * m())) / m(), c % m()};
    }
};

inline BasePair build_base(const TwoBranchCoefficients& c) {
    c.validate();
    const Field& F = c.field;
    Subgroup M(F, c.m);
    const std::size_t q = F.size(), m = c.m, J = c.J;
    std::vector<std::vector<std::size_t>> xr(J * q), zr(J * q);
    for (std::size_t lambda = 0; lambda < 2; ++lambda)
        for (std::size_t u = 0; u < q; ++u)
            for (std::size_t v = 0; v < m; ++v) {
                const std::size_t col = lambda * q * m + u * m + v;
                const FieldElem t(static_cast<std::uint32_t>(u)), h = M.elements()[v];
                for (std::size_t i = 0; i < J; ++i) {
                    xr[i * q + F.add(t, F.mul(c.a[lambda][i], h)).value].push_back(col);
                    zr[i * q + F.add(t, F.mul(c.b[lambda][i], h)).value].push_back(col);
                }
            }
    BasePair b{c, M, SparseBinMatrix(2 * q * m, std::move(xr)), SparseBinMatrix(2 * q * m, std::move(zr))};
    for (const auto* H : {&b.hx, &b.hz}) {
        for (std::size_t r = 0; r < H->rows(); ++r)
            if (H->row(r).size() != 2 * m) throw HypothesisError("built base is not row-regular");
        for (std::size_t col = 0; col < H->cols(); ++col)
            if (H->col(col).size() != J) throw HypothesisError("built base is not column-regular");
    }
    return b;
}

struct CertificateResult {
    bool pass = true;
    std::string detail;
    explicit operator bool() const { return pass; }
};

inline CertificateResult check_orthogonality_certificate(const TwoBranchCoefficients& c) {
    const Field& F = c.field;
    Subgroup M(F, c.m);
    for (std::size_t i = 0; i < c.J; ++i)
        for (std::size_t j = 0; j < c.J; ++j) {
            FieldElem d[2];
            for (int l = 0; l < 2; ++l) {
                d[l] = F.sub(c.b[l][j], c.a[l][i]);
                if (d[l].value == 0)
                    return {false, "zero cross difference b_" + std::to_string(j) + " - a_" + std::to_string(i) +
                                       " in branch " + std::to_string(l)};
            }
            if (M.coset_id(d[0]) != M.coset_id(d[1]))
                return {false, "coset mismatch at (i,j)=(" + std::to_string(i) + "," + std::to_string(j) + ")"};
        }
    return {};
}

inline CertificateResult check_4cycle_certificate(const TwoBranchCoefficients& c) {
    const Field& F = c.field;
    Subgroup M(F, c.m);
    for (int side = 0; side < 2; ++side) {
        const auto& arr = side == 0 ? c.a : c.b;
        const char* name = side == 0 ? "a" : "b";
        for (std::size_t i = 0; i < c.J; ++i)
            for (std::size_t k = i + 1; k < c.J; ++k) {
                FieldElem d[2];
                for (int l = 0; l < 2; ++l) {
                    d[l] = F.sub(arr[l][i], arr[l][k]);
                    if (d[l].value == 0)
                        return {false, std::string("zero same-type difference ") + name + "_" + std::to_string(i) +
                                           " - " + name + "_" + std::to_string(k) + " in branch " + std::to_string(l)};
                }
                if (M.coset_id(d[0]) == M.coset_id(d[1]))
                    return {false, std::string("cosets coincide for ") + name + " pair (" + std::to_string(i) + "," +
                                       std::to_string(k) + ")"};
            }
    }
    return {};
}

/// Direct pairwise check that no two same-type rows share two or more columns.
inline CertificateResult verify_4cycles_directly(const SparseBinMatrix& hx, const SparseBinMatrix& hz) {
    for (const auto* H : {&hx, &hz}) {
        std::vector<std::uint32_t> seen(H->rows(), 0);
        for (std::size_t r = 0; r < H->rows(); ++r) {
            std::fill(seen.begin(), seen.end(), 0);
            for (auto c : H->row(r))
                for (auto r2 : H->col(c)) {
                    if (r2 <= r) continue;
                    if (++seen[r2] >= 2)
                        return {false, std::string(H == &hx ? "X" : "Z") + " rows " + std::to_string(r) + " and " +
                                           std::to_string(r2) + " share two columns"};
                }
        }
    }
    return {};
}
inline CertificateResult verify_4cycles_directly(const BasePair& b) { return verify_4cycles_directly(b.hx, b.hz); }

// ---------------------------------------------------------------------------
// Coefficient search

enum class SearchMode { FirstFound, Exhaustive };

namespace detail {

inline void check_feasible(const Field& F, std::uint32_t m, std::uint32_t J) {
    const std::uint32_t q = F.size();
    if (m == 0 || (q - 1) % m != 0)
        throw InfeasibleError("infeasible: m=" + std::to_string(m) + " does not divide q-1=" + std::to_string(q - 1));
    if (q < 2 * J) throw InfeasibleError("infeasible: q=" + std::to_string(q) + " < 2J=" + std::to_string(2 * J));
    if (J >= 2 && (q - 1) / m < 2)
        throw InfeasibleError("infeasible: J>=2 needs at least two cosets of M, but (q-1)/m=" +
                              std::to_string((q - 1) / m));
}

class Searcher {
public:
    Searcher(const Field& F, std::uint32_t m, std::uint32_t J, SearchMode mode) : F_(F), M_(F, m), m_(m), J_(J), mode_(mode) {
        q_ = F.size();
    }

    /// Runs the search restricted to the given value of the first free a0 entry
    /// (or everything when J < 3, where there is no free a0 entry).
    std::vector<TwoBranchCoefficients> run(std::int64_t outer) {
        out_.clear();
        a0_.assign(J_, 0);
        b0_.assign(J_, 0);
        a1_.assign(J_, 0);
        b1_.assign(J_, 0);
        if (J_ >= 2) a0_[1] = 1;
        if (J_ >= 3) {
            a0_[2] = static_cast<std::uint32_t>(outer);
            if (!distinct_prefix(a0_, 3)) return out_;
            rec_a0(3);
        } else {
            rec_a0(J_);
        }
        return out_;
    }

    std::vector<std::int64_t> outer_values() const {
        std::vector<std::int64_t> v;
        if (J_ >= 3)
            for (std::uint32_t x = 0; x < q_; ++x) v.push_back(x);
        else
            v.push_back(-1);
        return v;
    }

private:
    bool done() const { return mode_ == SearchMode::FirstFound && !out_.empty(); }

    static bool distinct_prefix(const std::vector<std::uint32_t>& v, std::size_t len) {
        for (std::size_t i = 0; i < len; ++i)
            for (std::size_t j = i + 1; j < len; ++j)
                if (v[i] == v[j]) return false;
        return true;
    }
    bool clash(std::uint32_t x, const std::vector<std::uint32_t>& a, std::size_t na, const std::vector<std::uint32_t>& b,
               std::size_t nb) const {
        for (std::size_t i = 0; i < na; ++i)
            if (a[i] == x) return true;
        for (std::size_t i = 0; i < nb; ++i)
            if (b[i] == x) return true;
        return false;
    }
    FieldElem E(std::uint32_t x) const { return FieldElem(x); }
    std::uint32_t coset(std::uint32_t x) const { return M_.coset_id(FieldElem(x)); }
    std::uint32_t diff(std::uint32_t x, std::uint32_t y) const { return F_.sub(E(x), E(y)).value; }

    void rec_a0(std::size_t i) {
        if (done()) return;
        if (i == J_) return rec_b0(0);
        for (std::uint32_t x = 0; x < q_ && !done(); ++x) {
            if (clash(x, a0_, i, b0_, 0)) continue;
            a0_[i] = x;
            rec_a0(i + 1);
        }
    }
    void rec_b0(std::size_t j) {
        if (done()) return;
        if (j == J_) return rec_a1(J_ >= 1 ? 1 : 0);
        for (std::uint32_t x = 0; x < q_ && !done(); ++x) {
            if (clash(x, a0_, J_, b0_, j)) continue;
            b0_[j] = x;
            rec_b0(j + 1);
        }
    }
    void rec_a1(std::size_t i) {
        if (done()) return;
        if (i == J_) return rec_b1(0);
        for (std::uint32_t x = 0; x < q_ && !done(); ++x) {
            if (clash(x, a1_, i, b1_, 0)) continue;
            // same-type disjointness for a against earlier entries
            bool ok = true;
            for (std::size_t k = 0; k < i && ok; ++k) {
                const std::uint32_t d1 = diff(x, a1_[k]);
                ok = d1 != 0 && coset(d1) != coset(diff(a0_[i], a0_[k]));
            }
            if (!ok) continue;
            a1_[i] = x;
            rec_a1(i + 1);
        }
    }
    void rec_b1(std::size_t j) {
        if (done()) return;
        if (j == J_) {
            TwoBranchCoefficients c;
            c.field = F_;
            c.m = m_;
            c.J = J_;
            for (std::size_t i = 0; i < J_; ++i) {
                c.a[0].push_back(E(a0_[i]));
                c.b[0].push_back(E(b0_[i]));
                c.a[1].push_back(E(a1_[i]));
                c.b[1].push_back(E(b1_[i]));
            }
            if (check_orthogonality_certificate(c) && check_4cycle_certificate(c)) out_.push_back(std::move(c));
            return;
        }
        // b_j^(1) in the intersection over i of a_i^(1) + (b_j^(0) - a_i^(0)) M
        std::vector<std::uint8_t> count(q_, 0);
        for (std::size_t i = 0; i < J_; ++i) {
            const FieldElem d = F_.sub(E(b0_[j]), E(a0_[i]));
            for (auto h : M_.elements()) ++count[F_.add(E(a1_[i]), F_.mul(d, h)).value];
        }
        for (std::uint32_t x = 0; x < q_ && !done(); ++x) {
            if (count[x] != J_) continue;
            if (clash(x, a1_, J_, b1_, j)) continue;
            bool ok = true;
            for (std::size_t k = 0; k < j && ok; ++k) {
                const std::uint32_t d1 = diff(x, b1_[k]);
                ok = d1 != 0 && coset(d1) != coset(diff(b0_[j], b0_[k]));
            }
            if (!ok) continue;
            b1_[j] = x;
            rec_b1(j + 1);
        }
    }

    const Field& F_;
    Subgroup M_;
    std::uint32_t m_, J_, q_;
    SearchMode mode_;
    std::vector<std::uint32_t> a0_, b0_, a1_, b1_;
    std::vector<TwoBranchCoefficients> out_;
};

}  // namespace detail

/// Normalized search (a0^(0) = a0^(1) = 0, a1^(0) = 1), lexicographic order.
/// FirstFound returns the lexicographically least candidate.
inline std::vector<TwoBranchCoefficients> search_coefficients(const Field& F, std::uint32_t m, std::uint32_t J,
                                                              SearchMode mode, unsigned threads = 0) {
    if (J == 0) throw InfeasibleError("J must be positive");
    detail::check_feasible(F, m, J);
    detail::Searcher probe(F, m, J, mode);
    const auto outers = probe.outer_values();
    std::vector<TwoBranchCoefficients> out;
    if (mode == SearchMode::FirstFound || outers.size() == 1) {
        for (auto o : outers) {
            detail::Searcher s(F, m, J, mode);
            auto r = s.run(o);
            out.insert(out.end(), r.begin(), r.end());
            if (mode == SearchMode::FirstFound && !out.empty()) break;
        }
        return out;
    }
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    std::vector<std::vector<TwoBranchCoefficients>> parts(outers.size());
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i; (i = next.fetch_add(1)) < outers.size();) {
                detail::Searcher s(F, m, J, mode);
                parts[i] = s.run(outers[i]);
            }
        });
    for (auto& th : pool) th.join();
    for (auto& p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
}

// ---------------------------------------------------------------------------
// Census

using SixCycle = std::array<std::size_t, 6>;  // r0 c0 r1 c1 r2 c2

struct CycleCensus {
    std::size_t n6_x = 0, n6_z = 0;
    std::size_t nxz2 = 0;
    std::map<std::size_t, std::size_t> overlap_histogram;  // shared columns -> X/Z row pairs
    std::vector<SixCycle> cycles_x, cycles_z;
};

/// Simple 6-cycles r0-c0-r1-c1-r2-c2-r0 with r0 < r1 < r2, each counted once.
/// Rows are visited as (r0, r1, r2) and (r0, r2, r1) to cover both connection patterns.
inline std::vector<SixCycle> six_cycles(const SparseBinMatrix& H) {
    const std::size_t R = H.rows();
    // shared[r] = list of (other row, shared column)
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> shared(R);
    for (std::size_t r = 0; r < R; ++r)
        for (auto c : H.row(r))
            for (auto r2 : H.col(c))
                if (r2 != r) shared[r].push_back({r2, c});
    for (auto& s : shared) std::sort(s.begin(), s.end());
    std::vector<SixCycle> out;
    for (std::size_t r0 = 0; r0 < R; ++r0) {
        for (auto [r1, c0] : shared[r0]) {
            if (r1 <= r0) continue;
            for (auto [r2, c1] : shared[r1]) {
                if (r2 <= r0 || r2 == r1 || c1 == c0) continue;
                // close r2 -> r0
                auto it = std::lower_bound(shared[r2].begin(), shared[r2].end(), std::make_pair(r0, std::size_t(0)));
                for (; it != shared[r2].end() && it->first == r0; ++it) {
                    const std::size_t c2 = it->second;
                    if (c2 == c0 || c2 == c1) continue;
                    // each undirected cycle is seen twice (r1 and r2 swapped); keep r1 < r2
                    if (r1 < r2) out.push_back({r0, c0, r1, c1, r2, c2});
                }
            }
        }
    }
    return out;
}

inline CycleCensus census(const SparseBinMatrix& hx, const SparseBinMatrix& hz) {
    CycleCensus cc;
    std::vector<std::size_t> cnt(hz.rows());
    for (std::size_t r = 0; r < hx.rows(); ++r) {
        std::fill(cnt.begin(), cnt.end(), 0);
        for (auto c : hx.row(r))
            for (auto z : hz.col(c)) ++cnt[z];
        for (auto k : cnt) ++cc.overlap_histogram[k];
    }
    cc.nxz2 = cc.overlap_histogram.count(2) ? cc.overlap_histogram.at(2) : 0;
    cc.cycles_x = six_cycles(hx);
    cc.cycles_z = six_cycles(hz);
    cc.n6_x = cc.cycles_x.size();
    cc.n6_z = cc.cycles_z.size();
    return cc;
}
inline CycleCensus census(const BasePair& b) { return census(b.hx, b.hz); }

/// Images of c under per-branch translations (a, b of branch l shifted by tau_l)
/// and a common scaling of all four arrays by g in F^x. Returned sorted by key,
/// without duplicates.
inline std::vector<TwoBranchCoefficients> expand_symmetry(const TwoBranchCoefficients& c) {
    const Field& F = c.field;
    std::map<std::vector<std::uint32_t>, TwoBranchCoefficients> out;
    for (std::uint32_t g = 1; g < F.size(); ++g)
        for (std::uint32_t t0 = 0; t0 < F.size(); ++t0)
            for (std::uint32_t t1 = 0; t1 < F.size(); ++t1) {
                TwoBranchCoefficients d = c;
                const std::uint32_t tau[2] = {t0, t1};
                for (int l = 0; l < 2; ++l) {
                    for (auto& x : d.a[l]) x = F.mul(F.add(x, FieldElem(tau[l])), FieldElem(g));
                    for (auto& x : d.b[l]) x = F.mul(F.add(x, FieldElem(tau[l])), FieldElem(g));
                }
                out.emplace(d.key(), std::move(d));
            }
    std::vector<TwoBranchCoefficients> v;
    for (auto& [k, d] : out) v.push_back(std::move(d));
    return v;
}

// ---------------------------------------------------------------------------
// File formats

/// Line-oriented coefficient file:
///   field p e c_0 ... c_e   (modulus, little-endian)
///   m <order>
///   J <weight>
///   a0 ... / b0 ... / a1 ... / b1 ...
inline void write_coefficients(std::ostream& os, const TwoBranchCoefficients& c) {
    os << "field " << c.field.characteristic() << ' ' << c.field.degree();
    for (auto x : c.field.modulus()) os << ' ' << x;
    os << "\nm " << c.m << "\nJ " << c.J << '\n';
    const char* names[4] = {"a0", "b0", "a1", "b1"};
    const std::vector<FieldElem>* arrs[4] = {&c.a[0], &c.b[0], &c.a[1], &c.b[1]};
    for (int k = 0; k < 4; ++k) {
        os << names[k];
        for (auto x : *arrs[k]) os << ' ' << x.value;
        os << '\n';
    }
}

inline TwoBranchCoefficients read_coefficients(std::istream& is) {
    std::map<std::string, std::vector<std::uint32_t>> kv;
    std::string line;
    while (std::getline(is, line)) {
        if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;
        std::vector<std::uint32_t> vals;
        std::uint32_t v;
        while (ls >> v) vals.push_back(v);
        if (!ls.eof()) throw FormatError("coefficient file: non-integer value on line '" + line + "'");
        kv[key] = std::move(vals);
    }
    for (const char* k : {"field", "m", "J", "a0", "b0", "a1", "b1"})
        if (!kv.count(k)) throw FormatError(std::string("coefficient file: missing '") + k + "'");
    const auto& f = kv["field"];
    if (f.size() < 2) throw FormatError("coefficient file: field needs p and e");
    Field F(f[0], f[1], std::vector<std::uint32_t>(f.begin() + 2, f.end()));
    if (kv["m"].size() != 1 || kv["J"].size() != 1) throw FormatError("coefficient file: m and J take one value");
    auto c = make_coefficients(F, kv["m"][0], kv["a0"], kv["b0"], kv["a1"], kv["b1"]);
    if (c.J != kv["J"][0]) throw FormatError("coefficient file: J does not match array length");
    Subgroup(F, c.m);  // throws if m does not divide q-1
    return c;
}

inline TwoBranchCoefficients load_coefficients(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path);
    return read_coefficients(in);
}

/// Sidecar recording the row/column enumerations behind the global indices.
inline void write_base_mapping(std::ostream& os, const BasePair& b) {
    os << "# alpha_u = u (canonical field encoding)\n";
    os << "subgroup";
    for (auto h : b.M.elements()) os << ' ' << h.value;
    os << "\n# column kappa lambda u v h\n";
    for (std::size_t c = 0; c < b.n(); ++c) {
        auto k = b.column_coord(c);
        os << "column " << c << ' ' << k.lambda << ' ' << k.u << ' ' << k.v << ' ' << b.M.elements()[k.v].value << '\n';
    }
    os << "# row rho i u (same map for X and Z)\n";
    for (std::size_t i = 0; i < b.J(); ++i)
        for (std::size_t u = 0; u < b.q(); ++u) os << "row " << b.row(i, u) << ' ' << i << ' ' << u << '\n';
}

}  // namespace qcoset
