#pragma once

// Circulant (CPM) lifts of a base pair: congruence systems over Z/P, the
// label solver, lift-coordinate coset supports, and independent verification.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <deque>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "qcoset/base.hpp"
#include "qcoset/binmat.hpp"
#include "qcoset/css.hpp"
#include "qcoset/error.hpp"
#include "qcoset/zmod.hpp"

namespace qcoset {

/// Row-major edge numbering of a sparse matrix: edge id = offset[r] + position of c in row r.
class EdgeIndex {
public:
    EdgeIndex() = default;
    explicit EdgeIndex(const SparseBinMatrix& H) : H_(&H), offset_(H.rows() + 1, 0) {
        for (std::size_t r = 0; r < H.rows(); ++r) offset_[r + 1] = offset_[r] + H.row(r).size();
    }
    std::size_t size() const { return offset_.back(); }
    std::size_t id(std::size_t r, std::size_t c) const {
        const auto& row = H_->row(r);
        auto it = std::lower_bound(row.begin(), row.end(), c);
        if (it == row.end() || *it != c) throw FormatError("no base edge at (" + std::to_string(r) + "," + std::to_string(c) + ")");
        return offset_[r] + static_cast<std::size_t>(it - row.begin());
    }

private:
    const SparseBinMatrix* H_ = nullptr;
    std::vector<std::size_t> offset_;
};

/// CPM exponents on the base edges, stored in EdgeIndex order.
struct LiftLabels {
    std::int64_t P = 1;
    std::vector<std::int64_t> x, z;

    /// Variable vector [x-edges, z-edges] as used by congruence systems.
    std::vector<std::int64_t> flat() const {
        std::vector<std::int64_t> s = x;
        s.insert(s.end(), z.begin(), z.end());
        return s;
    }
    static LiftLabels from_flat(std::int64_t P, std::size_t num_x, const std::vector<std::int64_t>& s) {
        LiftLabels l;
        l.P = P;
        l.x.assign(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(num_x));
        l.z.assign(s.begin() + static_cast<std::ptrdiff_t>(num_x), s.end());
        for (auto* v : {&l.x, &l.z})
            for (auto& e : *v) e = zmod::reduce(e, P);
        return l;
    }
    static LiftLabels zeros(const BasePair& b, std::int64_t P) {
        return {P, std::vector<std::int64_t>(b.hx.nnz(), 0), std::vector<std::int64_t>(b.hz.nnz(), 0)};
    }
};

/// Lifted matrix: check (r,u) is adjacent to variable (c, u + s(r,c)); global indices rP+u and cP+f.
inline SparseBinMatrix lift_matrix(const SparseBinMatrix& H, const std::vector<std::int64_t>& s, std::int64_t P) {
    if (s.size() != H.nnz()) throw FormatError("label count does not match edge count");
    const auto p = static_cast<std::size_t>(P);
    std::vector<std::vector<std::size_t>> rows(H.rows() * p);
    std::size_t e = 0;
    for (std::size_t r = 0; r < H.rows(); ++r)
        for (auto c : H.row(r)) {
            const auto shift = static_cast<std::size_t>(zmod::reduce(s[e++], P));
            for (std::size_t u = 0; u < p; ++u) rows[r * p + u].push_back(c * p + (u + shift) % p);
        }
    return SparseBinMatrix(H.cols() * p, std::move(rows));
}

inline CssCode build_lift(const BasePair& b, const LiftLabels& l) {
    return CssCode(lift_matrix(b.hx, l.x, l.P), lift_matrix(b.hz, l.z, l.P));
}

// ---------------------------------------------------------------------------
// Constraint systems

enum class FormTag { SixCycleX, SixCycleZ, Support };

struct NonzeroForm {
    IntRow form;
    std::int64_t modulus = 1;
    FormTag tag = FormTag::SixCycleX;
    std::size_t source = 0;  // cycle index or support index
};

struct CongruenceSystem {
    std::int64_t P = 1;
    std::size_t num_x = 0, num_z = 0;
    std::vector<IntRow> zero;
    std::vector<NonzeroForm> nonzero;
    std::size_t nvars() const { return num_x + num_z; }
};

inline IntRow normalize_row(std::map<std::size_t, std::int64_t> acc) {
    IntRow out;
    for (auto [k, v] : acc)
        if (v) out.push_back({k, v});
    return out;
}

/// One homogeneous row per X/Z row pair sharing two columns. Variables: X edges then Z edges.
inline std::vector<IntRow> zero_constraints(const BasePair& b) {
    EdgeIndex ex(b.hx), ez(b.hz);
    const std::size_t off = ex.size();
    std::vector<IntRow> rows;
    std::vector<std::vector<std::size_t>> shared(b.hz.rows());
    for (std::size_t r = 0; r < b.hx.rows(); ++r) {
        for (auto& s : shared) s.clear();
        for (auto c : b.hx.row(r))
            for (auto z : b.hz.col(c)) shared[z].push_back(c);
        for (std::size_t z = 0; z < shared.size(); ++z) {
            const auto& cs = shared[z];
            if (cs.empty()) continue;
            if (cs.size() != 2)
                throw HypothesisError("X row " + std::to_string(r) + " and Z row " + std::to_string(z) + " share " +
                                      std::to_string(cs.size()) + " columns (need 0 or 2)");
            std::map<std::size_t, std::int64_t> acc;
            acc[ex.id(r, cs[0])] += 1;
            acc[off + ez.id(z, cs[0])] -= 1;
            acc[ex.id(r, cs[1])] -= 1;
            acc[off + ez.id(z, cs[1])] += 1;
            rows.push_back(normalize_row(std::move(acc)));
        }
    }
    return rows;
}

/// Signed exponent sum of a base 6-cycle; var_offset selects the X or Z block.
inline IntRow sixcycle_form(const SparseBinMatrix& H, const EdgeIndex& e, const SixCycle& cyc, std::size_t var_offset) {
    (void)H;
    const auto [r0, c0, r1, c1, r2, c2] = cyc;
    std::map<std::size_t, std::int64_t> acc;
    acc[var_offset + e.id(r0, c0)] += 1;
    acc[var_offset + e.id(r1, c0)] -= 1;
    acc[var_offset + e.id(r1, c1)] += 1;
    acc[var_offset + e.id(r2, c1)] -= 1;
    acc[var_offset + e.id(r2, c2)] += 1;
    acc[var_offset + e.id(r0, c2)] -= 1;
    return normalize_row(std::move(acc));
}

enum class Side { X, Z };

inline std::vector<IntRow> sixcycle_forms(const BasePair& b, Side side, const CycleCensus& cc) {
    const SparseBinMatrix& H = side == Side::X ? b.hx : b.hz;
    EdgeIndex e(H);
    const std::size_t off = side == Side::X ? 0 : b.hx.nnz();
    std::vector<IntRow> out;
    for (const auto& cyc : side == Side::X ? cc.cycles_x : cc.cycles_z) out.push_back(sixcycle_form(H, e, cyc, off));
    return out;
}

/// Orthogonality rows plus every same-type 6-cycle form modulo P.
inline CongruenceSystem make_system(const BasePair& b, std::int64_t P, const CycleCensus& cc, bool with_sixcycles = true) {
    CongruenceSystem sys;
    sys.P = P;
    sys.num_x = b.hx.nnz();
    sys.num_z = b.hz.nnz();
    sys.zero = zero_constraints(b);
    if (with_sixcycles) {
        auto fx = sixcycle_forms(b, Side::X, cc);
        auto fz = sixcycle_forms(b, Side::Z, cc);
        for (std::size_t i = 0; i < fx.size(); ++i) sys.nonzero.push_back({fx[i], P, FormTag::SixCycleX, i});
        for (std::size_t i = 0; i < fz.size(); ++i) sys.nonzero.push_back({fz[i], P, FormTag::SixCycleZ, i});
    }
    return sys;
}

// ---------------------------------------------------------------------------
// Lift-coordinate coset supports

struct SupportOrbit {
    std::vector<std::vector<std::size_t>> supports;
    std::vector<bool> outside_row_z;  // per support, base level
    std::int64_t P = 1;
    std::int64_t K_order = 1;  // K = (P/K_order) Z / P Z
    std::string provenance;

    std::int64_t quotient() const { return P / K_order; }
    std::vector<std::int64_t> K() const {
        std::vector<std::int64_t> k;
        for (std::int64_t i = 0; i < K_order; ++i) k.push_back(i * quotient());
        return k;
    }
};

/// Closure of the seeds under t -> t + tau (tau in F) and (t,h) -> (g t, g h) (g in M).
/// Orientation is carried by the seeds themselves (pass both orientations).
inline SupportOrbit orbit_from_seeds(const BasePair& b, const std::vector<std::vector<std::size_t>>& seeds, std::int64_t P,
                                     std::int64_t K_order) {
    if (K_order < 1 || P % K_order) throw FormatError("K must be a subgroup of Z/P");
    const Field& F = b.coeffs.field;
    auto transform = [&](const std::vector<std::size_t>& T, std::uint32_t tau, std::size_t g_index) {
        const FieldElem g = b.M.elements()[g_index];
        std::vector<std::size_t> out;
        for (auto c : T) {
            auto k = b.column_coord(c);
            FieldElem t(static_cast<std::uint32_t>(k.u));
            FieldElem h = b.M.elements()[k.v];
            t = F.mul(F.add(t, FieldElem(tau)), g);
            h = F.mul(h, g);
            out.push_back(b.column(k.lambda, t.value, b.M.index_of(h)));
        }
        std::sort(out.begin(), out.end());
        return out;
    };
    std::set<std::vector<std::size_t>> seen;
    std::deque<std::vector<std::size_t>> work;
    for (auto T : seeds) {
        std::sort(T.begin(), T.end());
        for (auto c : T)
            if (c >= b.n()) throw FormatError("seed column out of range");
        if (seen.insert(T).second) work.push_back(T);
    }
    // Generators: tau = 1 and tau = each field element suffice; use all for clarity.
    while (!work.empty()) {
        auto T = work.front();
        work.pop_front();
        for (std::uint32_t tau = 0; tau < F.size(); ++tau)
            for (std::size_t g = 0; g < b.m(); ++g) {
                auto U = transform(T, tau, g);
                if (seen.insert(U).second) work.push_back(std::move(U));
            }
    }
    SupportOrbit orb;
    orb.P = P;
    orb.K_order = K_order;
    orb.provenance = std::to_string(seeds.size()) + " seed(s); translations of t and joint scalings of (t,h) by M";
    RowSpaceBasis rz(b.hz);
    for (const auto& T : seen) {
        if (!b.hx.syndrome_of(T).none())
            throw HypothesisError("orbit support left ker H_X: symmetry implementation error");
        orb.supports.push_back(T);
        orb.outside_row_z.push_back(!rz.contains(BitVec::from_support(b.n(), T)));
    }
    return orb;
}

struct SupportForms {
    Side side = Side::X;              // checks the support must satisfy: X -> H_X, Z -> H_Z
    bool trivially_excluded = false;  // some row meets T an odd number of times
    bool tree = false;                // no cycles: closable for every labeling
    std::int64_t modulus = 1;         // |(Z/P)/K|
    std::vector<std::size_t> columns;
    // constraint graph edges: (row, local a, local b) with a < b
    std::vector<std::array<std::size_t, 3>> edges;
    std::vector<std::size_t> tree_parent_edge;  // per local vertex, edge index (root: npos)
    std::vector<std::size_t> bfs_order;
    std::vector<IntRow> forms;  // sorted by cycle length; variables are that side's edges
    std::vector<std::size_t> cycle_lengths;
};

/// Fundamental-cycle forms of the row constraint graph on T (rows of H_X or H_Z);
/// labels exclude the coset support iff some form is nonzero in (Z/P)/K.
inline SupportForms support_quotient_forms(const BasePair& b, const std::vector<std::size_t>& T, std::int64_t P,
                                           std::int64_t K_order, Side side = Side::X) {
    if (K_order < 1 || P % K_order) throw FormatError("K must be a subgroup of Z/P");
    const SparseBinMatrix& H = side == Side::X ? b.hx : b.hz;
    SupportForms sf;
    sf.side = side;
    sf.modulus = P / K_order;
    sf.columns = T;
    std::sort(sf.columns.begin(), sf.columns.end());
    std::map<std::size_t, std::size_t> local;
    for (std::size_t i = 0; i < sf.columns.size(); ++i) local[sf.columns[i]] = i;
    std::map<std::size_t, std::vector<std::size_t>> touch;
    for (auto c : sf.columns) {
        if (c >= b.n()) throw FormatError("support column out of range");
        for (auto r : H.col(c)) touch[r].push_back(local[c]);
    }
    for (auto& [r, cs] : touch) {
        if (cs.size() % 2) {
            sf.trivially_excluded = true;
            return sf;
        }
        if (cs.size() != 2) throw HypothesisError("row " + std::to_string(r) + " meets the support in " +
                                                  std::to_string(cs.size()) + " columns (need 0 or 2)");
        sf.edges.push_back({r, std::min(cs[0], cs[1]), std::max(cs[0], cs[1])});
    }
    const std::size_t nv = sf.columns.size();
    std::vector<std::vector<std::size_t>> adj(nv);
    for (std::size_t e = 0; e < sf.edges.size(); ++e) {
        adj[sf.edges[e][1]].push_back(e);
        adj[sf.edges[e][2]].push_back(e);
    }
    constexpr std::size_t npos = static_cast<std::size_t>(-1);
    sf.tree_parent_edge.assign(nv, npos);
    std::vector<std::size_t> depth(nv, npos);
    std::vector<bool> tree_edge(sf.edges.size(), false);
    if (nv) {
        depth[0] = 0;
        sf.bfs_order.push_back(0);
        for (std::size_t h = 0; h < sf.bfs_order.size(); ++h) {
            const std::size_t v = sf.bfs_order[h];
            for (auto e : adj[v]) {
                const std::size_t w = sf.edges[e][1] == v ? sf.edges[e][2] : sf.edges[e][1];
                if (depth[w] != npos) continue;
                depth[w] = depth[v] + 1;
                sf.tree_parent_edge[w] = e;
                tree_edge[e] = true;
                sf.bfs_order.push_back(w);
            }
        }
        if (sf.bfs_order.size() != nv) throw HypothesisError("constraint graph on the support is not connected");
    }
    EdgeIndex ex(H);
    auto diff = [&](std::size_t e, std::size_t from, std::map<std::size_t, std::int64_t>& acc, std::int64_t sign) {
        // s(r, to) - s(r, from)
        const auto& E = sf.edges[e];
        const std::size_t to = E[1] == from ? E[2] : E[1];
        acc[ex.id(E[0], sf.columns[to])] += sign;
        acc[ex.id(E[0], sf.columns[from])] -= sign;
    };
    // potential(v) = sum of differences along the tree path from the root
    auto potential = [&](std::size_t v, std::map<std::size_t, std::int64_t>& acc, std::int64_t sign) {
        while (sf.tree_parent_edge[v] != npos) {
            const std::size_t e = sf.tree_parent_edge[v];
            const std::size_t parent = sf.edges[e][1] == v ? sf.edges[e][2] : sf.edges[e][1];
            diff(e, parent, acc, sign);
            v = parent;
        }
    };
    std::vector<std::pair<std::size_t, IntRow>> cyc;
    for (std::size_t e = 0; e < sf.edges.size(); ++e) {
        if (tree_edge[e]) continue;
        const std::size_t a = sf.edges[e][1], bb = sf.edges[e][2];
        std::map<std::size_t, std::int64_t> acc;
        diff(e, a, acc, 1);
        potential(bb, acc, -1);
        potential(a, acc, 1);
        for (auto& [k, v] : acc) v = zmod::reduce(v, sf.modulus);
        cyc.push_back({depth[a] + depth[bb] + 1, normalize_row(std::move(acc))});
    }
    std::stable_sort(cyc.begin(), cyc.end(), [](auto& x, auto& y) { return x.first < y.first; });
    for (auto& [len, f] : cyc) {
        sf.cycle_lengths.push_back(len);
        sf.forms.push_back(std::move(f));
    }
    sf.tree = sf.forms.empty();
    return sf;
}

/// True iff the labels exclude the coset support (some form nonzero, or an odd row).
inline bool support_excluded(const SupportForms& sf, const LiftLabels& l) {
    if (sf.trivially_excluded) return true;
    const auto& s = sf.side == Side::X ? l.x : l.z;
    for (const auto& f : sf.forms)
        if (eval_form(f, s, sf.modulus) != 0) return true;
    return false;
}

/// Adds one exclusion form per orbit support: its shortest fundamental-cycle form
/// modulo |(Z/P)/K|. Nonzero on that form is sufficient for exclusion.
/// Supports that are trivially excluded need no form; tree supports cannot be excluded.
inline void add_support_forms(CongruenceSystem& sys, const BasePair& b, const SupportOrbit& orbit) {
    if (orbit.P != sys.P) throw FormatError("orbit and system disagree on P");
    for (std::size_t i = 0; i < orbit.supports.size(); ++i) {
        auto sf = support_quotient_forms(b, orbit.supports[i], orbit.P, orbit.K_order);
        if (sf.trivially_excluded) continue;
        if (sf.tree) throw HypothesisError("support " + std::to_string(i) + " is a tree: closable under every labeling");
        sys.nonzero.push_back({sf.forms.front(), sf.modulus, FormTag::Support, i});
    }
}

/// Forces the coset support on T into the kernel: every fundamental-cycle form
/// must vanish mod |(Z/P)/K|, added as zero rows scaled by |K|.
inline void add_support_closing_rows(CongruenceSystem& sys, const BasePair& b, const std::vector<std::size_t>& T,
                                     std::int64_t K_order, Side side) {
    auto sf = support_quotient_forms(b, T, sys.P, K_order, side);
    if (sf.trivially_excluded) throw HypothesisError("support meets some row an odd number of times: never closable");
    const std::size_t off = side == Side::X ? 0 : sys.num_x;
    for (const auto& f : sf.forms) {
        IntRow row;
        for (auto [v, a] : f) row.push_back({v + off, zmod::reduce(a * K_order, sys.P)});
        sys.zero.push_back(std::move(row));
    }
}

/// Representatives f_c with f_b - f_a = s(r,b) - s(r,a) mod |(Z/P)/K| on every edge, if consistent.
inline std::optional<std::vector<std::int64_t>> coset_representatives(const BasePair& b, const SupportForms& sf,
                                                                      const LiftLabels& l) {
    if (sf.trivially_excluded) return std::nullopt;
    EdgeIndex ex(sf.side == Side::X ? b.hx : b.hz);
    const auto& lab = sf.side == Side::X ? l.x : l.z;
    const std::int64_t d = sf.modulus;
    auto s = [&](std::size_t r, std::size_t local) { return lab[ex.id(r, sf.columns[local])]; };
    std::vector<std::int64_t> f(sf.columns.size(), 0);
    for (std::size_t h = 1; h < sf.bfs_order.size(); ++h) {
        const std::size_t v = sf.bfs_order[h];
        const auto& E = sf.edges[sf.tree_parent_edge[v]];
        const std::size_t parent = E[1] == v ? E[2] : E[1];
        f[v] = zmod::reduce(f[parent] + s(E[0], v) - s(E[0], parent), d);
    }
    for (const auto& E : sf.edges)
        if (zmod::reduce(f[E[2]] - f[E[1]] - (s(E[0], E[2]) - s(E[0], E[1])), d) != 0) return std::nullopt;
    return f;
}

/// Lifted indicator support {(c, f_c + k) : k in K}, as global columns cP + f.
inline std::vector<std::size_t> coset_support(const std::vector<std::size_t>& columns, const std::vector<std::int64_t>& f,
                                              std::int64_t P, std::int64_t K_order) {
    std::vector<std::size_t> out;
    const std::int64_t d = P / K_order;
    for (std::size_t i = 0; i < columns.size(); ++i)
        for (std::int64_t k = 0; k < K_order; ++k)
            out.push_back(columns[i] * static_cast<std::size_t>(P) + static_cast<std::size_t>(zmod::reduce(f[i] + k * d, P)));
    std::sort(out.begin(), out.end());
    return out;
}

struct CosetSearchResult {
    std::size_t nodes = 0;
    std::vector<std::vector<std::int64_t>> zero_syndrome;  // representatives found, ascending column order
};

/// Exhaustive search, directly on the lifted H_X, over representatives f_c in [0, P/|K|)
/// for lift-coordinate coset supports on T with zero X-syndrome.
inline CosetSearchResult exhaustive_coset_search(const SparseBinMatrix& lifted_hx, const SparseBinMatrix& base_hx,
                                                 const std::vector<std::size_t>& T, std::int64_t P, std::int64_t K_order,
                                                 std::size_t max_results = 16) {
    CosetSearchResult res;
    std::vector<std::size_t> cols = T;
    std::sort(cols.begin(), cols.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
    // place columns in BFS order over shared rows so rows complete early
    {
        std::vector<std::size_t> order{cols.empty() ? 0 : cols[0]}, rest(cols.begin() + (cols.empty() ? 0 : 1), cols.end());
        if (cols.empty()) order.clear();
        for (std::size_t h = 0; h < order.size(); ++h)
            for (auto r : base_hx.col(order[h]))
                for (auto it = rest.begin(); it != rest.end();) {
                    const auto& row = base_hx.row(r);
                    if (std::find(row.begin(), row.end(), *it) != row.end()) {
                        order.push_back(*it);
                        it = rest.erase(it);
                    } else {
                        ++it;
                    }
                }
        order.insert(order.end(), rest.begin(), rest.end());
        cols = std::move(order);
    }
    const std::size_t nv = cols.size();
    const auto p = static_cast<std::size_t>(P);
    const std::int64_t d = P / K_order;
    std::map<std::size_t, std::size_t> local;
    for (std::size_t i = 0; i < nv; ++i) local[cols[i]] = i;
    // rows touching T, grouped by the latest column (in placement order) they touch
    std::vector<std::vector<std::size_t>> rows_done_at(nv);
    std::map<std::size_t, std::size_t> last;
    for (std::size_t i = 0; i < nv; ++i)
        for (auto r : base_hx.col(cols[i])) last[r] = i;
    for (auto [r, i] : last) rows_done_at[i].push_back(r);

    std::vector<char> mark(lifted_hx.cols(), 0);
    std::vector<std::int64_t> f(nv, 0);
    auto place = [&](std::size_t i, char v) {
        for (std::int64_t k = 0; k < K_order; ++k)
            mark[cols[i] * p + static_cast<std::size_t>(zmod::reduce(f[i] + k * d, P))] = v;
    };
    auto rows_even = [&](std::size_t i) {
        for (auto r : rows_done_at[i])
            for (std::size_t u = 0; u < p; ++u) {
                int cnt = 0;
                for (auto c : lifted_hx.row(r * p + u)) cnt += mark[c];
                if (cnt & 1) return false;
            }
        return true;
    };
    auto rec = [&](auto&& self, std::size_t i) -> void {
        if (res.zero_syndrome.size() >= max_results) return;
        if (i == nv) {
            // independent full check on the lifted matrix
            auto supp = coset_support(cols, f, P, K_order);
            if (lifted_hx.syndrome_of(supp).none()) {
                // report representatives in ascending column order
                std::vector<std::size_t> idx(nv);
                std::iota(idx.begin(), idx.end(), 0);
                std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return cols[x] < cols[y]; });
                std::vector<std::int64_t> g;
                for (auto i : idx) g.push_back(f[i]);
                res.zero_syndrome.push_back(std::move(g));
            }
            return;
        }
        for (std::int64_t v = 0; v < d; ++v) {
            ++res.nodes;
            f[i] = v;
            place(i, 1);
            if (rows_even(i)) self(self, i + 1);
            place(i, 0);
        }
    };
    if (nv) rec(rec, 0);
    return res;
}

// ---------------------------------------------------------------------------
// Label solver

enum class SolveMode { Randomized, Complete };
enum class SolveStatus { Solved, Unsat, BudgetExhausted };

inline const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Solved: return "solved";
        case SolveStatus::Unsat: return "unsat";
        default: return "budget-exhausted";
    }
}

struct SolveBudget {
    std::size_t restarts = 64;
    std::size_t steps_per_restart = 20000;
    std::size_t complete_nodes = 10'000'000;
};

struct SolveResult {
    SolveStatus status = SolveStatus::BudgetExhausted;
    std::vector<std::int64_t> s;        // best assignment found (solution when solved)
    std::size_t violated = 0;           // nonzero forms evaluating to zero under s
    std::vector<std::size_t> forced_zero;  // forms vanishing on the whole orthogonality solution set
    std::size_t restarts = 0, steps = 0, nodes = 0;
    std::size_t generators = 0;
};

/// Every zero row vanishes mod P and every nonzero form is nonzero mod its modulus.
inline std::size_t count_violations(const CongruenceSystem& sys, const std::vector<std::int64_t>& s,
                                    std::size_t* zero_failures = nullptr) {
    std::size_t zf = 0, nf = 0;
    for (const auto& r : sys.zero)
        if (eval_form(r, s, sys.P) != 0) ++zf;
    for (const auto& f : sys.nonzero)
        if (eval_form(f.form, s, f.modulus) == 0) ++nf;
    if (zero_failures) *zero_failures = zf;
    return nf;
}

/// Labels are parameterized as s = sum_k y_k g_k over kernel generators of the
/// orthogonality rows, so every candidate stays orthogonal; the search then
/// avoids the zero sets of the nonzero forms.
inline SolveResult solve_labels(const CongruenceSystem& sys, std::uint64_t seed, const SolveBudget& budget,
                                SolveMode mode) {
    SolveResult res;
    const std::int64_t P = sys.P;
    const auto gens = kernel_mod(sys.zero, sys.nvars(), P);
    const std::size_t K = gens.size(), F = sys.nonzero.size();
    res.generators = K;
    // w[j][k] = form_j(g_k) mod m_j
    std::vector<std::vector<std::int64_t>> w(F, std::vector<std::int64_t>(K, 0));
    std::vector<std::vector<std::size_t>> forms_of(K);
    std::vector<std::vector<std::size_t>> gens_of(F);
    for (std::size_t j = 0; j < F; ++j) {
        for (std::size_t k = 0; k < K; ++k) {
            w[j][k] = eval_form(sys.nonzero[j].form, gens[k], sys.nonzero[j].modulus);
            if (w[j][k]) {
                forms_of[k].push_back(j);
                gens_of[j].push_back(k);
            }
        }
        if (gens_of[j].empty()) res.forced_zero.push_back(j);
    }
    auto assemble = [&](const std::vector<std::int64_t>& y) {
        std::vector<std::int64_t> s(sys.nvars(), 0);
        for (std::size_t k = 0; k < K; ++k)
            if (y[k])
                for (std::size_t v = 0; v < s.size(); ++v) s[v] = (s[v] + y[k] * gens[k][v]) % P;
        return s;
    };
    auto finish = [&](const std::vector<std::int64_t>& y, SolveStatus st) {
        res.s = assemble(y);
        std::size_t zf = 0;
        res.violated = count_violations(sys, res.s, &zf);
        if (zf) throw Error("solver produced labels violating orthogonality rows (internal error)");
        if (st == SolveStatus::Solved && res.violated) throw Error("solver reported success on a violated form (internal error)");
        res.status = st;
        return res;
    };

    std::vector<bool> active(F, true);
    for (auto j : res.forced_zero) active[j] = false;

    if (mode == SolveMode::Complete) {
        std::vector<std::int64_t> y(K, 0);
        if (!res.forced_zero.empty()) return finish(y, SolveStatus::Unsat);
        // forms become decidable once their last generator is assigned
        std::vector<std::vector<std::size_t>> ready(K);
        for (std::size_t j = 0; j < F; ++j) ready[gens_of[j].back()].push_back(j);
        bool exhausted = false;
        auto rec = [&](auto&& self, std::size_t k) -> bool {
            if (k == K) return true;
            for (std::int64_t v = 0; v < P; ++v) {
                if (++res.nodes > budget.complete_nodes) {
                    exhausted = true;
                    return false;
                }
                y[k] = v;
                bool ok = true;
                for (auto j : ready[k]) {
                    std::int64_t acc = 0;
                    const std::int64_t m = sys.nonzero[j].modulus;
                    for (auto kk : gens_of[j]) acc = (acc + w[j][kk] * (y[kk] % m)) % m;
                    if (acc == 0) {
                        ok = false;
                        break;
                    }
                }
                if (ok && self(self, k + 1)) return true;
                if (exhausted) return false;
            }
            y[k] = 0;
            return false;
        };
        if (rec(rec, 0)) return finish(y, SolveStatus::Solved);
        return finish(y, exhausted ? SolveStatus::BudgetExhausted : SolveStatus::Unsat);
    }

    // Randomized min-conflicts over y with restarts.
    std::mt19937_64 rng(seed);
    std::vector<std::int64_t> y(K), val(F), best_y(K, 0);
    std::size_t best_viol = static_cast<std::size_t>(-1);
    std::vector<std::int64_t> delta_buf;
    for (std::size_t restart = 0; restart < std::max<std::size_t>(1, budget.restarts); ++restart) {
        ++res.restarts;
        for (auto& v : y) v = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(P));
        std::vector<std::size_t> viol_list;
        std::vector<std::size_t> pos(F, static_cast<std::size_t>(-1));
        auto set_viol = [&](std::size_t j, bool v) {
            if (v && pos[j] == static_cast<std::size_t>(-1)) {
                pos[j] = viol_list.size();
                viol_list.push_back(j);
            } else if (!v && pos[j] != static_cast<std::size_t>(-1)) {
                const std::size_t last = viol_list.back();
                viol_list[pos[j]] = last;
                pos[last] = pos[j];
                viol_list.pop_back();
                pos[j] = static_cast<std::size_t>(-1);
            }
        };
        for (std::size_t j = 0; j < F; ++j) {
            std::int64_t acc = 0;
            const std::int64_t m = sys.nonzero[j].modulus;
            for (auto k : gens_of[j]) acc = (acc + w[j][k] * (y[k] % m)) % m;
            val[j] = acc;
            if (active[j] && acc == 0) set_viol(j, true);
        }
        for (std::size_t step = 0; step < budget.steps_per_restart; ++step) {
            if (viol_list.size() < best_viol) {
                best_viol = viol_list.size();
                best_y = y;
            }
            if (viol_list.empty()) break;
            ++res.steps;
            const std::size_t j = viol_list[rng() % viol_list.size()];
            const std::size_t k = gens_of[j][rng() % gens_of[j].size()];
            std::int64_t choice;
            if (rng() % 10 == 0) {
                choice = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(P));
            } else {
                // evaluate every value of y_k; keep the least violated (random tie break)
                std::int64_t best_score = INT64_MAX;
                std::size_t ties = 0;
                choice = y[k];
                for (std::int64_t v = 0; v < P; ++v) {
                    std::int64_t score = 0;
                    for (auto jj : forms_of[k]) {
                        if (!active[jj]) continue;
                        const std::int64_t m = sys.nonzero[jj].modulus;
                        const std::int64_t nv = zmod::reduce(val[jj] + w[jj][k] * ((v - y[k]) % m), m);
                        score += nv == 0;
                    }
                    if (score < best_score) {
                        best_score = score;
                        choice = v;
                        ties = 1;
                    } else if (score == best_score && rng() % ++ties == 0) {
                        choice = v;
                    }
                }
            }
            if (choice == y[k]) continue;
            for (auto jj : forms_of[k]) {
                const std::int64_t m = sys.nonzero[jj].modulus;
                val[jj] = zmod::reduce(val[jj] + w[jj][k] * ((choice - y[k]) % m), m);
                if (active[jj]) set_viol(jj, val[jj] == 0);
            }
            y[k] = choice;
        }
        if (viol_list.size() < best_viol) {
            best_viol = viol_list.size();
            best_y = y;
        }
        if (best_viol == 0) break;
    }
    if (!res.forced_zero.empty()) return finish(best_y, SolveStatus::Unsat);
    return finish(best_y, best_viol == 0 ? SolveStatus::Solved : SolveStatus::BudgetExhausted);
}

/// Uniformly random element of the orthogonality solution module.
inline LiftLabels random_orthogonal_labels(const BasePair& b, std::int64_t P, std::uint64_t seed) {
    CongruenceSystem sys;
    sys.P = P;
    sys.num_x = b.hx.nnz();
    sys.num_z = b.hz.nnz();
    sys.zero = zero_constraints(b);
    auto r = solve_labels(sys, seed, {1, 0, 0}, SolveMode::Randomized);
    return LiftLabels::from_flat(P, sys.num_x, r.s);
}

enum class Liftability { Avoidable, ForcedZero };

/// Screening: a form is forced-zero iff, modulo every probe prime, it lies in
/// the row space of the orthogonality rows (equivalently annihilates their kernel).
inline std::vector<Liftability> liftability_report(const CongruenceSystem& sys,
                                                   const std::vector<std::int64_t>& primes = {2, 997}) {
    std::vector<Liftability> out(sys.nonzero.size(), Liftability::ForcedZero);
    for (auto p : primes) {
        auto gens = kernel_mod(sys.zero, sys.nvars(), p);
        for (std::size_t j = 0; j < sys.nonzero.size(); ++j) {
            if (out[j] == Liftability::Avoidable) continue;
            for (const auto& g : gens)
                if (eval_form(sys.nonzero[j].form, g, p) != 0) {
                    out[j] = Liftability::Avoidable;
                    break;
                }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Independent verification

/// Shortest cycle length in the Tanner graph of H if it is <= limit, else 0.
inline std::size_t girth_upto(const SparseBinMatrix& H, std::size_t limit) {
    const std::size_t R = H.rows(), C = H.cols();
    // vertices: checks 0..R-1, variables R..R+C-1
    constexpr std::uint32_t unseen = UINT32_MAX;
    std::vector<std::uint32_t> dist(R + C, unseen), parent(R + C, unseen);
    std::vector<std::size_t> touched, queue;
    std::size_t best = 0;
    const std::size_t depth_cap = limit / 2;
    for (std::size_t root = 0; root < R; ++root) {
        for (auto v : touched) dist[v] = parent[v] = unseen;
        touched.clear();
        queue.clear();
        dist[root] = 0;
        touched.push_back(root);
        queue.push_back(root);
        for (std::size_t h = 0; h < queue.size(); ++h) {
            const std::size_t v = queue[h];
            if (dist[v] >= depth_cap) break;
            auto visit = [&](std::size_t w) {
                if (w == parent[v]) return;
                if (dist[w] != unseen) {
                    const std::size_t len = dist[v] + dist[w] + 1;
                    if (len <= limit && (best == 0 || len < best)) best = len;
                    return;
                }
                dist[w] = dist[v] + 1;
                parent[w] = static_cast<std::uint32_t>(v);
                touched.push_back(w);
                queue.push_back(w);
            };
            if (v < R)
                for (auto c : H.row(v)) visit(R + c);
            else
                for (auto r : H.col(v - R)) visit(r);
        }
        if (best == 4) break;
    }
    return best;
}

/// Follows a base 6-cycle on the lifted matrix from check (r0, 0); true iff the walk returns.
inline bool lifted_walk_closes(const SparseBinMatrix& lifted, std::int64_t P, const SixCycle& cyc) {
    const auto p = static_cast<std::size_t>(P);
    std::size_t check = cyc[0] * p;
    for (int step = 0; step < 3; ++step) {
        const std::size_t cblock = cyc[2 * step + 1];
        const std::size_t next_row_block = cyc[(2 * step + 2) % 6];
        std::size_t var = static_cast<std::size_t>(-1);
        for (auto c : lifted.row(check))
            if (c / p == cblock) var = c;
        if (var == static_cast<std::size_t>(-1)) throw FormatError("lifted walk: missing edge");
        std::size_t nxt = static_cast<std::size_t>(-1);
        for (auto r : lifted.col(var))
            if (r / p == next_row_block) nxt = r;
        if (nxt == static_cast<std::size_t>(-1)) throw FormatError("lifted walk: missing edge");
        check = nxt;
    }
    return check == cyc[0] * p;
}

struct LiftReport {
    bool orthogonal = false;
    std::size_t zero_rows = 0, zero_rows_violated = 0;
    std::size_t sixcycles_x = 0, sixcycles_z = 0;
    std::vector<SixCycle> closed_x, closed_z;  // base 6-cycles with Delta = 0
    std::size_t girth_x = 0, girth_z = 0;      // 0 = no cycle up to girth_limit
    std::size_t girth_limit = 8;
    std::size_t orbit_size = 0, orbit_excluded = 0;
    std::vector<bool> support_excluded;
    std::size_t n = 0, rank_x = 0, rank_z = 0, k = 0;

    bool girth_ok() const { return (girth_x == 0 || girth_x >= 8) && (girth_z == 0 || girth_z >= 8); }
    bool delta_ok() const { return closed_x.empty() && closed_z.empty(); }
    bool orbit_ok() const { return orbit_excluded == orbit_size; }
    bool ok() const { return orthogonal && zero_rows_violated == 0 && delta_ok() && girth_ok() && orbit_ok(); }

    std::string text() const {
        std::ostringstream os;
        auto g = [&](std::size_t v) { return v ? std::to_string(v) : ">" + std::to_string(girth_limit); };
        os << "orthogonality " << (orthogonal && zero_rows_violated == 0 ? "PASS" : "FAIL") << " product_is_zero="
           << orthogonal << " zero_rows=" << zero_rows << " violated=" << zero_rows_violated << '\n';
        os << "sixcycle_delta " << (delta_ok() ? "PASS" : "FAIL") << " forms=" << sixcycles_x << "+" << sixcycles_z
           << " closed=" << closed_x.size() << "+" << closed_z.size();
        if (!closed_x.empty() || !closed_z.empty()) {
            const auto& c = closed_x.empty() ? closed_z.front() : closed_x.front();
            os << " example=" << (closed_x.empty() ? "Z" : "X") << "(" << c[0] << "," << c[1] << "," << c[2] << ","
               << c[3] << "," << c[4] << "," << c[5] << ")";
        }
        os << '\n';
        os << "girth " << (girth_ok() ? "PASS" : "FAIL") << " X=" << g(girth_x) << " Z=" << g(girth_z) << '\n';
        os << "orbit " << (orbit_ok() ? "PASS" : "FAIL") << " excluded=" << orbit_excluded << "/" << orbit_size << '\n';
        os << "params n=" << n << " rank_x=" << rank_x << " rank_z=" << rank_z << " k=" << k << '\n';
        return os.str();
    }
};

inline LiftReport verify_lift(const CssCode& code, const BasePair& b, const LiftLabels& l,
                              const SupportOrbit* orbit = nullptr) {
    LiftReport rep;
    rep.orthogonal = product_is_zero(code.hx(), code.hz());
    const auto s = l.flat();
    const auto zero = zero_constraints(b);
    rep.zero_rows = zero.size();
    for (const auto& r : zero)
        if (eval_form(r, s, l.P) != 0) ++rep.zero_rows_violated;
    const auto cc = census(b);
    EdgeIndex ex(b.hx), ez(b.hz);
    rep.sixcycles_x = cc.cycles_x.size();
    rep.sixcycles_z = cc.cycles_z.size();
    for (const auto& cyc : cc.cycles_x)
        if (eval_form(sixcycle_form(b.hx, ex, cyc, 0), l.x, l.P) == 0) rep.closed_x.push_back(cyc);
    for (const auto& cyc : cc.cycles_z)
        if (eval_form(sixcycle_form(b.hz, ez, cyc, 0), l.z, l.P) == 0) rep.closed_z.push_back(cyc);
    rep.girth_x = girth_upto(code.hx(), rep.girth_limit);
    rep.girth_z = girth_upto(code.hz(), rep.girth_limit);
    if (orbit) {
        rep.orbit_size = orbit->supports.size();
        for (const auto& T : orbit->supports) {
            auto sf = support_quotient_forms(b, T, l.P, orbit->K_order);
            const bool ex_ok = support_excluded(sf, l);
            rep.support_excluded.push_back(ex_ok);
            rep.orbit_excluded += ex_ok;
        }
    }
    rep.n = code.n();
    rep.rank_x = code.rank_x();
    rep.rank_z = code.rank_z();
    rep.k = code.k();
    return rep;
}

// ---------------------------------------------------------------------------
// Support file:
//   K <order>                    subgroup order used for orbit seeds
//   seed c1 c2 ...               orbit seed (base columns)
//   close X|Z <order> c1 c2 ...  support whose coset lift must stay in the kernel

struct ClosingSupport {
    Side side = Side::X;
    std::int64_t K_order = 1;
    std::vector<std::size_t> columns;
};

struct SupportFile {
    std::int64_t K_order = 1;
    std::vector<std::vector<std::size_t>> seeds;
    std::vector<ClosingSupport> close;
};

inline SupportFile read_support_file(std::istream& is) {
    SupportFile f;
    std::string line;
    while (std::getline(is, line)) {
        if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;
        auto cols = [&] {
            std::vector<std::size_t> v;
            std::size_t c;
            while (ls >> c) v.push_back(c);
            if (!ls.eof() || v.empty()) throw FormatError("support file: bad column list");
            return v;
        };
        if (key == "K") {
            if (!(ls >> f.K_order) || f.K_order < 1) throw FormatError("support file: bad K");
        } else if (key == "seed") {
            f.seeds.push_back(cols());
        } else if (key == "close") {
            ClosingSupport c;
            std::string side;
            if (!(ls >> side >> c.K_order) || (side != "X" && side != "Z") || c.K_order < 1)
                throw FormatError("support file: expected 'close X|Z <order> columns'");
            c.side = side == "X" ? Side::X : Side::Z;
            c.columns = cols();
            f.close.push_back(std::move(c));
        } else {
            throw FormatError("support file: unknown key '" + key + "'");
        }
    }
    return f;
}

inline SupportFile load_support_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path);
    return read_support_file(in);
}

// ---------------------------------------------------------------------------
// Label file: "P <P>" then sorted "X|Z row col exponent" lines.

inline void write_labels(std::ostream& os, const BasePair& b, const LiftLabels& l) {
    os << "P " << l.P << '\n';
    std::size_t e = 0;
    for (std::size_t r = 0; r < b.hx.rows(); ++r)
        for (auto c : b.hx.row(r)) os << "X " << r << ' ' << c << ' ' << l.x[e++] << '\n';
    e = 0;
    for (std::size_t r = 0; r < b.hz.rows(); ++r)
        for (auto c : b.hz.row(r)) os << "Z " << r << ' ' << c << ' ' << l.z[e++] << '\n';
}

inline LiftLabels read_labels(std::istream& is, const BasePair& b) {
    LiftLabels l;
    std::string tag;
    if (!(is >> tag >> l.P) || tag != "P" || l.P < 1) throw FormatError("label file: expected 'P <order>'");
    EdgeIndex ex(b.hx), ez(b.hz);
    l.x.assign(ex.size(), -1);
    l.z.assign(ez.size(), -1);
    std::size_t r, c;
    std::int64_t s;
    while (is >> tag >> r >> c >> s) {
        if (tag != "X" && tag != "Z") throw FormatError("label file: bad side '" + tag + "'");
        const auto& H = tag == "X" ? b.hx : b.hz;
        if (r >= H.rows()) throw FormatError("label file: row out of range");
        auto& dst = tag == "X" ? l.x : l.z;
        dst[(tag == "X" ? ex : ez).id(r, c)] = zmod::reduce(s, l.P);
    }
    if (!is.eof()) throw FormatError("label file: malformed line");
    for (auto* v : {&l.x, &l.z})
        for (auto x : *v)
            if (x < 0) throw FormatError("label file: some base edge is unlabeled");
    return l;
}

}  // namespace qcoset
