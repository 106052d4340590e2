#pragma once

// Linear algebra over Z/PZ for composite P: kernel generators of a
// homogeneous system, computed per prime power by valuation-pivot
// diagonalization and glued back together by CRT.

#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include "qcoset/error.hpp"

namespace qcoset {

/// Sparse integer row: (variable index, coefficient).
using IntRow = std::vector<std::pair<std::size_t, std::int64_t>>;

namespace zmod {

inline std::int64_t reduce(std::int64_t x, std::int64_t m) {
    x %= m;
    return x < 0 ? x + m : x;
}

inline std::int64_t inverse(std::int64_t a, std::int64_t m) {
    std::int64_t g = m, x = 0, x1 = 1, a1 = reduce(a, m);
    while (a1) {
        std::int64_t t = g / a1;
        std::tie(g, a1) = std::make_pair(a1, g - t * a1);
        std::tie(x, x1) = std::make_pair(x1, x - t * x1);
    }
    if (g != 1) throw Error("inverse: element is not a unit");
    return reduce(x, m);
}

/// Prime-power factorization as (p, k, p^k).
struct PrimePower {
    std::int64_t p;
    int k;
    std::int64_t q;
};

inline std::vector<PrimePower> factor(std::int64_t n) {
    if (n < 1) throw Error("factor: modulus must be positive");
    std::vector<PrimePower> out;
    for (std::int64_t p = 2; p * p <= n; ++p) {
        if (n % p) continue;
        PrimePower pp{p, 0, 1};
        while (n % p == 0) {
            n /= p;
            ++pp.k;
            pp.q *= p;
        }
        out.push_back(pp);
    }
    if (n > 1) out.push_back({n, 1, n});
    return out;
}

inline int valuation(std::int64_t x, std::int64_t p, int k) {
    if (x == 0) return k;
    int v = 0;
    while (x % p == 0) {
        x /= p;
        ++v;
    }
    return v;
}

/// Kernel generators of A over Z/p^k.
inline std::vector<std::vector<std::int64_t>> kernel_prime_power(const std::vector<IntRow>& rows, std::size_t nvars,
                                                                 const PrimePower& pp) {
    const std::int64_t q = pp.q;
    const std::size_t R = rows.size(), C = nvars;
    std::vector<std::int64_t> a(R * C, 0);
    for (std::size_t i = 0; i < R; ++i)
        for (auto [j, v] : rows[i]) {
            if (j >= C) throw FormatError("kernel: variable index out of range");
            a[i * C + j] = reduce(a[i * C + j] + v, q);
        }
    // vt holds V transposed: column ops on V become row ops on vt.
    std::vector<std::int64_t> vt(C * C, 0);
    for (std::size_t j = 0; j < C; ++j) vt[j * C + j] = 1;
    auto A = [&](std::size_t i, std::size_t j) -> std::int64_t& { return a[i * C + j]; };

    std::vector<int> diag;
    std::size_t r = 0;
    for (; r < std::min(R, C); ++r) {
        int best_v = pp.k;
        std::size_t bi = 0, bj = 0;
        for (std::size_t i = r; i < R && best_v > 0; ++i)
            for (std::size_t j = r; j < C; ++j) {
                if (!A(i, j)) continue;
                int v = valuation(A(i, j), pp.p, pp.k);
                if (v < best_v) {
                    best_v = v;
                    bi = i;
                    bj = j;
                    if (v == 0) break;
                }
            }
        if (best_v == pp.k) break;
        if (bi != r)
            for (std::size_t j = 0; j < C; ++j) std::swap(A(r, j), A(bi, j));
        if (bj != r) {
            for (std::size_t i = 0; i < R; ++i) std::swap(A(i, r), A(i, bj));
            for (std::size_t i = 0; i < C; ++i) std::swap(vt[r * C + i], vt[bj * C + i]);
        }
        std::int64_t pv = 1;
        for (int t = 0; t < best_v; ++t) pv *= pp.p;
        const std::int64_t unit_inv = inverse(A(r, r) / pv, q);
        for (std::size_t j = r; j < C; ++j) A(r, j) = A(r, j) * unit_inv % q;
        for (std::size_t i = r + 1; i < R; ++i) {
            if (!A(i, r)) continue;
            const std::int64_t f = A(i, r) / pv;
            for (std::size_t j = r; j < C; ++j)
                if (A(r, j)) A(i, j) = reduce(A(i, j) - f * A(r, j), q);
        }
        for (std::size_t j = r + 1; j < C; ++j) {
            if (!A(r, j)) continue;
            const std::int64_t f = A(r, j) / pv;
            // rows below r are already zero in column r
            A(r, j) = 0;
            for (std::size_t i = 0; i < C; ++i)
                if (vt[r * C + i]) vt[j * C + i] = reduce(vt[j * C + i] - f * vt[r * C + i], q);
        }
        diag.push_back(best_v);
    }
    std::vector<std::vector<std::int64_t>> gens;
    for (std::size_t i = 0; i < C; ++i) {
        const int v = i < diag.size() ? diag[i] : pp.k;
        if (v == 0) continue;
        std::int64_t scale = 1;
        for (int t = 0; t < pp.k - v; ++t) scale *= pp.p;
        std::vector<std::int64_t> g(C);
        for (std::size_t j = 0; j < C; ++j) g[j] = vt[i * C + j] * scale % q;
        gens.push_back(std::move(g));
    }
    return gens;
}

}  // namespace zmod

/// Generating set of {s in (Z/P)^n : A s = 0 mod P}.
inline std::vector<std::vector<std::int64_t>> kernel_mod(const std::vector<IntRow>& rows, std::size_t nvars,
                                                        std::int64_t P) {
    std::vector<std::vector<std::int64_t>> out;
    for (const auto& pp : zmod::factor(P)) {
        const std::int64_t cof = P / pp.q;
        const std::int64_t idem = cof * zmod::inverse(cof % pp.q, pp.q) % P;
        for (auto& g : zmod::kernel_prime_power(rows, nvars, pp)) {
            for (auto& x : g) x = x * idem % P;
            out.push_back(std::move(g));
        }
    }
    return out;
}

/// Evaluates a sparse integer form at s, reduced mod m.
inline std::int64_t eval_form(const IntRow& form, const std::vector<std::int64_t>& s, std::int64_t m) {
    std::int64_t acc = 0;
    for (auto [j, c] : form) acc = zmod::reduce(acc + zmod::reduce(c, m) * zmod::reduce(s[j], m), m);
    return acc;
}

}  // namespace qcoset
