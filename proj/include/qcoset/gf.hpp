#pragma once

// Finite fields F_q (prime and prime power), multiplicative subgroups and the
// quotient map F^x -> F^x / M.
//
// Elements are encoded as integers in [0, q): the base-p digits of the encoding
// are the polynomial coefficients, constant term least significant.

#include <algorithm>
#include <compare>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "qcoset/error.hpp"

namespace qcoset {

struct FieldElem {
    std::uint32_t value = 0;

    constexpr FieldElem() = default;
    constexpr explicit FieldElem(std::uint32_t v) : value(v) {}
    constexpr auto operator<=>(const FieldElem&) const = default;
};

namespace detail {

inline bool is_prime(std::uint32_t p) {
    if (p < 2) return false;
    for (std::uint32_t d = 2; d * d <= p; ++d)
        if (p % d == 0) return false;
    return true;
}

// Polynomials over Z/p as little-endian coefficient vectors.
using Poly = std::vector<std::uint32_t>;

inline void trim(Poly& a) {
    while (!a.empty() && a.back() == 0) a.pop_back();
}

inline std::uint32_t inv_mod(std::uint32_t a, std::uint32_t p) {
    // p prime, a != 0
    std::uint64_t result = 1, base = a % p;
    std::uint32_t e = p - 2;
    while (e) {
        if (e & 1) result = result * base % p;
        base = base * base % p;
        e >>= 1;
    }
    return static_cast<std::uint32_t>(result);
}

// Remainder of a modulo b (b nonzero) over Z/p.
inline Poly poly_mod(Poly a, Poly b, std::uint32_t p) {
    trim(a);
    trim(b);
    const std::uint32_t lead_inv = inv_mod(b.back(), p);
    while (a.size() >= b.size()) {
        const std::uint32_t f = static_cast<std::uint32_t>(std::uint64_t(a.back()) * lead_inv % p);
        const std::size_t shift = a.size() - b.size();
        for (std::size_t i = 0; i < b.size(); ++i) {
            a[shift + i] = static_cast<std::uint32_t>((a[shift + i] + std::uint64_t(p - f) * b[i]) % p);
        }
        trim(a);
    }
    return a;
}

// Exhaustive irreducibility check: no monic factor of degree 1..deg/2.
inline bool is_irreducible(const Poly& f, std::uint32_t p) {
    Poly g = f;
    trim(g);
    if (g.size() < 2) return false;
    const std::size_t deg = g.size() - 1;
    for (std::size_t d = 1; d <= deg / 2; ++d) {
        std::uint64_t count = 1;
        for (std::size_t i = 0; i < d; ++i) count *= p;
        for (std::uint64_t code = 0; code < count; ++code) {
            Poly h(d + 1, 0);
            std::uint64_t c = code;
            for (std::size_t i = 0; i < d; ++i) {
                h[i] = static_cast<std::uint32_t>(c % p);
                c /= p;
            }
            h[d] = 1;
            if (poly_mod(g, h, p).empty()) return false;
        }
    }
    return true;
}

}  // namespace detail

/// F_q with q = p^e, realized as F_p[x]/(modulus).
class Field {
public:
    /// Builds F_{p^e}. An empty modulus selects the default: the monic irreducible
    /// polynomial of degree e with the smallest little-endian digit encoding.
    Field(std::uint32_t p, std::uint32_t e, std::vector<std::uint32_t> modulus = {})
        : p_(p), e_(e) {
        if (!detail::is_prime(p)) throw Error("field characteristic " + std::to_string(p) + " is not prime");
        if (e < 1) throw Error("field degree must be >= 1");
        q_ = 1;
        for (std::uint32_t i = 0; i < e; ++i) {
            q_ *= p;
            if (q_ > (1u << 16)) throw Error("field too large for table arithmetic");
        }
        if (modulus.empty()) {
            modulus_ = default_modulus(p, e);
        } else {
            if (modulus.size() != e + 1 || modulus.back() % p == 0)
                throw Error("modulus must have exactly degree e");
            for (auto& c : modulus) c %= p;
            // Normalize to monic.
            const std::uint32_t lead_inv = detail::inv_mod(modulus.back(), p);
            for (auto& c : modulus) c = static_cast<std::uint32_t>(std::uint64_t(c) * lead_inv % p);
            modulus_ = std::move(modulus);
            if (e > 1 && !detail::is_irreducible(modulus_, p))
                throw Error("modulus is reducible over Z/" + std::to_string(p));
        }
        if (e == 1) modulus_ = {0, 1};
        build_tables();
    }

    std::uint32_t characteristic() const { return p_; }
    std::uint32_t degree() const { return e_; }
    std::uint32_t size() const { return q_; }
    const std::vector<std::uint32_t>& modulus() const { return modulus_; }
    FieldElem generator() const { return FieldElem(exp_[1]); }

    FieldElem zero() const { return FieldElem(0); }
    FieldElem one() const { return FieldElem(1); }
    FieldElem elem(std::uint32_t v) const {
        if (v >= q_) throw Error("field element " + std::to_string(v) + " out of range");
        return FieldElem(v);
    }

    FieldElem add(FieldElem a, FieldElem b) const {
        if (!add_.empty()) return FieldElem(add_[a.value * q_ + b.value]);
        return digitwise(a, b, false);
    }
    FieldElem neg(FieldElem a) const { return FieldElem(neg_[a.value]); }
    FieldElem sub(FieldElem a, FieldElem b) const { return add(a, neg(b)); }
    FieldElem mul(FieldElem a, FieldElem b) const {
        if (a.value == 0 || b.value == 0) return FieldElem(0);
        std::uint32_t s = log_[a.value] + log_[b.value];
        if (s >= q_ - 1) s -= q_ - 1;
        return FieldElem(exp_[s]);
    }
    FieldElem inv(FieldElem a) const {
        if (a.value == 0) throw Error("zero has no multiplicative inverse");
        return FieldElem(exp_[(q_ - 1 - log_[a.value]) % (q_ - 1)]);
    }
    FieldElem pow(FieldElem a, std::uint64_t k) const {
        if (a.value == 0) return FieldElem(k == 0 ? 1 : 0);
        return FieldElem(exp_[(std::uint64_t(log_[a.value]) * (k % (q_ - 1))) % (q_ - 1)]);
    }
    /// Discrete log with respect to generator(); a must be nonzero.
    std::uint32_t log(FieldElem a) const {
        if (a.value == 0) throw Error("log of zero");
        return log_[a.value];
    }
    /// Multiplicative order of a nonzero element.
    std::uint32_t order(FieldElem a) const {
        const std::uint32_t l = log(a);
        std::uint32_t g = std::gcd(l, q_ - 1);
        return (q_ - 1) / g;
    }

    bool operator==(const Field& o) const { return p_ == o.p_ && e_ == o.e_ && modulus_ == o.modulus_; }

    static std::vector<std::uint32_t> default_modulus(std::uint32_t p, std::uint32_t e) {
        if (e == 1) return {0, 1};
        std::uint64_t count = 1;
        for (std::uint32_t i = 0; i < e; ++i) count *= p;
        for (std::uint64_t code = 0; code < count; ++code) {
            detail::Poly f(e + 1, 0);
            std::uint64_t c = code;
            for (std::uint32_t i = 0; i < e; ++i) {
                f[i] = static_cast<std::uint32_t>(c % p);
                c /= p;
            }
            f[e] = 1;
            if (detail::is_irreducible(f, p)) return f;
        }
        throw Error("no irreducible polynomial found");  // unreachable
    }

private:
    FieldElem digitwise(FieldElem a, FieldElem b, bool) const {
        std::uint32_t x = a.value, y = b.value, r = 0, place = 1;
        for (std::uint32_t i = 0; i < e_; ++i) {
            r += ((x % p_ + y % p_) % p_) * place;
            x /= p_;
            y /= p_;
            place *= p_;
        }
        return FieldElem(r);
    }

    // Polynomial product reduced by the modulus, used only while building the tables.
    std::uint32_t slow_mul(std::uint32_t a, std::uint32_t b) const {
        std::vector<std::uint64_t> x(e_), y(e_), r(2 * e_, 0);
        for (std::uint32_t i = 0; i < e_; ++i) {
            x[i] = a % p_;
            a /= p_;
            y[i] = b % p_;
            b /= p_;
        }
        for (std::uint32_t i = 0; i < e_; ++i)
            for (std::uint32_t j = 0; j < e_; ++j) r[i + j] = (r[i + j] + x[i] * y[j]) % p_;
        for (std::uint32_t k = 2 * e_ - 1; k >= e_; --k) {
            const std::uint64_t c = r[k];
            if (c == 0) continue;
            for (std::uint32_t t = 0; t <= e_; ++t)
                r[k - e_ + t] = (r[k - e_ + t] + (p_ - c) * modulus_[t]) % p_;
        }
        std::uint32_t out = 0;
        for (std::uint32_t i = e_; i-- > 0;) out = out * p_ + static_cast<std::uint32_t>(r[i]);
        return out;
    }

    void build_tables() {
        neg_.resize(q_);
        for (std::uint32_t a = 0; a < q_; ++a) {
            std::uint32_t x = a, r = 0, place = 1;
            for (std::uint32_t i = 0; i < e_; ++i) {
                r += ((p_ - x % p_) % p_) * place;
                x /= p_;
                place *= p_;
            }
            neg_[a] = r;
        }
        if (q_ <= 1024) {
            add_.resize(std::size_t(q_) * q_);
            for (std::uint32_t a = 0; a < q_; ++a)
                for (std::uint32_t b = 0; b < q_; ++b)
                    add_[a * q_ + b] = digitwise(FieldElem(a), FieldElem(b), false).value;
        }
        // Generator: smallest element of order q-1.
        exp_.assign(q_, 0);
        log_.assign(q_, 0);
        if (q_ == 2) {
            exp_[0] = exp_[1] = 1;
            log_[1] = 0;
            return;
        }
        for (std::uint32_t g = 2; g < q_; ++g) {
            std::uint32_t x = 1, ord = 0;
            do {
                x = slow_mul(x, g);
                ++ord;
            } while (x != 1);
            if (ord == q_ - 1) {
                x = 1;
                for (std::uint32_t k = 0; k < q_ - 1; ++k) {
                    exp_[k] = x;
                    log_[x] = k;
                    x = slow_mul(x, g);
                }
                exp_[q_ - 1] = 1;
                return;
            }
        }
        throw Error("no primitive element found");  // unreachable for a field
    }

    std::uint32_t p_, e_, q_ = 0;
    std::vector<std::uint32_t> modulus_;
    std::vector<std::uint32_t> add_, neg_, exp_, log_;
};

/// The unique multiplicative subgroup M of a given order, with a coset-index table.
class Subgroup {
public:
    Subgroup(const Field& field, std::uint32_t order) : order_(order) {
        const std::uint32_t q = field.size();
        if (order == 0 || (q - 1) % order != 0)
            throw InfeasibleError("subgroup order " + std::to_string(order) + " does not divide q-1=" +
                                  std::to_string(q - 1));
        const std::uint32_t step = (q - 1) / order;
        const FieldElem h = field.pow(field.generator(), step);
        FieldElem x = field.one();
        for (std::uint32_t k = 0; k < order; ++k) {
            elements_.push_back(x);
            x = field.mul(x, h);
        }
        std::sort(elements_.begin(), elements_.end());
        // Cosets of M = residues of the discrete log modulo (q-1)/order.
        coset_.assign(q, UINT32_MAX);
        for (std::uint32_t v = 1; v < q; ++v) coset_[v] = field.log(FieldElem(v)) % step;
        index_.assign(q, UINT32_MAX);
        for (std::uint32_t i = 0; i < order; ++i) index_[elements_[i].value] = i;
        num_cosets_ = step;
    }

    std::uint32_t order() const { return order_; }
    std::uint32_t num_cosets() const { return num_cosets_; }
    /// Sorted element list; position = enumeration index mu_v.
    const std::vector<FieldElem>& elements() const { return elements_; }
    bool contains(FieldElem x) const { return x.value < index_.size() && index_[x.value] != UINT32_MAX; }
    std::uint32_t index_of(FieldElem x) const {
        if (!contains(x)) throw Error("element not in subgroup");
        return index_[x.value];
    }

    std::uint32_t coset_id(FieldElem x) const {
        if (x.value == 0) throw Error("zero has no coset in F^x/M");
        return coset_.at(x.value);
    }

private:
    std::uint32_t order_;
    std::uint32_t num_cosets_ = 0;
    std::vector<FieldElem> elements_;
    std::vector<std::uint32_t> coset_;
    std::vector<std::uint32_t> index_;
};

inline Field make_field(std::uint32_t p, std::uint32_t e, std::vector<std::uint32_t> modulus = {}) {
    return Field(p, e, std::move(modulus));
}

inline Subgroup subgroup_of_order(const Field& f, std::uint32_t m) { return Subgroup(f, m); }

}  // namespace qcoset
