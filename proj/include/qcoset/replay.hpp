#pragma once

// Turns a logical-failure dump into explicit logical operators of the code.

#include <optional>
#include <vector>

#include "qcoset/certify.hpp"
#include "qcoset/css.hpp"
#include "qcoset/decode.hpp"
#include "qcoset/error.hpp"

namespace qcoset {

struct ReplayResult {
    bool degenerate = true;  // residual is a stabilizer on both sides
    std::optional<WitnessReport> x, z;
};

/// Residual e + e_hat per side; any side outside the stabilizer row space is a
/// logical and updates the code's upper distance bound.
inline ReplayResult extract_logical(CssCode& code, const FailureDump& d) {
    const std::size_t n = code.n();
    for (const BitVec* v : {&d.true_x, &d.true_z, &d.est_x, &d.est_z})
        if (v->size() != n) throw FormatError("dump does not match the code length");
    const BitVec rx = d.true_x ^ d.est_x, rz = d.true_z ^ d.est_z;
    if (!code.hz().multiply(rx).none() || !code.hx().multiply(rz).none())
        throw HypothesisError("dump estimate does not reproduce the syndrome; no logical to extract");
    ReplayResult out;
    if (!rx.none() && !code.row_x().contains(rx)) out.x = verify_witness(code, 'X', rx.support());
    if (!rz.none() && !code.row_z().contains(rz)) out.z = verify_witness(code, 'Z', rz.support());
    out.degenerate = !out.x && !out.z;
    return out;
}

}  // namespace qcoset
