#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>

#include "qcoset/binmat.hpp"
#include "qcoset/error.hpp"

namespace qcoset {

/// Distance interval for one side, with a note on where each end came from.
struct DistanceInterval {
    std::optional<std::size_t> lower, upper;
    std::string provenance;
};

/// CSS pair with ranks and row-space bases computed once at construction.
class CssCode {
public:
    CssCode() = default;
    CssCode(SparseBinMatrix hx, SparseBinMatrix hz) : hx_(std::move(hx)), hz_(std::move(hz)) {
        if (hx_.cols() != hz_.cols()) throw FormatError("H_X and H_Z have different lengths");
        if (!product_is_zero(hx_, hz_)) throw HypothesisError("H_X H_Z^T != 0: pair is not a CSS code");
        row_x_ = RowSpaceBasis(hx_);
        row_z_ = RowSpaceBasis(hz_);
    }

    const SparseBinMatrix& hx() const { return hx_; }
    const SparseBinMatrix& hz() const { return hz_; }
    std::size_t n() const { return hx_.cols(); }
    std::size_t rank_x() const { return row_x_.rank(); }
    std::size_t rank_z() const { return row_z_.rank(); }
    std::size_t k() const { return n() - rank_x() - rank_z(); }
    double rate() const { return n() ? double(k()) / double(n()) : 0.0; }
    const RowSpaceBasis& row_x() const { return row_x_; }
    const RowSpaceBasis& row_z() const { return row_z_; }

    /// d_X: X-type logicals (ker H_Z minus row H_X); d_Z symmetric.
    DistanceInterval dist_x, dist_z;

    std::string params() const {
        return "[[" + std::to_string(n()) + "," + std::to_string(k()) + "]]";
    }

private:
    SparseBinMatrix hx_, hz_;
    RowSpaceBasis row_x_, row_z_;
};

inline CssCode code_params(SparseBinMatrix hx, SparseBinMatrix hz) { return CssCode(std::move(hx), std::move(hz)); }

}  // namespace qcoset
