#pragma once

#include <stdexcept>
#include <string>

namespace qcoset {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parameters that cannot satisfy the coset certificates (q < 2J, m does not divide q-1, ...).
class InfeasibleError : public Error {
public:
    using Error::Error;
};

/// A structural hypothesis required by an operation does not hold on the given input.
class HypothesisError : public Error {
public:
    using Error::Error;
};

/// Malformed input files or dimension mismatches.
class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace qcoset
