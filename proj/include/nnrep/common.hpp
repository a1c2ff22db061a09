#ifndef NNREP_COMMON_HPP
#define NNREP_COMMON_HPP

#include <stdexcept>
#include <string>

namespace nnrep {

// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape or index disagreement between two objects.
class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& msg) : Error(msg) {}
};

// Malformed or inconsistent input file / JSON document.
class SchemaError : public Error {
public:
    explicit SchemaError(const std::string& msg) : Error(msg) {}
};

// Numerical breakdown (divergence, NaN) in an iterative routine.
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& msg) : Error(msg) {}
};

// Feasibility tolerance for predicate evaluation: a constraint a.v <= rhs is
// deemed satisfied when a.v <= rhs + kEpsFeas.
inline constexpr double kEpsFeas = 1e-6;

// Strictness margin used when negating a predicate for verification.
inline constexpr double kEpsStrict = 1e-6;

// Relative slack applied to interval bounds before they are used as big-M
// coefficients: lo -= kBigMSlackAbs + kBigMSlackRel*|lo| (and symmetrically
// for hi).
inline constexpr double kBigMSlackAbs = 1e-6;
inline constexpr double kBigMSlackRel = 1e-9;

} // namespace nnrep

#endif
