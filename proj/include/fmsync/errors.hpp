#pragma once

#include <stdexcept>
#include <string>

namespace fmsync {

// Dimension or argument mismatch between operands.
class DimensionError : public std::invalid_argument {
public:
    explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

// Riemannian logarithm requested at (or numerically near) the cut locus,
// where the principal branch is not unique.
class CutLocusError : public std::runtime_error {
public:
    explicit CutLocusError(const std::string& what) : std::runtime_error(what) {}
};

// Singular input where the operation is ambiguous (projection of a singular
// matrix, rank-deficient retraction argument, rank-deficient Procrustes data).
class SingularMatrixError : public std::runtime_error {
public:
    explicit SingularMatrixError(const std::string& what) : std::runtime_error(what) {}
};

// Iterative scheme exhausted its iteration budget.
class NoConvergenceError : public std::runtime_error {
public:
    explicit NoConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

// Invariant violation detected while constructing a domain object.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace fmsync
