#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <utility>

#include "fmsync/errors.hpp"

namespace fmsync {

// Arbitrary element of the ambient matrix space R^{n x n}.
using AmbientMatrix = Eigen::MatrixXd;

// Numerical tolerances shared across the geometry layer.
inline constexpr double kOrthoTol = 1e-10;     // membership in SO(n)
inline constexpr double kCutLocusTol = 1e-8;   // principal-log branch guard
inline constexpr double kFrechetTol = 1e-9;    // Frechet mean fixed point
inline constexpr int kFrechetMaxIter = 100;

namespace detail {

inline double so_membership_error(const Eigen::MatrixXd& m) {
    const int n = static_cast<int>(m.rows());
    const Eigen::MatrixXd gram = m.transpose() * m - Eigen::MatrixXd::Identity(n, n);
    return gram.cwiseAbs().maxCoeff();
}

}  // namespace detail

// An element of SO(n): orthogonal with determinant +1. Construction validates
// both invariants eagerly; operations whose postconditions already guarantee
// membership use the unchecked factory.
class Rotation {
public:
    explicit Rotation(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
        if (entries_.rows() < 2 || entries_.rows() != entries_.cols())
            throw DimensionError("Rotation: expected square matrix of size >= 2, got " +
                                 std::to_string(entries_.rows()) + "x" + std::to_string(entries_.cols()));
        const double ortho_err = detail::so_membership_error(entries_);
        if (ortho_err > kOrthoTol)
            throw ValidationError("Rotation: R^T R deviates from identity by " + std::to_string(ortho_err));
        const double det = entries_.determinant();
        if (std::abs(det - 1.0) > kOrthoTol)
            throw ValidationError("Rotation: det(R) = " + std::to_string(det) + ", expected +1");
    }

    static Rotation identity(int n) { return Rotation(Unchecked{}, Eigen::MatrixXd::Identity(n, n)); }

    // For results of operations that guarantee SO(n) membership by construction.
    static Rotation unchecked(Eigen::MatrixXd entries) { return Rotation(Unchecked{}, std::move(entries)); }

    int n() const { return static_cast<int>(entries_.rows()); }
    const Eigen::MatrixXd& matrix() const { return entries_; }

    bool is_valid(double tol = kOrthoTol) const {
        return detail::so_membership_error(entries_) <= tol && std::abs(entries_.determinant() - 1.0) <= tol;
    }

    friend bool operator==(const Rotation& a, const Rotation& b) { return a.entries_ == b.entries_; }

private:
    struct Unchecked {};
    Rotation(Unchecked, Eigen::MatrixXd entries) : entries_(std::move(entries)) {}

    Eigen::MatrixXd entries_;
};

// Tangent vector xi at a base rotation C, stored as an ambient matrix with
// C^T xi skew-symmetric.
class TangentVector {
public:
    TangentVector(Rotation base, Eigen::MatrixXd entries)
        : base_(std::move(base)), entries_(std::move(entries)) {
        if (entries_.rows() != base_.n() || entries_.cols() != base_.n())
            throw DimensionError("TangentVector: entries must match base dimension");
        const Eigen::MatrixXd s = base_.matrix().transpose() * entries_;
        const double sym_err = (s + s.transpose()).cwiseAbs().maxCoeff() / 2.0;
        if (sym_err > kOrthoTol)
            throw ValidationError("TangentVector: base^T entries has symmetric part of magnitude " +
                                  std::to_string(sym_err));
    }

    static TangentVector zero(const Rotation& base) {
        return TangentVector(Unchecked{}, base, Eigen::MatrixXd::Zero(base.n(), base.n()));
    }

    static TangentVector unchecked(Rotation base, Eigen::MatrixXd entries) {
        return TangentVector(Unchecked{}, std::move(base), std::move(entries));
    }

    int n() const { return base_.n(); }
    const Rotation& base() const { return base_; }
    const Eigen::MatrixXd& entries() const { return entries_; }

    double norm() const { return entries_.norm(); }

private:
    struct Unchecked {};
    TangentVector(Unchecked, Rotation base, Eigen::MatrixXd entries)
        : base_(std::move(base)), entries_(std::move(entries)) {}

    Rotation base_;
    Eigen::MatrixXd entries_;
};

}  // namespace fmsync
