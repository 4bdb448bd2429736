#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <unsupported/Eigen/MatrixFunctions>
#include <vector>

#include "fmsync/errors.hpp"
#include "fmsync/rng.hpp"
#include "fmsync/rotation.hpp"

namespace fmsync {

inline constexpr double kPi = 3.14159265358979323846;

namespace detail {

inline void require_same_dim(int a, int b, const char* op) {
    if (a != b)
        throw DimensionError(std::string(op) + ": dimension mismatch (" + std::to_string(a) + " vs " +
                             std::to_string(b) + ")");
}

inline void symmetrize_inplace(Eigen::MatrixXd& m) {
    const int n = static_cast<int>(m.rows());
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double avg = 0.5 * (m(i, j) + m(j, i));
            m(i, j) = avg;
            m(j, i) = avg;
        }
    }
}

// V - C sym(C^T V), written into out. out must not alias v.
inline void project_to_tangent_into(const Eigen::MatrixXd& c, const Eigen::MatrixXd& v,
                                    Eigen::MatrixXd& scratch, Eigen::MatrixXd& out) {
    scratch.noalias() = c.transpose() * v;
    symmetrize_inplace(scratch);
    out = v;
    out.noalias() -= c * scratch;
}

// Sign-adjusted Q factor: QR decomposition with the columns of Q flipped so
// that diag(R) > 0. Throws on rank deficiency.
inline void qf_into(const Eigen::MatrixXd& m, Eigen::HouseholderQR<Eigen::MatrixXd>& qr,
                    Eigen::MatrixXd& out) {
    const int n = static_cast<int>(m.rows());
    qr.compute(m);
    const Eigen::MatrixXd& packed = qr.matrixQR();
    const double scale = m.norm();
    for (int i = 0; i < n; ++i) {
        if (std::abs(packed(i, i)) <= 1e-13 * scale)
            throw SingularMatrixError("qf: rank-deficient input, retraction undefined");
    }
    out = qr.householderQ();
    for (int i = 0; i < n; ++i) {
        if (packed(i, i) < 0.0) out.col(i) = -out.col(i);
    }
}

inline Eigen::MatrixXd qf(const Eigen::MatrixXd& m) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr;
    Eigen::MatrixXd out;
    qf_into(m, qr, out);
    return out;
}

// Principal logarithm of a rotation matrix via the real Schur form. The Schur
// form of an orthogonal matrix is block diagonal with 2x2 rotation blocks and
// 1x1 blocks equal to +-1; the log is reassembled from the block angles, which
// keeps the output exactly skew-symmetric. Eigenvalues at -1 (1x1 blocks < 0,
// or block angles within kCutLocusTol of pi) raise CutLocusError.
//
// Returns the sum of squared block angles; if log_out is non-null it receives
// the principal log. The geodesic distance is sqrt(2 * returned value).
inline double rotation_log_schur(const Eigen::MatrixXd& q, Eigen::MatrixXd* log_out) {
    const int n = static_cast<int>(q.rows());

    if (n == 2) {
        const double theta = std::atan2(q(1, 0), q(0, 0));
        if (std::abs(theta) > kPi - kCutLocusTol)
            throw CutLocusError("rotation log: angle within tolerance of pi");
        if (log_out) {
            log_out->resize(2, 2);
            (*log_out)(0, 0) = 0.0;
            (*log_out)(0, 1) = -theta;
            (*log_out)(1, 0) = theta;
            (*log_out)(1, 1) = 0.0;
        }
        return theta * theta;
    }

    Eigen::RealSchur<Eigen::MatrixXd> schur(q);
    if (schur.info() != Eigen::Success)
        throw SingularMatrixError("rotation log: Schur decomposition failed");
    const Eigen::MatrixXd& t = schur.matrixT();
    const Eigen::MatrixXd& u = schur.matrixU();

    double sq_sum = 0.0;
    Eigen::MatrixXd s;
    if (log_out) s = Eigen::MatrixXd::Zero(n, n);
    int i = 0;
    while (i < n) {
        const bool is_block = (i + 1 < n) && (t(i + 1, i) != 0.0);
        if (is_block) {
            const double theta = std::atan2(t(i + 1, i) - t(i, i + 1), t(i, i) + t(i + 1, i + 1));
            if (std::abs(theta) > kPi - kCutLocusTol)
                throw CutLocusError("rotation log: block angle within tolerance of pi");
            sq_sum += theta * theta;
            if (log_out) {
                s(i, i + 1) = -theta;
                s(i + 1, i) = theta;
            }
            i += 2;
        } else {
            if (t(i, i) < 0.0)
                throw CutLocusError("rotation log: eigenvalue -1 (cut locus)");
            i += 1;
        }
    }
    if (log_out) {
        const Eigen::MatrixXd raw = u * s * u.transpose();
        *log_out = 0.5 * (raw - raw.transpose());
    }
    return sq_sum;
}

// Matrix exponential of a skew-symmetric matrix (Pade scaling-and-squaring).
inline Eigen::MatrixXd skew_exp(const Eigen::MatrixXd& s) {
    if (s.rows() == 2) {
        const double theta = s(1, 0);
        Eigen::MatrixXd r(2, 2);
        r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
        return r;
    }
    return s.exp();
}

}  // namespace detail

// Pi_C(V) = V - C sym(C^T V): orthogonal projection onto the tangent space.
inline TangentVector project_to_tangent(const Rotation& base, const AmbientMatrix& v) {
    detail::require_same_dim(base.n(), static_cast<int>(v.rows()), "project_to_tangent");
    detail::require_same_dim(base.n(), static_cast<int>(v.cols()), "project_to_tangent");
    Eigen::MatrixXd scratch, out;
    detail::project_to_tangent_into(base.matrix(), v, scratch, out);
    return TangentVector::unchecked(base, std::move(out));
}

// R_C(xi) = qf(C + xi), the sign-adjusted Q factor of the QR decomposition.
inline Rotation retract(const Rotation& base, const TangentVector& xi) {
    if (!(xi.base() == base))
        throw DimensionError("retract: tangent vector is attached to a different base point");
    return Rotation::unchecked(detail::qf(base.matrix() + xi.entries()));
}

// Riemannian logarithm: the tangent vector at a pointing toward b,
// a * logm(a^T b). Requires a^T b off the cut locus.
inline TangentVector group_log(const Rotation& a, const Rotation& b) {
    detail::require_same_dim(a.n(), b.n(), "group_log");
    const Eigen::MatrixXd rel = a.matrix().transpose() * b.matrix();
    Eigen::MatrixXd l;
    detail::rotation_log_schur(rel, &l);
    return TangentVector::unchecked(a, a.matrix() * l);
}

// Riemannian exponential: base * expm(base^T xi).
inline Rotation group_exp(const Rotation& base, const TangentVector& xi) {
    if (!(xi.base() == base))
        throw DimensionError("group_exp: tangent vector is attached to a different base point");
    Eigen::MatrixXd s = base.matrix().transpose() * xi.entries();
    s = 0.5 * (s - s.transpose()).eval();
    return Rotation::unchecked(base.matrix() * detail::skew_exp(s));
}

// Geodesic distance for the bi-invariant metric: ||logm(a^T b)||_F.
inline double geodesic_distance(const Rotation& a, const Rotation& b) {
    detail::require_same_dim(a.n(), b.n(), "geodesic_distance");
    const Eigen::MatrixXd rel = a.matrix().transpose() * b.matrix();
    return std::sqrt(2.0 * detail::rotation_log_schur(rel, nullptr));
}

// Nearest rotation in Frobenius norm: with v = U S W^T, returns
// U diag(1,...,1,det(U W^T)) W^T.
inline Rotation project_to_group(const AmbientMatrix& v) {
    if (v.rows() != v.cols())
        throw DimensionError("project_to_group: expected square matrix");
    const int n = static_cast<int>(v.rows());
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(v, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    if (sv(n - 1) <= 1e-13 * sv(0) || sv(0) == 0.0)
        throw SingularMatrixError("project_to_group: singular input, projection ambiguous");
    Eigen::MatrixXd r = svd.matrixU() * svd.matrixV().transpose();
    if (r.determinant() < 0.0) {
        Eigen::MatrixXd u = svd.matrixU();
        u.col(n - 1) = -u.col(n - 1);
        r = u * svd.matrixV().transpose();
    }
    return Rotation::unchecked(std::move(r));
}

// Haar-uniform random rotation: qf of a standard Gaussian matrix, with the
// last column negated when the determinant lands on the reflection component.
inline Rotation haar_sample(int n, Rng& rng) {
    if (n < 2) throw DimensionError("haar_sample: n must be >= 2");
    Eigen::MatrixXd q = detail::qf(rng.gaussian_matrix(n, n));
    if (q.determinant() < 0.0) q.col(n - 1) = -q.col(n - 1);
    return Rotation::unchecked(std::move(q));
}

// Frechet (Karcher) mean by fixed-point iteration of the tangent-space
// average, started from points[0].
inline Rotation frechet_mean(const std::vector<Rotation>& points, double tol = kFrechetTol,
                             int max_iter = kFrechetMaxIter) {
    if (points.empty()) throw DimensionError("frechet_mean: empty input");
    const int n = points[0].n();
    for (const Rotation& p : points) detail::require_same_dim(n, p.n(), "frechet_mean");
    if (points.size() == 1) return points[0];

    Rotation m = points[0];
    for (int it = 0; it < max_iter; ++it) {
        Eigen::MatrixXd mean_log = Eigen::MatrixXd::Zero(n, n);
        Eigen::MatrixXd l;
        for (const Rotation& p : points) {
            detail::rotation_log_schur(m.matrix().transpose() * p.matrix(), &l);
            mean_log += l;
        }
        mean_log /= static_cast<double>(points.size());
        if (mean_log.norm() < tol) return m;
        m = Rotation::unchecked(m.matrix() * detail::skew_exp(mean_log));
    }
    throw NoConvergenceError("frechet_mean: no fixed point within " + std::to_string(max_iter) +
                             " iterations");
}

}  // namespace fmsync
