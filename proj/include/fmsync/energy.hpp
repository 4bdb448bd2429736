#pragma once

#include <Eigen/Dense>
#include <vector>

#include "fmsync/errors.hpp"
#include "fmsync/manifold.hpp"
#include "fmsync/problem.hpp"

namespace fmsync {

enum class CostVariant {
    EuclideanCost,   // squared chordal discrepancies ||C_ij - C_i^T C_j||_F^2
    RiemannianCost,  // squared geodesic discrepancies dist^2(C_i^T C_j, C_ij)
};

// The concentration matrix of the generative model is pinned to the identity,
// so the configuration reduces to the choice of discrepancy.
struct EnergyConfig {
    CostVariant variant = CostVariant::EuclideanCost;
};

namespace detail {

inline void check_state_dims(const std::vector<Eigen::MatrixXd>& maps, const ObservationSet& obs,
                             const char* op) {
    if (static_cast<int>(maps.size()) != obs.graph.num_nodes())
        throw DimensionError(std::string(op) + ": node count mismatch");
    for (const auto& m : maps)
        if (m.rows() != obs.n() || m.cols() != obs.n())
            throw DimensionError(std::string(op) + ": map dimension mismatch");
}

inline std::vector<Eigen::MatrixXd> raw_maps(const AbsoluteState& state) {
    std::vector<Eigen::MatrixXd> maps;
    maps.reserve(state.num_nodes());
    for (const Rotation& r : state.maps()) maps.push_back(r.matrix());
    return maps;
}

}  // namespace detail

// sum_{(i,j) in E} ||C_ij - C_i^T C_j||_F^2, with the pseudo-inverse realized
// as the transpose. Defined for arbitrary ambient maps; on SO(n) it equals
// consistency_residual through left invariance of the Frobenius norm.
inline double potential_euclidean(const std::vector<Eigen::MatrixXd>& maps, const ObservationSet& obs) {
    detail::check_state_dims(maps, obs, "potential_euclidean");
    double total = 0.0;
    const auto& edges = obs.graph.edges();
    for (size_t e = 0; e < edges.size(); ++e) {
        const auto& [i, j] = edges[e];
        total += (obs.relative_maps[e].matrix() - maps[i].transpose() * maps[j]).squaredNorm();
    }
    return total;
}

inline double potential_euclidean(const AbsoluteState& state, const ObservationSet& obs) {
    return potential_euclidean(detail::raw_maps(state), obs);
}

// sum_{(i,j) in E} dist^2(C_i^T C_j, C_ij); the additive model constant is
// dropped. Throws CutLocusError when a predicted/observed pair is antipodal.
inline double potential_riemannian(const AbsoluteState& state, const ObservationSet& obs) {
    const auto maps = detail::raw_maps(state);
    detail::check_state_dims(maps, obs, "potential_riemannian");
    double total = 0.0;
    const auto& edges = obs.graph.edges();
    for (size_t e = 0; e < edges.size(); ++e) {
        const auto& [i, j] = edges[e];
        const Eigen::MatrixXd predicted = maps[i].transpose() * maps[j];
        total += 2.0 * detail::rotation_log_schur(predicted.transpose() * obs.relative_maps[e].matrix(),
                                                  nullptr);
    }
    return total;
}

// Euclidean gradient of potential_euclidean with respect to each non-anchor
// map (anchor carries no gradient entry):
//   d/dC_k = sum_{(k,j)} -2 C_j (C_kj - C_k^T C_j)^T + sum_{(i,k)} -2 C_i (C_ik - C_i^T C_k).
inline std::vector<AmbientMatrix> ambient_gradient_euclidean(const std::vector<Eigen::MatrixXd>& maps,
                                                             const ObservationSet& obs) {
    detail::check_state_dims(maps, obs, "ambient_gradient_euclidean");
    const int n = obs.n();
    std::vector<AmbientMatrix> grad(maps.size() - 1, Eigen::MatrixXd::Zero(n, n));
    const auto& edges = obs.graph.edges();
    for (size_t e = 0; e < edges.size(); ++e) {
        const auto& [i, j] = edges[e];
        const Eigen::MatrixXd f = obs.relative_maps[e].matrix() - maps[i].transpose() * maps[j];
        if (i > 0) grad[i - 1].noalias() -= 2.0 * maps[j] * f.transpose();
        if (j > 0) grad[j - 1].noalias() -= 2.0 * maps[i] * f;
    }
    return grad;
}

inline std::vector<AmbientMatrix> ambient_gradient_euclidean(const AbsoluteState& state,
                                                             const ObservationSet& obs) {
    return ambient_gradient_euclidean(detail::raw_maps(state), obs);
}

namespace detail {

// Riemannian gradient of the geodesic potential at node k, accumulated per
// edge. With M = C_i^T C_j and L = logm(M^T C_ij):
//   edge (k, j): grad_k += 2 C_j L M^T   (M = C_k^T C_j)
//   edge (i, k): grad_k += -2 C_k L      (M = C_i^T C_k)
// Both terms satisfy tangency at C_k by construction.
inline std::vector<Eigen::MatrixXd> riemannian_cost_gradient(const std::vector<Eigen::MatrixXd>& maps,
                                                             const ObservationSet& obs) {
    const int n = obs.n();
    std::vector<Eigen::MatrixXd> grad(maps.size() - 1, Eigen::MatrixXd::Zero(n, n));
    const auto& edges = obs.graph.edges();
    Eigen::MatrixXd l;
    for (size_t e = 0; e < edges.size(); ++e) {
        const auto& [i, j] = edges[e];
        const Eigen::MatrixXd predicted = maps[i].transpose() * maps[j];
        rotation_log_schur(predicted.transpose() * obs.relative_maps[e].matrix(), &l);
        if (i > 0) grad[i - 1].noalias() += 2.0 * maps[j] * (l * predicted.transpose());
        if (j > 0) grad[j - 1].noalias() -= 2.0 * maps[j] * l;
    }
    return grad;
}

struct EdgeWorkspace {
    std::vector<Eigen::MatrixXd> grad;
    std::vector<Eigen::Matrix2d> grad2;  // n = 2 fast path
    Eigen::MatrixXd f, m, mt_obs, l, noise, drift, scratch, tangent, moved;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr;

    void init(int num_nodes, int n) {
        grad.assign(num_nodes - 1, Eigen::MatrixXd::Zero(n, n));
        f.resize(n, n);
        m.resize(n, n);
        mt_obs.resize(n, n);
        noise.resize(n, n);
        drift.resize(n, n);
        moved.resize(n, n);
    }
};

// Energy-only pass over the edges (transposed chordal form).
inline double potential_euclidean_ws(const std::vector<Eigen::MatrixXd>& maps, const ObservationSet& obs,
                                     EdgeWorkspace& ws) {
    double energy = 0.0;
    const auto& edges = obs.graph.edges();
    for (size_t e = 0; e < edges.size(); ++e) {
        const auto& [i, j] = edges[e];
        ws.f = obs.relative_maps[e].matrix();
        ws.f.noalias() -= maps[i].transpose() * maps[j];
        energy += ws.f.squaredNorm();
    }
    return energy;
}

// Energy-only pass in the cycle-consistency form ||C_i C_ij - C_j||^2.
inline double consistency_energy_ws(const std::vector<Eigen::MatrixXd>& maps, const ObservationSet& obs,
                                    EdgeWorkspace& ws) {
    double energy = 0.0;
    const auto& edges = obs.graph.edges();
    for (size_t e = 0; e < edges.size(); ++e) {
        const auto& [i, j] = edges[e];
        ws.f = -maps[j];
        ws.f.noalias() += maps[i] * obs.relative_maps[e].matrix();
        energy += ws.f.squaredNorm();
    }
    return energy;
}

// Fused energy plus gradient of the cycle-consistency form.
inline double consistency_energy_gradient_ws(const std::vector<Eigen::MatrixXd>& maps,
                                             const ObservationSet& obs, EdgeWorkspace& ws) {
    double energy = 0.0;
    for (auto& g : ws.grad) g.setZero();
    const auto& edges = obs.graph.edges();
    for (size_t e = 0; e < edges.size(); ++e) {
        const auto& [i, j] = edges[e];
        ws.f = -maps[j];
        ws.f.noalias() += maps[i] * obs.relative_maps[e].matrix();
        energy += ws.f.squaredNorm();
        if (i > 0) ws.grad[i - 1].noalias() += 2.0 * ws.f * obs.relative_maps[e].matrix().transpose();
        if (j > 0) ws.grad[j - 1] -= 2.0 * ws.f;
    }
    return energy;
}

// One pass over the edges: returns the potential of `maps` and accumulates
// the ambient (Euclidean cost) or Riemannian (geodesic cost) gradient into
// ws.grad. Edge order is fixed, so accumulation is reproducible.
inline double potential_and_gradient(const std::vector<Eigen::MatrixXd>& maps, const ObservationSet& obs,
                                     CostVariant variant, EdgeWorkspace& ws) {
    double energy = 0.0;
    for (auto& g : ws.grad) g.setZero();
    const auto& edges = obs.graph.edges();
    for (size_t e = 0; e < edges.size(); ++e) {
        const auto& [i, j] = edges[e];
        const Eigen::MatrixXd& c_obs = obs.relative_maps[e].matrix();
        if (variant == CostVariant::EuclideanCost) {
            ws.f = c_obs;
            ws.f.noalias() -= maps[i].transpose() * maps[j];
            energy += ws.f.squaredNorm();
            if (i > 0) ws.grad[i - 1].noalias() -= 2.0 * maps[j] * ws.f.transpose();
            if (j > 0) ws.grad[j - 1].noalias() -= 2.0 * maps[i] * ws.f;
        } else {
            ws.m.noalias() = maps[i].transpose() * maps[j];
            ws.mt_obs.noalias() = ws.m.transpose() * c_obs;
            energy += 2.0 * rotation_log_schur(ws.mt_obs, &ws.l);
            if (i > 0) {
                ws.f.noalias() = ws.l * ws.m.transpose();
                ws.grad[i - 1].noalias() += 2.0 * maps[j] * ws.f;
            }
            if (j > 0) ws.grad[j - 1].noalias() -= 2.0 * maps[j] * ws.l;
        }
    }
    return energy;
}


}  // namespace detail

// Riemannian gradient of the configured potential: for the Euclidean cost the
// tangent projection of the ambient gradient, for the Riemannian cost the
// chain-rule form above. One tangent vector per non-anchor node.
inline std::vector<TangentVector> riemannian_gradient(const AbsoluteState& state, const ObservationSet& obs,
                                                      const EnergyConfig& config) {
    const auto maps = detail::raw_maps(state);
    detail::check_state_dims(maps, obs, "riemannian_gradient");
    std::vector<Eigen::MatrixXd> raw;
    if (config.variant == CostVariant::EuclideanCost) {
        raw = ambient_gradient_euclidean(maps, obs);
    } else {
        raw = detail::riemannian_cost_gradient(maps, obs);
    }
    std::vector<TangentVector> grad;
    grad.reserve(raw.size());
    Eigen::MatrixXd scratch, projected;
    for (size_t k = 0; k < raw.size(); ++k) {
        detail::project_to_tangent_into(maps[k + 1], raw[k], scratch, projected);
        grad.push_back(TangentVector::unchecked(state.map(static_cast<int>(k) + 1), projected));
    }
    return grad;
}

// Under the uniform prior the log posterior is the negated potential up to an
// additive constant (normalization dropped).
inline double log_posterior(const AbsoluteState& state, const ObservationSet& obs,
                            const EnergyConfig& config) {
    return config.variant == CostVariant::EuclideanCost ? -potential_euclidean(state, obs)
                                                        : -potential_riemannian(state, obs);
}

}  // namespace fmsync
