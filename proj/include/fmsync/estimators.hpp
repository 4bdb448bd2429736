#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "fmsync/energy.hpp"
#include "fmsync/errors.hpp"
#include "fmsync/manifold.hpp"
#include "fmsync/problem.hpp"
#include "fmsync/rng.hpp"

namespace fmsync {

struct OptimizerConfig {
    int max_iters = 500;
    double grad_tol = 1e-8;
    double initial_step = 1.0;
    double backtrack_factor = 0.5;
    double armijo_c = 1e-4;
    int restarts = 10;

    void validate() const {
        if (max_iters <= 0 || grad_tol <= 0 || initial_step <= 0 || restarts <= 0)
            throw ValidationError("OptimizerConfig: max_iters, grad_tol, initial_step, restarts must be positive");
        if (backtrack_factor <= 0 || backtrack_factor >= 1 || armijo_c <= 0 || armijo_c >= 1)
            throw ValidationError("OptimizerConfig: backtrack_factor and armijo_c must lie in (0, 1)");
    }
};

struct TracePoint {
    double energy = 0.0;
    double dist_to_truth = std::numeric_limits<double>::quiet_NaN();
};

struct EstimateResult {
    std::vector<Eigen::MatrixXd> maps;  // full state, anchor included; on SO(n) iff constrained
    bool constrained = false;
    double final_energy = 0.0;
    int iterations = 0;
    std::vector<TracePoint> trace;  // one entry per visited iterate, energies nonincreasing
};

enum class Estimator {
    Mle1,       // unconstrained Euclidean MLE
    Mle2,       // SO(n)-constrained Riemannian MLE
    Mc1,        // Langevin chain, Euclidean cost, projected Euclidean mean
    Mc2Euclid,  // Langevin chain, Euclidean cost, Frechet mean
    Mc2Riem,    // Langevin chain, Riemannian cost, Frechet mean
};

namespace detail {

// Barzilai-Borwein trial step from the previous move and gradient change,
// falling back to growing the last accepted step when the curvature estimate
// is unusable. The Armijo backtracking loop below keeps descent monotone
// whatever trial comes out of this.
inline double bb_trial_step(const std::vector<Eigen::MatrixXd>& maps,
                            const std::vector<Eigen::MatrixXd>& prev_maps,
                            const std::vector<Eigen::MatrixXd>& grad,
                            const std::vector<Eigen::MatrixXd>& prev_grad, double last_step,
                            double backtrack_factor) {
    double ss = 0.0, sy = 0.0;
    for (size_t k = 0; k < grad.size(); ++k) {
        ss += (maps[k + 1] - prev_maps[k + 1]).squaredNorm();
        sy += ((maps[k + 1] - prev_maps[k + 1]).array() * (grad[k] - prev_grad[k]).array()).sum();
    }
    if (!(sy > 1e-300)) return std::min(last_step / backtrack_factor, 1e6);
    return std::clamp(ss / sy, 1e-10, 1e6);
}

// Gradient of the cycle-consistency objective sum ||C_i C_ij - C_j||^2 on raw
// maps. This is the form minimized off-manifold by the unconstrained
// estimator: it is a convex quadratic in the stacked maps, unlike the
// transposed form, whose extension off SO(n) is bilinear. On SO(n) the two
// coincide up to normal components.
inline std::vector<Eigen::MatrixXd> consistency_gradient_raw(const std::vector<Eigen::MatrixXd>& maps,
                                                             const ObservationSet& obs) {
    const int n = obs.n();
    std::vector<Eigen::MatrixXd> grad(maps.size() - 1, Eigen::MatrixXd::Zero(n, n));
    const auto& edges = obs.graph.edges();
    for (size_t e = 0; e < edges.size(); ++e) {
        const auto& [i, j] = edges[e];
        const Eigen::MatrixXd f = maps[i] * obs.relative_maps[e].matrix() - maps[j];
        if (i > 0) grad[i - 1].noalias() += 2.0 * f * obs.relative_maps[e].matrix().transpose();
        if (j > 0) grad[j - 1] -= 2.0 * f;
    }
    return grad;
}

inline double mean_edge_distance_raw(const std::vector<Eigen::MatrixXd>& maps, const ObservationSet& truth,
                                     bool squared) {
    double total = 0.0;
    const auto& edges = truth.graph.edges();
    for (size_t e = 0; e < edges.size(); ++e) {
        const auto& [i, j] = edges[e];
        const double d = (maps[i].transpose() * maps[j] - truth.relative_maps[e].matrix()).norm();
        total += squared ? d * d : d;
    }
    return total / static_cast<double>(edges.size());
}

}  // namespace detail

// Mean Frobenius distance between reconstructed relative maps C_i*^T C_j* and
// the noiseless ground-truth relative maps, over the truth's edges. Invariant
// under a common right factor on all absolute maps.
inline double evaluate_estimate(const AbsoluteState& state, const ObservationSet& truth) {
    if (truth.sigma2 != 0.0)
        throw ValidationError("evaluate_estimate: reference observations must be noiseless");
    if (state.num_nodes() != truth.graph.num_nodes() || state.n() != truth.n())
        throw DimensionError("evaluate_estimate: state and ground truth shapes disagree");
    return detail::mean_edge_distance_raw(detail::raw_maps(state), truth, false);
}

inline double evaluate_estimate_squared(const AbsoluteState& state, const ObservationSet& truth) {
    if (truth.sigma2 != 0.0)
        throw ValidationError("evaluate_estimate_squared: reference observations must be noiseless");
    if (state.num_nodes() != truth.graph.num_nodes() || state.n() != truth.n())
        throw DimensionError("evaluate_estimate_squared: state and ground truth shapes disagree");
    return detail::mean_edge_distance_raw(detail::raw_maps(state), truth, true);
}

// Mean Frobenius distance of the observed relative maps to the ground-truth
// ones; the corrupted-observation reference line of the convergence plots.
inline double observation_distance(const ObservationSet& obs, const ObservationSet& truth) {
    if (obs.graph.edges() != truth.graph.edges())
        throw ValidationError("observation_distance: edge sets differ");
    double total = 0.0;
    for (size_t e = 0; e < obs.relative_maps.size(); ++e)
        total += (obs.relative_maps[e].matrix() - truth.relative_maps[e].matrix()).norm();
    return total / static_cast<double>(obs.relative_maps.size());
}

// Unconstrained gradient descent with Armijo backtracking on the consistency
// objective over ambient matrices. init supplies the N_s - 1 free maps; the
// anchor stays pinned to the identity.
inline EstimateResult mle_unconstrained(const ObservationSet& obs, const std::vector<AmbientMatrix>& init,
                                        const OptimizerConfig& config,
                                        const ObservationSet* truth = nullptr) {
    config.validate();
    if (static_cast<int>(init.size()) != obs.graph.num_nodes() - 1)
        throw DimensionError("mle_unconstrained: expected one initial map per non-anchor node");
    const int n = obs.n();
    std::vector<Eigen::MatrixXd> maps;
    maps.reserve(init.size() + 1);
    maps.push_back(Eigen::MatrixXd::Identity(n, n));
    for (const auto& m : init) maps.push_back(m);

    EstimateResult result;
    result.constrained = false;
    detail::EdgeWorkspace ws;
    ws.init(obs.graph.num_nodes(), n);
    double energy = detail::consistency_energy_ws(maps, obs, ws);
    double step = config.initial_step;
    std::vector<Eigen::MatrixXd> cand = maps;
    std::vector<Eigen::MatrixXd> grad(ws.grad.size()), prev_maps, prev_grad;
    int it = 0;
    for (; it < config.max_iters; ++it) {
        detail::consistency_energy_gradient_ws(maps, obs, ws);
        double grad_sq = 0.0;
        for (size_t k = 0; k < ws.grad.size(); ++k) {
            grad[k] = ws.grad[k];
            grad_sq += grad[k].squaredNorm();
        }
        result.trace.push_back(
            {energy, truth ? detail::mean_edge_distance_raw(maps, *truth, false)
                           : std::numeric_limits<double>::quiet_NaN()});
        if (std::sqrt(grad_sq) < config.grad_tol) break;

        double t = (it == 0) ? config.initial_step
                             : detail::bb_trial_step(maps, prev_maps, grad, prev_grad, step,
                                                     config.backtrack_factor);
        prev_maps = maps;
        prev_grad = grad;
        double cand_energy;
        while (true) {
            for (size_t k = 0; k < grad.size(); ++k) {
                cand[k + 1] = maps[k + 1];
                cand[k + 1].noalias() -= t * grad[k];
            }
            cand_energy = detail::consistency_energy_ws(cand, obs, ws);
            if (cand_energy <= energy - config.armijo_c * t * grad_sq || t < 1e-14) break;
            t *= config.backtrack_factor;
        }
        if (t < 1e-14 && cand_energy > energy) break;  // no admissible step left
        step = t;
        maps.swap(cand);
        energy = cand_energy;
    }
    result.trace.push_back({energy, truth ? detail::mean_edge_distance_raw(maps, *truth, false)
                                          : std::numeric_limits<double>::quiet_NaN()});
    result.maps = std::move(maps);
    result.final_energy = energy;
    result.iterations = it;
    return result;
}

// Riemannian gradient descent on SO(n)^{N_s - 1}: tangent gradient, Armijo
// backtracking along the qf-retracted curve. Every iterate stays on SO(n).
inline EstimateResult mle_constrained(const ObservationSet& obs, const AbsoluteState& init,
                                      const OptimizerConfig& config,
                                      const ObservationSet* truth = nullptr) {
    config.validate();
    if (init.num_nodes() != obs.graph.num_nodes() || init.n() != obs.n())
        throw DimensionError("mle_constrained: initial state does not match the observations");
    std::vector<Eigen::MatrixXd> maps = detail::raw_maps(init);

    EstimateResult result;
    result.constrained = true;
    detail::EdgeWorkspace ws;
    ws.init(obs.graph.num_nodes(), obs.n());
    std::vector<Eigen::MatrixXd> tangent_grad(ws.grad.size()), prev_maps, prev_grad;
    std::vector<Eigen::MatrixXd> cand = maps;
    double energy = detail::potential_euclidean_ws(maps, obs, ws);
    double step = config.initial_step;
    int it = 0;
    for (; it < config.max_iters; ++it) {
        detail::potential_and_gradient(maps, obs, CostVariant::EuclideanCost, ws);
        double grad_sq = 0.0;
        for (size_t k = 0; k < ws.grad.size(); ++k) {
            detail::project_to_tangent_into(maps[k + 1], ws.grad[k], ws.scratch, tangent_grad[k]);
            grad_sq += tangent_grad[k].squaredNorm();
        }
        result.trace.push_back(
            {energy, truth ? detail::mean_edge_distance_raw(maps, *truth, false)
                           : std::numeric_limits<double>::quiet_NaN()});
        if (std::sqrt(grad_sq) < config.grad_tol) break;

        double t = (it == 0) ? config.initial_step
                             : detail::bb_trial_step(maps, prev_maps, tangent_grad, prev_grad, step,
                                                     config.backtrack_factor);
        prev_maps = maps;
        prev_grad = tangent_grad;
        double cand_energy;
        while (true) {
            for (size_t k = 0; k < tangent_grad.size(); ++k) {
                ws.drift = maps[k + 1];
                ws.drift.noalias() -= t * tangent_grad[k];
                detail::qf_into(ws.drift, ws.qr, cand[k + 1]);
            }
            cand_energy = detail::potential_euclidean_ws(cand, obs, ws);
            if (cand_energy <= energy - config.armijo_c * t * grad_sq || t < 1e-14) break;
            t *= config.backtrack_factor;
        }
        if (t < 1e-14 && cand_energy > energy) break;
        step = t;
        maps.swap(cand);
        energy = cand_energy;
    }
    result.trace.push_back({energy, truth ? detail::mean_edge_distance_raw(maps, *truth, false)
                                          : std::numeric_limits<double>::quiet_NaN()});
    result.maps = std::move(maps);
    result.final_energy = energy;
    result.iterations = it;
    return result;
}

struct MultiRestartResult {
    AbsoluteState state;
    std::vector<EstimateResult> runs;  // ordered by restart index
};

// Runs the chosen MLE from `restarts` independent Haar initializations and
// aggregates: per-node Frechet mean for the constrained estimator, entrywise
// mean followed by the SO(n) projection for the unconstrained one. Restart r
// draws its initialization from derive_seed(base_seed, r).
inline MultiRestartResult multi_restart(const ObservationSet& obs, Estimator which, int restarts,
                                        std::uint64_t base_seed, const OptimizerConfig& config,
                                        const ObservationSet* truth = nullptr) {
    if (restarts < 1) throw ValidationError("multi_restart: need at least one restart");
    if (which != Estimator::Mle1 && which != Estimator::Mle2)
        throw ValidationError("multi_restart: only the MLE estimators are restartable");
    const int n = obs.n();
    const int num_nodes = obs.graph.num_nodes();

    std::vector<EstimateResult> runs;
    runs.reserve(restarts);
    for (int r = 0; r < restarts; ++r) {
        Rng rng(derive_seed(base_seed, static_cast<std::uint64_t>(r)));
        if (which == Estimator::Mle2) {
            std::vector<Rotation> init_maps;
            init_maps.reserve(num_nodes);
            init_maps.push_back(Rotation::identity(n));
            for (int i = 1; i < num_nodes; ++i) init_maps.push_back(haar_sample(n, rng));
            runs.push_back(mle_constrained(obs, AbsoluteState(std::move(init_maps)), config, truth));
        } else {
            std::vector<AmbientMatrix> init;
            init.reserve(num_nodes - 1);
            for (int i = 1; i < num_nodes; ++i) init.push_back(haar_sample(n, rng).matrix());
            runs.push_back(mle_unconstrained(obs, init, config, truth));
        }
    }

    std::vector<Rotation> merged;
    merged.reserve(num_nodes);
    merged.push_back(Rotation::identity(n));
    for (int node = 1; node < num_nodes; ++node) {
        if (which == Estimator::Mle2) {
            std::vector<Rotation> points;
            points.reserve(restarts);
            for (const auto& run : runs) points.push_back(Rotation::unchecked(run.maps[node]));
            merged.push_back(frechet_mean(points));
        } else {
            Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(n, n);
            for (const auto& run : runs) mean += run.maps[node];
            merged.push_back(project_to_group(mean / static_cast<double>(restarts)));
        }
    }
    return {AbsoluteState(std::move(merged)), std::move(runs)};
}

}  // namespace fmsync
