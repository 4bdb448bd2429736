#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "fmsync/energy.hpp"
#include "fmsync/errors.hpp"
#include "fmsync/manifold.hpp"
#include "fmsync/problem.hpp"
#include "fmsync/rng.hpp"

namespace fmsync {

struct SamplerConfig {
    double step_size = 1e-3;  // h
    double beta = 100.0;      // inverse temperature of the target exp(-beta U)
    int num_samples = 1000;
    int burn_in = 200;
    int thinning = 1;
    EnergyConfig energy;
    std::uint64_t seed = 0;
    // Diagnostic switch: drop the Gaussian term entirely, leaving retracted
    // gradient flow. Used by the zero-noise reduction checks.
    bool zero_noise = false;

    void validate() const {
        if (step_size < 0.0) throw ValidationError("SamplerConfig: step size must be nonnegative");
        if (beta <= 0.0) throw ValidationError("SamplerConfig: beta must be positive");
        if (num_samples < 1) throw ValidationError("SamplerConfig: need at least one sample");
        if (burn_in < 0) throw ValidationError("SamplerConfig: burn-in must be nonnegative");
        if (thinning < 1) throw ValidationError("SamplerConfig: thinning must be >= 1");
    }
};

// Posterior draws from one chain, post burn-in and thinning, with the energy
// of every visited state (burn-in included) as diagnostics.
struct SampleSet {
    std::vector<AbsoluteState> samples;
    SamplerConfig config;
    std::vector<double> energy_trace;
};

enum class MeanKind {
    ProjectedEuclidean,  // entrywise mean, then SO(n) projection (MC 1)
    Frechet,             // per-node Frechet mean (MC 2)
};

namespace detail {

// Fixed-size variant of the transition for n = 2, the dimension the
// stationarity diagnostics hammer with ~1e8 steps. Same arithmetic as the
// generic path, with Matrix2d locals instead of heap-backed temporaries.
inline double langevin_step_inplace_2(std::vector<Eigen::MatrixXd>& maps, const ObservationSet& obs,
                                      const SamplerConfig& config, Rng& rng,
                                      std::vector<Eigen::Matrix2d>& grad) {
    using M2 = Eigen::Matrix2d;
    double energy = 0.0;
    for (auto& g : grad) g.setZero();
    const auto& edges = obs.graph.edges();
    for (size_t e = 0; e < edges.size(); ++e) {
        const auto& [i, j] = edges[e];
        const Eigen::Map<const M2> ci(maps[i].data()), cj(maps[j].data());
        const Eigen::Map<const M2> c_obs(obs.relative_maps[e].matrix().data());
        if (config.energy.variant == CostVariant::EuclideanCost) {
            const M2 f = c_obs - ci.transpose() * cj;
            energy += f.squaredNorm();
            if (i > 0) grad[i - 1] -= 2.0 * cj * f.transpose();
            if (j > 0) grad[j - 1] -= 2.0 * ci * f;
        } else {
            const M2 m = ci.transpose() * cj;
            const M2 b = m.transpose() * c_obs;
            const double theta = std::atan2(b(1, 0), b(0, 0));
            if (std::abs(theta) > kPi - kCutLocusTol)
                throw CutLocusError("rotation log: angle within tolerance of pi");
            energy += 2.0 * theta * theta;
            M2 l;
            l << 0.0, -theta, theta, 0.0;
            if (i > 0) grad[i - 1] += 2.0 * cj * (l * m.transpose());
            if (j > 0) grad[j - 1] -= 2.0 * cj * l;
        }
    }
    if (config.step_size == 0.0) return energy;

    const double noise_scale = std::sqrt(2.0 * config.step_size / config.beta);
    for (size_t k = 0; k < grad.size(); ++k) {
        Eigen::Map<M2> c(maps[k + 1].data());
        M2 drift;
        if (config.zero_noise) {
            drift.setZero();
        } else {
            drift(0, 0) = noise_scale * rng.gaussian();
            drift(0, 1) = noise_scale * rng.gaussian();
            drift(1, 0) = noise_scale * rng.gaussian();
            drift(1, 1) = noise_scale * rng.gaussian();
        }
        drift -= config.step_size * grad[k];
        // Pi_C(drift) = drift - C sym(C^T drift)
        M2 s = c.transpose() * drift;
        const double off = 0.5 * (s(0, 1) + s(1, 0));
        s(0, 1) = off;
        s(1, 0) = off;
        const M2 target = c + (drift - c * s);
        // canonical positive-diagonal QR factor, closed form
        const double scale = target.norm();
        const double r0 = std::hypot(target(0, 0), target(1, 0));
        if (r0 <= 1e-13 * scale)
            throw SingularMatrixError("qf: rank-deficient input, retraction undefined");
        const double q1x = target(0, 0) / r0, q1y = target(1, 0) / r0;
        const double proj = q1x * target(0, 1) + q1y * target(1, 1);
        double q2x = target(0, 1) - proj * q1x, q2y = target(1, 1) - proj * q1y;
        const double r1 = std::hypot(q2x, q2y);
        if (r1 <= 1e-13 * scale)
            throw SingularMatrixError("qf: rank-deficient input, retraction undefined");
        c(0, 0) = q1x;
        c(1, 0) = q1y;
        c(0, 1) = q2x / r1;
        c(1, 1) = q2y / r1;
    }
    return energy;
}

// In-place Langevin transition. Returns the potential of the pre-step state.
// Per non-anchor node: V = Pi_C(-h grad U + sqrt(2h/beta) Z), C <- qf(C + V).
// h = 0 zeroes both the drift and the noise, so the state is left untouched.
inline double langevin_step_inplace(std::vector<Eigen::MatrixXd>& maps, const ObservationSet& obs,
                                    const SamplerConfig& config, Rng& rng, EdgeWorkspace& ws) {
    if (obs.n() == 2) {
        if (ws.grad2.size() != maps.size() - 1) ws.grad2.assign(maps.size() - 1, Eigen::Matrix2d::Zero());
        return langevin_step_inplace_2(maps, obs, config, rng, ws.grad2);
    }
    const double energy = potential_and_gradient(maps, obs, config.energy.variant, ws);
    if (config.step_size == 0.0) return energy;
    const double noise_scale = std::sqrt(2.0 * config.step_size / config.beta);
    for (size_t k = 0; k < ws.grad.size(); ++k) {
        Eigen::MatrixXd& c = maps[k + 1];
        if (config.zero_noise) {
            ws.drift.setZero();
        } else {
            rng.fill_gaussian(ws.noise);
            ws.drift = noise_scale * ws.noise;
        }
        ws.drift.noalias() -= config.step_size * ws.grad[k];
        project_to_tangent_into(c, ws.drift, ws.scratch, ws.tangent);
        ws.tangent += c;
        qf_into(ws.tangent, ws.qr, ws.moved);
        c.swap(ws.moved);
    }
    return energy;
}

}  // namespace detail

// One transition of the geodesic Langevin integrator. The anchor node is
// never moved; the result stays on SO(n)^{N_s}.
inline AbsoluteState langevin_step(const AbsoluteState& state, const ObservationSet& obs,
                                   const SamplerConfig& config, Rng& rng) {
    config.validate();
    if (state.num_nodes() != obs.graph.num_nodes() || state.n() != obs.n())
        throw DimensionError("langevin_step: state does not match the observations");
    std::vector<Eigen::MatrixXd> maps = detail::raw_maps(state);
    detail::EdgeWorkspace ws;
    ws.init(state.num_nodes(), state.n());
    detail::langevin_step_inplace(maps, obs, config, rng, ws);
    std::vector<Rotation> out;
    out.reserve(maps.size());
    out.push_back(Rotation::identity(state.n()));
    for (size_t i = 1; i < maps.size(); ++i) out.push_back(Rotation::unchecked(std::move(maps[i])));
    return AbsoluteState(std::move(out));
}

// Simulates the chain from `init`: burn_in discarded transitions, then every
// thinning-th state is recorded until num_samples are collected. Deterministic
// given config.seed.
inline SampleSet run_chain(const ObservationSet& obs, const AbsoluteState& init,
                           const SamplerConfig& config) {
    config.validate();
    if (init.num_nodes() != obs.graph.num_nodes() || init.n() != obs.n())
        throw DimensionError("run_chain: initial state does not match the observations");

    const int n = obs.n();
    const int num_nodes = obs.graph.num_nodes();
    std::vector<Eigen::MatrixXd> maps = detail::raw_maps(init);
    detail::EdgeWorkspace ws;
    ws.init(num_nodes, n);
    Rng rng(config.seed);

    SampleSet out;
    out.config = config;
    const long total_steps =
        static_cast<long>(config.burn_in) + static_cast<long>(config.num_samples) * config.thinning;
    out.energy_trace.reserve(total_steps + 1);
    out.samples.reserve(config.num_samples);

    auto snapshot = [&]() {
        std::vector<Rotation> rots;
        rots.reserve(num_nodes);
        rots.push_back(Rotation::identity(n));
        for (int i = 1; i < num_nodes; ++i) rots.push_back(Rotation::unchecked(maps[i]));
        out.samples.push_back(AbsoluteState(std::move(rots)));
    };

    for (long step = 0; step < total_steps; ++step) {
        out.energy_trace.push_back(detail::langevin_step_inplace(maps, obs, config, rng, ws));
        const long past_burn = step + 1 - config.burn_in;
        if (past_burn > 0 && past_burn % config.thinning == 0 &&
            static_cast<int>(out.samples.size()) < config.num_samples)
            snapshot();
    }
    out.energy_trace.push_back(potential_and_gradient(maps, obs, config.energy.variant, ws));
    return out;
}

// Point estimate from posterior draws: per-node Frechet mean, or entrywise
// mean followed by the SO(n) projection. The anchor stays the identity.
inline AbsoluteState posterior_mean(const SampleSet& samples, MeanKind kind) {
    if (samples.samples.empty()) throw ValidationError("posterior_mean: empty sample set");
    const int num_nodes = samples.samples[0].num_nodes();
    const int n = samples.samples[0].n();
    if (samples.samples.size() == 1) return samples.samples[0];

    std::vector<Rotation> mean;
    mean.reserve(num_nodes);
    mean.push_back(Rotation::identity(n));
    for (int node = 1; node < num_nodes; ++node) {
        if (kind == MeanKind::Frechet) {
            std::vector<Rotation> points;
            points.reserve(samples.samples.size());
            for (const AbsoluteState& s : samples.samples) points.push_back(s.map(node));
            mean.push_back(frechet_mean(points));
        } else {
            Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
            for (const AbsoluteState& s : samples.samples) acc += s.map(node).matrix();
            mean.push_back(project_to_group(acc / static_cast<double>(samples.samples.size())));
        }
    }
    return AbsoluteState(std::move(mean));
}

}  // namespace fmsync
