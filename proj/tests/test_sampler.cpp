#include <catch2/catch_amalgamated.hpp>
#include <fmsync/fmsync.hpp>

#include "support/test_utils.hpp"

using namespace fmsync;
using testutil::rot2;

namespace {

ObservationSet single_edge_obs(double theta_obs) {
    const SyncGraph single(2, {{0, 1}});
    return ObservationSet(single, {rot2(theta_obs)}, 0.0);
}

AbsoluteState single_edge_state(double theta) {
    return AbsoluteState(std::vector<Rotation>{Rotation::identity(2), rot2(theta)});
}

}  // namespace

TEST_CASE("langevin_step: h = 0 leaves the state untouched") {
    Rng rng(201);
    const auto obs = single_edge_obs(0.4);
    const auto state = single_edge_state(0.1);
    SamplerConfig cfg;
    cfg.step_size = 0.0;
    const auto next = langevin_step(state, obs, cfg, rng);
    CHECK(next.map(1).matrix() == state.map(1).matrix());
}

TEST_CASE("langevin_step: anchor never moves, output stays on SO(n)") {
    Rng rng(202);
    const auto graph = generate_graph(4, 1.0, rng);
    auto [truth_state, truth] = generate_ground_truth(graph, 20, rng);
    const auto obs = corrupt(truth, 0.3, rng);

    SamplerConfig cfg;
    cfg.seed = 7;
    AbsoluteState state = truth_state;
    Rng step_rng(cfg.seed);
    for (int k = 0; k < 1000; ++k) {
        state = langevin_step(state, obs, cfg, step_rng);
        CHECK(state.map(0).matrix() == Eigen::MatrixXd::Identity(20, 20));
        if (k % 100 == 0)
            for (int i = 1; i < 4; ++i) REQUIRE(state.map(i).is_valid(1e-10));
    }
    for (int i = 1; i < 4; ++i) CHECK(state.map(i).is_valid(1e-10));
}

TEST_CASE("zero-noise chains descend the potential") {
    Rng rng(203);
    const auto graph = generate_graph(3, 1.0, rng);
    auto [truth_state, truth] = generate_ground_truth(graph, 5, rng);
    const auto obs = corrupt(truth, 0.2, rng);

    for (CostVariant variant : {CostVariant::EuclideanCost, CostVariant::RiemannianCost}) {
        SamplerConfig cfg;
        cfg.step_size = 1e-3;
        cfg.zero_noise = true;
        cfg.burn_in = 0;
        cfg.thinning = 1;
        cfg.num_samples = 300;
        cfg.energy.variant = variant;
        cfg.seed = 11;
        const auto set = run_chain(obs, truth_state, cfg);
        for (size_t k = 1; k < set.energy_trace.size(); ++k)
            CHECK(set.energy_trace[k] <= set.energy_trace[k - 1] + 1e-12);
    }
}

TEST_CASE("run_chain: sizes, determinism, thinning bookkeeping") {
    Rng rng(204);
    const auto graph = generate_graph(3, 1.0, rng);
    auto [truth_state, truth] = generate_ground_truth(graph, 4, rng);
    const auto obs = corrupt(truth, 0.4, rng);

    SamplerConfig cfg;
    cfg.num_samples = 25;
    cfg.burn_in = 40;
    cfg.thinning = 3;
    cfg.seed = 99;
    const auto a = run_chain(obs, truth_state, cfg);
    const auto b = run_chain(obs, truth_state, cfg);
    REQUIRE(a.samples.size() == 25);
    CHECK(a.energy_trace.size() == 40 + 25 * 3 + 1);
    for (size_t s = 0; s < a.samples.size(); ++s)
        for (int i = 0; i < 3; ++i)
            CHECK(a.samples[s].map(i).matrix() == b.samples[s].map(i).matrix());
    CHECK(a.energy_trace == b.energy_trace);

    SamplerConfig bad = cfg;
    bad.thinning = 0;
    CHECK_THROWS_AS(run_chain(obs, truth_state, bad), ValidationError);
    bad = cfg;
    bad.beta = -1.0;
    CHECK_THROWS_AS(run_chain(obs, truth_state, bad), ValidationError);
}

TEST_CASE("posterior_mean: single sample, symmetric pairs, projected variant") {
    Rng rng(205);
    const auto center = haar_sample(6, rng);

    SampleSet set;
    set.samples.push_back(AbsoluteState({Rotation::identity(6), center}));
    const auto only = posterior_mean(set, MeanKind::Frechet);
    CHECK(only.map(1).matrix() == center.matrix());

    // pairs exp(m, +xi), exp(m, -xi) average back to m
    SampleSet pairs;
    for (int k = 0; k < 8; ++k) {
        auto dir = project_to_tangent(center, 0.2 * rng.gaussian_matrix(6, 6));
        pairs.samples.push_back(AbsoluteState({Rotation::identity(6), group_exp(center, dir)}));
        pairs.samples.push_back(AbsoluteState(
            {Rotation::identity(6),
             group_exp(center, TangentVector::unchecked(center, -dir.entries()))}));
    }
    const auto frechet = posterior_mean(pairs, MeanKind::Frechet);
    CHECK((frechet.map(1).matrix() - center.matrix()).norm() < 1e-6);

    const auto projected = posterior_mean(pairs, MeanKind::ProjectedEuclidean);
    CHECK(projected.map(1).is_valid(1e-10));
    CHECK((projected.map(1).matrix() - center.matrix()).norm() < 0.05);

    SampleSet empty;
    CHECK_THROWS_AS(posterior_mean(empty, MeanKind::Frechet), ValidationError);
}

TEST_CASE("gibbs energy scaling: doubling beta roughly halves the mean potential") {
    // single-edge planar instance, where U = 2 theta^2 is exactly quadratic
    const auto obs = single_edge_obs(0.0);
    const auto init = single_edge_state(0.0);

    auto mean_potential = [&](double beta, std::uint64_t seed) {
        SamplerConfig cfg;
        cfg.step_size = 1e-3;
        cfg.beta = beta;
        cfg.burn_in = 2000;
        cfg.thinning = 50;
        cfg.num_samples = 400;
        cfg.energy.variant = CostVariant::RiemannianCost;
        cfg.seed = seed;
        const auto set = run_chain(obs, init, cfg);
        double mean = 0.0;
        for (const auto& s : set.samples) mean += potential_riemannian(s, obs);
        return mean / static_cast<double>(set.samples.size());
    };

    double ratio_sum = 0.0;
    const int seeds = 10;
    for (std::uint64_t seed = 0; seed < seeds; ++seed)
        ratio_sum += mean_potential(50.0, 300 + seed) / mean_potential(100.0, 600 + seed);
    const double mean_ratio = ratio_sum / seeds;
    CHECK(mean_ratio > 2.0 / 1.5);
    CHECK(mean_ratio < 2.0 * 1.5);
}

TEST_CASE("riemannian chains propagate cut-locus errors") {
    const auto obs = single_edge_obs(fmsync::kPi);  // antipodal observation
    const auto init = single_edge_state(0.0);
    SamplerConfig cfg;
    cfg.energy.variant = CostVariant::RiemannianCost;
    cfg.num_samples = 5;
    cfg.burn_in = 0;
    CHECK_THROWS_AS(run_chain(obs, init, cfg), CutLocusError);
}
