#include <catch2/catch_amalgamated.hpp>
#include <fmsync/fmsync.hpp>

#include "support/test_utils.hpp"

using namespace fmsync;

namespace {

struct Problem {
    SyncGraph graph;
    AbsoluteState truth_state;
    ObservationSet truth;
    ObservationSet obs;
};

Problem make_problem(int num_nodes, int n, double sigma2, std::uint64_t seed, double density = 1.0) {
    Rng rng(seed);
    auto graph = generate_graph(num_nodes, density, rng);
    auto [state, truth] = generate_ground_truth(graph, n, rng);
    auto obs = corrupt(truth, sigma2, rng);
    return {std::move(graph), std::move(state), std::move(truth), std::move(obs)};
}

AbsoluteState haar_state(int num_nodes, int n, Rng& rng) {
    std::vector<Rotation> maps;
    maps.push_back(Rotation::identity(n));
    for (int i = 1; i < num_nodes; ++i) maps.push_back(haar_sample(n, rng));
    return AbsoluteState(std::move(maps));
}

}  // namespace

TEST_CASE("mle_constrained: truth is a fixed point, iterates stay on SO(n)") {
    const auto p = make_problem(4, 6, 0.0, 101);
    const OptimizerConfig cfg;
    const auto at_truth = mle_constrained(p.obs, p.truth_state, cfg, &p.truth);
    CHECK(at_truth.final_energy < 1e-12);
    CHECK(at_truth.iterations == 0);

    Rng rng(102);
    const auto run = mle_constrained(p.obs, haar_state(4, 6, rng), cfg, &p.truth);
    CHECK(run.constrained);
    for (const auto& m : run.maps) CHECK(Rotation::unchecked(m).is_valid(1e-10));
    for (size_t k = 1; k < run.trace.size(); ++k)
        CHECK(run.trace[k].energy <= run.trace[k - 1].energy + 1e-12);
}

TEST_CASE("mle_constrained: exact recovery on a noiseless complete graph") {
    const auto p = make_problem(3, 5, 0.0, 111);
    Rng rng(112);
    const auto run = mle_constrained(p.obs, haar_state(3, 5, rng), OptimizerConfig{}, &p.truth);
    CHECK(run.final_energy < 1e-8);
    const auto& edges = p.graph.edges();
    for (size_t e = 0; e < edges.size(); ++e) {
        const auto& [i, j] = edges[e];
        CHECK((run.maps[i] * p.obs.relative_maps[e].matrix() - run.maps[j]).norm() < 1e-4);
    }
}

TEST_CASE("mle_unconstrained: recovery basin and monotone energies") {
    const auto p = make_problem(4, 5, 0.0, 121);
    Rng rng(122);

    // init at truth: nothing to do
    std::vector<AmbientMatrix> at_truth;
    for (int i = 1; i < 4; ++i) at_truth.push_back(p.truth_state.map(i).matrix());
    const auto still = mle_unconstrained(p.obs, at_truth, OptimizerConfig{}, &p.truth);
    CHECK(still.final_energy < 1e-12);
    CHECK(still.iterations == 0);

    // ambient perturbation of 0.1 around truth stays in the recovery basin
    std::vector<AmbientMatrix> init;
    for (int i = 1; i < 4; ++i)
        init.push_back(p.truth_state.map(i).matrix() + 0.1 * rng.gaussian_matrix(5, 5));
    const auto run = mle_unconstrained(p.obs, init, OptimizerConfig{}, &p.truth);
    CHECK_FALSE(run.constrained);
    CHECK(run.final_energy < 1e-8);
    for (int i = 1; i < 4; ++i)
        CHECK((run.maps[i] - p.truth_state.map(i).matrix()).cwiseAbs().maxCoeff() < 1e-4);
    for (size_t k = 1; k < run.trace.size(); ++k)
        CHECK(run.trace[k].energy <= run.trace[k - 1].energy + 1e-12);

    CHECK_THROWS_AS(mle_unconstrained(p.obs, std::vector<AmbientMatrix>{}, OptimizerConfig{}),
                    DimensionError);
}

TEST_CASE("every constrained iterate stays on SO(n)") {
    // the k-th iterate is the final state of a k-iteration-capped run
    const auto p = make_problem(4, 6, 0.5, 171);
    for (int cap = 1; cap <= 10; ++cap) {
        OptimizerConfig cfg;
        cfg.max_iters = cap;
        Rng rng(172);
        const auto run = mle_constrained(p.obs, haar_state(4, 6, rng), cfg);
        for (const auto& m : run.maps) REQUIRE(Rotation::unchecked(m).is_valid(1e-10));
    }
}

TEST_CASE("estimator traces record distance to truth when given") {
    const auto p = make_problem(4, 5, 0.3, 131);
    Rng rng(132);
    const auto run = mle_constrained(p.obs, haar_state(4, 5, rng), OptimizerConfig{}, &p.truth);
    REQUIRE(run.trace.size() >= 2);
    for (const auto& point : run.trace) CHECK(std::isfinite(point.dist_to_truth));
    // distance of the final iterate matches evaluate_estimate
    std::vector<Rotation> final_maps;
    for (const auto& m : run.maps) final_maps.push_back(Rotation::unchecked(m));
    const AbsoluteState final_state(std::move(final_maps));
    CHECK(std::abs(run.trace.back().dist_to_truth - evaluate_estimate(final_state, p.truth)) < 1e-12);

    const auto blind = mle_constrained(p.obs, haar_state(4, 5, rng), OptimizerConfig{});
    CHECK(std::isnan(blind.trace.front().dist_to_truth));
}

TEST_CASE("multi_restart: determinism, restarts=1, consensus on noiseless graphs") {
    const auto p = make_problem(3, 5, 0.0, 141);
    OptimizerConfig cfg;
    cfg.restarts = 3;

    const auto a = multi_restart(p.obs, Estimator::Mle2, 3, 999, cfg);
    const auto b = multi_restart(p.obs, Estimator::Mle2, 3, 999, cfg);
    for (int i = 0; i < 3; ++i) CHECK(a.state.map(i).matrix() == b.state.map(i).matrix());
    for (size_t r = 0; r < a.runs.size(); ++r) {
        REQUIRE(a.runs[r].trace.size() == b.runs[r].trace.size());
        for (size_t k = 0; k < a.runs[r].trace.size(); ++k)
            CHECK(a.runs[r].trace[k].energy == b.runs[r].trace[k].energy);
    }

    const auto single = multi_restart(p.obs, Estimator::Mle2, 1, 777, cfg);
    Rng ref_rng(derive_seed(777, static_cast<std::uint64_t>(0)));
    const auto direct = mle_constrained(p.obs, haar_state(3, 5, ref_rng), cfg);
    for (int i = 0; i < 3; ++i) CHECK(single.state.map(i).matrix() == direct.maps[i]);

    // noiseless complete graph: every restart lands on the same state, the
    // mean therefore coincides with a single run
    for (size_t r = 1; r < a.runs.size(); ++r)
        for (int i = 1; i < 3; ++i)
            CHECK((a.runs[r].maps[i] - a.runs[0].maps[i]).norm() < 1e-4);
    for (int i = 1; i < 3; ++i)
        CHECK((a.state.map(i).matrix() - a.runs[0].maps[i]).norm() < 1e-4);

    CHECK_THROWS_AS(multi_restart(p.obs, Estimator::Mc1, 2, 1, cfg), ValidationError);
    CHECK_THROWS_AS(multi_restart(p.obs, Estimator::Mle2, 0, 1, cfg), ValidationError);
}

TEST_CASE("multi_restart aggregates the unconstrained runs onto SO(n)") {
    const auto p = make_problem(3, 4, 0.2, 151);
    OptimizerConfig cfg;
    const auto mr = multi_restart(p.obs, Estimator::Mle1, 4, 555, cfg);
    for (int i = 0; i < 3; ++i) CHECK(mr.state.map(i).is_valid(1e-10));
    CHECK(mr.runs.size() == 4);
}

TEST_CASE("evaluate_estimate: zero at truth, gauge invariance, squared variant") {
    const auto p = make_problem(5, 6, 0.0, 161);
    CHECK(evaluate_estimate(p.truth_state, p.truth) < 1e-13);

    Rng rng(162);
    const auto state = haar_state(5, 6, rng);
    const double base = evaluate_estimate(state, p.truth);
    const double base_sq = evaluate_estimate_squared(state, p.truth);
    CHECK(base > 0.0);
    CHECK(base_sq >= base * base - 1e-12);  // Cauchy-Schwarz over edges

    // gauge action: state maps right-multiplied by G, truth maps conjugated
    const auto g = haar_sample(6, rng);
    std::vector<Eigen::MatrixXd> gauged;
    for (const auto& r : state.maps()) gauged.push_back(r.matrix() * g.matrix());
    std::vector<Rotation> conj;
    for (const auto& r : p.truth.relative_maps)
        conj.push_back(Rotation::unchecked(g.matrix().transpose() * r.matrix() * g.matrix()));
    const ObservationSet conj_truth(p.graph, conj, 0.0);
    const double gauged_val = fmsync::detail::mean_edge_distance_raw(gauged, conj_truth, false);
    CHECK(std::abs(gauged_val - base) < 1e-12);

    const auto noisy = corrupt(p.truth, 0.1, rng);
    CHECK_THROWS_AS(evaluate_estimate(state, noisy), ValidationError);
}
