// Acceptance suite: executes every criterion end to end and prints one
// PASS/FAIL line each. Exit code is the number of failed criteria.
//
// Reference comparison values and tolerances are pinned in-code; the suite
// never reads them from the environment.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fmsync/fmsync.hpp>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using namespace fmsync;

namespace {

struct Harness {
    int failed = 0;
    std::chrono::steady_clock::time_point t0;

    void start() { t0 = std::chrono::steady_clock::now(); }
    double elapsed() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    void report(const std::string& name, bool pass, const std::string& detail = "") {
        std::printf("[%s] %s (%.1f s)%s%s\n", pass ? "PASS" : "FAIL", name.c_str(), elapsed(),
                    detail.empty() ? "" : " -- ", detail.c_str());
        std::fflush(stdout);
        if (!pass) ++failed;
    }
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

Rotation rot2(double theta) {
    Eigen::MatrixXd m(2, 2);
    m << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    return Rotation::unchecked(std::move(m));
}

AbsoluteState haar_state(int num_nodes, int n, Rng& rng) {
    std::vector<Rotation> maps;
    maps.push_back(Rotation::identity(n));
    for (int i = 1; i < num_nodes; ++i) maps.push_back(haar_sample(n, rng));
    return AbsoluteState(std::move(maps));
}

// ---------------------------------------------------------------- criterion 1

void criterion_1(Harness& h) {
    h.start();
    const int n = 20;
    const int checks = 10000;
    const int triangle_checks = 1000;
    Rng rng(20260101);
    bool ok = true;
    std::string detail;

    for (int k = 0; k < checks && ok; ++k) {
        const Rotation a = haar_sample(n, rng);
        const Rotation b = haar_sample(n, rng);
        const Eigen::MatrixXd v = rng.gaussian_matrix(n, n);

        // projection: tangency at 1e-12, idempotence, linearity
        const TangentVector xi = project_to_tangent(a, v);
        const Eigen::MatrixXd s = a.matrix().transpose() * xi.entries();
        if ((s + s.transpose()).cwiseAbs().maxCoeff() / 2.0 > 1e-12) {
            ok = false;
            detail = "tangency violated";
        }
        const TangentVector xi2 = project_to_tangent(a, xi.entries());
        if ((xi2.entries() - xi.entries()).cwiseAbs().maxCoeff() > 1e-12) {
            ok = false;
            detail = "projection not idempotent";
        }
        if (k % 10 == 0) {
            const TangentVector xl = project_to_tangent(a, 2.0 * v);
            if ((xl.entries() - 2.0 * xi.entries()).cwiseAbs().maxCoeff() > 1e-12) {
                ok = false;
                detail = "projection not linear";
            }
        }

        // rotation invariants after retract / exp / group projection
        const TangentVector step = TangentVector::unchecked(a, 0.2 * xi.entries());
        if (!retract(a, step).is_valid(1e-10)) {
            ok = false;
            detail = "retract left the manifold";
        }
        if (!group_exp(a, step).is_valid(1e-10)) {
            ok = false;
            detail = "exp left the manifold";
        }
        if (!project_to_group(a.matrix() + 0.3 * v).is_valid(1e-10)) {
            ok = false;
            detail = "group projection left the manifold";
        }

        // exp(log) round trip
        const Rotation back = group_exp(a, group_log(a, b));
        if ((back.matrix() - b.matrix()).norm() > 1e-8) {
            ok = false;
            detail = "exp(log) round trip drifted";
        }

        // metric axioms
        const double dab = geodesic_distance(a, b);
        if (dab < 0.0 || geodesic_distance(a, a) > 1e-9) {
            ok = false;
            detail = "distance axiom failed";
        }
        if (std::abs(dab - geodesic_distance(b, a)) > 1e-9) {
            ok = false;
            detail = "distance not symmetric";
        }
        if (k < triangle_checks) {
            const Rotation c = haar_sample(n, rng);
            if (dab > geodesic_distance(a, c) + geodesic_distance(c, b) + 1e-9) {
                ok = false;
                detail = "triangle inequality failed";
            }
        }
    }
    const bool in_time = h.elapsed() < 30.0;
    if (!in_time) detail = "exceeded the 30 s budget";
    h.report("criterion 1: manifold correctness suite, 1e4 checks/property at n=20", ok && in_time,
             detail);
}

// ---------------------------------------------------------------- criterion 2

void criterion_2(Harness& h) {
    h.start();
    bool ok = true;
    std::string detail;
    double worst_euclid = 0.0, worst_riem = 0.0;

    for (int instance = 0; instance < 20 && ok; ++instance) {
        const int n = 3 + instance % 3;
        const int num_nodes = 3 + instance % 2;
        Rng rng(40000 + instance);
        const auto graph = generate_graph(num_nodes, 1.0, rng);
        auto [truth_state, truth] = generate_ground_truth(graph, n, rng);
        const auto obs = corrupt(truth, 0.1 + 0.02 * instance, rng);
        const auto state = haar_state(num_nodes, n, rng);
        const auto maps = fmsync::detail::raw_maps(state);

        // Euclidean potential against ambient central differences
        const auto agrad = ambient_gradient_euclidean(maps, obs);
        for (int dir = 0; dir < 20; ++dir) {
            std::vector<Eigen::MatrixXd> d;
            double dot = 0.0;
            for (size_t k = 0; k + 1 < maps.size(); ++k) {
                d.push_back(rng.gaussian_matrix(n, n));
                dot += (agrad[k].array() * d.back().array()).sum();
            }
            const double t = 1e-6;
            auto shifted = [&](double tt) {
                auto m = maps;
                for (size_t k = 0; k + 1 < maps.size(); ++k) m[k + 1] += tt * d[k];
                return potential_euclidean(m, obs);
            };
            const double fd = (shifted(t) - shifted(-t)) / (2.0 * t);
            const double err = std::abs(fd - dot) / std::max(1.0, std::abs(dot));
            worst_euclid = std::max(worst_euclid, err);
            if (err > 1e-5) {
                ok = false;
                detail = "euclidean gradient error " + fmt(err);
            }
        }

        // Riemannian potential against geodesic central differences
        const auto rgrad = riemannian_gradient(state, obs, EnergyConfig{CostVariant::RiemannianCost});
        for (int dir = 0; dir < 20; ++dir) {
            std::vector<Eigen::MatrixXd> d;
            double dot = 0.0;
            Eigen::MatrixXd scratch, proj;
            for (int node = 1; node < num_nodes; ++node) {
                fmsync::detail::project_to_tangent_into(state.map(node).matrix(),
                                                        rng.gaussian_matrix(n, n), scratch, proj);
                d.push_back(proj);
                dot += (rgrad[node - 1].entries().array() * proj.array()).sum();
            }
            const double t = 1e-5;
            auto moved = [&](double tt) {
                std::vector<Rotation> out;
                out.push_back(Rotation::identity(n));
                for (int node = 1; node < num_nodes; ++node)
                    out.push_back(group_exp(state.map(node),
                                            TangentVector::unchecked(state.map(node), tt * d[node - 1])));
                return potential_riemannian(AbsoluteState(std::move(out)), obs);
            };
            const double fd = (moved(t) - moved(-t)) / (2.0 * t);
            const double err = std::abs(fd - dot) / std::max(1.0, std::abs(dot));
            worst_riem = std::max(worst_riem, err);
            if (err > 1e-4) {
                ok = false;
                detail = "riemannian gradient error " + fmt(err);
            }
        }
    }
    const bool in_time = h.elapsed() < 60.0;
    if (ok && in_time)
        detail = "worst rel. error: euclidean " + fmt(worst_euclid) + ", riemannian " + fmt(worst_riem);
    if (!in_time) detail = "exceeded the 1 min budget";
    h.report("criterion 2: gradient oracle, 20 directions x 20 instances, both costs", ok && in_time,
             detail);
}

// ---------------------------------------------------------------- criterion 3

void criterion_3(Harness& h) {
    h.start();
    const int combos_nodes[] = {3, 4, 5};
    const int combos_n[] = {5, 20};
    int successes = 0;
    OptimizerConfig cfg;  // max_iters 500, grad_tol 1e-8

    for (int instance = 0; instance < 40; ++instance) {
        const int num_nodes = combos_nodes[instance % 3];
        const int n = combos_n[(instance / 3) % 2];
        Rng rng(50000 + instance);
        const auto graph = generate_graph(num_nodes, 1.0, rng);
        auto [truth_state, truth] = generate_ground_truth(graph, n, rng);
        const auto run = mle_constrained(truth, haar_state(num_nodes, n, rng), cfg);

        bool good = run.final_energy < 1e-8 && run.iterations <= 500;
        const auto& edges = graph.edges();
        for (size_t e = 0; e < edges.size() && good; ++e) {
            const auto& [i, j] = edges[e];
            if ((run.maps[i] * truth.relative_maps[e].matrix() - run.maps[j]).norm() >= 1e-4)
                good = false;
        }
        if (good) ++successes;
    }
    h.report("criterion 3: exact recovery on noiseless complete graphs", successes >= 38,
             std::to_string(successes) + "/40 instances recovered");
}

// ---------------------------------------------------------------- criterion 4

// chi-square critical value at significance 0.01, Wilson-Hilferty
double chi2_crit_99(int df) {
    const double z = 2.3263478740408408;
    const double k = df;
    const double t = 1.0 - 2.0 / (9.0 * k) + z * std::sqrt(2.0 / (9.0 * k));
    return k * t * t * t;
}

void criterion_4(Harness& h) {
    h.start();
    const double h_step = 1e-3, beta = 100.0, theta_obs = 0.3;
    const int num_chains = 4, per_chain = 25000, thinning = 1600, burn_in = 10000;
    const int bins = 40;
    bool ok = true;
    std::string detail;

    const auto obs = [&] {
        const SyncGraph single(2, {{0, 1}});
        return ObservationSet(single, {rot2(theta_obs)}, 0.0);
    }();
    const AbsoluteState init(std::vector<Rotation>{Rotation::identity(2), rot2(theta_obs)});

    for (CostVariant variant : {CostVariant::RiemannianCost, CostVariant::EuclideanCost}) {
        // closed-form potential of the single-edge planar instance
        auto u_of = [&](double theta) {
            const double d = std::atan2(std::sin(theta - theta_obs), std::cos(theta - theta_obs));
            return variant == CostVariant::RiemannianCost ? 2.0 * d * d
                                                          : 4.0 - 4.0 * std::cos(theta - theta_obs);
        };
        // quadrature-normalized target CDF and equal-probability bin edges
        const int grid_n = 200001;
        std::vector<double> grid(grid_n), cdf(grid_n);
        double acc = 0.0;
        for (int i = 0; i < grid_n; ++i) {
            grid[i] = -fmsync::kPi + 2.0 * fmsync::kPi * i / (grid_n - 1);
            const double w = (i == 0 || i == grid_n - 1) ? 0.5 : 1.0;
            acc += w * std::exp(-beta * u_of(grid[i]));
            cdf[i] = acc;
        }
        for (double& c : cdf) c /= acc;
        std::vector<double> edges(bins + 1);
        edges[0] = -fmsync::kPi;
        edges[bins] = fmsync::kPi;
        for (int b = 1; b < bins; ++b) {
            const double target = static_cast<double>(b) / bins;
            const auto it = std::lower_bound(cdf.begin(), cdf.end(), target);
            edges[b] = grid[std::distance(cdf.begin(), it)];
        }

        // chains in a small pool; samples merged by chain index
        std::vector<std::vector<double>> angles(num_chains);
        std::atomic<int> next{0};
        auto worker = [&]() {
            while (true) {
                const int c = next.fetch_add(1);
                if (c >= num_chains) return;
                SamplerConfig cfg;
                cfg.step_size = h_step;
                cfg.beta = beta;
                cfg.num_samples = per_chain;
                cfg.burn_in = burn_in;
                cfg.thinning = thinning;
                cfg.energy.variant = variant;
                cfg.seed = derive_seed(20260404, static_cast<std::uint64_t>(c),
                                       static_cast<std::uint64_t>(variant));
                const auto set = run_chain(obs, init, cfg);
                angles[c].reserve(per_chain);
                for (const auto& s : set.samples)
                    angles[c].push_back(std::atan2(s.map(1).matrix()(1, 0), s.map(1).matrix()(0, 0)));
            }
        };
        std::thread t1(worker), t2(worker);
        t1.join();
        t2.join();

        std::vector<long> counts(bins, 0);
        long total = 0;
        for (const auto& chain : angles)
            for (double a : chain) {
                const int b = static_cast<int>(std::upper_bound(edges.begin(), edges.end(), a) -
                                               edges.begin()) -
                              1;
                ++counts[std::clamp(b, 0, bins - 1)];
                ++total;
            }
        const double expected = static_cast<double>(total) / bins;
        double stat = 0.0;
        for (long c : counts) stat += (c - expected) * (c - expected) / expected;
        const double crit = chi2_crit_99(bins - 1);
        detail += std::string(variant == CostVariant::RiemannianCost ? "riemannian" : "euclidean") +
                  " chi2=" + fmt(stat) + " (crit " + fmt(crit) + ") ";
        if (stat >= crit) ok = false;
    }
    const bool in_time = h.elapsed() < 120.0;
    if (!in_time) detail += "| exceeded the 2 min budget";
    h.report("criterion 4: sampler stationarity oracle on SO(2), 1e5 thinned samples", ok && in_time,
             detail);
}

// ---------------------------------------------------------------- criterion 5

struct ReferenceRow {
    const char* estimator;
    double density;
    double values[5];  // sigma2 = 0.2, 0.4, 0.6, 0.8, 1.0
};

const ReferenceRow kReferenceValues[] = {
    {"MLE1", 1.0, {2.09, 3.23, 3.99, 4.43, 4.95}},
    {"MLE1", 0.8333333333333333, {2.06, 3.19, 4.11, 4.47, 4.83}},
    {"MLE1", 0.6666666666666666, {2.19, 3.47, 4.14, 4.55, 4.88}},
    {"MLE2", 1.0, {2.08, 3.10, 3.67, 4.01, 4.82}},
    {"MLE2", 0.8333333333333333, {2.03, 3.16, 3.85, 4.29, 4.63}},
    {"MLE2", 0.6666666666666666, {2.17, 3.36, 4.10, 4.53, 4.87}},
    {"MC1", 1.0, {2.15, 3.11, 3.70, 4.29, 4.65}},
    {"MC1", 0.8333333333333333, {2.29, 3.27, 3.99, 4.36, 4.71}},
    {"MC1", 0.6666666666666666, {2.43, 3.67, 4.38, 4.73, 5.01}},
    {"MC2-euclid", 1.0, {2.09, 3.12, 3.76, 4.30, 4.62}},
    {"MC2-euclid", 0.8333333333333333, {2.26, 3.29, 4.02, 4.38, 4.75}},
    {"MC2-euclid", 0.6666666666666666, {2.42, 3.63, 4.32, 4.70, 5.07}},
};

void criterion_5(Harness& h) {
    h.start();
    ExperimentConfig cfg;  // defaults are the paper grid with 10 seeds
    cfg.num_workers = 2;
    cfg.validate();

    const SweepOutputs out = run_sweep(cfg);
    const auto table =
        summarize_experiment(out.results, cfg.estimators, cfg.densities, cfg.sigmas2, false);

    const bool complete = out.failures.empty() && table.missing.empty();

    // (a) monotone nondecreasing in sigma^2 for every estimator x density row
    bool monotone = true;
    for (size_t row = 0; row < table.cell_means.size(); ++row)
        for (size_t si = 1; si < table.sigmas.size(); ++si)
            if (table.cell_means[row][si] + 1e-12 < table.cell_means[row][si - 1]) monotone = false;

    // (b) constrained <= unconstrained at sigma^2 >= 0.6, full density
    bool constrained_wins = true;
    {
        const size_t mle1_row = 0 * cfg.densities.size() + 0;
        const size_t mle2_row = 1 * cfg.densities.size() + 0;
        for (size_t si = 0; si < table.sigmas.size(); ++si)
            if (table.sigmas[si] >= 0.6 - 1e-12 &&
                table.cell_means[mle2_row][si] > table.cell_means[mle1_row][si])
                constrained_wins = false;
    }

    // (c) absolute agreement with the published numbers, +-0.7
    bool values_match = true;
    double worst_dev = 0.0;
    std::printf("    %-11s %-8s %7s %7s %7s %7s %7s\n", "estimator", "density", "0.2", "0.4", "0.6",
                "0.8", "1.0");
    for (const ReferenceRow& ref : kReferenceValues) {
        size_t ei = 0, di = 0;
        for (size_t k = 0; k < cfg.estimators.size(); ++k)
            if (cfg.estimators[k] == ref.estimator) ei = k;
        for (size_t k = 0; k < cfg.densities.size(); ++k)
            if (std::abs(cfg.densities[k] - ref.density) < 1e-9) di = k;
        const size_t row = ei * cfg.densities.size() + di;
        std::printf("    %-11s %-8.3f", ref.estimator, ref.density);
        for (size_t si = 0; si < 5; ++si) {
            const double ours = table.cell_means[row][si];
            const double dev = ours - ref.values[si];
            worst_dev = std::max(worst_dev, std::abs(dev));
            if (std::abs(dev) > 0.7) values_match = false;
            std::printf(" %7.2f", ours);
        }
        std::printf("   reference:");
        for (double v : ref.values) std::printf(" %.2f", v);
        std::printf("\n");
    }
    std::fflush(stdout);

    h.report("criterion 5a: estimator error is monotone in the noise variance", complete && monotone);
    h.report("criterion 5b: constrained MLE <= unconstrained MLE at sigma2 >= 0.6, full density",
             complete && constrained_wins);
    h.report("criterion 5c: absolute values within +-0.7 of the reference comparison values",
             complete && values_match, "worst deviation " + fmt(worst_dev));
}

// ---------------------------------------------------------------- criterion 6

void criterion_6(Harness& h) {
    h.start();
    const int num_nodes = 4, n = 20, seeds = 10;
    OptimizerConfig cfg;
    bool ok = true;
    std::string detail;

    for (double sigma2 : {0.1, 0.2, 0.3, 0.4, 0.5, 0.6}) {
        // seed-averaged distance-to-truth curves, padded with final values
        std::vector<std::vector<double>> curves1, curves2;
        double baseline = 0.0;
        for (int seed = 0; seed < seeds; ++seed) {
            Rng rng(derive_seed(60000, static_cast<std::uint64_t>(seed),
                                static_cast<std::uint64_t>(sigma2 * 100)));
            const auto graph = generate_graph(num_nodes, 1.0, rng);
            auto [truth_state, truth] = generate_ground_truth(graph, n, rng);
            const auto obs = corrupt(truth, sigma2, rng);
            baseline += observation_distance(obs, truth);

            const auto r1 = multi_restart(obs, Estimator::Mle1, 1, derive_seed(61, seed), cfg, &truth);
            const auto r2 = multi_restart(obs, Estimator::Mle2, 1, derive_seed(62, seed), cfg, &truth);
            auto curve = [](const EstimateResult& r) {
                std::vector<double> c;
                for (const auto& p : r.trace) c.push_back(p.dist_to_truth);
                return c;
            };
            curves1.push_back(curve(r1.runs[0]));
            curves2.push_back(curve(r2.runs[0]));
        }
        baseline /= seeds;

        auto first_below = [&](const std::vector<std::vector<double>>& curves) {
            size_t len = 0;
            for (const auto& c : curves) len = std::max(len, c.size());
            for (size_t it = 0; it < len; ++it) {
                double mean = 0.0;
                for (const auto& c : curves) mean += it < c.size() ? c[it] : c.back();
                mean /= curves.size();
                if (mean < baseline) return static_cast<long>(it);
            }
            return -1L;
        };
        const long f1 = first_below(curves1);
        const long f2 = first_below(curves2);
        detail += "s2=" + fmt(sigma2) + ": MLE1@" + std::to_string(f1) + " MLE2@" +
                  std::to_string(f2) + "; ";
        if (f1 < 0 || f1 > 25 || f2 < 0 || f2 > 25) ok = false;
    }
    h.report("criterion 6: both MLEs beat the corrupted baseline within 25 iterations", ok, detail);
}

// ---------------------------------------------------------------- criterion 7

void criterion_7(Harness& h) {
    h.start();
    const int num_nodes = 4, n = 20;
    const std::vector<int> counts = {1, 10, 100, 300, 1000};
    bool monotone = true, beats_baseline = true;
    std::string detail;

    for (double sigma2 : {0.2, 0.4, 0.6}) {
        double sampler_acc_100 = 0.0, baseline_acc_100 = 0.0;
        int cells = 0;
        for (int seed = 0; seed < 3; ++seed) {
            Rng rng(derive_seed(70000, static_cast<std::uint64_t>(seed),
                                static_cast<std::uint64_t>(sigma2 * 100)));
            const auto graph = generate_graph(num_nodes, 1.0, rng);
            auto [truth_state, truth] = generate_ground_truth(graph, n, rng);
            const auto obs = corrupt(truth, sigma2, rng);

            OptimizerConfig ocfg;
            const auto warm = multi_restart(obs, Estimator::Mle2, 10, derive_seed(71, seed), ocfg);
            SamplerConfig scfg;
            scfg.seed = derive_seed(72, seed, static_cast<std::uint64_t>(sigma2 * 100));
            const auto set = run_chain(obs, warm.state, scfg);

            for (int node = 1; node < num_nodes; ++node) {
                std::vector<Rotation> prefix;
                prefix.reserve(1000);
                double prev = 0.0;
                size_t consumed = 0;
                for (int count : counts) {
                    while (consumed < static_cast<size_t>(count))
                        prefix.push_back(set.samples[consumed++].map(node));
                    const double acc = accuracy_score(truth_state.map(node),
                                                      oracle_best_map(truth_state.map(node), prefix));
                    if (acc < prev - 1e-15) monotone = false;
                    prev = acc;
                    if (count >= 100) {
                        Rng brng(derive_seed(73, seed, node, count));
                        const double base =
                            random_baseline(truth_state.map(node), warm.state.map(node), count, brng);
                        if (acc <= base) beats_baseline = false;
                        if (count == 100) {
                            sampler_acc_100 += acc;
                            baseline_acc_100 += base;
                            ++cells;
                        }
                    }
                }
            }
        }
        detail += "s2=" + fmt(sigma2) + ": acc@100 " + fmt(sampler_acc_100 / cells) + " vs baseline " +
                  fmt(baseline_acc_100 / cells) + "; ";
    }
    h.report("criterion 7a: oracle accuracy is monotonically nondecreasing in sample count", monotone);
    h.report("criterion 7b: sampler oracle accuracy exceeds the MLE-seeded Haar baseline",
             beats_baseline, detail);
}

// ---------------------------------------------------------------- criterion 8

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) return "<unreadable " + p.string() + ">";
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void criterion_8(Harness& h) {
    h.start();
    const fs::path tmp = fs::temp_directory_path() / "fmsync_acceptance_c8";
    fs::remove_all(tmp);
    fs::create_directories(tmp);

    const std::string common =
        std::string(FMSYNC_CLI_PATH) +
        " sweep --n 10 --nodes 6 --density 1.0 --density 0.75 --sigma2 0.3 --sigma2 0.7"
        " --seed 1 --seed 2 --estimator MLE1 --estimator MLE2 --estimator MC1"
        " --estimator MC2-euclid --estimator MC2-riem --samples 60 --burn-in 30 --restarts 3";
    const int rc_a = std::system((common + " --workers 2 --out " + (tmp / "a").string() +
                                  " > /dev/null 2>&1").c_str());
    const int rc_b = std::system((common + " --workers 1 --out " + (tmp / "b").string() +
                                  " > /dev/null 2>&1").c_str());

    bool ok = WEXITSTATUS(rc_a) == 0 && WEXITSTATUS(rc_b) == 0;
    std::string detail = ok ? "" : "sweep exited nonzero";
    for (const char* name : {"results.csv", "table.csv", "table_stddev.csv", "table_sq.csv",
                             "sweep_long.csv", "convergence.csv"}) {
        if (slurp(tmp / "a" / name) != slurp(tmp / "b" / name)) {
            ok = false;
            detail = std::string(name) + " differs between reruns";
        }
    }
    fs::remove_all(tmp);
    h.report("criterion 8: sweep reruns are byte-identical across worker counts", ok, detail);
}

}  // namespace

int main() {
    Harness h;
    criterion_1(h);
    criterion_2(h);
    criterion_3(h);
    criterion_4(h);
    criterion_5(h);
    criterion_6(h);
    criterion_7(h);
    criterion_8(h);
    std::printf("%s: %d criterion(s) failed\n", h.failed == 0 ? "ACCEPTANCE PASSED" : "ACCEPTANCE FAILED",
                h.failed);
    return h.failed == 0 ? 0 : 1;
}
