#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "fmsync/errors.hpp"
#include "fmsync/estimators.hpp"
#include "fmsync/evaluation.hpp"
#include "fmsync/problem.hpp"
#include "fmsync/sampler.hpp"
#include "fmsync/serialization.hpp"

namespace fmsync {

inline const std::vector<std::string> kKnownEstimators = {"MLE1", "MLE2", "MC1", "MC2-euclid",
                                                          "MC2-riem"};

inline int estimator_tag(const std::string& name) {
    for (size_t i = 0; i < kKnownEstimators.size(); ++i)
        if (kKnownEstimators[i] == name) return static_cast<int>(i) + 1;
    throw ValidationError("unknown estimator: " + name);
}

struct ExperimentConfig {
    int n = 20;
    int num_nodes = 11;
    std::vector<double> densities = {1.0, 0.8333333333333333, 0.6666666666666666};
    std::vector<double> sigmas2 = {0.2, 0.4, 0.6, 0.8, 1.0};
    std::vector<std::string> estimators = {"MLE1", "MLE2", "MC1", "MC2-euclid"};
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    SamplerConfig sampler;
    OptimizerConfig optimizer;
    std::string output_dir = "out";
    int num_workers = 0;  // 0: hardware concurrency

    void validate() const {
        if (n < 2) throw ValidationError("config: n must be >= 2");
        if (num_nodes < 2) throw ValidationError("config: num_nodes must be >= 2");
        if (densities.empty()) throw ValidationError("config: densities must be nonempty");
        if (sigmas2.empty()) throw ValidationError("config: sigmas2 must be nonempty");
        if (estimators.empty()) throw ValidationError("config: estimators must be nonempty");
        if (seeds.empty()) throw ValidationError("config: seeds must be nonempty");
        for (double d : densities)
            if (d <= 0.0 || d > 1.0) throw ValidationError("config: densities must lie in (0, 1]");
        for (double s : sigmas2)
            if (s < 0.0) throw ValidationError("config: sigmas2 must be nonnegative");
        for (const auto& e : estimators) estimator_tag(e);
        sampler.validate();
        optimizer.validate();
    }
};

// Execution details (output_dir, num_workers) are deliberately left out:
// they never influence results, so identical experiments echo identical
// configs no matter where or how parallel they ran.
inline json experiment_config_to_json(const ExperimentConfig& c) {
    return json{{"n", c.n},
                {"num_nodes", c.num_nodes},
                {"densities", c.densities},
                {"sigmas2", c.sigmas2},
                {"estimators", c.estimators},
                {"seeds", c.seeds},
                {"sampler", sampler_config_to_json(c.sampler)},
                {"optimizer",
                 json{{"max_iters", c.optimizer.max_iters},
                      {"grad_tol", c.optimizer.grad_tol},
                      {"initial_step", c.optimizer.initial_step},
                      {"backtrack_factor", c.optimizer.backtrack_factor},
                      {"armijo_c", c.optimizer.armijo_c},
                      {"restarts", c.optimizer.restarts}}}};
}

inline ExperimentConfig experiment_config_from_json(const json& j) {
    ExperimentConfig c;
    c.n = j.value("n", c.n);
    c.num_nodes = j.value("num_nodes", c.num_nodes);
    if (j.contains("densities")) c.densities = j.at("densities").get<std::vector<double>>();
    if (j.contains("sigmas2")) c.sigmas2 = j.at("sigmas2").get<std::vector<double>>();
    if (j.contains("estimators")) c.estimators = j.at("estimators").get<std::vector<std::string>>();
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("sampler")) c.sampler = sampler_config_from_json(j.at("sampler"));
    if (j.contains("optimizer")) {
        const json& o = j.at("optimizer");
        c.optimizer.max_iters = o.value("max_iters", c.optimizer.max_iters);
        c.optimizer.grad_tol = o.value("grad_tol", c.optimizer.grad_tol);
        c.optimizer.initial_step = o.value("initial_step", c.optimizer.initial_step);
        c.optimizer.backtrack_factor = o.value("backtrack_factor", c.optimizer.backtrack_factor);
        c.optimizer.armijo_c = o.value("armijo_c", c.optimizer.armijo_c);
        c.optimizer.restarts = o.value("restarts", c.optimizer.restarts);
    }
    c.output_dir = j.value("output_dir", c.output_dir);
    c.num_workers = j.value("num_workers", c.num_workers);
    return c;
}

namespace detail {

// Shortest round-trip decimal rendering, so CSV output is byte-stable and
// loads back to the same double.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace detail

// One recorded optimizer trace (first restart of a multi-restart run).
struct ConvergenceTrace {
    std::string estimator;
    double density = 0.0;
    double sigma2 = 0.0;
    std::uint64_t seed = 0;
    double baseline_dist = 0.0;
    std::vector<TracePoint> points;
};

struct SweepOutputs {
    std::vector<CellResult> results;
    std::vector<ConvergenceTrace> traces;
    std::vector<std::string> failures;  // "cell: message"
};

namespace detail {

struct ProblemKey {
    int density_idx;
    int seed_idx;
};

// seed for the instance of one (density, seed) problem cell
inline std::uint64_t problem_seed(const ExperimentConfig& cfg, int density_idx, int seed_idx) {
    return derive_seed(cfg.seeds[seed_idx], static_cast<std::uint64_t>(density_idx));
}

// seed for one estimator run within a problem cell
inline std::uint64_t run_seed(const ExperimentConfig& cfg, int density_idx, int seed_idx, int sigma_idx,
                              int tag) {
    return derive_seed(cfg.seeds[seed_idx], static_cast<std::uint64_t>(density_idx),
                       static_cast<std::uint64_t>(sigma_idx), static_cast<std::uint64_t>(tag));
}

inline ProblemInstance make_instance(const ExperimentConfig& cfg, int density_idx, int seed_idx) {
    Rng rng(problem_seed(cfg, density_idx, seed_idx));
    SyncGraph graph = generate_graph(cfg.num_nodes, cfg.densities[density_idx], rng);
    auto [state, truth] = generate_ground_truth(graph, cfg.n, rng);
    ProblemInstance inst{cfg.n, cfg.seeds[seed_idx], std::move(state), std::move(truth), {}};
    for (size_t si = 0; si < cfg.sigmas2.size(); ++si) {
        Rng noise_rng(derive_seed(problem_seed(cfg, density_idx, seed_idx), static_cast<std::uint64_t>(si),
                                  static_cast<std::uint64_t>(0xc0)));
        inst.corrupted.push_back(corrupt(inst.ground_truth, cfg.sigmas2[si], noise_rng));
    }
    return inst;
}

struct CellRuns {
    std::vector<CellResult> results;
    std::vector<ConvergenceTrace> traces;
    std::vector<std::string> failures;
};

// Executes every (sigma2, estimator) run of one problem cell. MC chains warm
// start at the constrained MLE aggregate, which is computed once per sigma2
// and shared with the MLE2 row when both are requested.
inline CellRuns run_problem_cell(const ExperimentConfig& cfg, int density_idx, int seed_idx) {
    CellRuns out;
    const ProblemInstance inst = make_instance(cfg, density_idx, seed_idx);
    const double density = cfg.densities[density_idx];
    const std::uint64_t seed = cfg.seeds[seed_idx];

    for (size_t si = 0; si < cfg.sigmas2.size(); ++si) {
        const ObservationSet& obs = inst.corrupted[si];
        const double sigma2 = cfg.sigmas2[si];
        const double baseline = observation_distance(obs, inst.ground_truth);

        std::optional<AbsoluteState> mle2_state;
        auto ensure_mle2 = [&](int restarts) {
            if (mle2_state) return;
            auto mr = multi_restart(obs, Estimator::Mle2, restarts,
                                    run_seed(cfg, density_idx, seed_idx, static_cast<int>(si),
                                             estimator_tag("MLE2")),
                                    cfg.optimizer, &inst.ground_truth);
            mle2_state = mr.state;
            if (std::find(cfg.estimators.begin(), cfg.estimators.end(), "MLE2") != cfg.estimators.end()) {
                out.results.push_back({"MLE2", density, sigma2, seed, evaluate_estimate(mr.state, inst.ground_truth),
                                       evaluate_estimate_squared(mr.state, inst.ground_truth)});
                out.traces.push_back({"MLE2", density, sigma2, seed, baseline, mr.runs[0].trace});
            }
        };

        for (const std::string& est : cfg.estimators) {
            const std::string cell_desc = est + " density=" + format_double(density) +
                                          " sigma2=" + format_double(sigma2) +
                                          " seed=" + std::to_string(seed);
            try {
                if (est == "MLE1") {
                    auto mr = multi_restart(obs, Estimator::Mle1, cfg.optimizer.restarts,
                                            run_seed(cfg, density_idx, seed_idx, static_cast<int>(si),
                                                     estimator_tag("MLE1")),
                                            cfg.optimizer, &inst.ground_truth);
                    out.results.push_back({"MLE1", density, sigma2, seed,
                                           evaluate_estimate(mr.state, inst.ground_truth),
                                           evaluate_estimate_squared(mr.state, inst.ground_truth)});
                    out.traces.push_back({"MLE1", density, sigma2, seed, baseline, mr.runs[0].trace});
                } else if (est == "MLE2") {
                    ensure_mle2(cfg.optimizer.restarts);
                } else {
                    ensure_mle2(cfg.optimizer.restarts);
                    SamplerConfig chain_cfg = cfg.sampler;
                    chain_cfg.seed = run_seed(cfg, density_idx, seed_idx, static_cast<int>(si),
                                              estimator_tag(est));
                    chain_cfg.energy.variant = (est == "MC2-riem") ? CostVariant::RiemannianCost
                                                                   : CostVariant::EuclideanCost;
                    const SampleSet set = run_chain(obs, *mle2_state, chain_cfg);
                    const AbsoluteState mean = posterior_mean(
                        set, est == "MC1" ? MeanKind::ProjectedEuclidean : MeanKind::Frechet);
                    double acc = 0.0, spread = 0.0;
                    std::vector<Rotation> node_samples;
                    node_samples.reserve(set.samples.size());
                    for (int node = 1; node < cfg.num_nodes; ++node) {
                        node_samples.clear();
                        for (const AbsoluteState& s : set.samples) node_samples.push_back(s.map(node));
                        const Rotation& node_truth = inst.ground_truth_state.map(node);
                        acc += accuracy_score(node_truth, oracle_best_map(node_truth, node_samples));
                        spread += entry_spread(node_samples).mean();
                    }
                    acc /= static_cast<double>(cfg.num_nodes - 1);
                    spread /= static_cast<double>(cfg.num_nodes - 1);
                    out.results.push_back({est, density, sigma2, seed,
                                           evaluate_estimate(mean, inst.ground_truth),
                                           evaluate_estimate_squared(mean, inst.ground_truth), acc, spread});
                }
            } catch (const std::exception& ex) {
                out.failures.push_back(cell_desc + ": " + ex.what());
            }
        }
    }
    return out;
}

}  // namespace detail

// Full grid execution. Problem cells run in a worker pool; per-cell outputs
// land in slots indexed by cell and are merged in deterministic order, so the
// result is independent of scheduling.
inline SweepOutputs run_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    const int num_tasks = static_cast<int>(cfg.densities.size() * cfg.seeds.size());
    std::vector<detail::CellRuns> slots(num_tasks);

    int workers = cfg.num_workers > 0 ? cfg.num_workers
                                      : static_cast<int>(std::thread::hardware_concurrency());
    if (workers < 1) workers = 1;
    workers = std::min(workers, num_tasks);

    std::atomic<int> next{0};
    auto worker = [&]() {
        while (true) {
            const int task = next.fetch_add(1);
            if (task >= num_tasks) return;
            const int density_idx = task / static_cast<int>(cfg.seeds.size());
            const int seed_idx = task % static_cast<int>(cfg.seeds.size());
            try {
                slots[task] = detail::run_problem_cell(cfg, density_idx, seed_idx);
            } catch (const std::exception& ex) {
                slots[task].failures.push_back("problem cell density_idx=" + std::to_string(density_idx) +
                                               " seed=" + std::to_string(cfg.seeds[seed_idx]) + ": " +
                                               ex.what());
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    SweepOutputs merged;
    for (const auto& slot : slots) {
        merged.results.insert(merged.results.end(), slot.results.begin(), slot.results.end());
        merged.traces.insert(merged.traces.end(), slot.traces.begin(), slot.traces.end());
        merged.failures.insert(merged.failures.end(), slot.failures.begin(), slot.failures.end());
    }
    return merged;
}

// --- CSV emission -----------------------------------------------------------

inline void write_results_csv(const std::string& path, const std::vector<CellResult>& results,
                              const json& config_echo) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "# format_version: " << kFormatVersion << "\n";
    out << "# config: " << config_echo.dump() << "\n";
    out << "estimator,density,sigma2,seed,mean_dist,mean_dist_sq,oracle_acc,mean_entry_spread\n";
    for (const CellResult& r : results) {
        out << r.estimator << ',' << detail::format_double(r.density) << ','
            << detail::format_double(r.sigma2) << ',' << r.seed << ','
            << detail::format_double(r.mean_dist) << ',' << detail::format_double(r.mean_dist_sq) << ',';
        if (!std::isnan(r.oracle_acc)) out << detail::format_double(r.oracle_acc);
        out << ',';
        if (!std::isnan(r.mean_entry_spread)) out << detail::format_double(r.mean_entry_spread);
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline void write_table_csv(const std::string& path, const SummaryTable& table, bool stddev,
                            const json& config_echo) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "# format_version: " << kFormatVersion << "\n";
    out << "# config: " << config_echo.dump() << "\n";
    out << "estimator,density";
    for (double s : table.sigmas) out << ",sigma2_" << detail::format_double(s);
    out << '\n';
    for (size_t ei = 0; ei < table.estimators.size(); ++ei) {
        for (size_t di = 0; di < table.densities.size(); ++di) {
            const size_t row = ei * table.densities.size() + di;
            out << table.estimators[ei] << ',' << detail::format_double(table.densities[di]);
            for (size_t si = 0; si < table.sigmas.size(); ++si) {
                const double v = stddev ? table.cell_stddevs[row][si] : table.cell_means[row][si];
                out << ',';
                if (!std::isnan(v)) out << detail::format_double(v);
            }
            out << '\n';
        }
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline void write_convergence_csv(const std::string& path, const std::vector<ConvergenceTrace>& traces,
                                  const json& config_echo) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "# format_version: " << kFormatVersion << "\n";
    out << "# config: " << config_echo.dump() << "\n";
    out << "estimator,density,sigma2,seed,iteration,energy,dist_to_truth,baseline_dist\n";
    for (const ConvergenceTrace& t : traces) {
        for (size_t i = 0; i < t.points.size(); ++i) {
            out << t.estimator << ',' << detail::format_double(t.density) << ','
                << detail::format_double(t.sigma2) << ',' << t.seed << ',' << i << ','
                << detail::format_double(t.points[i].energy) << ','
                << detail::format_double(t.points[i].dist_to_truth) << ','
                << detail::format_double(t.baseline_dist) << '\n';
        }
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline void write_long_csv(const std::string& path, const SummaryTable& table, const json& config_echo) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "# format_version: " << kFormatVersion << "\n";
    out << "# config: " << config_echo.dump() << "\n";
    out << "estimator,density,sigma2,mean_dist,stddev_dist,num_seeds\n";
    for (size_t ei = 0; ei < table.estimators.size(); ++ei)
        for (size_t di = 0; di < table.densities.size(); ++di) {
            const size_t row = ei * table.densities.size() + di;
            for (size_t si = 0; si < table.sigmas.size(); ++si) {
                out << table.estimators[ei] << ',' << detail::format_double(table.densities[di]) << ','
                    << detail::format_double(table.sigmas[si]) << ',';
                if (!std::isnan(table.cell_means[row][si]))
                    out << detail::format_double(table.cell_means[row][si]);
                out << ',';
                if (!std::isnan(table.cell_stddevs[row][si]))
                    out << detail::format_double(table.cell_stddevs[row][si]);
                out << ',' << table.cell_counts[row][si] << '\n';
            }
        }
    if (!out) throw std::runtime_error("write failed: " + path);
}

// Parses a results.csv produced by write_results_csv.
inline std::vector<CellResult> read_results_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    std::vector<CellResult> rows;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;  // column header
            continue;
        }
        std::stringstream ss(line);
        std::string field;
        CellResult r;
        std::getline(ss, r.estimator, ',');
        std::getline(ss, field, ',');
        r.density = std::stod(field);
        std::getline(ss, field, ',');
        r.sigma2 = std::stod(field);
        std::getline(ss, field, ',');
        r.seed = std::stoull(field);
        std::getline(ss, field, ',');
        r.mean_dist = std::stod(field);
        std::getline(ss, field, ',');
        r.mean_dist_sq = std::stod(field);
        std::getline(ss, field, ',');
        r.oracle_acc = field.empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(field);
        std::getline(ss, field, ',');
        r.mean_entry_spread = field.empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(field);
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace fmsync
