#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "fmsync/errors.hpp"
#include "fmsync/estimators.hpp"
#include "fmsync/manifold.hpp"
#include "fmsync/rng.hpp"
#include "fmsync/sampler.hpp"

namespace fmsync {

// Entrywise best composite of the samples: entry (a,b) is the sample entry
// closest to truth(a,b). The result mixes entries across samples and is in
// general not a rotation, only an ambient matrix.
inline AmbientMatrix oracle_best_map(const Rotation& truth, const std::vector<Rotation>& samples) {
    if (samples.empty()) throw ValidationError("oracle_best_map: no samples");
    const int n = truth.n();
    for (const Rotation& s : samples) detail::require_same_dim(n, s.n(), "oracle_best_map");
    AmbientMatrix best = samples[0].matrix();
    for (size_t k = 1; k < samples.size(); ++k) {
        const Eigen::MatrixXd& s = samples[k].matrix();
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                if (std::abs(s(a, b) - truth.matrix()(a, b)) < std::abs(best(a, b) - truth.matrix()(a, b)))
                    best(a, b) = s(a, b);
    }
    return best;
}

// Frobenius similarity score Acc = 1 / (1 + ||truth - best||_F), in (0, 1].
inline double accuracy_score(const Rotation& truth, const AmbientMatrix& best) {
    if (best.rows() != truth.n() || best.cols() != truth.n())
        throw DimensionError("accuracy_score: dimension mismatch");
    return 1.0 / (1.0 + (truth.matrix() - best).norm());
}

// Oracle accuracy of [mle_point, Haar_1, ..., Haar_{num_samples-1}]: the
// reference a posterior sampler has to beat.
inline double random_baseline(const Rotation& truth, const Rotation& mle_point, int num_samples,
                              Rng& rng) {
    if (num_samples < 1) throw ValidationError("random_baseline: need at least one sample");
    std::vector<Rotation> samples;
    samples.reserve(num_samples);
    samples.push_back(mle_point);
    for (int k = 1; k < num_samples; ++k) samples.push_back(haar_sample(truth.n(), rng));
    return accuracy_score(truth, oracle_best_map(truth, samples));
}

// Entrywise sample standard deviation (unbiased, N-1 divisor).
inline Eigen::MatrixXd entry_spread(const std::vector<Rotation>& samples) {
    if (samples.size() < 2) throw ValidationError("entry_spread: need at least two samples");
    const int n = samples[0].n();
    for (const Rotation& s : samples) detail::require_same_dim(n, s.n(), "entry_spread");
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(n, n);
    for (const Rotation& s : samples) mean += s.matrix();
    mean /= static_cast<double>(samples.size());
    Eigen::MatrixXd var = Eigen::MatrixXd::Zero(n, n);
    for (const Rotation& s : samples) var += (s.matrix() - mean).cwiseAbs2();
    var /= static_cast<double>(samples.size() - 1);
    return var.cwiseSqrt();
}

// Per-node uncertainty summary of a posterior sample set against the hidden
// ground truth.
struct UQReport {
    struct PerNode {
        double oracle_accuracy = 0.0;
        Eigen::MatrixXd entry_stddev;
        Rotation mean_map = Rotation::identity(2);
    };
    std::vector<PerNode> per_node;  // non-anchor nodes, in node order
    int num_samples_used = 0;
};

inline UQReport build_uq_report(const SampleSet& samples, const AbsoluteState& truth) {
    if (samples.samples.empty()) throw ValidationError("build_uq_report: empty sample set");
    UQReport report;
    report.num_samples_used = static_cast<int>(samples.samples.size());
    const int num_nodes = truth.num_nodes();
    for (int node = 1; node < num_nodes; ++node) {
        std::vector<Rotation> node_samples;
        node_samples.reserve(samples.samples.size());
        for (const AbsoluteState& s : samples.samples) node_samples.push_back(s.map(node));
        UQReport::PerNode entry;
        entry.oracle_accuracy = accuracy_score(truth.map(node), oracle_best_map(truth.map(node), node_samples));
        entry.entry_stddev = node_samples.size() >= 2
                                 ? entry_spread(node_samples)
                                 : Eigen::MatrixXd::Zero(truth.n(), truth.n());
        entry.mean_map = node_samples.size() >= 2 ? frechet_mean(node_samples) : node_samples[0];
        report.per_node.push_back(std::move(entry));
    }
    return report;
}

// One completed experiment cell: estimator x density x sigma^2 x seed.
struct CellResult {
    std::string estimator;
    double density = 0.0;
    double sigma2 = 0.0;
    std::uint64_t seed = 0;
    double mean_dist = 0.0;
    double mean_dist_sq = 0.0;
    double oracle_acc = std::numeric_limits<double>::quiet_NaN();        // sampler rows only
    double mean_entry_spread = std::numeric_limits<double>::quiet_NaN();  // sampler rows only
};

// Seed-aggregated summary in the comparison-table layout: one row per
// (estimator, density), one column per sigma^2, mean and stddev over seeds.
struct SummaryTable {
    std::vector<std::string> estimators;  // row-block order
    std::vector<double> densities;        // row order within a block
    std::vector<double> sigmas;           // column order
    // cell_means[row][col] with row = estimator_index * densities.size() + density_index
    std::vector<std::vector<double>> cell_means;
    std::vector<std::vector<double>> cell_stddevs;
    std::vector<std::vector<int>> cell_counts;
    std::vector<std::string> missing;  // human-readable descriptors of empty cells
};

inline SummaryTable summarize_experiment(const std::vector<CellResult>& results,
                                         const std::vector<std::string>& estimators,
                                         const std::vector<double>& densities,
                                         const std::vector<double>& sigmas, bool squared = false) {
    SummaryTable table;
    table.estimators = estimators;
    table.densities = densities;
    table.sigmas = sigmas;
    const size_t rows = estimators.size() * densities.size();
    table.cell_means.assign(rows, std::vector<double>(sigmas.size(), std::numeric_limits<double>::quiet_NaN()));
    table.cell_stddevs.assign(rows, std::vector<double>(sigmas.size(), std::numeric_limits<double>::quiet_NaN()));
    table.cell_counts.assign(rows, std::vector<int>(sigmas.size(), 0));

    auto close = [](double a, double b) { return std::abs(a - b) <= 1e-12; };
    for (size_t ei = 0; ei < estimators.size(); ++ei) {
        for (size_t di = 0; di < densities.size(); ++di) {
            const size_t row = ei * densities.size() + di;
            for (size_t si = 0; si < sigmas.size(); ++si) {
                std::vector<double> vals;
                for (const CellResult& r : results)
                    if (r.estimator == estimators[ei] && close(r.density, densities[di]) &&
                        close(r.sigma2, sigmas[si]))
                        vals.push_back(squared ? r.mean_dist_sq : r.mean_dist);
                table.cell_counts[row][si] = static_cast<int>(vals.size());
                if (vals.empty()) {
                    table.missing.push_back(estimators[ei] + " density=" + std::to_string(densities[di]) +
                                            " sigma2=" + std::to_string(sigmas[si]));
                    continue;
                }
                double mean = 0.0;
                for (double v : vals) mean += v;
                mean /= static_cast<double>(vals.size());
                double var = 0.0;
                for (double v : vals) var += (v - mean) * (v - mean);
                table.cell_means[row][si] = mean;
                table.cell_stddevs[row][si] =
                    vals.size() > 1 ? std::sqrt(var / static_cast<double>(vals.size() - 1)) : 0.0;
            }
        }
    }
    return table;
}

}  // namespace fmsync
