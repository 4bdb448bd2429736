#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fmsync/errors.hpp"
#include "fmsync/manifold.hpp"
#include "fmsync/rng.hpp"
#include "fmsync/rotation.hpp"

namespace fmsync {

// Directed synchronization graph. Node indices are 0-based in memory with
// node 0 as the anchor; the JSON schema uses 1-based ids (see serialization).
class SyncGraph {
public:
    SyncGraph(int num_nodes, std::vector<std::pair<int, int>> edges)
        : num_nodes_(num_nodes), edges_(std::move(edges)) {
        if (num_nodes_ < 2) throw ValidationError("SyncGraph: need at least 2 nodes");
        std::set<std::pair<int, int>> seen;
        std::vector<int> parent(num_nodes_);
        for (int i = 0; i < num_nodes_; ++i) parent[i] = i;
        auto find = [&](int x) {
            while (parent[x] != x) x = parent[x] = parent[parent[x]];
            return x;
        };
        for (const auto& [i, j] : edges_) {
            if (i < 0 || j < 0 || i >= num_nodes_ || j >= num_nodes_ || i == j)
                throw ValidationError("SyncGraph: invalid edge (" + std::to_string(i) + "," + std::to_string(j) + ")");
            auto key = std::minmax(i, j);
            if (!seen.insert(key).second)
                throw ValidationError("SyncGraph: duplicate edge between nodes " + std::to_string(i) +
                                      " and " + std::to_string(j));
            parent[find(i)] = find(j);
        }
        for (int i = 0; i < num_nodes_; ++i)
            if (find(i) != find(0))
                throw ValidationError("SyncGraph: graph is not connected, synchronization is ill-posed");
    }

    int num_nodes() const { return num_nodes_; }
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }
    int num_edges() const { return static_cast<int>(edges_.size()); }

    friend bool operator==(const SyncGraph& a, const SyncGraph& b) {
        return a.num_nodes_ == b.num_nodes_ && a.edges_ == b.edges_;
    }

private:
    int num_nodes_;
    std::vector<std::pair<int, int>> edges_;
};

// Observed relative maps, one per edge, with the corrupting noise variance
// kept as metadata.
struct ObservationSet {
    SyncGraph graph;
    std::vector<Rotation> relative_maps;  // aligned with graph.edges()
    double sigma2 = 0.0;

    ObservationSet(SyncGraph g, std::vector<Rotation> maps, double noise_variance)
        : graph(std::move(g)), relative_maps(std::move(maps)), sigma2(noise_variance) {
        if (relative_maps.size() != graph.edges().size())
            throw ValidationError("ObservationSet: one relative map per edge required");
        for (const Rotation& r : relative_maps)
            if (r.n() != relative_maps[0].n())
                throw ValidationError("ObservationSet: inconsistent map dimensions");
    }

    int n() const { return relative_maps.empty() ? 0 : relative_maps[0].n(); }
};

// Tuple of absolute maps with the anchor (node 0) pinned to the identity.
class AbsoluteState {
public:
    explicit AbsoluteState(std::vector<Rotation> maps) : maps_(std::move(maps)) {
        if (maps_.size() < 2) throw ValidationError("AbsoluteState: need at least 2 maps");
        const int n = maps_[0].n();
        for (const Rotation& r : maps_)
            if (r.n() != n) throw ValidationError("AbsoluteState: inconsistent map dimensions");
        if ((maps_[0].matrix() - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() != 0.0)
            throw ValidationError("AbsoluteState: anchor map must be exactly the identity");
    }

    static AbsoluteState identity(int num_nodes, int n) {
        return AbsoluteState(std::vector<Rotation>(num_nodes, Rotation::identity(n)));
    }

    int num_nodes() const { return static_cast<int>(maps_.size()); }
    int n() const { return maps_[0].n(); }
    const std::vector<Rotation>& maps() const { return maps_; }
    const Rotation& map(int node) const { return maps_[node]; }

private:
    std::vector<Rotation> maps_;
};

// Spectral coefficients of K probe functions in an n-dimensional basis,
// stored columnwise.
struct SpectralCoefficients {
    Eigen::MatrixXd matrix;  // n x K

    explicit SpectralCoefficients(Eigen::MatrixXd m) : matrix(std::move(m)) {
        if (matrix.rows() < 1 || matrix.cols() < 1)
            throw ValidationError("SpectralCoefficients: empty matrix");
        if (matrix.cols() < matrix.rows())
            std::cerr << "SpectralCoefficients: warning: K=" << matrix.cols() << " < n=" << matrix.rows()
                      << ", Procrustes fit is underdetermined\n";
    }

    int n() const { return static_cast<int>(matrix.rows()); }
    int k() const { return static_cast<int>(matrix.cols()); }
};

// Connected random graph with ceil(density * N(N-1)/2) undirected edges: a
// uniform random spanning tree (Aldous-Broder walk on the complete graph)
// plus uniformly chosen extra pairs, each stored once with a random direction.
inline SyncGraph generate_graph(int num_nodes, double edge_density, Rng& rng) {
    if (num_nodes < 2) throw ValidationError("generate_graph: need at least 2 nodes");
    if (edge_density <= 0.0 || edge_density > 1.0)
        throw ValidationError("generate_graph: edge density must lie in (0, 1]");
    const std::int64_t total = static_cast<std::int64_t>(num_nodes) * (num_nodes - 1) / 2;
    const std::int64_t target = static_cast<std::int64_t>(std::ceil(edge_density * static_cast<double>(total)));
    if (target < num_nodes - 1)
        throw ValidationError("generate_graph: density " + std::to_string(edge_density) +
                              " yields " + std::to_string(target) + " edges, fewer than the " +
                              std::to_string(num_nodes - 1) + " needed for connectivity");

    std::set<std::pair<int, int>> chosen;
    std::vector<bool> visited(num_nodes, false);
    int cur = static_cast<int>(rng.uniform_int(num_nodes));
    visited[cur] = true;
    int seen = 1;
    while (seen < num_nodes) {
        int nxt = static_cast<int>(rng.uniform_int(num_nodes));
        if (nxt == cur) continue;
        if (!visited[nxt]) {
            visited[nxt] = true;
            ++seen;
            chosen.insert(std::minmax(cur, nxt));
        }
        cur = nxt;
    }

    std::vector<std::pair<int, int>> pool;
    pool.reserve(static_cast<size_t>(total));
    for (int i = 0; i < num_nodes; ++i)
        for (int j = i + 1; j < num_nodes; ++j)
            if (!chosen.count({i, j})) pool.emplace_back(i, j);
    // Fisher-Yates, consuming the pool front to back
    for (size_t i = 0; i + 1 < pool.size(); ++i) {
        const size_t j = i + rng.uniform_int(pool.size() - i);
        std::swap(pool[i], pool[j]);
    }
    for (size_t i = 0; chosen.size() < static_cast<size_t>(target); ++i) chosen.insert(pool[i]);

    std::vector<std::pair<int, int>> edges;
    edges.reserve(chosen.size());
    for (const auto& [i, j] : chosen) {
        if (rng.uniform() < 0.5)
            edges.emplace_back(i, j);
        else
            edges.emplace_back(j, i);
    }
    return SyncGraph(num_nodes, std::move(edges));
}

// Haar-random absolute maps (anchor = I) and the exactly consistent relative
// maps C_ij = C_i^T C_j they induce on the edges.
inline std::pair<AbsoluteState, ObservationSet> generate_ground_truth(const SyncGraph& graph, int n,
                                                                      Rng& rng) {
    std::vector<Rotation> abs_maps;
    abs_maps.reserve(graph.num_nodes());
    abs_maps.push_back(Rotation::identity(n));
    for (int i = 1; i < graph.num_nodes(); ++i) abs_maps.push_back(haar_sample(n, rng));

    std::vector<Rotation> rel;
    rel.reserve(graph.edges().size());
    for (const auto& [i, j] : graph.edges())
        rel.push_back(Rotation::unchecked(abs_maps[i].matrix().transpose() * abs_maps[j].matrix()));

    AbsoluteState state(std::move(abs_maps));
    return {std::move(state), ObservationSet(graph, std::move(rel), 0.0)};
}

// Replaces each relative map by project_to_group(C_ij + E) with E i.i.d.
// Gaussian of variance sigma2. sigma2 = 0 returns the input unchanged.
inline ObservationSet corrupt(const ObservationSet& observations, double sigma2, Rng& rng) {
    if (sigma2 < 0.0) throw ValidationError("corrupt: noise variance must be nonnegative");
    if (sigma2 == 0.0) return observations;
    const double sigma = std::sqrt(sigma2);
    const int n = observations.n();
    std::vector<Rotation> noisy;
    noisy.reserve(observations.relative_maps.size());
    for (const Rotation& c : observations.relative_maps)
        noisy.push_back(project_to_group(c.matrix() + sigma * rng.gaussian_matrix(n, n)));
    return ObservationSet(observations.graph, std::move(noisy), sigma2);
}

// Orthogonal Procrustes: the rotation minimizing ||C B - A||_F, which is the
// SO(n) projection of A B^T.
inline Rotation fit_map_procrustes(const SpectralCoefficients& a, const SpectralCoefficients& b) {
    if (a.n() != b.n() || a.k() != b.k())
        throw DimensionError("fit_map_procrustes: coefficient matrices must agree in shape");
    try {
        return project_to_group(a.matrix * b.matrix.transpose());
    } catch (const SingularMatrixError&) {
        throw SingularMatrixError("fit_map_procrustes: A B^T is rank deficient, minimizer not unique");
    }
}

// Cycle-consistency energy sum_{(i,j) in E} ||C_i C_ij - C_j||_F^2.
inline double consistency_residual(const AbsoluteState& state, const ObservationSet& observations) {
    if (state.num_nodes() != observations.graph.num_nodes())
        throw DimensionError("consistency_residual: node count mismatch");
    if (state.n() != observations.n()) throw DimensionError("consistency_residual: map dimension mismatch");
    double total = 0.0;
    const auto& edges = observations.graph.edges();
    for (size_t e = 0; e < edges.size(); ++e) {
        const auto& [i, j] = edges[e];
        total += (state.map(i).matrix() * observations.relative_maps[e].matrix() - state.map(j).matrix())
                     .squaredNorm();
    }
    return total;
}

}  // namespace fmsync
