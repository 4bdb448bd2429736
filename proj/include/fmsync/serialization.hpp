#pragma once

#include <cstdint>
#include <fstream>
#include <json.hpp>
#include <string>
#include <utility>
#include <vector>

#include "fmsync/errors.hpp"
#include "fmsync/estimators.hpp"
#include "fmsync/problem.hpp"
#include "fmsync/rotation.hpp"
#include "fmsync/sampler.hpp"

namespace fmsync {

using nlohmann::json;

inline constexpr const char* kFormatVersion = "fmsync-1";

// Matrices serialize as flat row-major arrays. nlohmann emits doubles with
// shortest round-trip precision, so load(save(x)) reproduces every bit.
inline json matrix_to_json(const Eigen::MatrixXd& m) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) arr.push_back(m(i, j));
    return arr;
}

inline Eigen::MatrixXd matrix_from_json(const json& arr, int rows, int cols) {
    if (!arr.is_array() || static_cast<Eigen::Index>(arr.size()) != static_cast<Eigen::Index>(rows) * cols)
        throw ValidationError("matrix_from_json: expected " + std::to_string(rows * cols) + " entries");
    Eigen::MatrixXd m(rows, cols);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = arr[k++].get<double>();
    return m;
}

// Edges are stored 1-based in JSON (node 1 is the anchor); in-memory indices
// are 0-based.
inline json edges_to_json(const SyncGraph& graph) {
    json arr = json::array();
    for (const auto& [i, j] : graph.edges()) arr.push_back(json::array({i + 1, j + 1}));
    return arr;
}

inline std::vector<std::pair<int, int>> edges_from_json(const json& arr) {
    std::vector<std::pair<int, int>> edges;
    for (const auto& e : arr) edges.emplace_back(e.at(0).get<int>() - 1, e.at(1).get<int>() - 1);
    return edges;
}

inline json observation_set_to_json(const ObservationSet& obs, std::uint64_t seed) {
    json j;
    j["n"] = obs.n();
    j["num_nodes"] = obs.graph.num_nodes();
    j["edges"] = edges_to_json(obs.graph);
    json maps = json::array();
    for (const Rotation& r : obs.relative_maps) maps.push_back(matrix_to_json(r.matrix()));
    j["relative_maps"] = std::move(maps);
    j["sigma2"] = obs.sigma2;
    j["seed"] = seed;
    return j;
}

inline ObservationSet observation_set_from_json(const json& j) {
    const int n = j.at("n").get<int>();
    SyncGraph graph(j.at("num_nodes").get<int>(), edges_from_json(j.at("edges")));
    std::vector<Rotation> maps;
    for (const auto& arr : j.at("relative_maps")) maps.push_back(Rotation(matrix_from_json(arr, n, n)));
    return ObservationSet(std::move(graph), std::move(maps), j.at("sigma2").get<double>());
}

inline json absolute_state_to_json(const AbsoluteState& state) {
    json arr = json::array();
    for (const Rotation& r : state.maps()) arr.push_back(matrix_to_json(r.matrix()));
    return arr;
}

inline AbsoluteState absolute_state_from_json(const json& arr, int n) {
    std::vector<Rotation> maps;
    bool anchor = true;
    for (const auto& m : arr) {
        if (anchor) {
            maps.push_back(Rotation::identity(n));
            anchor = false;
        } else {
            maps.push_back(Rotation(matrix_from_json(m, n, n)));
        }
    }
    return AbsoluteState(std::move(maps));
}

// A full problem instance: graph, hidden ground truth, and the corrupted
// observation sets, one per noise level.
struct ProblemInstance {
    int n = 0;
    std::uint64_t seed = 0;
    AbsoluteState ground_truth_state;
    ObservationSet ground_truth;             // sigma2 = 0
    std::vector<ObservationSet> corrupted;   // one per requested sigma2
};

inline json problem_to_json(const ProblemInstance& p, const json& config_echo) {
    json j;
    j["format_version"] = kFormatVersion;
    j["config"] = config_echo;
    j["n"] = p.n;
    j["seed"] = p.seed;
    j["ground_truth_absolute"] = absolute_state_to_json(p.ground_truth_state);
    j["ground_truth"] = observation_set_to_json(p.ground_truth, p.seed);
    json corr = json::array();
    for (const ObservationSet& obs : p.corrupted) corr.push_back(observation_set_to_json(obs, p.seed));
    j["corrupted"] = std::move(corr);
    return j;
}

inline ProblemInstance problem_from_json(const json& j) {
    if (j.at("format_version").get<std::string>() != kFormatVersion)
        throw ValidationError("problem_from_json: unsupported format version");
    const int n = j.at("n").get<int>();
    ObservationSet truth = observation_set_from_json(j.at("ground_truth"));
    AbsoluteState state = absolute_state_from_json(j.at("ground_truth_absolute"), n);
    std::vector<ObservationSet> corrupted;
    for (const auto& c : j.at("corrupted")) corrupted.push_back(observation_set_from_json(c));
    return ProblemInstance{n, j.at("seed").get<std::uint64_t>(), std::move(state), std::move(truth),
                           std::move(corrupted)};
}

inline json estimate_result_to_json(const EstimateResult& result) {
    json j;
    j["format_version"] = kFormatVersion;
    j["constrained"] = result.constrained;
    j["final_energy"] = result.final_energy;
    j["iterations"] = result.iterations;
    json maps = json::array();
    for (const auto& m : result.maps) maps.push_back(matrix_to_json(m));
    j["maps"] = std::move(maps);
    json energies = json::array(), dists = json::array();
    for (const TracePoint& t : result.trace) {
        energies.push_back(t.energy);
        if (std::isnan(t.dist_to_truth))
            dists.push_back(nullptr);
        else
            dists.push_back(t.dist_to_truth);
    }
    j["trace"] = json{{"energy", std::move(energies)}, {"dist_to_truth", std::move(dists)}};
    return j;
}

inline json sampler_config_to_json(const SamplerConfig& c) {
    return json{{"step_size", c.step_size},
                {"beta", c.beta},
                {"num_samples", c.num_samples},
                {"burn_in", c.burn_in},
                {"thinning", c.thinning},
                {"cost", c.energy.variant == CostVariant::EuclideanCost ? "euclidean" : "riemannian"},
                {"seed", c.seed}};
}

inline SamplerConfig sampler_config_from_json(const json& j) {
    SamplerConfig c;
    c.step_size = j.value("step_size", c.step_size);
    c.beta = j.value("beta", c.beta);
    c.num_samples = j.value("num_samples", c.num_samples);
    c.burn_in = j.value("burn_in", c.burn_in);
    c.thinning = j.value("thinning", c.thinning);
    c.energy.variant = j.value("cost", std::string("euclidean")) == "riemannian"
                           ? CostVariant::RiemannianCost
                           : CostVariant::EuclideanCost;
    c.seed = j.value("seed", static_cast<std::uint64_t>(0));
    return c;
}

inline json sample_set_to_json(const SampleSet& set) {
    json j;
    j["format_version"] = kFormatVersion;
    j["config"] = sampler_config_to_json(set.config);
    json samples = json::array();
    for (const AbsoluteState& s : set.samples) samples.push_back(absolute_state_to_json(s));
    j["samples"] = std::move(samples);
    j["energy_trace"] = set.energy_trace;
    return j;
}

inline SampleSet sample_set_from_json(const json& j) {
    SampleSet set;
    set.config = sampler_config_from_json(j.at("config"));
    const auto& samples = j.at("samples");
    if (samples.empty()) throw ValidationError("sample_set_from_json: no samples");
    const int n = static_cast<int>(std::sqrt(static_cast<double>(samples[0][0].size())) + 0.5);
    for (const auto& s : samples) set.samples.push_back(absolute_state_from_json(s, n));
    set.energy_trace = j.at("energy_trace").get<std::vector<double>>();
    return set;
}

// Compact binary stream for large sample sets. Layout (little endian):
// three uint64 (n, num_nodes, num_samples), then num_samples * num_nodes
// row-major n*n doubles in sample order.
inline void write_sample_stream(std::ostream& out, const SampleSet& set) {
    if (set.samples.empty()) throw ValidationError("write_sample_stream: no samples");
    const std::uint64_t n = set.samples[0].n();
    const std::uint64_t num_nodes = set.samples[0].num_nodes();
    const std::uint64_t num_samples = set.samples.size();
    out.write(reinterpret_cast<const char*>(&n), sizeof(n));
    out.write(reinterpret_cast<const char*>(&num_nodes), sizeof(num_nodes));
    out.write(reinterpret_cast<const char*>(&num_samples), sizeof(num_samples));
    for (const AbsoluteState& s : set.samples) {
        for (const Rotation& r : s.maps()) {
            const Eigen::MatrixXd& m = r.matrix();
            for (Eigen::Index i = 0; i < m.rows(); ++i)
                for (Eigen::Index j = 0; j < m.cols(); ++j) {
                    const double v = m(i, j);
                    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
                }
        }
    }
}

inline std::vector<AbsoluteState> read_sample_stream(std::istream& in) {
    std::uint64_t n = 0, num_nodes = 0, num_samples = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof(n));
    in.read(reinterpret_cast<char*>(&num_nodes), sizeof(num_nodes));
    in.read(reinterpret_cast<char*>(&num_samples), sizeof(num_samples));
    if (!in) throw ValidationError("read_sample_stream: truncated header");
    std::vector<AbsoluteState> samples;
    samples.reserve(num_samples);
    for (std::uint64_t s = 0; s < num_samples; ++s) {
        std::vector<Rotation> maps;
        maps.reserve(num_nodes);
        for (std::uint64_t node = 0; node < num_nodes; ++node) {
            Eigen::MatrixXd m(n, n);
            for (std::uint64_t i = 0; i < n; ++i)
                for (std::uint64_t j = 0; j < n; ++j) {
                    double v;
                    in.read(reinterpret_cast<char*>(&v), sizeof(v));
                    m(i, j) = v;
                }
            if (!in) throw ValidationError("read_sample_stream: truncated payload");
            maps.push_back(node == 0 ? Rotation::identity(static_cast<int>(n))
                                     : Rotation(std::move(m)));
        }
        samples.push_back(AbsoluteState(std::move(maps)));
    }
    return samples;
}

inline void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    return json::parse(in);
}

}  // namespace fmsync
