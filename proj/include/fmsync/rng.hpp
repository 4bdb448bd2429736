#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace fmsync {

namespace detail {

// SplitMix64 finalizer, used both to decorrelate raw seeds and to derive
// independent per-task streams from a base seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace detail

// Mixes a base seed with one or more stream indices (restart index, grid cell
// coordinates, chain index, ...) into an independent derived seed.
template <typename... Ids>
std::uint64_t derive_seed(std::uint64_t base, Ids... ids) {
    std::uint64_t h = detail::splitmix64(base);
    ((h = detail::splitmix64(h ^ static_cast<std::uint64_t>(ids))), ...);
    return h;
}

// Deterministic random source. Gaussian variates use Box-Muller on raw
// uniforms instead of std::normal_distribution so that streams are stateless
// (no cached spare) and identical across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(detail::splitmix64(seed)) {}

    // Uniform on [0, 1).
    double uniform() {
        return (engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, bound).
    std::uint64_t uniform_int(std::uint64_t bound) {
        // rejection sampling to avoid modulo bias
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
        std::uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % bound;
    }

    double gaussian() {
        double u1;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        constexpr double two_pi = 6.283185307179586476925286766559;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

    Eigen::MatrixXd gaussian_matrix(int rows, int cols) {
        Eigen::MatrixXd m(rows, cols);
        fill_gaussian(m);
        return m;
    }

    // Fills row-major, so gaussian_matrix and fill_gaussian consume the
    // stream identically.
    void fill_gaussian(Eigen::MatrixXd& m) {
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j)
                m(i, j) = gaussian();
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace fmsync
