#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace dolqr {

// Deterministic stream derivation: every consumer (per agent, per trial,
// per role) owns a stream derived from the master seed and a path of
// integers, so results do not depend on evaluation order.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = splitmix64(master);
    for (auto p : path) s = splitmix64(s ^ splitmix64(p));
    return s;
}

class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : gen_(seed) {}

    double gauss() { return normal_(gen_); }
    double uniform() { return uniform_(gen_); }

    Eigen::VectorXd gauss_vec(int n) {
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i) v(i) = normal_(gen_);
        return v;
    }

    std::uint64_t raw() { return gen_(); }

private:
    std::mt19937_64 gen_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace dolqr
