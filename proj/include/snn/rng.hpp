#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "snn/signal.hpp"

namespace snn {

using Seed = std::uint64_t;

// splitmix64 finalizer, used to spread structured seed words
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// fold words into a master seed; derive(s, a, b) != derive(s, b, a)
inline Seed derive_seed(Seed master, std::initializer_list<std::uint64_t> words) {
    std::uint64_t h = splitmix64(master);
    for (std::uint64_t w : words) h = splitmix64(h ^ w);
    return h;
}

inline std::mt19937_64 make_engine(Seed s) { return std::mt19937_64(s); }

inline Mat gaussian_matrix(Eigen::Index rows, Eigen::Index cols, double stddev,
                           std::mt19937_64& eng) {
    std::normal_distribution<double> dist(0.0, stddev);
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(eng);
    return m;
}

inline Vec gaussian_vector(Eigen::Index n, double stddev, std::mt19937_64& eng) {
    std::normal_distribution<double> dist(0.0, stddev);
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = dist(eng);
    return v;
}

}  // namespace snn
