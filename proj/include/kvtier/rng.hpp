// Copyright (c) 2026 The kvtier Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace kvtier {

/// splitmix64 step; used to derive independent sub-seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
    return splitmix64(splitmix64(splitmix64(master ^ a) ^ b) ^ c);
}

/// Uniform double in [0, 1) built directly from engine output so streams are
/// identical across standard libraries (std distributions are not pinned).
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform01(rng) * static_cast<double>(n)) % n;
}

inline double exponential(std::mt19937_64& rng, double rate) {
    return -std::log1p(-uniform01(rng)) / rate;
}

/// Zipf(s) sampler over ranks {0, .., n-1}; inverse-CDF over precomputed
/// cumulative weights. s = 0 degenerates to the uniform distribution.
class ZipfSampler {
  public:
    ZipfSampler(std::uint64_t n, double s) : cdf_(n) {
        double acc = 0.0;
        for (std::uint64_t i = 0; i < n; ++i) {
            acc += 1.0 / std::pow(static_cast<double>(i + 1), s);
            cdf_[i] = acc;
        }
        total_ = acc;
    }

    std::uint64_t size() const { return cdf_.size(); }

    std::uint64_t sample(std::mt19937_64& rng) const {
        const double u = uniform01(rng) * total_;
        const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
        return it == cdf_.end() ? cdf_.size() - 1 : static_cast<std::uint64_t>(it - cdf_.begin());
    }

  private:
    std::vector<double> cdf_;
    double total_ = 0.0;
};

}  // namespace kvtier
