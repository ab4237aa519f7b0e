#pragma once

// Seeded randomness with results that are identical on every toolchain.
// std:: distributions are implementation-defined, so draws go through
// boost::random, whose algorithms are fixed.

#include <cmath>
#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/random/bernoulli_distribution.hpp>
#include <boost/random/lognormal_distribution.hpp>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>

namespace msi {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Independent stream seed for a named purpose and index.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0) {
    return splitmix64(splitmix64(seed ^ fnv1a(stream)) + index);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    Rng(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0)
        : engine_(derive_seed(seed, stream, index)) {}

    double uniform() { return boost::random::uniform_01<double>{}(engine_); }
    /// Integer uniform on [lo, hi].
    int uniform_int(int lo, int hi) { return boost::random::uniform_int_distribution<int>(lo, hi)(engine_); }
    std::size_t index(std::size_t n) {
        return boost::random::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }
    bool bernoulli(double p) { return boost::random::bernoulli_distribution<double>(p)(engine_); }
    double normal(double mean, double sd) { return boost::random::normal_distribution<double>(mean, sd)(engine_); }
    double lognormal(double mu_log, double sigma_log) {
        return std::exp(normal(mu_log, sigma_log));
    }

    friend bool operator==(const Rng&, const Rng&) = default;

private:
    boost::random::mt19937_64 engine_;
};

}  // namespace msi
