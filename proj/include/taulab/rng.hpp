#pragma once

#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <string_view>

namespace taulab {

using rng_engine = std::mt19937_64;

namespace detail {

constexpr std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ull) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace detail

/// Independent generator for a named purpose ("init", "data", "perturb", "eval")
/// derived from a run seed. `index` separates trials or workers of one stream, so
/// results never depend on how work is scheduled.
inline rng_engine make_stream(std::uint64_t seed, std::string_view name, std::uint64_t index = 0) {
    const std::uint64_t tag = detail::fnv1a(name);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    return rng_engine(seq);
}

inline std::string save_engine(const rng_engine& eng) {
    std::ostringstream os;
    os << eng;
    return os.str();
}

inline rng_engine load_engine(const std::string& text) {
    std::istringstream is(text);
    rng_engine eng;
    is >> eng;
    return eng;
}

inline double standard_normal(rng_engine& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    return dist(rng);
}

inline int fair_bit(rng_engine& rng) {
    return static_cast<int>(rng() >> 63);
}

}  // namespace taulab
