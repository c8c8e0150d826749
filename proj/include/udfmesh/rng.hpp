#pragma once

#include <cmath>
#include <cstdint>

// All randomness in the pipeline flows from a single run seed through named
// substreams. Two flavors are provided:
//   - Rng: a sequential splitmix64 stream (shuffles, weight init, corpus gen).
//   - keyed_*: stateless draws addressed by integer keys (point-hashed field
//     noise, per-sample surface sampling), safe to evaluate from any thread in
//     any order.

namespace udfmesh {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Mixes a variadic key into one 64-bit state, one splitmix round per word.
constexpr std::uint64_t hash_key(std::uint64_t h) { return splitmix64(h); }
template <typename... Rest>
constexpr std::uint64_t hash_key(std::uint64_t h, std::uint64_t next, Rest... rest) {
    return hash_key(splitmix64(h ^ next), rest...);
}

// Uniform in (0, 1]: never returns 0 so it is safe inside log().
inline double u64_to_unit(std::uint64_t u) {
    return (static_cast<double>(u >> 11) + 1.0) * 0x1.0p-53;
}

// Standard normal via Box-Muller from two keyed uniforms.
template <typename... Key>
inline double keyed_normal(std::uint64_t seed, Key... key) {
    const std::uint64_t h = hash_key(seed, static_cast<std::uint64_t>(key)...);
    const double u1 = u64_to_unit(h);
    const double u2 = u64_to_unit(splitmix64(h ^ 0x5851f42d4c957f2dull));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

template <typename... Key>
inline double keyed_unit(std::uint64_t seed, Key... key) {
    return u64_to_unit(hash_key(seed, static_cast<std::uint64_t>(key)...));
}

// Sequential generator. Distinct named substreams are derived from the run
// seed so that components can be re-seeded independently.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(splitmix64(seed ^ 0x2545f4914f6cdd1dull)) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        std::uint64_t x = state_;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

    // Uniform in (0, 1].
    double next_unit() { return u64_to_unit(next_u64()); }

    // Uniform in [lo, hi).
    double next_range(double lo, double hi) { return lo + (hi - lo) * (1.0 - next_unit()); }

    // Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

    double next_normal() {
        const double u1 = next_unit();
        const double u2 = next_unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    template <typename T>
    void shuffle(T* data, std::size_t n) {
        for (std::size_t i = n; i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(next_below(i));
            T tmp = data[i - 1];
            data[i - 1] = data[j];
            data[j] = tmp;
        }
    }

private:
    std::uint64_t state_;
};

// Substream ids for deriving component seeds from the run seed.
enum class Stream : std::uint64_t {
    corpus = 1,
    field_noise = 2,
    train_noise = 3,
    weight_init = 4,
    shuffle = 5,
    surface_sampling = 6,
};

inline std::uint64_t substream(std::uint64_t run_seed, Stream s) {
    return hash_key(run_seed, static_cast<std::uint64_t>(s));
}

} // namespace udfmesh
