#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace aes {

/// FNV-1a 64-bit hash; used for content hashes, cache keys and RNG substreams.
constexpr std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string to_hex(std::uint64_t value);

/// Counter-based generator (splitmix64 stream). Every draw is a pure
/// function of (seed, key, counter), so substreams are independent and
/// bit-reproducible across platforms. No libstdc++ distributions are
/// used anywhere; bounded draws are unbiased (128-bit multiply + rejection).
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : state_(mix(seed)) {}

    /// Independent substream for a named group, e.g. "fanar|L2|style".
    static CounterRng substream(std::uint64_t seed, std::string_view key) {
        return CounterRng(seed ^ fnv1a64(key));
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return finalize(state_);
    }

    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t bounded(std::uint64_t n);

    /// Uniform in [lo, hi] inclusive.
    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(bounded(static_cast<std::uint64_t>(hi - lo) + 1));
    }

    /// Uniform double in [0, 1).
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

private:
    static constexpr std::uint64_t mix(std::uint64_t z) { return finalize(z + 0x9e3779b97f4a7c15ULL); }

    static constexpr std::uint64_t finalize(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

}  // namespace aes
