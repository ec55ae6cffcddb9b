#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace floc {

/// SplitMix64 step; used to derive independent child seeds from one
/// master seed so parallel units (commits, GP runs) stay reproducible.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t s = base;
    std::uint64_t a = splitmix64(s);
    s = base ^ (stream + 0x9e3779b97f4a7c15ULL);
    return a ^ splitmix64(s);
}

/// Deterministic RNG wrapper. The std distributions are
/// implementation-defined, so uniform draws are built directly on the
/// mt19937_64 bit stream to keep outputs identical across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n). n must be positive.
    int bounded(int n) {
        auto wide = static_cast<unsigned __int128>(next_u64());
        return static_cast<int>((wide * static_cast<unsigned __int128>(n)) >> 64);
    }

    /// Fisher-Yates shuffle driven by bounded().
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(bounded(static_cast<int>(i)));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace floc
