#pragma once

#include <cstdint>
#include <vector>

namespace vqlab {

// Deterministic, platform-independent RNG. std:: distributions are
// implementation-defined, so all draws go through the helpers below.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        // splitmix64 expansion of the seed into xoshiro256++ state
        std::uint64_t x = seed;
        for (auto& s : state_) s = splitmix64(x);
    }

    std::uint64_t nextU64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // uniform integer in [0, n)
    std::uint64_t below(std::uint64_t n) {
        // rejection sampling, no modulo bias
        const std::uint64_t threshold = (~n + 1) % n;  // 2^64 mod n
        for (;;) {
            const std::uint64_t r = nextU64();
            if (r >= threshold) return r % n;
        }
    }

    // uniform double in [0, 1)
    double uniform() { return static_cast<double>(nextU64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool coin() { return (nextU64() & 1u) != 0; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // derive an independent child seed; used to make parallel work
    // (scenes, runs) order-independent
    static std::uint64_t deriveSeed(std::uint64_t master, std::uint64_t index) {
        std::uint64_t x = master ^ (0x9e3779b97f4a7c15ull * (index + 1));
        std::uint64_t a = splitmix64(x);
        std::uint64_t b = splitmix64(x);
        return a ^ rotl(b, 31);
    }

private:
    static std::uint64_t splitmix64(std::uint64_t& x) {
        std::uint64_t z = (x += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

    std::uint64_t state_[4];
};

}  // namespace vqlab
