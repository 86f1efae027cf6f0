#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace lls {

// SplitMix64 finalizer. Used both as a stand-alone mixer for seed derivation
// and to expand a single word into generator state.
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Deterministic sub-stream derivation: replicate r of master seed s gets
// derive_seed(s, r). Nesting derive_seed calls splits further, so parallel
// and serial schedules consume identical streams.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return mix64(seed + 0x9E3779B97F4A7C15ull * (stream + 1));
}

// xoshiro256++ (Blackman & Vigna). Hand-rolled so that draws are bit-identical
// across compilers and standard libraries; std:: distributions are not.
class Xoshiro256pp {
public:
    explicit Xoshiro256pp(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) {
            sm += 0x9E3779B97F4A7C15ull;
            word = mix64(sm);
        }
    }

    std::uint64_t operator()() {
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

    // Uniform on [0,1) with 53 random bits.
    double uniform01() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    // Inverse-CDF draw from a probability row. Zero-probability categories are
    // never selected; the last positive category absorbs rounding slack.
    int categorical(std::span<const double> probs) {
        const double u = uniform01();
        double cum = 0.0;
        int last_positive = -1;
        for (int i = 0; i < static_cast<int>(probs.size()); ++i) {
            if (probs[i] <= 0.0) continue;
            cum += probs[i];
            last_positive = i;
            if (u < cum) return i;
        }
        return last_positive;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::array<std::uint64_t, 4> state_;
};

}  // namespace lls
