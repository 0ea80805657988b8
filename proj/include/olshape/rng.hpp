// Seeded random streams. Every frame gets its own stream derived from the
// master seed, so frames can run in parallel and still reproduce bit-exactly.
#pragma once

#include <cstdint>
#include <random>

namespace olshape {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class RandomStream {
  public:
    explicit RandomStream(std::uint64_t seed) : gen_(seed) {}

    double gaussian(double stddev) {
        if (stddev == 0.0) return 0.0;
        return std::normal_distribution<double>(0.0, stddev)(gen_);
    }
    int bit() { return static_cast<int>(gen_() & 1u); }
    std::uint64_t u64() { return gen_(); }
    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(gen_); }
    std::mt19937_64& engine() { return gen_; }

  private:
    std::mt19937_64 gen_;
};

// Counter-based derivation: stream(seed, n) is independent of how many other
// streams were drawn, which is what frame-parallel sweeps rely on.
inline RandomStream frame_stream(std::uint64_t master_seed, std::uint64_t index) {
    std::uint64_t s = master_seed ^ (0xd1342543de82ef95ULL * (index + 1));
    std::uint64_t a = splitmix64(s);
    std::uint64_t b = splitmix64(s);
    return RandomStream(a ^ (b << 1));
}

}  // namespace olshape
