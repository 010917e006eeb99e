#pragma once

#include <cstdint>
#include <random>

namespace mvpg {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Fixed stream ids. Each consumer of randomness in a run owns one stream, so an
// algorithm that draws extra numbers never shifts the environment's noise.
enum class Stream : std::uint64_t {
    Environment = 1,
    Policy = 2,
    BlockSelection = 3,
    OutputSelection = 4,
    Evaluation = 5,
};

// Bit-reproducible uniform source: mt19937_64 plus a hand-rolled 53-bit
// conversion (std::uniform_real_distribution is not portable across libraries).
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : engine_(seed) {}

    RngStream(std::uint64_t root_seed, Stream id)
        : engine_(splitmix64(root_seed ^ splitmix64(static_cast<std::uint64_t>(id)))) {}

    // Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace mvpg
