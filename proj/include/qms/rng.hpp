// rng.hpp — counter-based deterministic random stream for reproducible trajectories.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace qms {

// SplitMix64 finalizer.  Statistically solid for simulation use and, unlike a
// stateful engine, a pure function of (seed, stream, counter): any draw can be
// reproduced from its coordinates alone, which is what makes trajectory
// records replayable in isolation.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : seed_(seed), stream_(stream), counter_(0) {}

    // Jump directly to a (stream, counter) coordinate.
    void reset(std::uint64_t stream, std::uint64_t counter = 0) {
        stream_ = stream;
        counter_ = counter;
    }

    std::uint64_t next_u64() {
        std::uint64_t mixed = splitmix64(seed_ ^ splitmix64(stream_ ^ 0x5851f42d4c957f2dULL));
        return splitmix64(mixed ^ counter_++);
    }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Index sampled proportionally to the given nonnegative weights.
    std::size_t sample_discrete(const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights) {
            if (w < 0.0) throw std::invalid_argument("sample_discrete: negative weight");
            total += w;
        }
        if (total <= 0.0) throw std::invalid_argument("sample_discrete: all weights zero");
        double u = uniform() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            acc += weights[i];
            if (u < acc) return i;
        }
        return weights.size() - 1;
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }
    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_;
};

}  // namespace qms
