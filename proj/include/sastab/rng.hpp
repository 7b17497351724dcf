#pragma once

#include <cstdint>
#include <random>

namespace sastab {

/// Seeded generator with deterministic child streams.
///
/// A stream is fully determined by (seed, stream index); copying an Rng
/// copies its position, so two copies produce identical draws.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform on [0, 1).
    double uniform();
    double uniform(double lo, double hi);
    double normal();

    /// Independent stream keyed by `index`; does not advance this generator.
    Rng split(std::uint64_t index) const;

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

    friend bool operator==(const Rng& a, const Rng& b) {
        return a.engine_ == b.engine_ && a.normal_ == b.normal_;
    }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_;
};

std::uint64_t splitmix64(std::uint64_t x);

} // namespace sastab
