#pragma once

#include <cstdint>
#include <random>

namespace ntk {

std::uint64_t splitmix64(std::uint64_t x);

// Deterministic stream keyed by (master_seed, stream_id). Normals and
// uniforms are generated here rather than through <random> distributions so
// that draws are identical across standard library implementations.
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_id);

    std::uint64_t master_seed() const { return master_; }
    std::uint64_t stream_id() const { return stream_; }

    std::uint64_t next_u64() { return engine_(); }
    double uniform();  // [0, 1)
    double normal();
    int rademacher() { return (engine_() >> 63) ? 1 : -1; }

    RngStream derive(std::uint64_t child_id) const;

private:
    std::uint64_t master_;
    std::uint64_t stream_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace ntk
