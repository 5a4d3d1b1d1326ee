#pragma once

#include <array>
#include <cstdint>

namespace etsim {

// Deterministic random stream addressed by (master_seed, stream_id).
// The xoshiro256++ state is derived from the pair with splitmix64, so a
// stream can be constructed on any thread, in any order, and still yield
// the same sequence. A stream must not be shared between threads.
class RngStream {
public:
    RngStream(uint64_t master_seed, uint64_t stream_id);

    uint64_t next_u64();
    double uniform01();                   // [0, 1)
    double uniform(double lo, double hi);
    long uniform_int(long lo, long hi);   // inclusive bounds
    double normal(double mean, double sd);
    double lognormal(double meanlog, double sdlog);
    bool bernoulli(double p);

private:
    std::array<uint64_t, 4> s_;
};

}  // namespace etsim
