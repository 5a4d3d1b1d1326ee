#include "rng.hpp"

#include <cmath>
#include <stdexcept>

#include "stats.hpp"

namespace etsim {
namespace {

uint64_t splitmix64(uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

RngStream::RngStream(uint64_t master_seed, uint64_t stream_id) {
    uint64_t x = master_seed ^ (stream_id * 0x9e3779b97f4a7c15ULL + 0x6a09e667f3bcc909ULL);
    for (auto& w : s_) w = splitmix64(x);
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;  // xoshiro state must be nonzero
}

uint64_t RngStream::next_u64() {
    const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double RngStream::uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

long RngStream::uniform_int(long lo, long hi) {
    if (lo > hi) throw std::invalid_argument("uniform_int: lo > hi");
    const auto span = static_cast<unsigned long>(hi - lo) + 1UL;
    auto k = static_cast<unsigned long>(uniform01() * static_cast<double>(span));
    if (k >= span) k = span - 1;  // guards the u -> 1 rounding edge
    return lo + static_cast<long>(k);
}

double RngStream::normal(double mean, double sd) {
    // Inverse-CDF transform keeps the draw a pure function of the stream position.
    const double u = (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;  // (0, 1)
    return mean + sd * norm_inv_cdf(u);
}

double RngStream::lognormal(double meanlog, double sdlog) {
    return std::exp(normal(meanlog, sdlog));
}

bool RngStream::bernoulli(double p) { return uniform01() < p; }

}  // namespace etsim
