#pragma once

#include <cstdint>

namespace riskcert {

// Counter-based splittable generator: the stream for (seed, index) depends
// only on that pair, so parallel schedules cannot change any draw. The
// state update and output mixing follow splitmix64.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed) : state_(mix(seed)) {}
    RngStream(std::uint64_t master_seed, std::uint64_t stream_index)
        : state_(mix(master_seed ^ mix(stream_index + 0x632be59bd9b4e019ULL))) {}

    std::uint64_t next_u64();
    double next_unit();  // uniform in [0, 1)
    bool bernoulli(double p) { return next_unit() < p; }
    std::int64_t binomial(std::int64_t n, double p);
    double normal();
    double gamma(double shape);
    double beta(double a, double b);

  private:
    static std::uint64_t mix(std::uint64_t z);
    std::uint64_t state_;
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

}  // namespace riskcert
