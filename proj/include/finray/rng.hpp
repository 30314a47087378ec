#pragma once

#include <cstdint>
#include <string_view>

namespace finray {

/// Counter-based generator. Every draw is a pure function of
/// (seed, stream, index, lane), so a parallel loop over `index` gives the
/// same numbers for any thread count.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream);
    CounterRng(std::uint64_t seed, std::string_view stream_name);

    std::uint64_t bits(std::uint64_t index, std::uint32_t lane) const;
    /// Uniform on the open interval (0, 1).
    double uniform(std::uint64_t index, std::uint32_t lane) const;
    double uniform(std::uint64_t index, std::uint32_t lane, double lo, double hi) const;
    /// Standard normal via Box-Muller; consumes lanes 2*lane and 2*lane+1.
    double normal(std::uint64_t index, std::uint32_t lane) const;

    std::uint64_t key() const { return key_; }

private:
    std::uint64_t key_;
};

/// Sequential view over one index of a CounterRng: successive calls walk the
/// lanes. Handy where the draw count per item is not fixed.
class RngCursor {
public:
    RngCursor(const CounterRng& rng, std::uint64_t index) : rng_(rng), index_(index) {}

    double uniform() { return rng_.uniform(index_, lane_++); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal() { return rng_.normal(index_, normal_lane_++ + (1u << 20)); }

private:
    const CounterRng& rng_;
    std::uint64_t index_;
    std::uint32_t lane_ = 0;
    std::uint32_t normal_lane_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t stream_id(std::string_view name);

} // namespace finray
