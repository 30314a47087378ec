#include "finray/rng.hpp"

#include <cmath>
#include <numbers>

namespace finray {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t stream_id(std::string_view name) {
    // FNV-1a
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : name) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : key_(splitmix64(splitmix64(seed) ^ (stream * 0xd6e8feb86659fd93ULL))) {}

CounterRng::CounterRng(std::uint64_t seed, std::string_view stream_name)
    : CounterRng(seed, stream_id(stream_name)) {}

std::uint64_t CounterRng::bits(std::uint64_t index, std::uint32_t lane) const {
    std::uint64_t h = splitmix64(key_ ^ splitmix64(index));
    return splitmix64(h + 0x632be59bd9b4e019ULL * (static_cast<std::uint64_t>(lane) + 1));
}

double CounterRng::uniform(std::uint64_t index, std::uint32_t lane) const {
    // 53 random bits, shifted off zero
    return (static_cast<double>(bits(index, lane) >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::uniform(std::uint64_t index, std::uint32_t lane, double lo, double hi) const {
    return lo + (hi - lo) * uniform(index, lane);
}

double CounterRng::normal(std::uint64_t index, std::uint32_t lane) const {
    double u1 = uniform(index, 2 * lane);
    double u2 = uniform(index, 2 * lane + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

} // namespace finray
