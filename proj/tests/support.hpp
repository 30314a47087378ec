#pragma once

#include "finray/error.hpp"
#include "finray/rng.hpp"
#include "finray/tactile.hpp"

#include <string>

namespace finray::testing {

// Random gradual-release spec: minimum between 35% and 80% of the stable
// force, dips deep enough to flatten at the minimum, noise up to 5% of the
// stable force.
inline TraceSpec random_trace_spec(std::uint64_t i, std::uint64_t seed = 2024) {
    const CounterRng r(seed, "test/trace-specs");
    TraceSpec s;
    s.stable_force = r.uniform(i, 0, 3.0, 8.0);
    s.oscillation_min = s.stable_force * r.uniform(i, 1, 0.35, 0.8);
    s.oscillation_amplitude = (s.stable_force - s.oscillation_min) * r.uniform(i, 2, 1.5, 2.5);
    s.oscillation_period = r.uniform(i, 3, 4.0, 8.0);
    s.oscillation_duration = 3.0 * s.oscillation_period;
    s.noise_sigma = s.stable_force * r.uniform(i, 4, 0.0, 0.05);
    s.seed = 1000 + i;
    return s;
}

template <class F>
std::string error_name(F&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.name();
    }
    return "none";
}

} // namespace finray::testing
