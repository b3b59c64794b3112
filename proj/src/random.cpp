#include "nudge/random.hpp"

#include <cmath>
#include <numbers>

namespace nudge {

// Box-Muller, one variate per call. Avoids std::normal_distribution, whose
// output is implementation-defined.
double standard_normal(Rng& rng) {
    double u1 = uniform01(rng);
    while (u1 <= 0.0) {
        u1 = uniform01(rng);
    }
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

} // namespace nudge
