#include "ddsde/rng.hpp"

#include <cmath>
#include <numbers>

namespace ddsde {

double RngStream::uniform_open() noexcept {
    // 53 random bits, offset by half an ulp so 0 and 1 are never returned.
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() noexcept {
    if (has_spare_) {
        has_spare_ = false;
        return spare_normal_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform_open();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_normal_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

double RngStream::exponential() noexcept { return -std::log(uniform_open()); }

} // namespace ddsde
