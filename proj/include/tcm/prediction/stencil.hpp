#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "tcm/geometry.hpp"
#include "tcm/prediction/params.hpp"

namespace tcm::detail {

/// Weights w_k on the three lattice axes e_0 (0 deg), e_1 (60 deg),
/// e_2 (120 deg) such that sum_k w_k e_k e_k^T equals the diffusion tensor
/// D = Sigma_x / 2 oriented along `angle`. The discrete operator is then
/// sum_k w_k (u(x+e_k) + u(x-e_k) - 2u(x)), exact on quadratics.
inline std::array<double, 3> hex_diffusion_weights(double angle, double sigma_l, double sigma_t) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const double vl = 0.5 * sigma_l * sigma_l;
    const double vt = 0.5 * sigma_t * sigma_t;
    const double dxx = vl * c * c + vt * s * s;
    const double dyy = vl * s * s + vt * c * c;
    const double dxy = (vl - vt) * c * s;
    const double r3 = std::numbers::sqrt3;
    return {dxx - dyy / 3.0, 2.0 * dyy / 3.0 + 2.0 * dxy / r3, 2.0 * dyy / 3.0 - 2.0 * dxy / r3};
}

/// A velocity split onto the two neighbor directions that bracket it, with
/// non-negative coefficients: v = coef[0] * u_slot[0] + coef[1] * u_slot[1].
struct DriftSplit {
    std::array<int, 2> slot{};
    std::array<double, 2> coef{};

    double total() const { return coef[0] + coef[1]; }
};

inline DriftSplit bracket_drift(double speed, double angle) {
    const double sector = std::numbers::pi / 3.0;
    double phi = std::fmod(angle, 2.0 * std::numbers::pi);
    if (phi < 0) phi += 2.0 * std::numbers::pi;
    int j = static_cast<int>(std::floor(phi / sector + 1e-9));
    double local = std::max(0.0, phi - j * sector);
    j %= 6;
    if (local < 1e-12) local = 0.0;
    const double sin60 = std::sin(sector);
    DriftSplit d;
    d.slot = {j, (j + 1) % 6};
    d.coef = {speed * std::sin(sector - local) / sin60, speed * std::sin(local) / sin60};
    if (d.coef[1] < 1e-12 * speed) d.coef[1] = 0.0;
    if (d.coef[0] < 1e-12 * speed) d.coef[0] = 0.0;
    return d;
}

}  // namespace tcm::detail
