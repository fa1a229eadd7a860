#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "tcm/detail/parallel.hpp"
#include "tcm/field.hpp"
#include "tcm/geometry.hpp"

namespace tcm {

struct Dot {
    Vec2 position;  // jumps
    Vec2 velocity;  // jps

    friend bool operator==(const Dot&, const Dot&) = default;
};

/// Receptive-field parameters of the measurement-layer cells. Both
/// covariances are diagonal in the frame of the cell's preferred direction.
struct MeasurementParams {
    double sigma_x_L = 0.8;  // jumps
    double sigma_x_T = 0.4;
    double sigma_v_L = 3.2;  // jps
    double sigma_v_T = 2.6;
    double floor_eps = 1e-3;  // relative to the peak response of a centered, tuned dot
    double cutoff_radius = 2.0;  // jumps

    void validate() const {
        if (!(sigma_x_L > 0 && sigma_x_T > 0 && sigma_v_L > 0 && sigma_v_T > 0)) {
            throw std::invalid_argument("measurement sigmas must be positive");
        }
        if (!(floor_eps > 0)) throw std::invalid_argument("measurement floor_eps must be positive");
        if (!(cutoff_radius >= 0)) throw std::invalid_argument("measurement cutoff_radius must be >= 0");
    }
};

using MeasurementField = ChannelField;

/// Normalized observation activities phi for one frame of dots.
///
/// Raw activity is floor_eps plus, for every dot within cutoff_radius of the
/// node, the product of an oriented spatial Gaussian and an oriented velocity
/// Gaussian (both unit height). Dots superpose additively; each node is then
/// normalized to sum one.
inline MeasurementField respond(std::span<const Dot> frame, const SpatialLattice& lattice,
                                const VelocityGrid& vgrid, const MeasurementParams& params,
                                int threads = 1) {
    params.validate();
    const std::size_t m = vgrid.size();
    if (m == 0) throw std::invalid_argument("empty velocity grid");
    for (const Dot& d : frame) {
        if (!std::isfinite(d.position.x) || !std::isfinite(d.position.y) || !std::isfinite(d.velocity.x) ||
            !std::isfinite(d.velocity.y)) {
            throw std::invalid_argument("dot position and velocity must be finite");
        }
    }

    // Velocity tuning depends only on (dot, channel).
    std::vector<double> tuning(frame.size() * m);
    for (std::size_t k = 0; k < frame.size(); ++k) {
        for (std::size_t mu = 0; mu < m; ++mu) {
            const auto& ch = vgrid[mu];
            const double q = oriented_quadratic(frame[k].velocity - ch.velocity, ch.direction, params.sigma_v_L,
                                                params.sigma_v_T);
            tuning[k * m + mu] = std::exp(-0.5 * q);
        }
    }

    MeasurementField phi(lattice.size(), m);
    const double r2 = params.cutoff_radius * params.cutoff_radius;
    detail::parallel_for(lattice.size(), threads, [&](std::size_t i) {
        auto out = phi.node(i);
        for (double& v : out) v = params.floor_eps;
        const Vec2 x = lattice.position(static_cast<int>(i));
        for (std::size_t k = 0; k < frame.size(); ++k) {
            const Vec2 d = lattice.displacement(x, frame[k].position);
            if (d.dot(d) > r2) continue;
            for (std::size_t mu = 0; mu < m; ++mu) {
                const auto& ch = vgrid[mu];
                const double q = oriented_quadratic(d, ch.direction, params.sigma_x_L, params.sigma_x_T);
                out[mu] += std::exp(-0.5 * q) * tuning[k * m + mu];
            }
        }
        double total = 0.0;
        for (double v : out) total += v;
        for (double& v : out) v /= total;
    });
    return phi;
}

}  // namespace tcm
