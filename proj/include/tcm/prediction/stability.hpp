#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "tcm/geometry.hpp"
#include "tcm/prediction/params.hpp"
#include "tcm/prediction/stencil.hpp"

namespace tcm {

/// Explicit-step bounds from a frozen-coefficient von Neumann analysis of
/// the velocity and spatial operators, channel by channel. All values are in
/// seconds; infinity means the term imposes no limit.
struct StabilityReport {
    double velocity_diffusion = std::numeric_limits<double>::infinity();
    double spatial_diffusion = std::numeric_limits<double>::infinity();
    double advection = std::numeric_limits<double>::infinity();
    double max_dt = std::numeric_limits<double>::infinity();
    // Largest step that also keeps the drift normalization term from
    // driving a channel negative; at most max_dt.
    double positivity_dt = std::numeric_limits<double>::infinity();
};

inline StabilityReport stability_analysis(const PriorParams& params, const SpatialLattice& lattice,
                                          const VelocityGrid& vgrid, const PdeOptions& options = {}) {
    (void)lattice;  // unit jump spacing; the bound does not depend on the lattice extent
    params.validate(true);
    constexpr double inf = std::numeric_limits<double>::infinity();
    const double h = 1.0;
    const double ds = vgrid.dr();
    const double dth = vgrid.dtheta();
    const double svl2 = params.sigma_v_L * params.sigma_v_L;
    const double svt2 = params.sigma_v_T * params.sigma_v_T;
    const double sxl2 = params.sigma_x_L * params.sigma_x_L;
    const double sxt2 = params.sigma_x_T * params.sigma_x_T;

    StabilityReport rep;
    double worst_center = 0.0;  // largest total decay rate of a node's own value
    double worst_vel = 0.0;
    double worst_space = 0.0;
    double worst_cfl = 0.0;
    double worst_drift = 0.0;
    double coupling = inf;  // first-derivative vs diffusion limits (2D / c^2)
    for (const auto& ch : vgrid.channels()) {
        const double s = ch.speed;
        double vel = 0.0;
        if (vgrid.n_speeds() > 1) {
            vel += svl2 / (ds * ds);
            // Radial first-derivative term 1/2 sigma_T^2 / s d/ds against diffusion 1/2 sigma_L^2.
            const double c = 0.5 * svt2 / s;
            if (c > 0) coupling = std::min(coupling, svl2 / (c * c));
        }
        if (vgrid.n_dirs() > 1) vel += svt2 / (s * s * dth * dth);
        const double space = (sxl2 + sxt2) / (h * h);
        double cfl = 0.0;
        if (options.enable_drift) {
            if (options.drift == DriftScheme::upwind) {
                cfl = detail::bracket_drift(s, ch.direction).total() / h;
            } else {
                // Central drift is only damped by diffusion along the flow: dt <= 2 D_L / s^2.
                rep.advection = std::min(rep.advection, sxl2 / (s * s));
            }
        }
        worst_vel = std::max(worst_vel, vel);
        worst_space = std::max(worst_space, space);
        worst_cfl = std::max(worst_cfl, cfl);
        if (options.enable_drift) worst_drift = std::max(worst_drift, detail::bracket_drift(s, ch.direction).total());
        worst_center = std::max(worst_center, vel + space + cfl);
    }
    if (worst_vel > 0) rep.velocity_diffusion = std::min(1.0 / worst_vel, coupling);
    if (worst_space > 0) rep.spatial_diffusion = 1.0 / worst_space;
    if (worst_cfl > 0) rep.advection = h / worst_cfl;
    rep.max_dt = std::min({worst_center > 0 ? 1.0 / worst_center : inf, rep.advection, coupling});
    // The normalization term can remove up to dt * sum_nu |b_nu| alpha_nu(behind) / mass
    // of a node, bounded by the largest drift rate since neighbor masses are one.
    const double norm_rate = options.enable_drift ? worst_drift : 0.0;
    rep.positivity_dt = std::min(rep.max_dt, worst_center + norm_rate > 0 ? 1.0 / (worst_center + norm_rate) : inf);
    return rep;
}

inline double stability_max_dt(const PriorParams& params, const SpatialLattice& lattice, const VelocityGrid& vgrid,
                               const PdeOptions& options = {}) {
    return stability_analysis(params, lattice, vgrid, options).max_dt;
}

}  // namespace tcm
