#pragma once

#include <array>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "tcm/detail/parallel.hpp"
#include "tcm/errors.hpp"
#include "tcm/field.hpp"
#include "tcm/geometry.hpp"
#include "tcm/prediction/params.hpp"
#include "tcm/prediction/stability.hpp"
#include "tcm/prediction/stencil.hpp"

namespace tcm {

/// Explicit finite-difference solver for the per-node Kolmogorov forward
/// equation. One step evaluates, from the same input field:
///   1. the polar velocity operator on p~ = s * alpha (4 velocity neighbors),
///   2. oriented spatial diffusion plus drift over the 6 hex neighbors,
///   3. the normalization term sum_nu div(v_nu alpha_nu), spread over the
///      node's channels per PdeOptions::normalization,
/// then renormalizes each node. Directions are periodic; the speed axis is
/// periodic or no-flux per PdeOptions.
class PdeSolver {
public:
    PdeSolver(const SpatialLattice& lattice, const VelocityGrid& vgrid, const PriorParams& params, double dt,
              PdeOptions options = {})
        : lattice_(lattice), vgrid_(vgrid), params_(params), dt_(dt), options_(options) {
        params.validate(true);
        if (!(dt > 0)) throw std::invalid_argument("time step must be positive");
        stability_ = stability_analysis(params, lattice, vgrid, options);
        if (options.enforce_stability && dt > stability_.max_dt) {
            std::ostringstream os;
            os << "time step " << dt << " s exceeds stability bound " << stability_.max_dt << " s";
            throw StabilityViolation(os.str());
        }
        build_velocity_stencil();
        build_spatial_stencil();
    }

    double dt() const { return dt_; }
    const StabilityReport& stability() const { return stability_; }
    const SpatialLattice& lattice() const { return lattice_; }
    const VelocityGrid& velocity_grid() const { return vgrid_; }

    /// One explicit step of length `dt` (at most the configured step).
    void step(ProbabilityField& alpha, double dt) const {
        check_shape(alpha);
        if (!(dt > 0) || dt > dt_ * (1 + 1e-12)) throw std::invalid_argument("substep must lie in (0, dt]");
        const std::size_t m = vgrid_.size();
        const std::size_t n = lattice_.size();
        std::vector<double> next(n * m);
        const auto& in = alpha.values();

        detail::parallel_for(n, options_.threads, [&](std::size_t x) {
            const double* a = in.data() + x * m;
            double* out = next.data() + x * m;
            const auto& nb = lattice_.neighbors(static_cast<int>(x));
            double flux_div = 0.0;
            for (std::size_t mu = 0; mu < m; ++mu) {
                double rate = vel_self_[mu] * a[mu];
                for (const auto& [nu, coef] : vel_nb_[mu]) rate += coef * a[nu];

                const auto& sp = spatial_[mu];
                for (int k = 0; k < 3; ++k) {
                    rate += sp.w[k] * (in[nb[k] * m + mu] + in[nb[k + 3] * m + mu] - 2.0 * a[mu]);
                }
                if (options_.enable_drift) {
                    double drift = 0.0;
                    for (int q = 0; q < 2; ++q) {
                        const double b = sp.drift.coef[q];
                        if (b == 0.0) continue;
                        const int j = sp.drift.slot[q];
                        const double behind = in[nb[(j + 3) % 6] * m + mu];
                        drift += sp.upwind ? b * (a[mu] - behind) : 0.5 * b * (in[nb[j] * m + mu] - behind);
                    }
                    rate -= drift;
                    flux_div += drift;
                }
                out[mu] = a[mu] + dt * rate;
            }
            if (options_.enable_drift) {
                if (options_.normalization == NormalizationTerm::uniform) {
                    const double add = dt * flux_div / static_cast<double>(m);
                    for (std::size_t mu = 0; mu < m; ++mu) out[mu] += add;
                } else {
                    double mass = 0.0;
                    for (std::size_t mu = 0; mu < m; ++mu) mass += a[mu];
                    const double rate = dt * flux_div / mass;
                    for (std::size_t mu = 0; mu < m; ++mu) out[mu] += rate * a[mu];
                }
            }
        });

        finish(alpha, next, dt);
    }

    /// Advances by `duration` using ceil(duration / dt) equal substeps.
    void advance(ProbabilityField& alpha, double duration) const {
        if (duration <= 0) return;
        const auto steps = static_cast<long>(std::ceil(duration / dt_ - 1e-9));
        const double h = duration / static_cast<double>(steps);
        for (long k = 0; k < steps; ++k) step(alpha, h);
    }

private:
    struct SpatialStencil {
        std::array<double, 3> w{};
        detail::DriftSplit drift;
        bool upwind = false;
    };

    void check_shape(const ProbabilityField& alpha) const {
        if (alpha.nodes() != lattice_.size() || alpha.channels() != vgrid_.size()) {
            throw std::invalid_argument("probability field does not match lattice and velocity grid");
        }
    }

    // Velocity operator on p~ = s alpha, divided back by s:
    //   1/2 sL^2 d2p~/ds2 - (sL^2 - 1/2 sT^2) d/ds(p~/s) + 1/2 sT^2 / s^2 d2p~/dtheta2.
    // Ghost radii keep their true coordinate so a uniform alpha is stationary.
    void build_velocity_stencil() {
        const std::size_t m = vgrid_.size();
        vel_self_.assign(m, 0.0);
        vel_nb_.assign(m, {});
        const double svl2 = params_.sigma_v_L * params_.sigma_v_L;
        const double svt2 = params_.sigma_v_T * params_.sigma_v_T;
        const double ds = vgrid_.dr();
        const double dth = vgrid_.dtheta();
        const int ns = vgrid_.n_speeds();
        const int nd = vgrid_.n_dirs();
        for (std::size_t mu = 0; mu < m; ++mu) {
            const auto& ch = vgrid_[mu];
            const double s = ch.speed;
            auto add = [&](int si, int di, double coef) {
                const auto nu = static_cast<std::size_t>(vgrid_.index(si, di));
                if (nu == mu) {
                    vel_self_[mu] += coef;
                    return;
                }
                for (auto& e : vel_nb_[mu]) {
                    if (e.first == nu) {
                        e.second += coef;
                        return;
                    }
                }
                vel_nb_[mu].emplace_back(nu, coef);
            };
            auto speed_neighbor = [&](int step) {
                const int si = ch.speed_index + step;
                if (si >= 0 && si < ns) return si;
                return options_.speed_boundary == SpeedBoundary::periodic ? (si + ns) % ns : ch.speed_index;
            };
            const double first = svl2 - 0.5 * svt2;
            add(speed_neighbor(+1), ch.dir_index, (0.5 * svl2 * (s + ds) / (ds * ds) - first / (2 * ds)) / s);
            add(speed_neighbor(-1), ch.dir_index, (0.5 * svl2 * (s - ds) / (ds * ds) + first / (2 * ds)) / s);
            add(ch.speed_index, ch.dir_index, -svl2 / (ds * ds));
            const double ang = 0.5 * svt2 / (s * s * dth * dth);
            add(ch.speed_index, (ch.dir_index + 1) % nd, ang);
            add(ch.speed_index, (ch.dir_index + nd - 1) % nd, ang);
            add(ch.speed_index, ch.dir_index, -2.0 * ang);
        }
    }

    void build_spatial_stencil() {
        spatial_.clear();
        for (const auto& ch : vgrid_.channels()) {
            SpatialStencil st;
            st.w = detail::hex_diffusion_weights(ch.direction, params_.sigma_x_L, params_.sigma_x_T);
            st.drift = detail::bracket_drift(ch.speed, ch.direction);
            st.upwind = options_.drift == DriftScheme::upwind;
            spatial_.push_back(st);
        }
    }

    void finish(ProbabilityField& alpha, std::vector<double>& next, double dt) const {
        const std::size_t m = vgrid_.size();
        auto& out = alpha.values();
        for (std::size_t x = 0; x < lattice_.size(); ++x) {
            double* a = next.data() + x * m;
            double total = 0.0;
            for (std::size_t mu = 0; mu < m; ++mu) {
                const double v = a[mu];
                if (!std::isfinite(v)) {
                    throw StabilityViolation("non-finite probability at node " + std::to_string(x));
                }
                if (v < 0.0) {
                    if (v < -1e-12) {
                        std::ostringstream os;
                        os << "negative probability " << v << " at node " << x << ", channel " << mu
                           << " (dt " << dt << " s)";
                        throw StabilityViolation(os.str());
                    }
                    a[mu] = 0.0;
                }
                total += a[mu];
            }
            if (!(total > 0.0)) throw StabilityViolation("probability mass vanished at node " + std::to_string(x));
            for (std::size_t mu = 0; mu < m; ++mu) out[x * m + mu] = a[mu] / total;
        }
        alpha.time += dt;
    }

    SpatialLattice lattice_;
    VelocityGrid vgrid_;
    PriorParams params_;
    double dt_;
    PdeOptions options_;
    StabilityReport stability_;
    std::vector<double> vel_self_;
    std::vector<std::vector<std::pair<std::size_t, double>>> vel_nb_;
    std::vector<SpatialStencil> spatial_;
};

inline ProbabilityField predict_pde_step(const ProbabilityField& alpha, const SpatialLattice& lattice,
                                         const VelocityGrid& vgrid, const PriorParams& params, double dt,
                                         const PdeOptions& options = {}) {
    PdeSolver solver(lattice, vgrid, params, dt, options);
    ProbabilityField out = alpha;
    solver.step(out, dt);
    return out;
}

}  // namespace tcm
