#pragma once

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tcm/estimation.hpp"
#include "tcm/field.hpp"
#include "tcm/harness/config.hpp"
#include "tcm/prediction.hpp"

namespace tcm {

struct ValidationCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;
    bool all_passed() const {
        for (const auto& c : checks)
            if (!c.passed) return false;
        return !checks.empty();
    }
};

struct OracleResult {
    std::vector<double> dts;
    std::vector<double> l1;             // PDE vs kernel, max over nodes
    std::vector<double> kernel_change;  // kernel output vs initial field
};

/// Smooth test field: a spatial Gaussian (sd 2 jumps, centered on the
/// lattice) blending a direction- and speed-tuned distribution into the
/// uniform one.
inline ProbabilityField smooth_test_field(const SpatialLattice& lat, const VelocityGrid& vg) {
    ProbabilityField a(lat.size(), vg.size());
    const Vec2 center{0.5 * lat.width(), 0.5 * lat.height() * kRowPitch};
    const double s_mid = 0.5 * (vg.s_min() + vg.s_max());
    const auto m = static_cast<double>(vg.size());
    for (std::size_t x = 0; x < lat.size(); ++x) {
        const Vec2 d = lat.displacement(center, lat.position(static_cast<int>(x)));
        const double w = 0.8 * std::exp(-d.dot(d) / 8.0);
        auto node = a.node(x);
        double total = 0.0;
        for (std::size_t mu = 0; mu < vg.size(); ++mu) {
            const double ds = vg[mu].speed - s_mid;
            node[mu] = std::exp(2.0 * std::cos(vg[mu].direction) - ds * ds / 8.0);
            total += node[mu];
        }
        for (double& v : node) v = (1.0 - w) / m + w * v / total;
    }
    return a;
}

/// n finite-difference steps against one kernel prediction with scaled
/// covariances over the same total time, for each dt in `dts`.
inline OracleResult oracle_comparison(const ExperimentConfig& c, int n_steps, const std::vector<double>& dts) {
    const SpatialLattice lat = c.lattice();
    const VelocityGrid vg = c.velocity_grid();
    const ProbabilityField a = smooth_test_field(lat, vg);
    OracleResult out;
    for (double dt : dts) {
        PdeOptions opts = c.pde;
        opts.threads = c.threads;
        PdeSolver solver(lat, vg, c.prior, dt, opts);
        ProbabilityField p = a;
        for (int k = 0; k < n_steps; ++k) solver.step(p, dt);
        const ProbabilityField k = predict_kernel(a, lat, vg, c.prior, n_steps * dt, true, c.threads);
        out.dts.push_back(dt);
        out.l1.push_back(max_node_l1(p, k));
        out.kernel_change.push_back(max_node_l1(a, k));
    }
    return out;
}

struct DiffusionResult {
    double measured_rate = 0.0;  // variance growth per second
    double analytic_rate = 0.0;
    double relative_error() const { return std::abs(measured_rate - analytic_rate) / analytic_rate; }
};

/// Isotropic velocity diffusion of a Gaussian bump on a fine polar grid at a
/// single node. The bump's Cartesian variance per axis should grow at sigma^2.
inline DiffusionResult velocity_diffusion_check(double sigma, double duration = 0.0) {
    if (!(sigma > 0)) throw std::invalid_argument("sigma must be positive");
    const int n_dirs = 120;
    const int n_speeds = 64;
    const double dr = 0.25;
    const VelocityGrid vg(n_dirs, n_speeds, 2.0 * std::numbers::pi / n_dirs, dr, dr);
    const SpatialLattice lat(1, 1);
    const Vec2 v0{9.0, 0.0};
    const double var0 = 1.0;
    if (duration <= 0) duration = 1.0 / (sigma * sigma);  // variance grows by 1

    ProbabilityField a(1, vg.size());
    for (std::size_t mu = 0; mu < vg.size(); ++mu) {
        const Vec2 d = vg[mu].velocity - v0;
        a(0, mu) = std::exp(-d.dot(d) / (2 * var0));
    }
    normalize_nodes(a);

    auto variance = [&](const ProbabilityField& f) {
        // alpha is a density in velocity space: cell mass is alpha * s.
        double mass = 0.0;
        Vec2 mean;
        for (std::size_t mu = 0; mu < vg.size(); ++mu) {
            const double w = f(0, mu) * vg[mu].speed;
            mass += w;
            mean += w * vg[mu].velocity;
        }
        mean = (1.0 / mass) * mean;
        double var = 0.0;
        for (std::size_t mu = 0; mu < vg.size(); ++mu) {
            const Vec2 d = vg[mu].velocity - mean;
            var += f(0, mu) * vg[mu].speed * d.dot(d);
        }
        return 0.5 * var / mass;  // per axis
    };

    PriorParams p{0.0, 0.0, sigma, sigma};
    PdeOptions opts;
    opts.enable_drift = false;
    opts.speed_boundary = SpeedBoundary::no_flux;
    const double dt = 0.5 * stability_max_dt(p, lat, vg, opts);
    PdeSolver solver(lat, vg, p, dt, opts);
    const double before = variance(a);
    solver.advance(a, duration);
    return {(variance(a) - before) / duration, sigma * sigma};
}

/// Spatial diffusion of a Gaussian bump on the hex lattice. Two opposite
/// channels share one diffusion tensor, so their sum stays one and node
/// renormalization is inert. Returns the rates along x and y.
inline std::pair<DiffusionResult, DiffusionResult> spatial_diffusion_check(double sigma_l, double sigma_t,
                                                                           double duration = 1.0) {
    const SpatialLattice lat(48, 48);
    const VelocityGrid vg(2, 1, std::numbers::pi, 1.0, 1.0);
    const Vec2 center{24.0, 24.0 * kRowPitch};
    const double var0 = 4.0;
    ProbabilityField a(lat.size(), vg.size());
    for (std::size_t x = 0; x < lat.size(); ++x) {
        const Vec2 d = lat.displacement(center, lat.position(static_cast<int>(x)));
        const double b = 0.8 * std::exp(-d.dot(d) / (2 * var0));
        a(x, 0) = 0.1 + b;
        a(x, 1) = 0.9 - b;
    }
    auto moments = [&](const ProbabilityField& f) {
        double mass = 0.0;
        Vec2 m2;
        for (std::size_t x = 0; x < lat.size(); ++x) {
            const Vec2 d = lat.displacement(center, lat.position(static_cast<int>(x)));
            const double w = f(x, 0) - 0.1;
            mass += w;
            m2 += w * Vec2{d.x * d.x, d.y * d.y};
        }
        return (1.0 / mass) * m2;
    };
    PriorParams p{sigma_l, sigma_t, 0.0, 0.0};
    PdeOptions opts;
    opts.enable_drift = false;
    const double dt = 0.5 * stability_max_dt(p, lat, vg, opts);
    PdeSolver solver(lat, vg, p, dt, opts);
    const Vec2 before = moments(a);
    solver.advance(a, duration);
    const Vec2 after = moments(a);
    // channel 0 points along +x, so longitudinal = x
    return {{(after.x - before.x) / duration, sigma_l * sigma_l}, {(after.y - before.y) / duration, sigma_t * sigma_t}};
}

struct AdvectionResult {
    double expected = 0.0;  // jumps
    double peak_displacement = 0.0;
};

/// Zero covariances, drift only: a bump on the (speed, 0 deg) channel should
/// travel speed * duration. The normalization term slows a bump of height a
/// to speed * (1 - a), so the bump is kept small (50% above uniform).
inline AdvectionResult advection_check(const ExperimentConfig& c, double duration = 1.0) {
    const SpatialLattice lat(32, 8);
    const VelocityGrid vg = c.velocity_grid();
    std::size_t mu0 = 0;
    for (std::size_t mu = 0; mu < vg.size(); ++mu)
        if (vg[mu].dir_index == 0 && std::abs(vg[mu].speed - 6.0) < std::abs(vg[mu0].speed - 6.0)) mu0 = mu;
    const double speed = vg[mu0].speed;
    const int start = lat.index(4, 4);
    ProbabilityField a = ProbabilityField::uniform(lat.size(), vg.size());
    a(static_cast<std::size_t>(start), mu0) *= 1.5;
    normalize_nodes(a);
    PdeOptions opts = c.pde;
    opts.drift = DriftScheme::upwind;
    const PriorParams zero{0.0, 0.0, 0.0, 0.0};
    const double dt = 0.5 * stability_max_dt(zero, lat, vg, opts);
    PdeSolver solver(lat, vg, zero, dt, opts);
    solver.advance(a, duration);
    const PeakLocation peak = peak_track(a, lat);
    const Vec2 d = peak.position - lat.position(start);
    return {speed * duration, std::remainder(d.x, lat.extent().x)};
}

/// Largest deviation from 1/M after a uniform field goes through both
/// engines and an update with a uniform likelihood.
inline double uniform_roundtrip_error(const ExperimentConfig& c) {
    const SpatialLattice lat = c.lattice();
    const VelocityGrid vg = c.velocity_grid();
    const ProbabilityField u = ProbabilityField::uniform(lat.size(), vg.size());
    ProbabilityField f = predict_kernel(u, lat, vg, c.prior, c.frame_interval, false, c.threads);
    PdeOptions opts = c.pde;
    opts.threads = c.threads;
    PdeSolver(lat, vg, c.prior, c.dt, opts).step(f, c.dt);
    const ChannelField L(lat.size(), vg.size(), 1.0 / static_cast<double>(vg.size()));
    f = update(f, L).alpha;
    return max_node_l1(u, f);
}

/// Runs the oracle comparison and every analytic check on a small config.
inline ValidationReport validate(const ExperimentConfig& c, int oracle_steps = 32, double oracle_dt = 4e-3) {
    if (c.width > 8 || c.height > 8) throw std::invalid_argument("validate needs a lattice of at most 8x8");
    if (c.n_dirs * c.n_speeds > 18) throw std::invalid_argument("validate needs at most 18 velocity channels");
    c.validate();
    ValidationReport rep;
    auto fmt = [](auto&&... parts) {
        std::ostringstream os;
        os.precision(6);
        (os << ... << parts);
        return os.str();
    };

    {
        const auto r = oracle_comparison(c, oracle_steps, {oracle_dt, oracle_dt / 2, oracle_dt / 4});
        bool decreasing = true;
        for (std::size_t i = 1; i < r.l1.size(); ++i) decreasing = decreasing && r.l1[i] < r.l1[i - 1];
        std::string detail = fmt(oracle_steps, " steps;");
        for (std::size_t i = 0; i < r.l1.size(); ++i) {
            detail += fmt(" dt=", r.dts[i], " L1=", r.l1[i], " (kernel change ", r.kernel_change[i], ")");
        }
        rep.checks.push_back({"kernel oracle L1 < 0.05", r.l1.front() < 0.05, detail});
        rep.checks.push_back({"kernel oracle error decreases as dt halves", decreasing, detail});
    }
    {
        const auto v = velocity_diffusion_check(c.prior.sigma_v_L);
        rep.checks.push_back({"velocity diffusion matches heat kernel within 5%", v.relative_error() < 0.05,
                              fmt("rate ", v.measured_rate, " vs ", v.analytic_rate)});
    }
    {
        const auto [lx, ty] = spatial_diffusion_check(c.prior.sigma_x_L, c.prior.sigma_x_T);
        rep.checks.push_back({"spatial diffusion matches heat kernel within 5%",
                              lx.relative_error() < 0.05 && ty.relative_error() < 0.05,
                              fmt("x rate ", lx.measured_rate, " vs ", lx.analytic_rate, "; y rate ",
                                  ty.measured_rate, " vs ", ty.analytic_rate)});
    }
    {
        const auto a = advection_check(c);
        rep.checks.push_back({"advection peak within half a node of v*t",
                              std::abs(a.peak_displacement - a.expected) <= 0.5,
                              fmt("peak moved ", a.peak_displacement, " jumps, expected ", a.expected)});
    }
    {
        const double e = uniform_roundtrip_error(c);
        rep.checks.push_back({"uniform field is a fixed point", e < 1e-12, fmt("max node L1 ", e)});
    }
    return rep;
}

}  // namespace tcm
