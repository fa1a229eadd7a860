#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "tcm/detail/parallel.hpp"
#include "tcm/errors.hpp"
#include "tcm/field.hpp"
#include "tcm/geometry.hpp"
#include "tcm/prediction/params.hpp"

namespace tcm {

/// Discrete Gaussian-kernel prediction over one interval `delta`.
///
/// Every (source node, channel nu) sends its probability along
/// delta * v_nu with an oriented positional Gaussian, sampled on the lattice
/// and normalized per source so transport conserves mass and keeps a uniform
/// field uniform. Velocity mixing uses the Gaussian G(v_mu - v_nu; Sigma_v)
/// weighted by the polar cell area s_nu and normalized over nu, i.e. a
/// quadrature of the continuous velocity convolution. The result is
/// normalized per node (the K(x) factor). With `scale_covariances` both
/// covariances are multiplied by delta, matching the diffusion limit the
/// finite-difference engine integrates.
class KernelPredictor {
public:
    KernelPredictor(const SpatialLattice& lattice, const VelocityGrid& vgrid, const PriorParams& params, double delta,
                    bool scale_covariances, int threads = 1)
        : lattice_(lattice), vgrid_(vgrid), threads_(threads), delta_(delta) {
        params.validate();
        if (!(delta > 0)) throw std::invalid_argument("prediction interval must be positive");
        const double scale = scale_covariances ? std::sqrt(delta) : 1.0;
        build_transport(params.sigma_x_L * scale, params.sigma_x_T * scale);
        build_mixing(params.sigma_v_L * scale, params.sigma_v_T * scale);
    }

    double delta() const { return delta_; }

    ProbabilityField operator()(const ProbabilityField& alpha) const {
        const std::size_t m = vgrid_.size();
        const std::size_t n = lattice_.size();
        if (alpha.nodes() != n || alpha.channels() != m) {
            throw std::invalid_argument("probability field does not match lattice and velocity grid");
        }
        // Transport each channel: gather from the sources whose kernels reach x.
        ChannelField moved(n, m);
        const int w = lattice_.width();
        const int h = lattice_.height();
        detail::parallel_for(n, threads_, [&](std::size_t x) {
            const int c = lattice_.col(static_cast<int>(x));
            const int r = lattice_.row(static_cast<int>(x));
            auto out = moved.node(x);
            const auto& tables = transport_[static_cast<std::size_t>(r & 1)];
            for (std::size_t nu = 0; nu < m; ++nu) {
                double acc = 0.0;
                for (const Offset& o : tables[nu]) {
                    const int rs = ((r - o.dr) % h + h) % h;
                    const int cs = ((c - o.dc) % w + w) % w;
                    acc += o.weight * alpha(static_cast<std::size_t>(rs * w + cs), nu);
                }
                out[nu] = acc;
            }
        });

        ProbabilityField result(n, m);
        result.time = alpha.time + delta_;
        detail::parallel_for(n, threads_, [&](std::size_t x) {
            auto src = moved.node(x);
            auto out = result.node(x);
            double k = 0.0;
            for (std::size_t mu = 0; mu < m; ++mu) {
                double acc = 0.0;
                const double* row = mixing_.data() + mu * m;
                for (std::size_t nu = 0; nu < m; ++nu) acc += row[nu] * src[nu];
                out[mu] = acc;
                k += acc;
            }
            if (!(k > 1e-300)) throw DegenerateUpdate("kernel prediction left node " + std::to_string(x) + " empty");
            for (double& v : out) v /= k;
        });
        return result;
    }

private:
    struct Offset {
        int dc;
        int dr;
        double weight;
    };

    // Gather tables indexed by the target row parity: source = target - (dc, dr).
    void build_transport(double sigma_l, double sigma_t) {
        const std::size_t m = vgrid_.size();
        for (auto& t : transport_) t.assign(m, {});
        const double radius = 4.0 * std::max(sigma_l, sigma_t) + delta_ * vgrid_.s_max() + 1.0;
        const int max_dr = static_cast<int>(std::ceil(radius / kRowPitch)) + 1;
        const int max_dc = static_cast<int>(std::ceil(radius)) + 1;
        for (std::size_t nu = 0; nu < m; ++nu) {
            const auto& ch = vgrid_[nu];
            const Vec2 shift = delta_ * ch.velocity;
            for (int parity = 0; parity < 2; ++parity) {  // source row parity
                std::vector<Offset> entries;
                std::vector<double> expo;
                for (int dr = -max_dr; dr <= max_dr; ++dr) {
                    const int target_parity = ((parity + dr) % 2 + 2) % 2;
                    for (int dc = -max_dc; dc <= max_dc; ++dc) {
                        const Vec2 d{dc + 0.5 * (target_parity - parity), dr * kRowPitch};
                        const Vec2 off = d - shift;
                        if (off.norm() > radius) continue;
                        entries.push_back({dc, dr, 0.0});
                        expo.push_back(-0.5 * oriented_quadratic(off, ch.direction, sigma_l, sigma_t));
                    }
                }
                // Shift exponents so the nearest sample never underflows; a
                // vanishing covariance then degrades to nearest-node transport.
                const double top = *std::max_element(expo.begin(), expo.end());
                double total = 0.0;
                for (std::size_t k = 0; k < entries.size(); ++k) {
                    entries[k].weight = std::exp(expo[k] - top);
                    total += entries[k].weight;
                }
                for (auto& e : entries) {
                    if (e.weight < 1e-12) continue;  // negligible tail
                    e.weight /= total;
                    const int target_parity = ((parity + e.dr) % 2 + 2) % 2;
                    transport_[static_cast<std::size_t>(target_parity)][nu].push_back(e);
                }
            }
        }
    }

    void build_mixing(double sigma_l, double sigma_t) {
        const std::size_t m = vgrid_.size();
        mixing_.assign(m * m, 0.0);
        for (std::size_t mu = 0; mu < m; ++mu) {
            double total = 0.0;
            for (std::size_t nu = 0; nu < m; ++nu) {
                const auto& src = vgrid_[nu];
                const double q = oriented_quadratic(vgrid_[mu].velocity - src.velocity, src.direction, sigma_l, sigma_t);
                const double g = src.speed * std::exp(-0.5 * q);
                mixing_[mu * m + nu] = g;
                total += g;
            }
            for (std::size_t nu = 0; nu < m; ++nu) mixing_[mu * m + nu] /= total;
        }
    }

    SpatialLattice lattice_;
    VelocityGrid vgrid_;
    int threads_;
    double delta_;
    std::array<std::vector<std::vector<Offset>>, 2> transport_;  // [target parity][nu]
    std::vector<double> mixing_;  // row mu: weights over source channels nu
};

inline ProbabilityField predict_kernel(const ProbabilityField& alpha, const SpatialLattice& lattice,
                                       const VelocityGrid& vgrid, const PriorParams& params, double delta,
                                       bool scale_covariances, int threads = 1) {
    return KernelPredictor(lattice, vgrid, params, delta, scale_covariances, threads)(alpha);
}

}  // namespace tcm
