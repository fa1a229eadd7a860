#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "tcm/field.hpp"
#include "tcm/geometry.hpp"

namespace tcm {

/// Column-normalized velocity tuning curves: entry (i, mu) is f_i(v_mu).
class TuningMatrix {
public:
    TuningMatrix(std::size_t m, std::vector<double> entries, double sigma_L, double sigma_T)
        : m_(m), entries_(std::move(entries)), sigma_L_(sigma_L), sigma_T_(sigma_T) {}

    std::size_t size() const { return m_; }
    double operator()(std::size_t i, std::size_t mu) const { return entries_[i * m_ + mu]; }
    double sigma_L() const { return sigma_L_; }
    double sigma_T() const { return sigma_T_; }

    /// Longitudinal variance is expected to be at least the transverse one;
    /// callers may warn when it is not.
    bool anisotropy_inverted() const { return sigma_L_ < sigma_T_; }

    double min_entry() const { return *std::min_element(entries_.begin(), entries_.end()); }

private:
    std::size_t m_;
    std::vector<double> entries_;
    double sigma_L_;
    double sigma_T_;
};

inline TuningMatrix tuning_matrix(const VelocityGrid& vgrid, double sigma_L, double sigma_T) {
    if (!(sigma_L > 0 && sigma_T > 0)) throw std::invalid_argument("likelihood sigmas must be positive");
    const std::size_t m = vgrid.size();
    std::vector<double> f(m * m);
    for (std::size_t mu = 0; mu < m; ++mu) {
        const auto& target = vgrid[mu];
        double total = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double q = oriented_quadratic(vgrid[i].velocity - target.velocity, target.direction, sigma_L, sigma_T);
            f[i * m + mu] = std::exp(-0.5 * q);
            total += f[i * m + mu];
        }
        for (std::size_t i = 0; i < m; ++i) f[i * m + mu] /= total;
    }
    return TuningMatrix(m, std::move(f), sigma_L, sigma_T);
}

/// Per-node likelihood L_mu(x) = sum_i phi_i(x) f_i(v_mu).
inline ChannelField evaluate(const ChannelField& phi, const TuningMatrix& F) {
    const std::size_t m = F.size();
    if (phi.channels() != m) throw std::invalid_argument("measurement field and tuning matrix disagree on channel count");
    ChannelField out(phi.nodes(), m);
    for (std::size_t x = 0; x < phi.nodes(); ++x) {
        auto p = phi.node(x);
        auto l = out.node(x);
        for (std::size_t i = 0; i < m; ++i) {
            const double pi = p[i];
            if (pi == 0.0) continue;
            for (std::size_t mu = 0; mu < m; ++mu) l[mu] += pi * F(i, mu);
        }
    }
    return out;
}

}  // namespace tcm
