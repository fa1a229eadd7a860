#pragma once

#include <stdexcept>

namespace tcm {

/// Prior (temporal coherence) noise, diagonal in the frame of the source
/// channel's direction.
struct PriorParams {
    double sigma_x_L = 0.6;  // jumps
    double sigma_x_T = 0.3;
    double sigma_v_L = 0.8;  // jps
    double sigma_v_T = 0.4;

    /// `allow_zero` admits degenerate (zero) covariances, which the
    /// finite-difference engine handles but the kernel engine cannot.
    void validate(bool allow_zero = false) const {
        const bool ok = allow_zero ? (sigma_x_L >= 0 && sigma_x_T >= 0 && sigma_v_L >= 0 && sigma_v_T >= 0)
                                   : (sigma_x_L > 0 && sigma_x_T > 0 && sigma_v_L > 0 && sigma_v_T > 0);
        if (!ok) throw std::invalid_argument("prior sigmas must be positive");
    }
};

enum class DriftScheme { central, upwind };

/// Boundary treatment on the speed axis. Directions are always periodic.
enum class SpeedBoundary { periodic, no_flux };

/// How the drift-compensating normalization term is spread over a node's
/// channels. `uniform` adds (1/M) sum_nu div(v_nu alpha_nu) to every channel;
/// `proportional` adds alpha_mu times the same total, which is the first-order
/// limit of per-node renormalization and never drives a channel negative.
enum class NormalizationTerm { proportional, uniform };

struct PdeOptions {
    DriftScheme drift = DriftScheme::upwind;
    NormalizationTerm normalization = NormalizationTerm::proportional;
    SpeedBoundary speed_boundary = SpeedBoundary::periodic;
    bool enable_drift = true;       // drift and its normalization term
    bool enforce_stability = true;  // reject time steps above the von Neumann bound
    int threads = 1;
};

}  // namespace tcm
