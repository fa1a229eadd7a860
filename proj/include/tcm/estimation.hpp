#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tcm/errors.hpp"
#include "tcm/field.hpp"
#include "tcm/geometry.hpp"

namespace tcm {

struct UpdateResult {
    ProbabilityField alpha;
    std::vector<double> confidence;  // per node, the Bayes normalizer N(x)
};

/// Bayes fusion of a prediction with per-node likelihoods. Nodes flagged in
/// `skip` keep their prediction and report confidence 1/M, which is what a
/// uniform likelihood would give.
inline UpdateResult update(const ProbabilityField& prediction, const ChannelField& likelihood,
                           std::span<const char> skip = {}) {
    if (!prediction.same_shape(likelihood)) {
        throw std::invalid_argument("prediction and likelihood fields differ in shape");
    }
    if (!skip.empty() && skip.size() != prediction.nodes()) {
        throw std::invalid_argument("skip mask size does not match node count");
    }
    const std::size_t m = prediction.channels();
    UpdateResult out{prediction, std::vector<double>(prediction.nodes(), 1.0 / static_cast<double>(m))};
    for (std::size_t x = 0; x < prediction.nodes(); ++x) {
        if (!skip.empty() && skip[x]) continue;
        auto p = prediction.node(x);
        auto l = likelihood.node(x);
        auto a = out.alpha.node(x);
        double n = 0.0;
        for (std::size_t mu = 0; mu < m; ++mu) {
            if (!(l[mu] > 0.0)) throw std::invalid_argument("likelihood must be strictly positive");
            a[mu] = p[mu] * l[mu];
            n += a[mu];
        }
        if (!(n >= 1e-300)) {
            throw DegenerateUpdate("prediction and measurement conflict completely at node " + std::to_string(x));
        }
        for (double& v : a) v /= n;
        out.confidence[x] = n;
    }
    return out;
}

/// Kullback-Leibler divergence from the uniform distribution, in nats.
inline double sharpness(std::span<const double> alpha) {
    const std::size_t m = alpha.size();
    if (m == 0) throw std::invalid_argument("empty distribution");
    double total = 0.0;
    double plogp = 0.0;
    for (double a : alpha) {
        total += a;
        if (a > 0.0) plogp += a * std::log(a);
    }
    if (std::abs(total - 1.0) > 1e-6) throw std::invalid_argument("sharpness needs a normalized distribution");
    const double ln_m = std::log(static_cast<double>(m));
    return std::clamp(ln_m + plogp, 0.0, ln_m);
}

inline Vec2 mean_velocity(std::span<const double> alpha, const VelocityGrid& vgrid) {
    if (alpha.size() != vgrid.size()) throw std::invalid_argument("distribution and velocity grid differ in size");
    Vec2 v;
    for (std::size_t mu = 0; mu < alpha.size(); ++mu) v += alpha[mu] * vgrid[mu].velocity;
    return v;
}

inline std::size_t peak_channel(std::span<const double> alpha) {
    std::size_t best = 0;
    for (std::size_t mu = 1; mu < alpha.size(); ++mu)
        if (alpha[mu] > alpha[best]) best = mu;
    return best;
}

struct PeakLocation {
    int node = 0;
    Vec2 position;
};

/// Node whose largest channel probability is largest; ties go to the lowest index.
inline PeakLocation peak_track(const ProbabilityField& alpha, const SpatialLattice& lattice) {
    if (alpha.nodes() != lattice.size()) throw std::invalid_argument("field does not match lattice");
    int best = 0;
    double best_v = -1.0;
    for (std::size_t x = 0; x < alpha.nodes(); ++x) {
        const auto n = alpha.node(x);
        const double v = n[peak_channel(n)];
        if (v > best_v) {
            best_v = v;
            best = static_cast<int>(x);
        }
    }
    return {best, lattice.position(best)};
}

struct NodeMetrics {
    double sharpness = 0.0;   // nats
    double confidence = 0.0;
    Vec2 mean_velocity;       // jps
    std::size_t peak_channel = 0;
};

inline NodeMetrics node_metrics(const ProbabilityField& alpha, std::size_t node, double confidence,
                                const VelocityGrid& vgrid) {
    const auto a = alpha.node(node);
    return {sharpness(a), confidence, mean_velocity(a, vgrid), peak_channel(a)};
}

}  // namespace tcm
