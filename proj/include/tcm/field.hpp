#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tcm {

/// Per-node vectors over velocity channels, stored node-major.
class ChannelField {
public:
    ChannelField() = default;
    ChannelField(std::size_t nodes, std::size_t channels, double fill = 0.0)
        : nodes_(nodes), channels_(channels), values_(nodes * channels, fill) {}

    std::size_t nodes() const { return nodes_; }
    std::size_t channels() const { return channels_; }

    std::span<double> node(std::size_t i) { return {values_.data() + i * channels_, channels_}; }
    std::span<const double> node(std::size_t i) const { return {values_.data() + i * channels_, channels_}; }

    double& operator()(std::size_t i, std::size_t mu) { return values_[i * channels_ + mu]; }
    double operator()(std::size_t i, std::size_t mu) const { return values_[i * channels_ + mu]; }

    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    bool same_shape(const ChannelField& o) const { return nodes_ == o.nodes_ && channels_ == o.channels_; }

    friend bool operator==(const ChannelField&, const ChannelField&) = default;

private:
    std::size_t nodes_ = 0;
    std::size_t channels_ = 0;
    std::vector<double> values_;
};

/// Estimation-layer state: a normalized distribution over channels at every node.
struct ProbabilityField : ChannelField {
    double time = 0.0;  // seconds

    using ChannelField::ChannelField;

    static ProbabilityField uniform(std::size_t nodes, std::size_t channels) {
        return ProbabilityField(nodes, channels, 1.0 / static_cast<double>(channels));
    }
};

/// Largest per-node deviation of the channel sum from one.
inline double max_normalization_error(const ChannelField& f) {
    double worst = 0.0;
    for (std::size_t i = 0; i < f.nodes(); ++i) {
        double s = 0.0;
        for (double v : f.node(i)) s += v;
        worst = std::max(worst, std::abs(s - 1.0));
    }
    return worst;
}

inline double min_value(const ChannelField& f) {
    double m = f.values().empty() ? 0.0 : f.values().front();
    for (double v : f.values()) m = std::min(m, v);
    return m;
}

inline void normalize_nodes(ChannelField& f) {
    for (std::size_t i = 0; i < f.nodes(); ++i) {
        auto n = f.node(i);
        double s = 0.0;
        for (double v : n) s += v;
        for (double& v : n) v /= s;
    }
}

/// Largest per-node L1 distance between two fields of the same shape.
inline double max_node_l1(const ChannelField& a, const ChannelField& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("field shape mismatch");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.nodes(); ++i) {
        double d = 0.0;
        auto x = a.node(i);
        auto y = b.node(i);
        for (std::size_t k = 0; k < x.size(); ++k) d += std::abs(x[k] - y[k]);
        worst = std::max(worst, d);
    }
    return worst;
}

}  // namespace tcm
