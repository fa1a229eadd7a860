#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace tcm {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend constexpr bool operator==(Vec2 a, Vec2 b) = default;
    constexpr Vec2& operator+=(Vec2 b) {
        x += b.x;
        y += b.y;
        return *this;
    }

    constexpr double dot(Vec2 b) const { return x * b.x + y * b.y; }
    double norm() const { return std::hypot(x, y); }
};

inline Vec2 unit_vector(double angle) { return {std::cos(angle), std::sin(angle)}; }

/// Quadratic form d^T S^-1 d for a covariance that is diagonal in the frame
/// aligned with `angle`: variance sigma_l^2 along it, sigma_t^2 across it.
inline double oriented_quadratic(Vec2 d, double angle, double sigma_l, double sigma_t) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const double dl = d.x * c + d.y * s;
    const double dt = -d.x * s + d.y * c;
    return dl * dl / (sigma_l * sigma_l) + dt * dt / (sigma_t * sigma_t);
}

/// Vertical distance between hexagonal rows, in jumps.
inline constexpr double kRowPitch = 0.86602540378443864676;

/// Hexagonal lattice with periodic wrap. Rows are horizontal, odd rows are
/// shifted right by half a jump, and node indices run row-major from the
/// origin. Neighbor slot j lies in direction 60*j degrees.
class SpatialLattice {
public:
    static constexpr int kNeighbors = 6;

    SpatialLattice(int width, int height) : width_(width), height_(height) {
        if (width < 1 || height < 1) {
            throw std::invalid_argument("hex lattice dimensions must be >= 1, got " +
                                        std::to_string(width) + "x" + std::to_string(height));
        }
        neighbors_.resize(size());
        for (int r = 0; r < height_; ++r) {
            const int odd = r & 1;
            for (int c = 0; c < width_; ++c) {
                auto& nb = neighbors_[index(c, r)];
                nb[0] = index(c + 1, r);
                nb[1] = index(c + odd, r + 1);
                nb[2] = index(c - 1 + odd, r + 1);
                nb[3] = index(c - 1, r);
                nb[4] = index(c - 1 + odd, r - 1);
                nb[5] = index(c + odd, r - 1);
            }
        }
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return static_cast<std::size_t>(width_) * height_; }

    /// Wrapping index for any integer column/row.
    int index(int col, int row) const {
        const int c = ((col % width_) + width_) % width_;
        const int r = ((row % height_) + height_) % height_;
        return r * width_ + c;
    }
    int col(int node) const { return node % width_; }
    int row(int node) const { return node / width_; }

    Vec2 position(int node) const {
        const int r = row(node);
        return {col(node) + 0.5 * (r & 1), r * kRowPitch};
    }

    const std::array<int, kNeighbors>& neighbors(int node) const { return neighbors_[node]; }

    /// Unit offset of neighbor slot j.
    static Vec2 direction(int j) { return unit_vector(j * std::numbers::pi / 3.0); }

    /// Continuous extent of one periodic cell, in jumps.
    Vec2 extent() const { return {static_cast<double>(width_), height_ * kRowPitch}; }

    Vec2 wrap(Vec2 p) const {
        const Vec2 e = extent();
        double x = std::fmod(p.x, e.x);
        double y = std::fmod(p.y, e.y);
        if (x < 0) x += e.x;
        if (y < 0) y += e.y;
        if (x >= e.x) x = 0.0;
        if (y >= e.y) y = 0.0;
        return {x, y};
    }

    /// Minimal-image displacement from `from` to `to`.
    Vec2 displacement(Vec2 from, Vec2 to) const {
        const Vec2 e = extent();
        return {std::remainder(to.x - from.x, e.x), std::remainder(to.y - from.y, e.y)};
    }

    int nearest_node(Vec2 p) const {
        const Vec2 q = wrap(p);
        const int r0 = static_cast<int>(std::floor(q.y / kRowPitch));
        int best = -1;
        double best_d2 = 0.0;
        for (int r = r0 - 1; r <= r0 + 2; ++r) {
            const int rw = ((r % height_) + height_) % height_;
            const int c0 = static_cast<int>(std::lround(q.x - 0.5 * (rw & 1)));
            for (int c = c0 - 1; c <= c0 + 1; ++c) {
                const int n = index(c, rw);
                const Vec2 d = displacement(q, position(n));
                const double d2 = d.dot(d);
                if (best < 0 || d2 < best_d2 || (d2 == best_d2 && n < best)) {
                    best = n;
                    best_d2 = d2;
                }
            }
        }
        return best;
    }

private:
    int width_;
    int height_;
    std::vector<std::array<int, kNeighbors>> neighbors_;
};

inline SpatialLattice build_hex_lattice(int width, int height) { return SpatialLattice(width, height); }

struct VelocityChannel {
    int speed_index;
    int dir_index;
    double speed;      // jps
    double direction;  // radians
    Vec2 velocity;     // jps
};

/// Polar velocity channels, enumerated speed-major: index = speed_index * n_dirs + dir_index.
class VelocityGrid {
public:
    VelocityGrid(int n_dirs, int n_speeds, double dtheta, double dr, double s_min)
        : n_dirs_(n_dirs), n_speeds_(n_speeds), dtheta_(dtheta), dr_(dr), s_min_(s_min) {
        if (n_dirs < 1 || n_speeds < 1) {
            throw std::invalid_argument("velocity grid needs at least one direction and one speed");
        }
        if (std::abs(dtheta * n_dirs - 2.0 * std::numbers::pi) > 1e-9) {
            throw std::invalid_argument("direction step times direction count must equal 2*pi");
        }
        if (!(dr > 0.0) || !(s_min > 0.0)) {
            throw std::invalid_argument("speed step and slowest speed must be positive");
        }
        channels_.reserve(static_cast<std::size_t>(n_dirs) * n_speeds);
        for (int si = 0; si < n_speeds; ++si) {
            const double s = s_min + si * dr;
            for (int di = 0; di < n_dirs; ++di) {
                const double th = di * dtheta;
                channels_.push_back({si, di, s, th, s * unit_vector(th)});
            }
        }
    }

    /// Equidistant directions covering the circle.
    static VelocityGrid polar(int n_dirs, int n_speeds, double dr, double s_min) {
        return VelocityGrid(n_dirs, n_speeds, 2.0 * std::numbers::pi / n_dirs, dr, s_min);
    }

    std::size_t size() const { return channels_.size(); }
    int n_dirs() const { return n_dirs_; }
    int n_speeds() const { return n_speeds_; }
    double dtheta() const { return dtheta_; }
    double dr() const { return dr_; }
    double s_min() const { return s_min_; }
    double s_max() const { return s_min_ + (n_speeds_ - 1) * dr_; }

    const VelocityChannel& operator[](std::size_t mu) const { return channels_[mu]; }
    const std::vector<VelocityChannel>& channels() const { return channels_; }

    int index(int speed_index, int dir_index) const { return speed_index * n_dirs_ + dir_index; }

    /// Area of the annulus covered by the speed channels, jps^2.
    double volume() const {
        const double inner = std::max(0.0, s_min_ - 0.5 * dr_);
        const double outer = s_max() + 0.5 * dr_;
        return std::numbers::pi * (outer * outer - inner * inner);
    }

private:
    int n_dirs_;
    int n_speeds_;
    double dtheta_;
    double dr_;
    double s_min_;
    std::vector<VelocityChannel> channels_;
};

inline VelocityGrid build_velocity_grid(int n_dirs, int n_speeds, double dtheta, double dr, double s_min) {
    return VelocityGrid(n_dirs, n_speeds, dtheta, dr, s_min);
}

}  // namespace tcm
