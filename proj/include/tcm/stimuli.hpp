#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include "tcm/geometry.hpp"
#include "tcm/measurement.hpp"

namespace tcm {

/// Lattice size and frame timing shared by all generators.
struct Canvas {
    int width = 32;
    int height = 32;
    double frame_interval = 1.0 / 6.0;  // s; a 6 jps dot moves one jump per frame

    SpatialLattice lattice() const { return SpatialLattice(width, height); }
};

/// Closed interval [lo, hi] of one coordinate.
struct Band {
    enum class Axis { x, y };
    Axis axis = Axis::y;
    double lo = 0.0;
    double hi = 0.0;

    double coord(Vec2 p) const { return axis == Axis::x ? p.x : p.y; }
    bool contains(Vec2 p) const {
        const double c = coord(p);
        return c >= lo && c <= hi;
    }
    friend bool operator==(const Band&, const Band&) = default;
};

struct OccluderBand {
    double y_min = 0.0;
    double y_max = 0.0;
    friend bool operator==(const OccluderBand&, const OccluderBand&) = default;
};

struct StimulusFrame {
    std::vector<Dot> dots;
    std::vector<OccluderBand> occluders;  // black occluders: no measurement at nodes inside
    std::optional<Dot> target;            // ground truth, present even while the target is hidden

    friend bool operator==(const StimulusFrame&, const StimulusFrame&) = default;
};

struct StimulusSequence {
    int width = 32;
    int height = 32;
    double frame_interval = 1.0 / 6.0;
    std::uint64_t seed = 0;
    std::vector<StimulusFrame> frames;

    SpatialLattice lattice() const { return SpatialLattice(width, height); }
    Canvas canvas() const { return {width, height, frame_interval}; }
    friend bool operator==(const StimulusSequence&, const StimulusSequence&) = default;
};

/// Per-node flags (1 = measurement suppressed) for one frame.
inline std::vector<char> occluder_mask(const StimulusFrame& frame, const SpatialLattice& lattice) {
    std::vector<char> mask(lattice.size(), 0);
    for (const auto& band : frame.occluders) {
        for (std::size_t n = 0; n < lattice.size(); ++n) {
            const double y = lattice.position(static_cast<int>(n)).y;
            if (y >= band.y_min && y <= band.y_max) mask[n] = 1;
        }
    }
    return mask;
}

namespace detail {

inline void check_canvas(const Canvas& c) {
    if (c.width < 1 || c.height < 1) throw std::invalid_argument("canvas dimensions must be >= 1");
    if (!(c.frame_interval > 0) || !std::isfinite(c.frame_interval)) {
        throw std::invalid_argument("frame_interval must be positive");
    }
}

inline StimulusSequence empty_sequence(const Canvas& c, std::uint64_t seed, int n_frames) {
    check_canvas(c);
    if (n_frames < 1) throw std::invalid_argument("n_frames must be >= 1");
    StimulusSequence s;
    s.width = c.width;
    s.height = c.height;
    s.frame_interval = c.frame_interval;
    s.seed = seed;
    s.frames.resize(static_cast<std::size_t>(n_frames));
    return s;
}

inline void set_target(StimulusFrame& f, const Dot& d) {
    f.dots.push_back(d);
    f.target = d;
}

}  // namespace detail

/// One dot moving in a straight line; frame k sits at start + k * frame_interval * v.
inline StimulusSequence gen_single_dot(const Canvas& canvas, double speed, double direction, Vec2 start,
                                       int n_frames) {
    auto seq = detail::empty_sequence(canvas, 0, n_frames);
    if (!std::isfinite(speed) || !std::isfinite(direction)) throw std::invalid_argument("non-finite dot motion");
    const SpatialLattice lat = canvas.lattice();
    const Vec2 v = speed * unit_vector(direction);
    const Vec2 step = canvas.frame_interval * v;
    for (int k = 0; k < n_frames; ++k) {
        detail::set_target(seq.frames[k], {lat.wrap(start + static_cast<double>(k) * step), v});
    }
    return seq;
}

/// Dot on a circle around `center`, counter-clockwise for positive angular speed.
inline StimulusSequence gen_circular(const Canvas& canvas, Vec2 center, double radius, double angular_speed,
                                     int n_frames, double phase = 0.0) {
    if (!(radius > 0)) throw std::invalid_argument("radius must be positive");
    auto seq = detail::empty_sequence(canvas, 0, n_frames);
    const SpatialLattice lat = canvas.lattice();
    for (int k = 0; k < n_frames; ++k) {
        const double a = phase + angular_speed * (k * canvas.frame_interval);
        const Vec2 p = center + radius * unit_vector(a);
        const Vec2 v = (radius * angular_speed) * Vec2{-std::sin(a), std::cos(a)};
        detail::set_target(seq.frames[k], {lat.wrap(p), v});
    }
    return seq;
}

/// Adds a black occluder over y in [y_min, y_max] (jumps): dots inside are
/// removed and nodes inside receive no measurement.
inline StimulusSequence gen_black_occluder(StimulusSequence base, double y_min, double y_max) {
    if (!(y_min <= y_max)) throw std::invalid_argument("occluder needs y_min <= y_max");
    const OccluderBand band{y_min, y_max};
    for (auto& f : base.frames) {
        std::erase_if(f.dots, [&](const Dot& d) { return d.position.y >= y_min && d.position.y <= y_max; });
        f.occluders.push_back(band);
    }
    return base;
}

/// Replaces the target inside `band` by coherently moving distractors.
/// Distractor count is round(density * nodes inside band); they start at
/// seeded uniform positions in the band and re-enter on the far side when
/// they leave it.
inline StimulusSequence gen_motion_occluder(StimulusSequence target, const Band& band, double distractor_speed,
                                           double distractor_direction, double density, std::uint64_t seed) {
    if (!(density >= 0)) throw std::invalid_argument("distractor density must be >= 0");
    if (!(band.lo <= band.hi)) throw std::invalid_argument("band needs lo <= hi");
    const SpatialLattice lat = target.lattice();
    const Vec2 ext = lat.extent();
    std::size_t inside = 0;
    for (std::size_t n = 0; n < lat.size(); ++n) inside += band.contains(lat.position(static_cast<int>(n)));
    const auto count = static_cast<std::size_t>(std::lround(density * static_cast<double>(inside)));

    std::mt19937_64 rng(seed);
    const double width = band.hi - band.lo;
    const double other = band.axis == Band::Axis::x ? ext.y : ext.x;
    std::uniform_real_distribution<double> along(0.0, 1.0);
    std::vector<Vec2> starts(count);
    for (auto& p : starts) {
        const double c = band.lo + width * along(rng);
        const double o = other * along(rng);
        p = band.axis == Band::Axis::x ? Vec2{c, o} : Vec2{o, c};
    }

    const Vec2 v = distractor_speed * unit_vector(distractor_direction);
    const Vec2 step = target.frame_interval * v;
    for (std::size_t k = 0; k < target.frames.size(); ++k) {
        auto& f = target.frames[k];
        std::erase_if(f.dots, [&](const Dot& d) { return band.contains(d.position); });
        for (const Vec2& s : starts) {
            Vec2 p = lat.wrap(s + static_cast<double>(k) * step);
            if (width > 0 && !band.contains(p)) {
                // fold back into the band along its axis
                double c = band.coord(p);
                double rel = std::fmod(c - band.lo, width);
                if (rel < 0) rel += width;
                c = band.lo + rel;
                if (band.axis == Band::Axis::x) p.x = c; else p.y = c;
            }
            f.dots.push_back({p, v});
        }
    }
    target.seed = seed;
    return target;
}

/// Horizontal target plus Brownian distractors. A distractor's reported
/// velocity is its realized displacement over the frame interval.
inline StimulusSequence gen_outlier(const Canvas& canvas, double target_speed, int n_distractors,
                                    double brownian_step_sigma, int n_frames, std::uint64_t seed, Vec2 target_start) {
    if (n_distractors < 0) throw std::invalid_argument("n_distractors must be >= 0");
    if (!(brownian_step_sigma >= 0)) throw std::invalid_argument("brownian step sigma must be >= 0");
    auto seq = gen_single_dot(canvas, target_speed, 0.0, target_start, n_frames);
    seq.seed = seed;
    const SpatialLattice lat = canvas.lattice();
    const Vec2 ext = lat.extent();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<Vec2> pos(static_cast<std::size_t>(n_distractors));
    for (auto& p : pos) p = {ext.x * uni(rng), ext.y * uni(rng)};
    for (auto& f : seq.frames) {
        for (auto& p : pos) {
            const Vec2 d{brownian_step_sigma * gauss(rng), brownian_step_sigma * gauss(rng)};
            p = lat.wrap(p + d);
            f.dots.push_back({p, (1.0 / canvas.frame_interval) * d});
        }
    }
    return seq;
}

/// Two single-dot trials at base_speed and base_speed * (1 + dv_over_v).
/// Each frame's position gets independent Gaussian jitter and the reported
/// velocity is the jittered displacement over the frame interval.
inline std::pair<StimulusSequence, StimulusSequence> gen_speed_pair(const Canvas& canvas, double base_speed,
                                                                     double dv_over_v, int n_jumps,
                                                                     double jitter_sigma, std::uint64_t seed,
                                                                     Vec2 start, double direction = 0.0) {
    if (!(dv_over_v >= 0)) throw std::invalid_argument("dv_over_v must be >= 0");
    if (!(jitter_sigma >= 0)) throw std::invalid_argument("jitter sigma must be >= 0");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const SpatialLattice lat = canvas.lattice();
    auto make = [&](double speed) {
        auto seq = detail::empty_sequence(canvas, seed, n_jumps);
        const Vec2 step = canvas.frame_interval * (speed * unit_vector(direction));
        auto jittered = [&](int k) {
            const Vec2 j{jitter_sigma * gauss(rng), jitter_sigma * gauss(rng)};
            return start + static_cast<double>(k) * step + j;
        };
        Vec2 prev = jittered(-1);
        for (int k = 0; k < n_jumps; ++k) {
            const Vec2 p = jittered(k);
            detail::set_target(seq.frames[k], {lat.wrap(p), (1.0 / canvas.frame_interval) * (p - prev)});
            prev = p;
        }
        return seq;
    };
    auto first = make(base_speed);
    auto second = make(base_speed * (1.0 + dv_over_v));
    return {std::move(first), std::move(second)};
}

// ---- text serialization -------------------------------------------------

namespace detail {

inline void put_number(std::ostream& os, double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    os.write(buf, res.ptr - buf);
}

inline double parse_number(std::string_view tok, int line) {
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size()) {
        throw std::runtime_error("stimulus line " + std::to_string(line) + ": bad number '" + std::string(tok) + "'");
    }
    return v;
}

inline void put_dot(std::ostream& os, const Dot& d) {
    put_number(os, d.position.x);
    os << ' ';
    put_number(os, d.position.y);
    os << ' ';
    put_number(os, d.velocity.x);
    os << ' ';
    put_number(os, d.velocity.y);
}

}  // namespace detail

/// Line-oriented text form. Numbers use the shortest round-trip
/// representation, so reading back reproduces the sequence bit for bit.
inline void write_stimulus(std::ostream& os, const StimulusSequence& s) {
    os << "lattice " << s.width << ' ' << s.height << '\n';
    os << "frame_interval ";
    detail::put_number(os, s.frame_interval);
    os << "\nseed " << s.seed << "\nframes " << s.frames.size() << '\n';
    for (std::size_t k = 0; k < s.frames.size(); ++k) {
        const auto& f = s.frames[k];
        os << "frame " << k << '\n';
        if (f.target) {
            os << "target ";
            detail::put_dot(os, *f.target);
            os << '\n';
        }
        for (const auto& d : f.dots) {
            detail::put_dot(os, d);
            os << '\n';
        }
        for (const auto& b : f.occluders) {
            os << "occlude ";
            detail::put_number(os, b.y_min);
            os << ' ';
            detail::put_number(os, b.y_max);
            os << '\n';
        }
    }
}

inline std::string to_text(const StimulusSequence& s) {
    std::ostringstream os;
    write_stimulus(os, s);
    return os.str();
}

inline StimulusSequence read_stimulus(std::istream& is) {
    StimulusSequence s;
    s.frames.clear();
    std::string line;
    int lineno = 0;
    std::size_t declared = 0;
    bool have_lattice = false;
    auto fail = [&](const std::string& what) {
        throw std::runtime_error("stimulus line " + std::to_string(lineno) + ": " + what);
    };
    while (std::getline(is, line)) {
        ++lineno;
        std::vector<std::string_view> tok;
        std::string_view rest(line);
        while (!rest.empty()) {
            const auto b = rest.find_first_not_of(" \t\r");
            if (b == std::string_view::npos) break;
            rest.remove_prefix(b);
            const auto e = rest.find_first_of(" \t\r");
            tok.push_back(rest.substr(0, e));
            rest.remove_prefix(e == std::string_view::npos ? rest.size() : e);
        }
        if (tok.empty() || tok[0].front() == '#') continue;
        const std::string_view key = tok[0];
        auto nums = [&](std::size_t from, std::size_t count) {
            if (tok.size() != from + count) fail("expected " + std::to_string(count) + " values");
            std::vector<double> v;
            for (std::size_t i = from; i < tok.size(); ++i) v.push_back(detail::parse_number(tok[i], lineno));
            return v;
        };
        auto as_dot = [](const std::vector<double>& v) { return Dot{{v[0], v[1]}, {v[2], v[3]}}; };
        if (key == "lattice") {
            const auto v = nums(1, 2);
            s.width = static_cast<int>(v[0]);
            s.height = static_cast<int>(v[1]);
            if (s.width < 1 || s.height < 1 || s.width != v[0] || s.height != v[1]) fail("bad lattice size");
            have_lattice = true;
        } else if (key == "frame_interval") {
            s.frame_interval = nums(1, 1)[0];
            if (!(s.frame_interval > 0)) fail("frame_interval must be positive");
        } else if (key == "seed") {
            if (tok.size() != 2) fail("expected seed value");
            const auto r = std::from_chars(tok[1].data(), tok[1].data() + tok[1].size(), s.seed);
            if (r.ec != std::errc{} || r.ptr != tok[1].data() + tok[1].size()) fail("bad seed");
        } else if (key == "frames") {
            declared = static_cast<std::size_t>(nums(1, 1)[0]);
        } else if (key == "frame") {
            const auto k = static_cast<std::size_t>(nums(1, 1)[0]);
            if (k != s.frames.size()) fail("frames out of order");
            s.frames.emplace_back();
        } else if (key == "target") {
            if (s.frames.empty()) fail("target before first frame");
            s.frames.back().target = as_dot(nums(1, 4));
        } else if (key == "occlude") {
            if (s.frames.empty()) fail("occluder before first frame");
            const auto v = nums(1, 2);
            s.frames.back().occluders.push_back({v[0], v[1]});
        } else {
            if (s.frames.empty()) fail("unexpected '" + std::string(key) + "'");
            s.frames.back().dots.push_back(as_dot(nums(0, 4)));
        }
    }
    if (!have_lattice) throw std::runtime_error("stimulus: missing lattice line");
    if (s.frames.size() != declared) throw std::runtime_error("stimulus: frame count does not match header");
    return s;
}

inline StimulusSequence from_text(const std::string& text) {
    std::istringstream is(text);
    return read_stimulus(is);
}

}  // namespace tcm
