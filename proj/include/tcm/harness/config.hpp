#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tcm/geometry.hpp"
#include "tcm/measurement.hpp"
#include "tcm/prediction/params.hpp"
#include "tcm/prediction/stability.hpp"
#include "tcm/stimuli.hpp"

namespace tcm {

enum class Engine { kernel, pde };

enum class StimulusKind { single_dot, circular, black_occluder, motion_occluder, outlier, speed_pair, file };

/// Stimulus parameters. Only the fields relevant to `kind` are used.
struct StimulusSpec {
    StimulusKind kind = StimulusKind::single_dot;
    int n_frames = 30;
    double speed = 6.0;         // jps
    double direction_deg = 0.0;
    Vec2 start{4.0, 16.0 * kRowPitch};
    // circular
    Vec2 center{16.0, 16.0 * kRowPitch};
    double radius = 6.0;
    double angular_speed = 1.0;  // rad/s
    // black occluder (y range in jumps)
    double occluder_y_min = 15.0;
    double occluder_y_max = 22.0;
    // motion occluder
    Band band{Band::Axis::x, 12.0, 19.0};
    double distractor_speed = 6.0;
    double distractor_direction_deg = 90.0;
    double density = 0.5;
    // outlier
    int n_distractors = 30;
    double brownian_sigma = 1.0;  // jumps per frame
    // speed pair
    double dv_over_v = 0.5;
    double jitter_sigma = 0.25;  // jumps
    std::string file;
};

struct DiscriminationSpec {
    double base_speed = 2.0;
    std::vector<double> dv_grid{0.05, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0};
    std::vector<int> n_jumps{2, 4, 8};
    int trials = 100;
    double criterion = 0.8;
};

struct ExperimentConfig {
    int width = 32;
    int height = 32;
    int n_dirs = 6;
    int n_speeds = 5;
    double dr = 2.0;     // jps
    double s_min = 2.0;  // jps
    MeasurementParams measurement;
    double sigma_lv_L = 2.2;  // jps
    double sigma_lv_T = 1.1;
    PriorParams prior;
    double frame_interval = 1.0 / 6.0;  // s
    double dt = 0.6e-3;                 // s, finite-difference step
    Engine engine = Engine::pde;
    PdeOptions pde;
    int threads = 1;
    std::uint64_t seed = 1;
    StimulusSpec stimulus;
    DiscriminationSpec discrimination;
    std::vector<int> snapshot_frames;
    std::string out_dir = "out";

    SpatialLattice lattice() const { return SpatialLattice(width, height); }
    VelocityGrid velocity_grid() const {
        return VelocityGrid(n_dirs, n_speeds, 2.0 * std::numbers::pi / n_dirs, dr, s_min);
    }
    Canvas canvas() const { return {width, height, frame_interval}; }

    /// Throws std::invalid_argument on any inconsistency, including a
    /// finite-difference step above the stability bound.
    void validate() const {
        const SpatialLattice lat = lattice();
        const VelocityGrid vg = velocity_grid();
        measurement.validate();
        prior.validate();
        if (!(sigma_lv_L > 0 && sigma_lv_T > 0)) throw std::invalid_argument("likelihood sigmas must be positive");
        if (!(frame_interval > 0)) throw std::invalid_argument("frame_interval must be positive");
        if (!(dt > 0)) throw std::invalid_argument("dt must be positive");
        if (threads < 1) throw std::invalid_argument("threads must be >= 1");
        if (stimulus.n_frames < 1) throw std::invalid_argument("frames must be >= 1");
        if (engine == Engine::pde && pde.enforce_stability) {
            const double bound = stability_max_dt(prior, lat, vg, pde);
            if (dt > bound) {
                std::ostringstream os;
                os << "dt " << dt << " s exceeds the stability bound " << bound << " s";
                throw std::invalid_argument(os.str());
            }
        }
        if (discrimination.trials < 1) throw std::invalid_argument("trials must be >= 1");
    }
};

namespace detail {

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double to_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc{} || r.ptr != v.data() + v.size() || !std::isfinite(out)) {
        throw std::invalid_argument("config key '" + key + "': not a number: '" + v + "'");
    }
    return out;
}

inline int to_int(const std::string& key, const std::string& v) {
    int out = 0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc{} || r.ptr != v.data() + v.size()) {
        throw std::invalid_argument("config key '" + key + "': not an integer: '" + v + "'");
    }
    return out;
}

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline double radians(double deg) { return deg * std::numbers::pi / 180.0; }

}  // namespace detail

inline Engine parse_engine(const std::string& v) {
    if (v == "kernel") return Engine::kernel;
    if (v == "pde") return Engine::pde;
    throw std::invalid_argument("unknown engine '" + v + "' (expected kernel or pde)");
}

inline const char* engine_name(Engine e) { return e == Engine::kernel ? "kernel" : "pde"; }

inline StimulusKind parse_stimulus_kind(const std::string& v) {
    static const std::map<std::string, StimulusKind> names{
        {"single_dot", StimulusKind::single_dot},       {"circular", StimulusKind::circular},
        {"black_occluder", StimulusKind::black_occluder}, {"motion_occluder", StimulusKind::motion_occluder},
        {"outlier", StimulusKind::outlier},             {"speed_pair", StimulusKind::speed_pair},
        {"file", StimulusKind::file}};
    const auto it = names.find(v);
    if (it == names.end()) throw std::invalid_argument("unknown stimulus '" + v + "'");
    return it->second;
}

/// Applies one `key = value` setting. Unknown keys are errors.
inline void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& value) {
    using detail::to_double;
    using detail::to_int;
    auto d = [&] { return to_double(key, value); };
    auto i = [&] { return to_int(key, value); };
    auto& s = c.stimulus;

    if (key == "width") c.width = i();
    else if (key == "height") c.height = i();
    else if (key == "n_dirs") c.n_dirs = i();
    else if (key == "n_speeds") c.n_speeds = i();
    else if (key == "dr") c.dr = d();
    else if (key == "s_min") c.s_min = d();
    else if (key == "sigma_mx_L") c.measurement.sigma_x_L = d();
    else if (key == "sigma_mx_T") c.measurement.sigma_x_T = d();
    else if (key == "sigma_mv_L") c.measurement.sigma_v_L = d();
    else if (key == "sigma_mv_T") c.measurement.sigma_v_T = d();
    else if (key == "floor_eps") c.measurement.floor_eps = d();
    else if (key == "cutoff_radius") c.measurement.cutoff_radius = d();
    else if (key == "sigma_lv_L") c.sigma_lv_L = d();
    else if (key == "sigma_lv_T") c.sigma_lv_T = d();
    else if (key == "sigma_x_L") c.prior.sigma_x_L = d();
    else if (key == "sigma_x_T") c.prior.sigma_x_T = d();
    else if (key == "sigma_v_L") c.prior.sigma_v_L = d();
    else if (key == "sigma_v_T") c.prior.sigma_v_T = d();
    else if (key == "frame_interval") c.frame_interval = d();
    else if (key == "dt") c.dt = d();
    else if (key == "engine") c.engine = parse_engine(value);
    else if (key == "drift") {
        if (value == "upwind") c.pde.drift = DriftScheme::upwind;
        else if (value == "central") c.pde.drift = DriftScheme::central;
        else throw std::invalid_argument("drift must be upwind or central");
    } else if (key == "normalization_term") {
        if (value == "proportional") c.pde.normalization = NormalizationTerm::proportional;
        else if (value == "uniform") c.pde.normalization = NormalizationTerm::uniform;
        else throw std::invalid_argument("normalization_term must be proportional or uniform");
    } else if (key == "speed_boundary") {
        if (value == "periodic") c.pde.speed_boundary = SpeedBoundary::periodic;
        else if (value == "no_flux") c.pde.speed_boundary = SpeedBoundary::no_flux;
        else throw std::invalid_argument("speed_boundary must be periodic or no_flux");
    } else if (key == "threads") c.threads = i();
    else if (key == "seed") {
        std::uint64_t v = 0;
        const auto r = std::from_chars(value.data(), value.data() + value.size(), v);
        if (r.ec != std::errc{} || r.ptr != value.data() + value.size()) {
            throw std::invalid_argument("config key 'seed': not an unsigned integer: '" + value + "'");
        }
        c.seed = v;
    } else if (key == "out_dir") c.out_dir = value;
    else if (key == "snapshot_frames") {
        c.snapshot_frames.clear();
        for (const auto& t : detail::split_list(value)) c.snapshot_frames.push_back(to_int(key, t));
    }
    // stimulus
    else if (key == "stimulus") s.kind = parse_stimulus_kind(value);
    else if (key == "frames") s.n_frames = i();
    else if (key == "speed") s.speed = d();
    else if (key == "direction_deg") s.direction_deg = d();
    else if (key == "start_x") s.start.x = d();
    else if (key == "start_y") s.start.y = d();
    else if (key == "center_x") s.center.x = d();
    else if (key == "center_y") s.center.y = d();
    else if (key == "radius") s.radius = d();
    else if (key == "angular_speed") s.angular_speed = d();
    else if (key == "occluder_y_min") s.occluder_y_min = d();
    else if (key == "occluder_y_max") s.occluder_y_max = d();
    else if (key == "band_axis") {
        if (value == "x") s.band.axis = Band::Axis::x;
        else if (value == "y") s.band.axis = Band::Axis::y;
        else throw std::invalid_argument("band_axis must be x or y");
    } else if (key == "band_lo") s.band.lo = d();
    else if (key == "band_hi") s.band.hi = d();
    else if (key == "distractor_speed") s.distractor_speed = d();
    else if (key == "distractor_direction_deg") s.distractor_direction_deg = d();
    else if (key == "density") s.density = d();
    else if (key == "n_distractors") s.n_distractors = i();
    else if (key == "brownian_sigma") s.brownian_sigma = d();
    else if (key == "dv_over_v") s.dv_over_v = d();
    else if (key == "jitter_sigma") s.jitter_sigma = d();
    else if (key == "stimulus_file") s.file = value;
    // discrimination
    else if (key == "base_speed") c.discrimination.base_speed = d();
    else if (key == "dv_grid") {
        c.discrimination.dv_grid.clear();
        for (const auto& t : detail::split_list(value)) c.discrimination.dv_grid.push_back(to_double(key, t));
    } else if (key == "n_jumps") {
        c.discrimination.n_jumps.clear();
        for (const auto& t : detail::split_list(value)) c.discrimination.n_jumps.push_back(to_int(key, t));
    } else if (key == "trials") c.discrimination.trials = i();
    else if (key == "criterion") c.discrimination.criterion = d();
    else throw std::invalid_argument("unknown config key '" + key + "'");
}

/// Flat `key = value` text; '#' starts a comment. Later keys override earlier ones.
inline ExperimentConfig parse_config(std::istream& is, ExperimentConfig base = {}) {
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        try {
            apply_setting(base, key, value);
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return base;
}

inline ExperimentConfig parse_config_string(const std::string& text, ExperimentConfig base = {}) {
    std::istringstream is(text);
    return parse_config(is, std::move(base));
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
    try {
        return parse_config(in);
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
}

inline std::pair<StimulusSequence, StimulusSequence> build_speed_pair(const ExperimentConfig& c, double base_speed,
                                                                      double dv_over_v, int n_jumps,
                                                                      std::uint64_t seed) {
    return gen_speed_pair(c.canvas(), base_speed, dv_over_v, n_jumps, c.stimulus.jitter_sigma, seed, c.stimulus.start,
                          detail::radians(c.stimulus.direction_deg));
}

/// The stimulus described by the config; for speed pairs, the first sequence.
inline StimulusSequence build_stimulus(const ExperimentConfig& c) {
    const auto& s = c.stimulus;
    const Canvas canvas = c.canvas();
    const double dir = detail::radians(s.direction_deg);
    switch (s.kind) {
        case StimulusKind::single_dot:
            return gen_single_dot(canvas, s.speed, dir, s.start, s.n_frames);
        case StimulusKind::circular:
            return gen_circular(canvas, s.center, s.radius, s.angular_speed, s.n_frames);
        case StimulusKind::black_occluder:
            return gen_black_occluder(gen_single_dot(canvas, s.speed, dir, s.start, s.n_frames), s.occluder_y_min,
                                      s.occluder_y_max);
        case StimulusKind::motion_occluder:
            return gen_motion_occluder(gen_single_dot(canvas, s.speed, dir, s.start, s.n_frames), s.band,
                                       s.distractor_speed, detail::radians(s.distractor_direction_deg), s.density,
                                       c.seed);
        case StimulusKind::outlier:
            return gen_outlier(canvas, s.speed, s.n_distractors, s.brownian_sigma, s.n_frames, c.seed, s.start);
        case StimulusKind::speed_pair:
            return build_speed_pair(c, s.speed, s.dv_over_v, s.n_frames, c.seed).first;
        case StimulusKind::file: {
            std::ifstream in(s.file);
            if (!in) throw std::runtime_error("cannot open stimulus file '" + s.file + "'");
            auto seq = read_stimulus(in);
            if (seq.width != c.width || seq.height != c.height) {
                throw std::invalid_argument("stimulus file lattice does not match config");
            }
            return seq;
        }
    }
    throw std::logic_error("unhandled stimulus kind");
}

}  // namespace tcm
