#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "tcm/estimation.hpp"
#include "tcm/harness/discrimination.hpp"
#include "tcm/harness/run.hpp"

namespace tcm {

namespace detail {

inline std::string num(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline std::ofstream open_out(const std::filesystem::path& path, bool binary = false) {
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    return out;
}

inline void check_written(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace detail

inline constexpr const char* kMetricsHeader = "frame,sharpness,confidence,peak_x,peak_y,mean_vx,mean_vy";

/// One row per frame; numbers in shortest round-trip form.
inline void write_metrics_csv(std::ostream& os, const RunRecord& rec) {
    os << kMetricsHeader << '\n';
    for (const auto& f : rec.frames) {
        using detail::num;
        os << f.frame << ',' << num(f.sharpness) << ',' << num(f.confidence) << ',' << num(f.peak.position.x) << ','
           << num(f.peak.position.y) << ',' << num(f.mean_velocity.x) << ',' << num(f.mean_velocity.y) << '\n';
    }
}

inline nlohmann::json snapshot_json(const Snapshot& snap, const SpatialLattice& lattice, const VelocityGrid& vgrid) {
    nlohmann::json j;
    j["frame"] = snap.frame;
    j["time"] = snap.alpha.time;
    j["width"] = lattice.width();
    j["height"] = lattice.height();
    nlohmann::json channels = nlohmann::json::array();
    for (const auto& ch : vgrid.channels()) channels.push_back({{"speed", ch.speed}, {"direction", ch.direction}});
    j["channels"] = std::move(channels);
    nlohmann::json alpha = nlohmann::json::array();
    for (std::size_t x = 0; x < snap.alpha.nodes(); ++x) {
        const auto n = snap.alpha.node(x);
        alpha.push_back(nlohmann::json(std::vector<double>(n.begin(), n.end())));
    }
    j["alpha"] = std::move(alpha);
    j["confidence"] = snap.confidence;
    return j;
}

/// Plain (P2) PGM of per-node sharpness scaled by ln M; the top image row is
/// the highest lattice row.
inline void write_sharpness_pgm(std::ostream& os, const ProbabilityField& alpha, const SpatialLattice& lattice) {
    const double ln_m = std::log(static_cast<double>(alpha.channels()));
    os << "P2\n" << lattice.width() << ' ' << lattice.height() << "\n255\n";
    for (int r = lattice.height() - 1; r >= 0; --r) {
        for (int c = 0; c < lattice.width(); ++c) {
            const double s = ln_m > 0 ? sharpness(alpha.node(static_cast<std::size_t>(lattice.index(c, r)))) / ln_m : 0.0;
            const long px = std::lround(255.0 * std::clamp(s, 0.0, 1.0));
            os << px << (c + 1 < lattice.width() ? ' ' : '\n');
        }
    }
}

/// Writes metrics.csv plus snapshot_<k>.json and snapshot_<k>.pgm for every
/// recorded snapshot into `dir` (created if missing).
inline void emit(const RunRecord& rec, const SpatialLattice& lattice, const VelocityGrid& vgrid,
                 const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create '" + dir.string() + "': " + ec.message());
    {
        const auto path = dir / "metrics.csv";
        auto out = detail::open_out(path);
        write_metrics_csv(out, rec);
        detail::check_written(out, path);
    }
    for (const auto& snap : rec.snapshots) {
        const std::string stem = "snapshot_" + std::to_string(snap.frame);
        {
            const auto path = dir / (stem + ".json");
            auto out = detail::open_out(path);
            out << snapshot_json(snap, lattice, vgrid).dump() << '\n';
            detail::check_written(out, path);
        }
        {
            const auto path = dir / (stem + ".pgm");
            auto out = detail::open_out(path);
            write_sharpness_pgm(out, snap.alpha, lattice);
            detail::check_written(out, path);
        }
    }
}

inline void write_discrimination_csv(std::ostream& os, const DiscriminationResult& r) {
    os << "n_jumps,dv_over_v,trials,correct,percent_correct\n";
    for (const auto& c : r.cells) {
        os << c.n_jumps << ',' << detail::num(c.dv_over_v) << ',' << c.trials << ',' << c.correct << ','
           << detail::num(c.percent_correct()) << '\n';
    }
}

inline void write_thresholds_csv(std::ostream& os, const DiscriminationResult& r) {
    os << "n_jumps,threshold,status\n";
    for (const auto& t : r.thresholds) {
        os << t.n_jumps << ',';
        if (t.threshold) os << detail::num(*t.threshold) << ',' << (t.below_grid ? "at_or_below_grid" : "interpolated");
        else os << ",out_of_range";
        os << '\n';
    }
}

}  // namespace tcm
