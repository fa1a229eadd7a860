#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "tcm/detail/parallel.hpp"
#include "tcm/harness/config.hpp"
#include "tcm/harness/run.hpp"

namespace tcm {

struct DiscriminationCell {
    double dv_over_v = 0.0;
    int n_jumps = 0;
    int trials = 0;
    int correct = 0;
    double percent_correct() const { return trials ? static_cast<double>(correct) / trials : 0.0; }
};

struct ThresholdRow {
    int n_jumps = 0;
    // dv/V at the criterion level; nullopt when no crossing lies inside the grid.
    std::optional<double> threshold;
    bool below_grid = false;  // already at criterion at the smallest positive dv
};

struct DiscriminationResult {
    std::vector<DiscriminationCell> cells;  // n_jumps-major, dv in grid order
    std::vector<ThresholdRow> thresholds;
};

/// Speed of the target-node mean velocity averaged over the last
/// min(3, n) frames of a run.
inline double perceived_speed(const RunRecord& rec) {
    if (rec.frames.empty()) throw std::invalid_argument("empty run record");
    const std::size_t n = rec.frames.size();
    const std::size_t k = std::min<std::size_t>(3, n);
    double s = 0.0;
    for (std::size_t i = n - k; i < n; ++i) s += rec.frames[i].mean_velocity.norm();
    return s / static_cast<double>(k);
}

/// dv/V where percent correct first reaches `criterion`, by linear
/// interpolation in log dv between the bracketing grid points. Grid points
/// with dv <= 0 are ignored.
inline ThresholdRow interpolate_threshold(const std::vector<double>& dv, const std::vector<double>& pc,
                                          double criterion, int n_jumps) {
    ThresholdRow row;
    row.n_jumps = n_jumps;
    std::optional<std::size_t> prev;
    for (std::size_t i = 0; i < dv.size(); ++i) {
        if (!(dv[i] > 0)) continue;
        if (pc[i] >= criterion) {
            if (!prev) {
                row.threshold = dv[i];
                row.below_grid = true;
            } else {
                const double x0 = std::log(dv[*prev]);
                const double x1 = std::log(dv[i]);
                const double f = (criterion - pc[*prev]) / (pc[i] - pc[*prev]);
                row.threshold = std::exp(x0 + f * (x1 - x0));
            }
            return row;
        }
        prev = i;
    }
    return row;
}

/// Trial seed for (base seed, n_jumps, dv index, trial); distinct cells get
/// unrelated streams.
inline std::uint64_t trial_seed(std::uint64_t base, int n_jumps, std::size_t dv_index, int trial) {
    std::uint64_t z = base * 0x9E3779B97F4A7C15ull + static_cast<std::uint64_t>(n_jumps) * 0xBF58476D1CE4E5B9ull +
                      dv_index * 0x94D049BB133111EBull + static_cast<std::uint64_t>(trial);
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Two-interval speed discrimination. In each trial the second stimulus is
/// the faster one; the trial is correct when its perceived speed is larger.
inline DiscriminationResult speed_discrimination(const ExperimentConfig& config, const std::vector<double>& dv_grid,
                                                 const std::vector<int>& n_jumps_list, int trials) {
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    if (dv_grid.empty() || n_jumps_list.empty()) throw std::invalid_argument("empty discrimination grid");
    for (double dv : dv_grid)
        if (!(dv >= 0)) throw std::invalid_argument("dv/V values must be >= 0");
    for (int n : n_jumps_list)
        if (n < 1) throw std::invalid_argument("n_jumps must be >= 1");
    config.validate();
    ExperimentConfig inner = config;
    inner.threads = 1;  // parallelism goes across trials
    inner.snapshot_frames.clear();

    DiscriminationResult out;
    for (int nj : n_jumps_list) {
        std::vector<double> pc;
        for (std::size_t di = 0; di < dv_grid.size(); ++di) {
            std::vector<char> ok(static_cast<std::size_t>(trials), 0);
            detail::parallel_for(ok.size(), config.threads, [&](std::size_t t) {
                const auto seed = trial_seed(config.seed, nj, di, static_cast<int>(t));
                const auto [first, second] =
                    build_speed_pair(inner, config.discrimination.base_speed, dv_grid[di], nj, seed);
                ok[t] = perceived_speed(run(inner, second)) > perceived_speed(run(inner, first));
            });
            DiscriminationCell cell{dv_grid[di], nj, trials, static_cast<int>(std::count(ok.begin(), ok.end(), 1))};
            pc.push_back(cell.percent_correct());
            out.cells.push_back(cell);
        }
        out.thresholds.push_back(interpolate_threshold(dv_grid, pc, config.discrimination.criterion, nj));
    }
    return out;
}

/// Two-sided 95% normal-approximation interval for a binomial proportion.
inline std::pair<double, double> binomial_ci95(double p, int n) {
    const double half = 1.959963984540054 * std::sqrt(p * (1 - p) / n);
    return {p - half, p + half};
}

}  // namespace tcm
