// Prints one PASS/FAIL line per acceptance criterion; exits nonzero if any fail.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "tcm/tcm.hpp"

using namespace tcm;

namespace {

struct Outcome {
    bool passed = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <class... A>
std::string fmt(A&&... parts) {
    std::ostringstream os;
    os.precision(4);
    (os << ... << parts);
    return os.str();
}

int hw_threads() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

// 1. normalization after every substep and update over >= 1000 steps
Outcome normalization() {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentConfig c;
    c.stimulus.n_frames = 5;  // 4 prediction intervals of 278 steps
    long steps = 0, updates = 0;
    double worst_norm = 0, worst_min = std::numeric_limits<double>::infinity();
    auto check = [&](const ProbabilityField& f) {
        worst_norm = std::max(worst_norm, max_normalization_error(f));
        worst_min = std::min(worst_min, min_value(f));
    };
    run(
        c, build_stimulus(c),
        [&](const FrameState& s) {
            ++updates;
            check(s.alpha);
        },
        [&](const ProbabilityField& f) {
            ++steps;
            check(f);
        });
    steps -= updates;  // the substep hook also sees each update
    const double t = seconds_since(t0);
    return {steps >= 1000 && worst_norm < 1e-9 && worst_min >= 0 && t < 60,
            fmt(steps, " steps, ", updates, " updates; max |sum-1| ", worst_norm, ", min alpha ", worst_min, ", ",
                t, " s")};
}

// 2. PDE vs scaled-covariance kernel on 8x8 with 18 channels
Outcome oracle() {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentConfig c;
    c.width = c.height = 8;
    c.n_speeds = 3;
    const auto r = oracle_comparison(c, 32, {4e-3, 2e-3, 1e-3});
    bool dec = true;
    for (std::size_t i = 1; i < r.l1.size(); ++i) dec = dec && r.l1[i] < r.l1[i - 1];
    const double t = seconds_since(t0);
    return {r.l1[0] < 0.05 && dec && t < 60,
            fmt("32 steps; L1 ", r.l1[0], " / ", r.l1[1], " / ", r.l1[2], " at dt 4 / 2 / 1 ms, ", t, " s")};
}

// 3. analytic diffusion in velocity and space
Outcome diffusion() {
    const PriorParams p;
    const auto v = velocity_diffusion_check(p.sigma_v_L);
    const auto [x, y] = spatial_diffusion_check(p.sigma_x_L, p.sigma_x_T);
    return {v.relative_error() < 0.05 && x.relative_error() < 0.05 && y.relative_error() < 0.05,
            fmt("velocity rate ", v.measured_rate, " vs ", v.analytic_rate, "; along ", x.measured_rate, " vs ",
                x.analytic_rate, "; across ", y.measured_rate, " vs ", y.analytic_rate)};
}

// 4. sharpness rises then flattens for a single dot
Outcome sharpening() {
    ExperimentConfig c;
    c.threads = hw_threads();
    const auto rec = run(c);
    const auto& f = rec.frames;
    bool rising = true;
    for (int k = 1; k < 5; ++k) rising = rising && f[k].sharpness > f[k - 1].sharpness;
    const double first = f[1].sharpness - f[0].sharpness;
    double worst_late = 0;
    for (std::size_t k = f.size() - 5; k < f.size(); ++k) worst_late = std::max(worst_late, f[k].sharpness - f[k - 1].sharpness);
    const bool later = f[10].sharpness > f[2].sharpness;
    return {rising && later && first > 0 && worst_late < 0.25 * first,
            fmt("sharpness ", f[0].sharpness, " -> ", f[4].sharpness, " (frame 4) -> ", f.back().sharpness,
                "; first increment ", first, ", largest of last 5 ", worst_late)};
}

// 5. motion inertia through a black occluder
Outcome black_occluder() {
    ExperimentConfig c;
    c.threads = hw_threads();
    c.stimulus.kind = StimulusKind::black_occluder;
    c.stimulus.direction_deg = 60;
    c.stimulus.start = {6, 2 * kRowPitch};
    const auto rec = run(c);
    const auto& f = rec.frames;
    int entry = -1, exit = -1;
    for (int k = 0; k < static_cast<int>(f.size()); ++k) {
        if (entry < 0 && !f[k].target_visible) entry = k;
        if (entry >= 0 && exit < 0 && k > entry && f[k].target_visible) exit = k;
    }
    if (entry < 5 || exit < 0 || exit + 2 >= static_cast<int>(f.size()))
        return {false, fmt("band crossing not inside the run (entry ", entry, ", exit ", exit, ")")};

    double pre = 0, inside = 0;
    for (int k = entry - 5; k < entry; ++k) pre += f[k].sharpness / 5;
    for (int k = entry; k < exit; ++k) inside += f[k].sharpness / (exit - entry);
    const bool a = inside < pre;

    bool b = true;
    int plateau = 1, longest = 1;
    for (int k = entry; k <= exit; ++k) {
        const double dy = f[k].peak.position.y - f[k - 1].peak.position.y;
        if (dy < -1e-9) b = false;
        plateau = std::abs(dy) <= 1e-9 ? plateau + 1 : 1;
        longest = std::max(longest, plateau);
    }
    b = b && longest <= 2;

    double rec_best = 0;
    for (int k = exit; k <= exit + 2; ++k) rec_best = std::max(rec_best, f[k].sharpness);
    const bool cc = rec_best >= 0.8 * pre;

    std::string ys;
    for (int k = entry - 1; k <= exit; ++k) ys += fmt(f[k].peak.position.y, k < exit ? " " : "");
    return {a && b && cc, fmt("frames ", entry, "-", exit - 1, " hidden; (a) ", a ? "ok" : "no", " in-band ", inside,
                              " vs pre ", pre, "; (b) ", b ? "ok" : "no", " peak Y ", ys, "; (c) ", cc ? "ok" : "no",
                              " recovered ", rec_best)};
}

// direction profile (summed over speeds) at one node
std::vector<double> direction_profile(std::span<const double> a, const VelocityGrid& vg) {
    std::vector<double> p(static_cast<std::size_t>(vg.n_dirs()), 0.0);
    for (std::size_t mu = 0; mu < a.size(); ++mu) p[static_cast<std::size_t>(vg[mu].dir_index)] += a[mu];
    return p;
}

std::vector<int> local_maxima(const std::vector<double>& p) {
    std::vector<int> out;
    const int n = static_cast<int>(p.size());
    for (int i = 0; i < n; ++i)
        if (p[i] > p[(i + 1) % n] && p[i] > p[(i + n - 1) % n]) out.push_back(i);
    return out;
}

// 6. two peaks in a motion occluder
Outcome motion_occluder_with(double distractor_deg, std::string& extra) {
    ExperimentConfig c;
    c.threads = hw_threads();
    c.n_speeds = 3;  // 18 channels
    c.stimulus.kind = StimulusKind::motion_occluder;
    c.stimulus.distractor_direction_deg = distractor_deg;
    const VelocityGrid vg = c.velocity_grid();
    const int target_dir = 0;
    const int distractor_dir =
        static_cast<int>(std::lround(distractor_deg / 360.0 * vg.n_dirs())) % vg.n_dirs();
    const Band band = c.stimulus.band;

    std::vector<std::vector<double>> prof;
    std::vector<char> in_band;
    run(c, build_stimulus(c), [&](const FrameState& s) {
        prof.push_back(direction_profile(s.alpha.node(static_cast<std::size_t>(s.record.target_node)), vg));
        in_band.push_back(band.contains(s.stimulus.target->position));
    });
    int entry = -1, exit = -1;
    for (int k = 0; k < static_cast<int>(in_band.size()); ++k) {
        if (entry < 0 && in_band[k]) entry = k;
        if (entry >= 0 && exit < 0 && !in_band[k]) exit = k;
    }
    if (entry < 0 || exit < 0 || exit + 2 >= static_cast<int>(prof.size())) return {false, "band crossing not inside the run"};

    int two_peak_frames = 0, first_two = -1;
    for (int k = entry; k < exit; ++k) {
        const auto m = local_maxima(prof[k]);
        const bool both = std::find(m.begin(), m.end(), target_dir) != m.end() &&
                          std::find(m.begin(), m.end(), distractor_dir) != m.end();
        if (both) {
            ++two_peak_frames;
            if (first_two < 0) first_two = k;
        }
    }
    int regained = -1;
    for (int k = exit; k <= exit + 2 && regained < 0; ++k) {
        const auto& p = prof[k];
        if (std::max_element(p.begin(), p.end()) - p.begin() == target_dir) regained = k;
    }
    std::string shown;
    if (first_two >= 0) {
        shown = " e.g. frame " + std::to_string(first_two) + " [";
        for (std::size_t i = 0; i < prof[first_two].size(); ++i) shown += fmt(i ? " " : "", prof[first_two][i]);
        shown += "]";
    }
    extra = fmt("distractors at ", distractor_deg, " deg: two peaks in ", two_peak_frames, " of ", exit - entry,
                " in-band frames", shown, "; target direction global max again at ",
                regained < 0 ? std::string("never") : "frame " + std::to_string(regained), " (exit ", exit, ")");
    return {two_peak_frames > 0 && regained >= 0, extra};
}

Outcome motion_occluder() {
    std::string info;
    auto o = motion_occluder_with(120, info);
    std::string info90;
    motion_occluder_with(90, info90);
    o.detail += " | informational, " + info90;
    return o;
}

// 7. outlier detection over 10 seeds
Outcome outliers() {
    int ok = 0;
    std::string per_seed;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        ExperimentConfig c;
        c.threads = hw_threads();
        c.seed = seed;
        c.stimulus.kind = StimulusKind::outlier;
        c.stimulus.n_frames = 10;
        const SpatialLattice lat = c.lattice();
        const VelocityGrid vg = c.velocity_grid();
        bool pass = false;
        run(c, build_stimulus(c), [&](const FrameState& s) {
            if (s.frame != c.stimulus.n_frames - 1) return;
            const int target = s.record.target_node;
            std::vector<double> conf, sharp;
            std::vector<int> seen;
            for (const Dot& d : s.stimulus.dots) {
                if (d == *s.stimulus.target) continue;
                const int n = lat.nearest_node(d.position);
                if (n == target || std::find(seen.begin(), seen.end(), n) != seen.end()) continue;
                seen.push_back(n);
                conf.push_back(s.confidence[static_cast<std::size_t>(n)]);
                sharp.push_back(sharpness(s.alpha.node(static_cast<std::size_t>(n))));
            }
            auto median = [](std::vector<double> v) {
                std::sort(v.begin(), v.end());
                const std::size_t h = v.size() / 2;
                return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
            };
            const double mc = median(conf), ms = median(sharp);
            pass = s.record.confidence > mc && s.record.sharpness > ms;
            per_seed += fmt(per_seed.empty() ? "" : "; ", "seed ", seed, " conf ", s.record.confidence, "/", mc,
                            " sharp ", s.record.sharpness, "/", ms);
        });
        ok += pass;
    }
    return {ok >= 9, fmt(ok, "/10 seeds (target/median) ", per_seed)};
}

// 8. discrimination thresholds fall with more jumps; dv = 0 is chance
Outcome discrimination() {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentConfig c;
    c.engine = Engine::kernel;
    c.width = c.height = 16;
    c.stimulus.start = {3, 8 * kRowPitch};
    c.threads = hw_threads();
    std::vector<double> grid{0.0};
    for (double d : c.discrimination.dv_grid) grid.push_back(d);
    const int trials = 100;
    const auto res = speed_discrimination(c, grid, {2, 4, 8}, trials);
    const double t = seconds_since(t0);

    bool monotone = true;
    std::string th;
    std::optional<double> prev;
    for (const auto& row : res.thresholds) {
        th += fmt(th.empty() ? "" : ", ", row.n_jumps, " jumps: ",
                  row.threshold ? fmt(*row.threshold, row.below_grid ? " (at grid floor)" : "") : std::string("none"));
        if (!row.threshold) {
            monotone = false;
            continue;
        }
        if (prev && *row.threshold > *prev) monotone = false;
        prev = row.threshold;
    }
    bool chance = true;
    std::string zero;
    const auto [lo, hi] = binomial_ci95(0.5, trials);
    for (const auto& cell : res.cells) {
        if (cell.dv_over_v != 0.0) continue;
        const double p = cell.percent_correct();
        chance = chance && p >= lo && p <= hi;
        zero += fmt(zero.empty() ? "" : " ", p);
    }
    return {monotone && chance && t < 600,
            fmt("thresholds ", th, "; dv=0 correct ", zero, " (95% CI ", lo, "-", hi, "); ", t, " s")};
}

// 9. stability bound accepts the default step and catches 10x
Outcome stability() {
    ExperimentConfig c;
    const SpatialLattice lat = c.lattice();
    const VelocityGrid vg = c.velocity_grid();
    const double bound = stability_max_dt(c.prior, lat, vg, c.pde);
    const bool accepts = 0.6e-3 <= bound;

    bool ctor_rejects = false;
    try {
        PdeSolver(lat, vg, c.prior, 10 * bound, c.pde);
    } catch (const StabilityViolation&) {
        ctor_rejects = true;
    }

    PdeOptions loose = c.pde;
    loose.enforce_stability = false;
    const PdeSolver solver(lat, vg, c.prior, 10 * bound, loose);
    const auto seq = build_stimulus(c);
    auto alpha = ProbabilityField::uniform(lat.size(), vg.size());
    const auto F = tuning_matrix(vg, c.sigma_lv_L, c.sigma_lv_T);
    alpha = update(alpha, evaluate(respond(seq.frames[0].dots, lat, vg, c.measurement), F)).alpha;
    bool detected = false, silent_nan = false;
    std::string what;
    try {
        for (int k = 0; k < 200; ++k) {
            solver.step(alpha, 10 * bound);
            for (double v : alpha.values())
                if (!std::isfinite(v)) silent_nan = true;
        }
    } catch (const StabilityViolation& e) {
        detected = true;
        what = e.what();
    }
    return {accepts && ctor_rejects && detected && !silent_nan,
            fmt("bound ", bound * 1e3, " ms; 0.6 ms ", accepts ? "accepted" : "rejected", "; 10x bound ",
                ctor_rejects ? "refused at construction" : "accepted at construction", ", unchecked run: ",
                detected ? "\"" + what + "\"" : std::string("no error"))};
}

// 10. byte-identical CSV
Outcome determinism() {
    std::vector<std::string> csv;
    for (auto engine : {Engine::pde, Engine::kernel}) {
        for (int threads : {1, 1, 4}) {
            ExperimentConfig c;
            c.engine = engine;
            c.threads = threads;
            c.seed = 7;
            c.stimulus.kind = StimulusKind::outlier;
            c.stimulus.n_frames = 6;
            std::ostringstream os;
            write_metrics_csv(os, run(c));
            csv.push_back(os.str());
        }
    }
    const bool pde_same = csv[0] == csv[1] && csv[0] == csv[2];
    const bool ker_same = csv[3] == csv[4] && csv[3] == csv[5];
    return {pde_same && ker_same, fmt("finite-difference ", pde_same ? "identical" : "DIFFERS", ", kernel ",
                                      ker_same ? "identical" : "DIFFERS", " (2 runs at 1 thread, 1 at 4 threads; ",
                                      csv[0].size(), " bytes)")};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"normalization and positivity over a 1000-step run", normalization},
        {"kernel oracle agreement and convergence", oracle},
        {"analytic diffusion in velocity and space", diffusion},
        {"sharpness rises and flattens for a single dot", sharpening},
        {"motion inertia through a black occluder", black_occluder},
        {"two direction peaks in a motion occluder", motion_occluder},
        {"outlier target stands out in confidence and sharpness", outliers},
        {"discrimination threshold falls with jumps, chance at zero", discrimination},
        {"stability bound and violation detection", stability},
        {"deterministic CSV across runs and threads", determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.passed;
        std::printf("%s criterion %zu: %s -- %s [%.1f s]\n", o.passed ? "PASS" : "FAIL", i + 1, criteria[i].first,
                    o.detail.c_str(), seconds_since(t0));
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
