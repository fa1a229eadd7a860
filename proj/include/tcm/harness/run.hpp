#pragma once

#include <algorithm>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "tcm/estimation.hpp"
#include "tcm/field.hpp"
#include "tcm/harness/config.hpp"
#include "tcm/likelihood.hpp"
#include "tcm/measurement.hpp"
#include "tcm/prediction.hpp"
#include "tcm/stimuli.hpp"

namespace tcm {

/// Advances a field by one frame interval with the configured engine.
/// The kernel engine applies the per-frame prior (unscaled covariances); the
/// finite-difference engine integrates ceil(frame_interval / dt) equal steps.
class FramePredictor {
public:
    explicit FramePredictor(const ExperimentConfig& c) : frame_interval_(c.frame_interval) {
        PdeOptions opts = c.pde;
        opts.threads = c.threads;
        if (c.engine == Engine::pde) {
            pde_.emplace(c.lattice(), c.velocity_grid(), c.prior, c.dt, opts);
        } else {
            kernel_.emplace(c.lattice(), c.velocity_grid(), c.prior, c.frame_interval, false, c.threads);
        }
    }

    /// `substep` runs after every finite-difference step (or once for the kernel).
    void operator()(ProbabilityField& alpha, const std::function<void(const ProbabilityField&)>& substep = {}) const {
        if (pde_) {
            const auto steps = static_cast<long>(std::ceil(frame_interval_ / pde_->dt() - 1e-9));
            const double h = frame_interval_ / static_cast<double>(steps);
            for (long k = 0; k < steps; ++k) {
                pde_->step(alpha, h);
                if (substep) substep(alpha);
            }
        } else {
            alpha = (*kernel_)(alpha);
            if (substep) substep(alpha);
        }
    }

private:
    double frame_interval_;
    std::optional<PdeSolver> pde_;
    std::optional<KernelPredictor> kernel_;
};

struct FrameRecord {
    int frame = 0;
    double time = 0.0;            // s
    int target_node = 0;
    bool target_visible = false;  // a measurement of the target reached the field
    double sharpness = 0.0;       // at the target node, nats
    double confidence = 0.0;      // at the target node
    PeakLocation peak;
    Vec2 mean_velocity;           // at the target node, jps
};

struct Snapshot {
    int frame = 0;
    ProbabilityField alpha;
    std::vector<double> confidence;
};

struct RunRecord {
    std::vector<FrameRecord> frames;
    std::vector<Snapshot> snapshots;
};

/// Everything an observer can inspect after a frame's update.
struct FrameState {
    int frame;
    const StimulusFrame& stimulus;
    const ProbabilityField& prediction;
    const ProbabilityField& alpha;
    const std::vector<double>& confidence;
    const FrameRecord& record;
};

using FrameObserver = std::function<void(const FrameState&)>;

/// Predict-measure loop over a stimulus. The field starts uniform. Each frame
/// after the first is preceded by one frame interval of prediction (the
/// uniform start is a fixed point of both engines, so frame 0 skips it).
/// Occluder-masked nodes keep their prediction.
inline RunRecord run(const ExperimentConfig& c, const StimulusSequence& seq, const FrameObserver& observer = {},
                     const std::function<void(const ProbabilityField&)>& substep = {}) {
    c.validate();
    if (seq.width != c.width || seq.height != c.height) {
        throw std::invalid_argument("stimulus lattice does not match config");
    }
    const SpatialLattice lattice = c.lattice();
    const VelocityGrid vgrid = c.velocity_grid();
    const TuningMatrix F = tuning_matrix(vgrid, c.sigma_lv_L, c.sigma_lv_T);
    const FramePredictor predict(c);

    ProbabilityField alpha = ProbabilityField::uniform(lattice.size(), vgrid.size());
    RunRecord rec;
    rec.frames.reserve(seq.frames.size());
    for (std::size_t k = 0; k < seq.frames.size(); ++k) {
        const StimulusFrame& frame = seq.frames[k];
        if (k > 0) predict(alpha, substep);
        else alpha.time = 0.0;

        const MeasurementField phi = respond(frame.dots, lattice, vgrid, c.measurement, c.threads);
        const ChannelField L = evaluate(phi, F);
        const std::vector<char> mask = occluder_mask(frame, lattice);
        UpdateResult upd = update(alpha, L, mask);
        if (substep) substep(upd.alpha);

        FrameRecord fr;
        fr.frame = static_cast<int>(k);
        fr.time = alpha.time;
        if (frame.target) {
            fr.target_node = lattice.nearest_node(frame.target->position);
            fr.target_visible = std::find(frame.dots.begin(), frame.dots.end(), *frame.target) != frame.dots.end() &&
                                !mask[static_cast<std::size_t>(fr.target_node)];
        }
        const auto t = static_cast<std::size_t>(fr.target_node);
        const NodeMetrics nm = node_metrics(upd.alpha, t, upd.confidence[t], vgrid);
        fr.sharpness = nm.sharpness;
        fr.confidence = nm.confidence;
        fr.mean_velocity = nm.mean_velocity;
        fr.peak = peak_track(upd.alpha, lattice);
        rec.frames.push_back(fr);

        if (std::find(c.snapshot_frames.begin(), c.snapshot_frames.end(), static_cast<int>(k)) !=
            c.snapshot_frames.end()) {
            rec.snapshots.push_back({static_cast<int>(k), upd.alpha, upd.confidence});
        }
        if (observer) observer({static_cast<int>(k), frame, alpha, upd.alpha, upd.confidence, rec.frames.back()});
        alpha = std::move(upd.alpha);
    }
    return rec;
}

inline RunRecord run(const ExperimentConfig& c, const FrameObserver& observer = {}) {
    return run(c, build_stimulus(c), observer);
}

}  // namespace tcm
