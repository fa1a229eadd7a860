#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "tcm/harness.hpp"

using namespace tcm;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig c;
    c.width = c.height = 12;
    c.n_speeds = 3;
    c.stimulus.n_frames = 6;
    c.stimulus.start = {2, 6 * kRowPitch};
    return c;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("tcm_test_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("config parser reads keys, lists and comments") {
    const auto c = parse_config_string(
        "# comment\n"
        "width = 16\n height=8  \n"
        "engine = kernel\n"
        "drift = central # trailing\n"
        "stimulus = motion_occluder\n"
        "band_axis = y\n"
        "dv_grid = 0.1, 0.2\n"
        "n_jumps = 2,4\n"
        "snapshot_frames = 1, 3\n"
        "seed = 42\n");
    CHECK(c.width == 16);
    CHECK(c.height == 8);
    CHECK(c.engine == Engine::kernel);
    CHECK(c.pde.drift == DriftScheme::central);
    CHECK(c.stimulus.kind == StimulusKind::motion_occluder);
    CHECK(c.stimulus.band.axis == Band::Axis::y);
    CHECK(c.discrimination.dv_grid == std::vector<double>{0.1, 0.2});
    CHECK(c.discrimination.n_jumps == std::vector<int>{2, 4});
    CHECK(c.snapshot_frames == std::vector<int>{1, 3});
    CHECK(c.seed == 42u);
}

TEST_CASE("config errors name the offending line") {
    auto message = [](const std::string& text) {
        try {
            parse_config_string(text);
        } catch (const std::invalid_argument& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(message("width = 4\nbogus = 1\n").find("line 2") != std::string::npos);
    CHECK(message("width = four\n").find("line 1") != std::string::npos);
    CHECK(message("engine = spectral\n").find("line 1") != std::string::npos);
    CHECK(message("no equals sign\n").find("line 1") != std::string::npos);
    CHECK_THROWS(load_config("/nonexistent/dir/x.cfg"));
}

TEST_CASE("validation rejects inconsistent configs") {
    ExperimentConfig c;
    CHECK_NOTHROW(c.validate());
    c.dt = 1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = {};
    c.threads = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = {};
    c.prior.sigma_x_L = -1;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = {};
    c.frame_interval = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("every stimulus kind can be built from a config") {
    auto c = small_config();
    for (auto kind : {StimulusKind::single_dot, StimulusKind::circular, StimulusKind::black_occluder,
                      StimulusKind::motion_occluder, StimulusKind::outlier, StimulusKind::speed_pair}) {
        c.stimulus.kind = kind;
        c.stimulus.center = {6, 6 * kRowPitch};
        c.stimulus.radius = 3;
        c.stimulus.band = {Band::Axis::x, 4, 7};
        c.stimulus.occluder_y_min = 3;
        c.stimulus.occluder_y_max = 5;
        const auto s = build_stimulus(c);
        CHECK(s.width == 12);
        CHECK(static_cast<int>(s.frames.size()) == c.stimulus.n_frames);
    }
}

TEST_CASE("stimulus files load through the config") {
    auto c = small_config();
    const auto dir = scratch("stimfile");
    fs::create_directories(dir);
    const auto seq = build_stimulus(c);
    {
        std::ofstream out(dir / "s.txt");
        write_stimulus(out, seq);
    }
    c.stimulus.kind = StimulusKind::file;
    c.stimulus.file = (dir / "s.txt").string();
    CHECK(build_stimulus(c) == seq);
    c.stimulus.file = (dir / "missing.txt").string();
    CHECK_THROWS(build_stimulus(c));
}

TEST_CASE("run records every frame and tracks the dot") {
    for (auto engine : {Engine::pde, Engine::kernel}) {
        auto c = small_config();
        c.engine = engine;
        c.snapshot_frames = {0, 5};
        int observed = 0;
        const auto rec = run(c, [&](const FrameState& s) {
            ++observed;
            CHECK(max_normalization_error(s.alpha) < 1e-12);
            CHECK(min_value(s.alpha) >= 0);
        });
        REQUIRE(rec.frames.size() == 6u);
        CHECK(observed == 6);
        REQUIRE(rec.snapshots.size() == 2u);
        CHECK(rec.snapshots[1].frame == 5);
        for (std::size_t k = 0; k < 6; ++k) {
            CHECK(rec.frames[k].frame == static_cast<int>(k));
            CHECK(rec.frames[k].target_visible);
            CHECK(rec.frames[k].time == Approx(k / 6.0));
        }
        CHECK(rec.frames.back().sharpness > rec.frames.front().sharpness);
        CHECK(rec.frames.back().mean_velocity.x > 2.0);
    }
}

TEST_CASE("run rejects a stimulus for another lattice") {
    auto c = small_config();
    const auto seq = gen_single_dot({16, 16, 1.0 / 6}, 6, 0, {1, 1}, 3);
    CHECK_THROWS_AS(run(c, seq), std::invalid_argument);
}

TEST_CASE("metrics CSV is byte-identical across runs and thread counts") {
    auto c = small_config();
    c.stimulus.kind = StimulusKind::outlier;
    c.stimulus.n_distractors = 8;
    std::ostringstream a, b, d;
    write_metrics_csv(a, run(c));
    write_metrics_csv(b, run(c));
    c.threads = 4;
    write_metrics_csv(d, run(c));
    CHECK(a.str() == b.str());
    CHECK(a.str() == d.str());
    CHECK(a.str().rfind("frame,sharpness,confidence,peak_x,peak_y,mean_vx,mean_vy\n", 0) == 0);
    std::size_t lines = 0;
    for (char ch : a.str()) lines += ch == '\n';
    CHECK(lines == 7u);
}

TEST_CASE("emit writes metrics, JSON and PGM snapshots") {
    auto c = small_config();
    c.snapshot_frames = {2};
    const auto rec = run(c);
    const auto dir = scratch("emit");
    emit(rec, c.lattice(), c.velocity_grid(), dir);
    CHECK(fs::exists(dir / "metrics.csv"));
    const auto j = nlohmann::json::parse(slurp(dir / "snapshot_2.json"));
    CHECK(j["frame"] == 2);
    CHECK(j["alpha"].size() == 144u);
    CHECK(j["alpha"][0].size() == 18u);
    CHECK(j["channels"].size() == 18u);
    CHECK(j["confidence"].size() == 144u);
    double sum = 0;
    for (double v : j["alpha"][17]) sum += v;
    CHECK(sum == Approx(1.0));

    std::istringstream pgm(slurp(dir / "snapshot_2.pgm"));
    std::string magic;
    int w = 0, h = 0, maxv = 0;
    pgm >> magic >> w >> h >> maxv;
    CHECK(magic == "P2");
    CHECK(w == 12);
    CHECK(h == 12);
    CHECK(maxv == 255);
    int count = 0, px = 0, top = 0;
    while (pgm >> px) {
        ++count;
        CHECK(px >= 0);
        CHECK(px <= 255);
        top = std::max(top, px);
    }
    CHECK(count == 144);
    CHECK(top > 0);
}

TEST_CASE("uniform field renders as a flat image") {
    const SpatialLattice lat(5, 4);
    std::ostringstream os;
    write_sharpness_pgm(os, ProbabilityField::uniform(20, 30), lat);
    std::istringstream in(os.str());
    std::string magic;
    int w, h, m, px;
    in >> magic >> w >> h >> m;
    std::set<int> values;
    while (in >> px) values.insert(px);
    CHECK(values == std::set<int>{0});
}

TEST_CASE("emit reports the failing path") {
    const auto file = scratch("blocker");
    { std::ofstream(file) << "x"; }
    try {
        emit({}, SpatialLattice(2, 2), VelocityGrid::polar(6, 1, 2, 2), file / "sub");
        FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("tcm_test_blocker") != std::string::npos);
    }
}

TEST_CASE("threshold interpolation") {
    const std::vector<double> dv{0.0, 0.1, 0.2, 0.4};
    SECTION("crossing between grid points is log-linear") {
        const auto r = interpolate_threshold(dv, {0.5, 0.6, 0.7, 0.9}, 0.8, 4);
        REQUIRE(r.threshold);
        CHECK(*r.threshold == Approx(std::sqrt(0.2 * 0.4)));
        CHECK_FALSE(r.below_grid);
        CHECK(r.n_jumps == 4);
    }
    SECTION("already at criterion on the first positive point") {
        const auto r = interpolate_threshold(dv, {0.5, 0.85, 0.9, 1.0}, 0.8, 2);
        REQUIRE(r.threshold);
        CHECK(*r.threshold == 0.1);
        CHECK(r.below_grid);
    }
    SECTION("never reaching criterion gives no threshold") {
        CHECK_FALSE(interpolate_threshold(dv, {0.5, 0.5, 0.6, 0.7}, 0.8, 2).threshold);
    }
}

TEST_CASE("perceived speed averages the last three frames") {
    RunRecord r;
    for (double v : {1.0, 2.0, 3.0, 4.0, 5.0}) {
        FrameRecord f;
        f.mean_velocity = {0.0, v};
        r.frames.push_back(f);
    }
    CHECK(perceived_speed(r) == Approx(4.0));
    r.frames.resize(2);
    CHECK(perceived_speed(r) == Approx(1.5));
    CHECK_THROWS(perceived_speed(RunRecord{}));
}

TEST_CASE("trial seeds are distinct across cells and trials") {
    std::set<std::uint64_t> seen;
    for (int nj : {2, 4, 8})
        for (std::size_t di = 0; di < 8; ++di)
            for (int t = 0; t < 100; ++t) seen.insert(trial_seed(1, nj, di, t));
    CHECK(seen.size() == 3u * 8u * 100u);
    CHECK(trial_seed(1, 2, 0, 0) != trial_seed(2, 2, 0, 0));
}

TEST_CASE("binomial interval is centered and shrinks with n") {
    const auto [lo, hi] = binomial_ci95(0.5, 100);
    CHECK((lo + hi) / 2 == Approx(0.5));
    CHECK(hi - lo == Approx(2 * 1.959963984540054 * 0.05));
    const auto [lo2, hi2] = binomial_ci95(0.5, 400);
    CHECK(hi2 - lo2 < hi - lo);
}

TEST_CASE("speed discrimination is deterministic and parallel-safe") {
    ExperimentConfig c;
    c.width = c.height = 10;
    c.engine = Engine::kernel;
    c.stimulus.start = {2, 5 * kRowPitch};
    const auto a = speed_discrimination(c, {0.0, 1.0}, {3}, 6);
    c.threads = 3;
    const auto b = speed_discrimination(c, {0.0, 1.0}, {3}, 6);
    REQUIRE(a.cells.size() == 2u);
    for (std::size_t i = 0; i < 2; ++i) CHECK(a.cells[i].correct == b.cells[i].correct);
    CHECK(a.cells[1].percent_correct() >= a.cells[0].percent_correct());
    CHECK_THROWS_AS(speed_discrimination(c, {0.1}, {3}, 0), std::invalid_argument);
    CHECK_THROWS_AS(speed_discrimination(c, {-0.1}, {3}, 2), std::invalid_argument);
}

TEST_CASE("validate runs on small configs only") {
    ExperimentConfig c;
    CHECK_THROWS_AS(validate(c), std::invalid_argument);
    c.width = c.height = 8;
    CHECK_THROWS_AS(validate(c), std::invalid_argument);  // 30 channels
    c.n_speeds = 3;
    const auto rep = validate(c);
    CHECK(rep.checks.size() == 6u);
    CHECK(rep.all_passed());
}
