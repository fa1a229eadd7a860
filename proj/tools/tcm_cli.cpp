#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tcm/tcm.hpp"

namespace {

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> engine;
    std::optional<std::string> out;

    void apply(tcm::ExperimentConfig& c) const {
        if (seed) c.seed = *seed;
        if (engine) c.engine = tcm::parse_engine(*engine);
        if (out) c.out_dir = *out;
    }
};

tcm::ExperimentConfig load(const std::string& path, const Overrides& ov) {
    auto c = tcm::load_config(path);
    ov.apply(c);
    c.validate();
    return c;
}

// A spec is either a config file or an inline list like "stimulus=outlier,frames=10".
tcm::ExperimentConfig load_spec(const std::string& spec, const Overrides& ov) {
    tcm::ExperimentConfig c;
    if (std::filesystem::is_regular_file(spec)) {
        c = tcm::load_config(spec);
    } else if (spec.find('=') != std::string::npos) {
        std::string text = spec;
        for (char& ch : text)
            if (ch == ',' || ch == ';') ch = '\n';
        c = tcm::parse_config_string(text);
    } else {
        throw std::runtime_error("stimulus spec '" + spec + "' is neither a file nor a key=value list");
    }
    ov.apply(c);
    c.validate();
    return c;
}

int cmd_run(const std::string& path, const Overrides& ov) {
    const auto c = load(path, ov);
    const auto rec = tcm::run(c);
    tcm::emit(rec, c.lattice(), c.velocity_grid(), c.out_dir);
    const auto& last = rec.frames.back();
    std::cout << "engine " << tcm::engine_name(c.engine) << ", " << rec.frames.size() << " frames\n"
              << "final target sharpness " << last.sharpness << " nats, confidence " << last.confidence << '\n'
              << "wrote " << (std::filesystem::path(c.out_dir) / "metrics.csv").string();
    if (!rec.snapshots.empty()) std::cout << " and " << rec.snapshots.size() << " snapshot(s)";
    std::cout << '\n';
    return 0;
}

int cmd_discriminate(const std::string& path, const Overrides& ov) {
    const auto c = load(path, ov);
    const auto& d = c.discrimination;
    const auto res = tcm::speed_discrimination(c, d.dv_grid, d.n_jumps, d.trials);

    const std::filesystem::path dir = c.out_dir;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create '" + dir.string() + "': " + ec.message());
    for (const auto& [name, writer] :
         {std::pair{"discrimination.csv", &tcm::write_discrimination_csv}, {"thresholds.csv", &tcm::write_thresholds_csv}}) {
        const auto p = dir / name;
        std::ofstream out(p);
        if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
        writer(out, res);
        if (!out.flush()) throw std::runtime_error("write failed for '" + p.string() + "'");
    }
    tcm::write_thresholds_csv(std::cout, res);
    return 0;
}

int cmd_validate(const std::string& path, const Overrides& ov) {
    const auto c = load(path, ov);
    const auto rep = tcm::validate(c);
    for (const auto& chk : rep.checks) {
        std::cout << (chk.passed ? "PASS " : "FAIL ") << chk.name << ": " << chk.detail << '\n';
    }
    if (!rep.all_passed()) {
        std::cerr << "tcm: validation failed\n";
        return 1;
    }
    return 0;
}

int cmd_emit_stimulus(const std::string& spec, const Overrides& ov) {
    const auto c = load_spec(spec, ov);
    const auto seq = tcm::build_stimulus(c);
    if (!ov.out) {
        tcm::write_stimulus(std::cout, seq);
        return 0;
    }
    const std::filesystem::path dir = *ov.out;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create '" + dir.string() + "': " + ec.message());
    const auto p = dir / "stimulus.txt";
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
    tcm::write_stimulus(out, seq);
    if (!out.flush()) throw std::runtime_error("write failed for '" + p.string() + "'");
    std::cout << "wrote " << p.string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Temporal-coherence motion estimation simulator"};
    app.require_subcommand(1);
    app.fallthrough();

    Overrides ov;
    std::uint64_t seed = 0;
    std::string engine, out;
    auto* seed_opt = app.add_option("--seed", seed, "random seed");
    auto* engine_opt =
        app.add_option("--engine", engine, "prediction engine")->check(CLI::IsMember({"kernel", "pde"}));
    auto* out_opt = app.add_option("--out", out, "output directory");

    std::string arg;
    auto* run = app.add_subcommand("run", "run a predict/measure loop and write metrics");
    run->add_option("config", arg, "config file")->required();
    auto* disc = app.add_subcommand("discriminate", "two-interval speed discrimination");
    disc->add_option("config", arg, "config file")->required();
    auto* val = app.add_subcommand("validate", "numerical checks of the prediction engines");
    val->add_option("config", arg, "config file")->required();
    auto* emit = app.add_subcommand("emit-stimulus", "write a stimulus sequence as text");
    emit->add_option("spec", arg, "config file or key=value list (comma separated)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    if (*seed_opt) ov.seed = seed;
    if (*engine_opt) ov.engine = engine;
    if (*out_opt) ov.out = out;

    try {
        if (*run) return cmd_run(arg, ov);
        if (*disc) return cmd_discriminate(arg, ov);
        if (*val) return cmd_validate(arg, ov);
        if (*emit) return cmd_emit_stimulus(arg, ov);
    } catch (const std::exception& e) {
        std::cerr << "tcm: error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
