// Command-line front end: run | converge | bench <name>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rdmix/rdmix.hpp"

#ifndef RDMIX_PRESET_DIR
#define RDMIX_PRESET_DIR "configs"
#endif

namespace fs = std::filesystem;
using namespace rdmix;

namespace {

struct Overrides {
    std::string out;
    std::string scheme;
    double dt = 0.0;
    std::string adaptive;
    long long seed = -1;
    double t_end = 0.0;
};

void apply(Config& cfg, const Overrides& o) {
    if (!o.out.empty()) cfg.output.dir = o.out;
    if (!o.scheme.empty()) cfg.scheme = o.scheme;
    if (o.dt > 0.0) cfg.dt = o.dt;
    if (o.t_end > 0.0) cfg.t_end = o.t_end;
    if (o.adaptive == "on") cfg.adaptive = true;
    if (o.adaptive == "off") cfg.adaptive = false;
    if (o.seed >= 0) cfg.seed = static_cast<std::uint64_t>(o.seed);
}

std::string sub(const std::string& dir, const std::string& name) {
    return dir.empty() ? std::string() : (fs::path(dir) / name).string();
}

void print_table(const CsvTable& t) { write_csv(std::cout, t); }

void summarize(const RunResult& r) {
    const auto& last = r.report.records.back();
    std::printf("t = %s  steps = %d  dofs = %d  eta = %s", format_number(last.time).c_str(), last.step,
                last.flux_dofs + last.mass_dofs, format_number(last.eta).c_str());
    if (last.errors)
        std::printf("  l2_m = %s  h1 = %s  energy = %s", format_number(last.errors->l2_m).c_str(),
                    format_number(last.errors->h1).c_str(), format_number(last.errors->energy).c_str());
    if (last.wavefront) std::printf("  front = %s", format_number(*last.wavefront).c_str());
    std::printf("\n");
}

void do_converge(const Config& cfg, int levels, StudyMode mode) {
    const auto rows = convergence_study(cfg, levels, mode);
    const auto table = study_table(rows);
    if (!cfg.output.dir.empty()) {
        fs::create_directories(cfg.output.dir);
        write_csv(sub(cfg.output.dir, "convergence.csv"), table);
    }
    print_table(table);
}

void do_compare(const Config& cfg) {
    Config adaptive = cfg, uniform = cfg;
    adaptive.adaptive = true;
    adaptive.output.dir = sub(cfg.output.dir, "adaptive");
    uniform.adaptive = false;
    uniform.order = cfg.study.uniform_order;
    uniform.output.dir = sub(cfg.output.dir, "uniform");
    CsvTable t;
    t.header = {"run", "max_dofs", "final_dofs", "eta", "l2_m", "energy"};
    for (const auto* c : {&adaptive, &uniform}) {
        const auto r = run(*c);
        const auto& last = r.report.records.back();
        t.rows.push_back({c == &adaptive ? "adaptive" : "uniform", std::to_string(r.report.max_total_dofs),
                          std::to_string(last.flux_dofs + last.mass_dofs), format_number(last.eta),
                          last.errors ? format_number(last.errors->l2_m) : "",
                          last.errors ? format_number(last.errors->energy) : ""});
    }
    if (!cfg.output.dir.empty()) write_csv(sub(cfg.output.dir, "compare.csv"), t);
    print_table(t);
}

void do_meshes(const Config& cfg) {
    RDMIX_REQUIRE(!cfg.study.meshes.empty(), Error, "[study] meshes list is empty");
    CsvTable fronts;
    fronts.header = {"nx", "time", "wavefront"};
    for (int nx : cfg.study.meshes) {
        Config c = cfg;
        c.mesh.nx = nx;
        c.mesh.ny = static_cast<int>(std::lround(static_cast<double>(cfg.mesh.ny) * nx / cfg.mesh.nx));
        c.output.dir = sub(cfg.output.dir, "nx_" + std::to_string(nx));
        const auto r = run(c);
        std::printf("nx = %d: ", nx);
        summarize(r);
        for (const auto& rec : r.report.records)
            if (rec.wavefront)
                fronts.rows.push_back({std::to_string(nx), format_number(rec.time), format_number(*rec.wavefront)});
    }
    if (!cfg.output.dir.empty() && !fronts.rows.empty()) write_csv(sub(cfg.output.dir, "wavefront.csv"), fronts);
}

const char* kind_of(const std::exception& e) {
    if (dynamic_cast<const ParseError*>(&e)) return "parse";
    if (dynamic_cast<const SolverError*>(&e)) return "solver";
    if (dynamic_cast<const Error*>(&e)) return "model";
    return "internal";
}

std::string quoted(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c == '\n' ? ' ' : c;
    }
    return out + "\"";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mixed finite element reaction-diffusion solver"};
    app.require_subcommand(1);
    Overrides ov;
    std::string config_path, mode = "mesh", preset_dir = RDMIX_PRESET_DIR, bench_name;
    int levels = 4;

    auto add_common = [&](CLI::App* c) {
        c->add_option("--out", ov.out, "Output directory");
        c->add_option("--scheme", ov.scheme, "bdf2 | bdf3 | cnab | ark2");
        c->add_option("--dt", ov.dt, "Time step");
        c->add_option("--T", ov.t_end, "Final time");
        c->add_option("--adaptive", ov.adaptive, "on | off")->check(CLI::IsMember({"on", "off"}));
        c->add_option("--seed", ov.seed, "Seed for random initial perturbations");
    };
    auto* run_cmd = app.add_subcommand("run", "Single simulation");
    run_cmd->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
    add_common(run_cmd);
    auto* conv_cmd = app.add_subcommand("converge", "Convergence study against the manufactured solution");
    conv_cmd->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
    conv_cmd->add_option("--mode", mode, "mesh | dt | order")->check(CLI::IsMember({"mesh", "dt", "order"}));
    conv_cmd->add_option("--levels", levels, "Number of levels (>= 2)");
    add_common(conv_cmd);
    auto* bench_cmd = app.add_subcommand("bench", "Named benchmark preset");
    bench_cmd->add_option("name", bench_name, "Preset name (file <presets>/<name>.cfg)")->required();
    bench_cmd->add_option("--presets", preset_dir, "Preset directory");
    bench_cmd->add_option("--config", config_path, "Use this file instead of the named preset");
    add_common(bench_cmd);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            Config cfg = load_config(config_path);
            apply(cfg, ov);
            summarize(run(cfg));
        } else if (*conv_cmd) {
            Config cfg = load_config(config_path);
            apply(cfg, ov);
            do_converge(cfg, levels, parse_study_mode(mode));
        } else {
            const std::string path =
                config_path.empty() ? (fs::path(preset_dir) / (bench_name + ".cfg")).string() : config_path;
            RDMIX_REQUIRE(fs::exists(path), Error, "no preset '" + bench_name + "' (looked for " + path + ")");
            Config cfg = load_config(path);
            apply(cfg, ov);
            const auto& st = cfg.study;
            if (st.kind == "converge") do_converge(cfg, st.levels, parse_study_mode(st.mode));
            else if (st.kind == "compare") do_compare(cfg);
            else if (st.kind == "meshes") do_meshes(cfg);
            else summarize(run(cfg));
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: kind=%s message=%s\n", kind_of(e), quoted(e.what()).c_str());
        return 1;
    }
    return 0;
}
