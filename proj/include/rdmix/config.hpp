#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rdmix/adaptivity.hpp"
#include "rdmix/assembly.hpp"
#include "rdmix/error.hpp"
#include "rdmix/linalg.hpp"
#include "rdmix/mesh.hpp"
#include "rdmix/models.hpp"

namespace rdmix {

// ---------------------------------------------------------------------------------------
// Line-oriented text: [section] headers, key = value pairs, '#' or ';' comments.
// Sections may repeat; keys may not repeat within one section.
// ---------------------------------------------------------------------------------------

struct IniSection {
    std::string name;
    int line = 0;
    std::map<std::string, std::string> values;
    std::map<std::string, int> lines;

    bool has(const std::string& key) const { return values.count(key) > 0; }
};

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_words(const std::string& s, const std::string& seps = " \t,") {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (seps.find(c) != std::string::npos) {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

inline std::vector<IniSection> parse_ini(std::istream& in, const std::string& source = "<config>") {
    std::vector<IniSection> out;
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = raw;
        const auto c = s.find_first_of("#;");
        if (c != std::string::npos) s = s.substr(0, c);
        s = trim(s);
        if (s.empty()) continue;
        const std::string where = source + ":" + std::to_string(line);
        if (s.front() == '[') {
            RDMIX_REQUIRE(s.back() == ']' && s.size() > 2, ParseError, where + ": malformed section header");
            IniSection sec;
            sec.name = trim(s.substr(1, s.size() - 2));
            sec.line = line;
            out.push_back(std::move(sec));
            continue;
        }
        const auto eq = s.find('=');
        RDMIX_REQUIRE(eq != std::string::npos, ParseError, where + ": expected 'key = value'");
        RDMIX_REQUIRE(!out.empty(), ParseError, where + ": key outside of any section");
        const std::string key = trim(s.substr(0, eq));
        RDMIX_REQUIRE(!key.empty(), ParseError, where + ": empty key");
        auto& sec = out.back();
        RDMIX_REQUIRE(!sec.has(key), ParseError, where + ": duplicate key '" + key + "'");
        sec.values[key] = trim(s.substr(eq + 1));
        sec.lines[key] = line;
    }
    return out;
}

// ---------------------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------------------

struct MeshSpec {
    std::string file;  // empty: structured
    MeshFormat format = MeshFormat::Native;
    int nx = 5, ny = 5;
    Box box{-1.0, 1.0, -1.0, 1.0};
    Diagonal diagonal = Diagonal::Right;
    std::string regions = "none";  // none | checkerboard | strips
    int patches = 5;
    std::vector<double> breaks;  // strip boundaries along x
};

struct DiffusionSpec {
    Tensor2 fallback = Tensor2::isotropic(1.0);
    std::map<int, Tensor2> regions;
    std::vector<double> species_scale;  // multiplies the field per species
};

struct BoundarySpec {
    std::vector<int> natural, essential;
    std::string natural_value = "0";    // number, or "exact"
    std::string essential_value = "0";  // number, or "exact"
};

struct ModelSpec {
    std::string type = "none";  // none | fisher | competition | aliev_panfilov
    int species = 1;
    double rate = 1.0;
    std::vector<std::vector<double>> matrix;
    AlievPanfilovParams ap;
};

/// One assignment of initial data; later entries override earlier ones where they apply.
struct InitialSpec {
    int species = -1;  // -1: all
    double value = 0.0;
    std::optional<Box> box;
    std::optional<int> region;
    double noise = 0.0;  // uniform perturbation amplitude
};

struct ManufacturedSpec {
    std::string name;  // empty: none
    double t_star = 1.0;
    double d = 1.0;
    double radius = 0.75;
};

struct StimulusSpec {
    int species = 0;
    Box box{};
    double t_start = 0.0, t_end = 0.0;
    double amplitude = 0.0;
};

struct OutputSpec {
    std::string dir;  // empty: no files
    int every = 1;
    bool vtk = false;
    std::optional<double> wavefront_level;
    char wavefront_axis = 'x';
};

/// What `bench` does with a preset.
struct StudySpec {
    std::string kind = "run";  // run | converge | compare | meshes
    std::string mode = "mesh";  // converge: mesh | dt | order
    int levels = 4;
    int uniform_order = 4;  // compare: order of the uniform reference run
    std::vector<int> meshes;  // meshes: nx per run
};

struct Config {
    MeshSpec mesh;
    DiffusionSpec diffusion;
    BoundarySpec boundary;
    ModelSpec model;
    std::vector<InitialSpec> initial;
    ManufacturedSpec manufactured;
    std::vector<StimulusSpec> stimuli;
    std::string scheme = "bdf2";
    double dt = 0.1;
    double t_end = 1.0;
    int order = 1;
    bool adaptive = false;
    AdaptParams adapt;
    SolverOptions solver;
    double blowup = 1e6;
    OutputSpec output;
    std::uint64_t seed = 0;
    StudySpec study;

    bool has_exact() const { return !manufactured.name.empty(); }
    int species() const { return has_exact() ? 1 : model.species; }

    void validate() const {
        RDMIX_REQUIRE(t_end > 0.0, Error, "config: T must be positive");
        RDMIX_REQUIRE(dt > 0.0, Error, "config: dt must be positive");
        RDMIX_REQUIRE(dt <= t_end * (1.0 + 1e-12), Error, "config: dt must not exceed T");
        RDMIX_REQUIRE(order >= 0 && order <= kOrderMax, Error, "config: order outside [0, 8]");
        RDMIX_REQUIRE(output.every >= 1, Error, "config: output every must be >= 1");
        if (adaptive) adapt.validate();
        RDMIX_REQUIRE(species() >= 1, Error, "config: at least one species required");
        for (const auto& s : initial)
            RDMIX_REQUIRE(s.species < species(), Error,
                          "config: initial data for species " + std::to_string(s.species) + " out of range");
    }
};

namespace detail {

inline double to_double(const IniSection& s, const std::string& key) {
    const std::string& v = s.values.at(key);
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos == v.size()) return d;
    } catch (const std::exception&) {
    }
    throw ParseError("line " + std::to_string(s.lines.at(key)) + ": [" + s.name + "] " + key +
                     ": expected a number, got '" + v + "'");
}

inline int to_int(const IniSection& s, const std::string& key) {
    const double d = to_double(s, key);
    RDMIX_REQUIRE(d == static_cast<int>(d), ParseError,
                  "line " + std::to_string(s.lines.at(key)) + ": [" + s.name + "] " + key + ": expected an integer");
    return static_cast<int>(d);
}

inline bool to_bool(const IniSection& s, const std::string& key) {
    std::string v = s.values.at(key);
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
    if (v == "on" || v == "true" || v == "yes" || v == "1") return true;
    if (v == "off" || v == "false" || v == "no" || v == "0") return false;
    throw ParseError("line " + std::to_string(s.lines.at(key)) + ": [" + s.name + "] " + key +
                     ": expected on/off, got '" + v + "'");
}

inline std::vector<double> to_doubles(const IniSection& s, const std::string& key) {
    std::vector<double> out;
    for (const auto& w : split_words(s.values.at(key))) {
        try {
            out.push_back(std::stod(w));
        } catch (const std::exception&) {
            throw ParseError("line " + std::to_string(s.lines.at(key)) + ": [" + s.name + "] " + key +
                             ": bad number '" + w + "'");
        }
    }
    return out;
}

inline std::vector<int> to_ints(const IniSection& s, const std::string& key) {
    std::vector<int> out;
    for (double d : to_doubles(s, key)) out.push_back(static_cast<int>(d));
    return out;
}

inline Box to_box(const IniSection& s, const std::string& key) {
    const auto v = to_doubles(s, key);
    RDMIX_REQUIRE(v.size() == 4, ParseError,
                  "line " + std::to_string(s.lines.at(key)) + ": [" + s.name + "] " + key +
                      ": expected xmin xmax ymin ymax");
    return Box{v[0], v[1], v[2], v[3]};
}

inline Tensor2 to_tensor(const IniSection& s, const std::string& key) {
    const auto v = to_doubles(s, key);
    if (v.size() == 1) return Tensor2::isotropic(v[0]);
    RDMIX_REQUIRE(v.size() == 3, ParseError,
                  "line " + std::to_string(s.lines.at(key)) + ": [" + s.name + "] " + key +
                      ": expected d or dxx dxy dyy");
    return Tensor2{v[0], v[1], v[2]};
}

inline void check_keys(const IniSection& s, const std::vector<std::string>& allowed, const std::string& prefix = "") {
    for (const auto& [k, v] : s.values) {
        if (std::find(allowed.begin(), allowed.end(), k) != allowed.end()) continue;
        if (!prefix.empty() && k.rfind(prefix, 0) == 0) continue;
        throw ParseError("line " + std::to_string(s.lines.at(k)) + ": unknown key '" + k + "' in [" + s.name + "]");
    }
}

inline std::vector<std::vector<double>> to_matrix(const IniSection& s, const std::string& key) {
    const std::string& v = s.values.at(key);
    if (v == "segregation") return segregation_matrix();
    if (v == "cyclic") return cyclic_matrix();
    const auto flat = to_doubles(s, key);
    const int n = static_cast<int>(std::lround(std::sqrt(static_cast<double>(flat.size()))));
    RDMIX_REQUIRE(n * n == static_cast<int>(flat.size()) && n > 0, ParseError,
                  "line " + std::to_string(s.lines.at(key)) + ": interaction matrix must be square");
    std::vector<std::vector<double>> a(static_cast<std::size_t>(n), std::vector<double>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a[i][j] = flat[i * n + j];
    return a;
}

} // namespace detail

inline Config parse_config(std::istream& in, const std::string& source = "<config>") {
    using namespace detail;
    Config c;
    for (const auto& s : parse_ini(in, source)) {
        auto has = [&](const char* k) { return s.has(k); };
        if (s.name == "mesh") {
            check_keys(s, {"file", "format", "nx", "ny", "box", "diagonal", "regions", "patches", "breaks"});
            if (has("file")) c.mesh.file = s.values.at("file");
            if (has("format")) {
                const auto& f = s.values.at("format");
                RDMIX_REQUIRE(f == "native" || f == "gmsh", ParseError, "[mesh] format must be native or gmsh");
                c.mesh.format = f == "gmsh" ? MeshFormat::GmshV2 : MeshFormat::Native;
            }
            if (has("nx")) c.mesh.nx = to_int(s, "nx");
            c.mesh.ny = has("ny") ? to_int(s, "ny") : c.mesh.nx;
            if (has("box")) c.mesh.box = to_box(s, "box");
            if (has("diagonal")) {
                const auto& d = s.values.at("diagonal");
                RDMIX_REQUIRE(d == "right" || d == "crossed", ParseError, "[mesh] diagonal must be right or crossed");
                c.mesh.diagonal = d == "crossed" ? Diagonal::Crossed : Diagonal::Right;
            }
            if (has("regions")) c.mesh.regions = s.values.at("regions");
            if (has("patches")) c.mesh.patches = to_int(s, "patches");
            if (has("breaks")) c.mesh.breaks = to_doubles(s, "breaks");
        } else if (s.name == "diffusion") {
            check_keys(s, {"d", "species"}, "region.");
            if (has("d")) c.diffusion.fallback = to_tensor(s, "d");
            if (has("species")) c.diffusion.species_scale = to_doubles(s, "species");
            for (const auto& [k, v] : s.values)
                if (k.rfind("region.", 0) == 0) c.diffusion.regions[std::stoi(k.substr(7))] = to_tensor(s, k);
        } else if (s.name == "boundary") {
            check_keys(s, {"natural", "essential", "natural_value", "essential_value"});
            if (has("natural")) c.boundary.natural = to_ints(s, "natural");
            if (has("essential")) c.boundary.essential = to_ints(s, "essential");
            if (has("natural_value")) c.boundary.natural_value = s.values.at("natural_value");
            if (has("essential_value")) c.boundary.essential_value = s.values.at("essential_value");
        } else if (s.name == "model") {
            check_keys(s, {"type", "species", "rate", "matrix", "alpha", "gamma", "b", "c", "mu1", "mu2", "preset"});
            if (has("type")) c.model.type = s.values.at("type");
            if (has("preset")) {
                const auto& p = s.values.at("preset");
                if (p == "table") c.model.ap = AlievPanfilovParams{0.01, 0.01, 1.0, 2.0, 7.0, 7.0};
                else RDMIX_REQUIRE(p == "literature", ParseError, "[model] preset must be literature or table");
            }
            if (has("rate")) c.model.rate = to_double(s, "rate");
            if (has("matrix")) c.model.matrix = to_matrix(s, "matrix");
            if (has("alpha")) c.model.ap.alpha = to_double(s, "alpha");
            if (has("gamma")) c.model.ap.gamma = to_double(s, "gamma");
            if (has("b")) c.model.ap.b = to_double(s, "b");
            if (has("c")) c.model.ap.c = to_double(s, "c");
            if (has("mu1")) c.model.ap.mu1 = to_double(s, "mu1");
            if (has("mu2")) c.model.ap.mu2 = to_double(s, "mu2");
            const auto& t = c.model.type;
            RDMIX_REQUIRE(t == "none" || t == "fisher" || t == "competition" || t == "aliev_panfilov", ParseError,
                          "[model] unknown type '" + t + "'");
            if (t == "competition") {
                if (c.model.matrix.empty()) c.model.matrix = segregation_matrix();
                c.model.species = static_cast<int>(c.model.matrix.size());
            } else {
                c.model.species = has("species") ? to_int(s, "species") : 1;
            }
        } else if (s.name == "initial") {
            check_keys(s, {"species", "value", "box", "region", "noise"});
            InitialSpec init;
            if (has("species")) init.species = to_int(s, "species");
            if (has("value")) init.value = to_double(s, "value");
            if (has("box")) init.box = to_box(s, "box");
            if (has("region")) init.region = to_int(s, "region");
            if (has("noise")) init.noise = to_double(s, "noise");
            c.initial.push_back(init);
        } else if (s.name == "manufactured") {
            check_keys(s, {"case", "t_star", "d", "radius"});
            RDMIX_REQUIRE(has("case"), ParseError, "[manufactured] requires 'case'");
            c.manufactured.name = s.values.at("case");
            if (has("t_star")) c.manufactured.t_star = to_double(s, "t_star");
            if (has("d")) c.manufactured.d = to_double(s, "d");
            if (has("radius")) c.manufactured.radius = to_double(s, "radius");
        } else if (s.name == "stimulus") {
            check_keys(s, {"species", "box", "start", "end", "amplitude"});
            StimulusSpec st;
            if (has("species")) st.species = to_int(s, "species");
            RDMIX_REQUIRE(has("box"), ParseError, "[stimulus] requires 'box'");
            st.box = to_box(s, "box");
            if (has("start")) st.t_start = to_double(s, "start");
            if (has("end")) st.t_end = to_double(s, "end");
            if (has("amplitude")) st.amplitude = to_double(s, "amplitude");
            c.stimuli.push_back(st);
        } else if (s.name == "time") {
            check_keys(s, {"scheme", "dt", "T"});
            if (has("scheme")) c.scheme = s.values.at("scheme");
            if (has("dt")) c.dt = to_double(s, "dt");
            if (has("T")) c.t_end = to_double(s, "T");
        } else if (s.name == "space") {
            check_keys(s, {"order"});
            if (has("order")) c.order = to_int(s, "order");
        } else if (s.name == "adapt") {
            check_keys(s, {"enabled", "theta_min", "theta_max", "order_min", "order_max", "cadence"});
            if (has("enabled")) c.adaptive = to_bool(s, "enabled");
            if (has("theta_min")) c.adapt.theta_min = to_double(s, "theta_min");
            if (has("theta_max")) c.adapt.theta_max = to_double(s, "theta_max");
            if (has("order_min")) c.adapt.order_min = to_int(s, "order_min");
            if (has("order_max")) c.adapt.order_max = to_int(s, "order_max");
            if (has("cadence")) c.adapt.cadence = to_int(s, "cadence");
        } else if (s.name == "solver") {
            check_keys(s, {"kind", "tol", "max_iter", "residual_check", "blowup"});
            if (has("kind")) {
                const auto& k = s.values.at("kind");
                RDMIX_REQUIRE(k == "direct" || k == "cg", ParseError, "[solver] kind must be direct or cg");
                c.solver.kind = k == "cg" ? SolverKind::CG : SolverKind::Direct;
            }
            if (has("tol")) c.solver.tol = to_double(s, "tol");
            if (has("max_iter")) c.solver.max_iter = to_int(s, "max_iter");
            if (has("residual_check")) c.solver.residual_check = to_double(s, "residual_check");
            if (has("blowup")) c.blowup = to_double(s, "blowup");
        } else if (s.name == "output") {
            check_keys(s, {"dir", "every", "vtk", "wavefront_level", "wavefront_axis"});
            if (has("dir")) c.output.dir = s.values.at("dir");
            if (has("every")) c.output.every = to_int(s, "every");
            if (has("vtk")) c.output.vtk = to_bool(s, "vtk");
            if (has("wavefront_level")) c.output.wavefront_level = to_double(s, "wavefront_level");
            if (has("wavefront_axis")) {
                const auto& a = s.values.at("wavefront_axis");
                RDMIX_REQUIRE(a == "x" || a == "y", ParseError, "[output] wavefront_axis must be x or y");
                c.output.wavefront_axis = a[0];
            }
        } else if (s.name == "study") {
            check_keys(s, {"kind", "mode", "levels", "uniform_order", "meshes"});
            if (has("kind")) c.study.kind = s.values.at("kind");
            RDMIX_REQUIRE(c.study.kind == "run" || c.study.kind == "converge" || c.study.kind == "compare" ||
                              c.study.kind == "meshes",
                          ParseError, "[study] kind must be run, converge, compare or meshes");
            if (has("mode")) c.study.mode = s.values.at("mode");
            if (has("levels")) c.study.levels = to_int(s, "levels");
            if (has("uniform_order")) c.study.uniform_order = to_int(s, "uniform_order");
            if (has("meshes")) c.study.meshes = to_ints(s, "meshes");
        } else if (s.name == "run") {
            check_keys(s, {"seed"});
            if (has("seed")) c.seed = static_cast<std::uint64_t>(to_double(s, "seed"));
        } else {
            throw ParseError(source + ":" + std::to_string(s.line) + ": unknown section [" + s.name + "]");
        }
    }
    return c;
}

inline Config parse_config_string(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

inline Config load_config(const std::string& path) {
    std::ifstream in(path);
    RDMIX_REQUIRE(in.good(), Error, "cannot open config '" + path + "'");
    return parse_config(in, path);
}

} // namespace rdmix
