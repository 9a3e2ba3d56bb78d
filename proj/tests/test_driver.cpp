#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "rdmix/driver.hpp"

using namespace rdmix;

namespace {

std::string parse_error(const std::string& text) {
    try {
        parse_config_string(text);
    } catch (const ParseError& e) {
        return e.what();
    }
    return "";
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("rdmix_test_" + name);
    std::filesystem::remove_all(p);
    return p;
}

const char* kSmallSmooth = R"(
[mesh]
nx = 2
box = -1 1 -1 1
[manufactured]
case = smooth
[boundary]
natural = 1 2 3 4
natural_value = exact
[time]
dt = 0.1
T = 0.5
[space]
order = 2
[output]
every = 2
)";

}  // namespace

TEST(Config, Defaults) {
    const Config c = parse_config_string("[time]\nT = 2\n");
    EXPECT_EQ(c.scheme, "bdf2");
    EXPECT_DOUBLE_EQ(c.dt, 0.1);
    EXPECT_DOUBLE_EQ(c.t_end, 2.0);
    EXPECT_EQ(c.mesh.nx, 5);
    EXPECT_FALSE(c.adaptive);
}

TEST(Config, FullGrammar) {
    const Config c = parse_config_string(R"(
# comment
[mesh]
nx = 3          ; trailing comment
ny = 2
box = 0 2 0 1
diagonal = crossed
[diffusion]
d = 1 0.2 0.5
region.3 = 0.1
[model]
type = competition
matrix = cyclic
[initial]
species = 1
value = 0.25
box = 0 1 0 1
noise = 0.01
[adapt]
enabled = on
theta_max = 0.6
order_max = 5
[time]
scheme = cnab
dt = 0.2
T = 4
[run]
seed = 42
)");
    EXPECT_EQ(c.mesh.nx, 3);
    EXPECT_EQ(c.mesh.ny, 2);
    EXPECT_EQ(c.mesh.diagonal, Diagonal::Crossed);
    EXPECT_EQ(c.diffusion.fallback, (Tensor2{1.0, 0.2, 0.5}));
    EXPECT_EQ(c.diffusion.regions.at(3), Tensor2::isotropic(0.1));
    EXPECT_EQ(c.model.species, 3);
    EXPECT_EQ(c.model.matrix, cyclic_matrix());
    ASSERT_EQ(c.initial.size(), 1u);
    EXPECT_EQ(c.initial[0].species, 1);
    EXPECT_TRUE(c.initial[0].box.has_value());
    EXPECT_TRUE(c.adaptive);
    EXPECT_DOUBLE_EQ(c.adapt.theta_max, 0.6);
    EXPECT_EQ(c.adapt.order_max, 5);
    EXPECT_EQ(c.scheme, "cnab");
    EXPECT_EQ(c.seed, 42u);
}

TEST(Config, ErrorsCarryLineNumbers) {
    EXPECT_NE(parse_error("[time]\ndt = 0.1\nT = abc\n").find("line 3"), std::string::npos);
    EXPECT_NE(parse_error("[time]\n\ndt 0.1\n").find(":3"), std::string::npos);
    EXPECT_NE(parse_error("[mesh]\nnx = 2\nfoo = 1\n").find("line 3"), std::string::npos);
    EXPECT_NE(parse_error("[mesh\n").find(":1"), std::string::npos);
    EXPECT_NE(parse_error("[time]\ndt = 1\ndt = 2\n").find("duplicate"), std::string::npos);
    EXPECT_NE(parse_error("dt = 1\n").find("outside"), std::string::npos);
    EXPECT_NE(parse_error("[nonsense]\n").find("unknown section"), std::string::npos);
    EXPECT_NE(parse_error("[mesh]\nnx = 2.5\n").find("integer"), std::string::npos);
    EXPECT_NE(parse_error("[mesh]\nbox = 0 1 0\n").find("xmin"), std::string::npos);
    EXPECT_NE(parse_error("[model]\ntype = brusselator\n").find("unknown type"), std::string::npos);
}

TEST(Config, ValidationRejectsBadTimes) {
    EXPECT_THROW(parse_config_string("[time]\nT = -1\n").validate(), Error);
    EXPECT_THROW(parse_config_string("[time]\ndt = 0\n").validate(), Error);
    EXPECT_THROW(parse_config_string("[time]\ndt = 2\nT = 1\n").validate(), Error);
    EXPECT_THROW(parse_config_string("[adapt]\nenabled = on\ntheta_min = 0.9\ntheta_max = 0.5\n").validate(), Error);
}

TEST(Config, AllPresetsParse) {
    for (const auto& entry : std::filesystem::directory_iterator(std::string(RDMIX_SOURCE_DIR) + "/configs")) {
        if (entry.path().extension() != ".cfg") continue;
        SCOPED_TRACE(entry.path().string());
        const Config c = load_config(entry.path().string());
        EXPECT_NO_THROW(c.validate());
        const Mesh mesh = build_mesh(c.mesh);
        EXPECT_NO_THROW(build_problem(c, mesh));
    }
}

TEST(Csv, RoundTripWithQuoting) {
    CsvTable t;
    t.header = {"name", "value", "note"};
    t.rows = {{"a", "1.5", ""}, {"b,c", "-2", "say \"hi\""}, {"line\nbreak", "3e-10", "x"}};
    std::ostringstream out;
    write_csv(out, t);
    EXPECT_NE(out.str().find("\"b,c\""), std::string::npos);
    EXPECT_NE(out.str().find("\"say \"\"hi\"\"\""), std::string::npos);
    const CsvTable back = parse_csv(out.str());
    EXPECT_EQ(back.header, t.header);
    EXPECT_EQ(back.rows, t.rows);
    EXPECT_EQ(back.column("note"), 2);
    EXPECT_THROW(back.column("missing"), Error);
}

TEST(Csv, MalformedRejected) {
    EXPECT_THROW(parse_csv("a,b\n1\n"), ParseError);
    EXPECT_THROW(parse_csv("a\n\"open\n"), ParseError);
}

TEST(Csv, NumbersRoundTrip) {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) EXPECT_EQ(std::stod(format_number(v)), v);
    EXPECT_EQ(format_number(0.5), "0.5");
}

TEST(Vtk, SingleElementOrderOne) {
    const Mesh mesh = Mesh::from_cells({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}}, {7});
    const DofMap dofs(mesh, OrderMap::uniform(mesh, 1));
    const Vector m = project_mass(mesh, dofs, [](Point x) { return x.x; });
    std::ostringstream out;
    write_vtk(out, mesh, dofs, {{"m0", &m, nullptr}});
    const std::string s = out.str();
    EXPECT_NE(s.find("POINTS 3 double"), std::string::npos);
    EXPECT_NE(s.find("CELLS 1 4"), std::string::npos);
    EXPECT_NE(s.find("SCALARS m0 double 1"), std::string::npos);
    EXPECT_NE(s.find("SCALARS region int 1\nLOOKUP_TABLE default\n7\n"), std::string::npos);
}

TEST(Vtk, SubdivisionAndConstantField) {
    const Mesh mesh = generate_structured(1, 1, {0, 1, 0, 1});
    const DofMap dofs(mesh, OrderMap::uniform(mesh, 3));
    const Vector m = project_mass(mesh, dofs, [](Point) { return 0.42; });
    const Vector h(static_cast<std::size_t>(dofs.num_flux()), 0.0);
    std::ostringstream out;
    write_vtk(out, mesh, dofs, {{"m0", &m, &h}});
    std::istringstream in(out.str());
    std::string line;
    int cells = -1;
    bool in_m = false;
    int count = 0;
    while (std::getline(in, line)) {
        if (line.rfind("CELLS", 0) == 0) cells = std::stoi(line.substr(6));
        if (line.rfind("SCALARS m0", 0) == 0) {
            in_m = true;
            std::getline(in, line);
            continue;
        }
        if (in_m) {
            if (line.rfind("VECTORS", 0) == 0) break;
            EXPECT_NEAR(std::stod(line), 0.42, 1e-13);
            ++count;
        }
    }
    EXPECT_EQ(cells, 2 * 9);
    EXPECT_EQ(count, 2 * 10);
}

TEST(Wavefront, LinearProfile) {
    const Mesh mesh = generate_structured(5, 2, {0, 1, 0, 1});
    const DofMap dofs(mesh, OrderMap::uniform(mesh, 1));
    const Vector m = project_mass(mesh, dofs, [](Point x) { return 1.0 - x.x; });
    EXPECT_NEAR(track_wavefront(mesh, dofs, m, 0.6, 'x'), 0.4, 1e-10);
    const Vector my = project_mass(mesh, dofs, [](Point x) { return 1.0 - x.y; });
    EXPECT_NEAR(track_wavefront(mesh, dofs, my, 0.6, 'y'), 0.4, 1e-10);
}

TEST(Wavefront, SharpFront) {
    const Mesh mesh = generate_structured(8, 2, {0, 4, 0, 1});
    const DofMap dofs(mesh, OrderMap::uniform(mesh, 0));
    const Vector m = project_mass(mesh, dofs, [](Point x) { return x.x < 2.0 ? 1.0 : 0.0; });
    EXPECT_NEAR(track_wavefront(mesh, dofs, m, 0.6, 'x'), 2.0, 1e-12);
}

TEST(Wavefront, LevelNotAttained) {
    const Mesh mesh = generate_structured(2, 2, {0, 1, 0, 1});
    const DofMap dofs(mesh, OrderMap::uniform(mesh, 1));
    const Vector m = project_mass(mesh, dofs, [](Point) { return 0.1; });
    EXPECT_THROW(track_wavefront(mesh, dofs, m, 0.6), Error);
    EXPECT_THROW(track_wavefront(mesh, dofs, m, 0.05, 'z'), Error);
}

TEST(Run, ZeroModelKeepsConstantField) {
    Config c = load_config(std::string(RDMIX_SOURCE_DIR) + "/configs/zero.cfg");
    const auto out = scratch("zero");
    c.output.dir = out.string();
    const RunResult r = run(c);
    // initial record, every 5 steps of 10
    EXPECT_EQ(r.report.records.size(), 3u);
    for (const auto& rec : r.report.records) {
        EXPECT_NEAR(rec.mass[0], 0.3, 1e-12);
        EXPECT_LT(rec.eta, 1e-10);
    }
    for (int k = 0; k < r.mesh->num_elements(); ++k)
        EXPECT_NEAR(eval_mass(r.state.dofs, r.state.m(), k, {0.3, 0.3}), 0.3, 1e-12);
    EXPECT_TRUE(std::filesystem::exists(out / "report.csv"));
    EXPECT_TRUE(std::filesystem::exists(out / "timings.csv"));
    EXPECT_TRUE(std::filesystem::exists(out / "state_000010.vtk"));
    const CsvTable t = read_csv((out / "report.csv").string());
    EXPECT_EQ(t.rows.size(), 3u);
    EXPECT_EQ(t.header.front(), "step");
    std::filesystem::remove_all(out);
}

TEST(Run, DeterministicBytes) {
    Config c = parse_config_string(kSmallSmooth);
    c.adaptive = true;
    c.adapt.cadence = 2;
    c.adapt.order_max = 4;
    const auto a = scratch("det_a"), b = scratch("det_b");
    c.output.dir = a.string();
    run(c);
    c.output.dir = b.string();
    run(c);
    EXPECT_EQ(slurp(a / "report.csv"), slurp(b / "report.csv"));
    EXPECT_EQ(slurp(a / "adapt.csv"), slurp(b / "adapt.csv"));
    EXPECT_FALSE(slurp(a / "report.csv").empty());
    std::filesystem::remove_all(a);
    std::filesystem::remove_all(b);
}

TEST(Run, DofsChangeOnlyAtAdaptation) {
    Config c = parse_config_string(kSmallSmooth);
    c.adaptive = true;
    c.adapt.cadence = 2;
    c.adapt.order_max = 4;
    c.output.every = 1;
    int last = -1, changes_outside = 0, adaptations = 0;
    RunHooks hooks;
    hooks.on_step = [&](const Stepper&, const SimState& st, const StepInfo&) {
        const int n = st.dofs.num_flux();
        if (last >= 0 && n != last) ++changes_outside;
        last = n;
    };
    hooks.on_adapt = [&](const Stepper&, const SimState& st, const AdaptRecord& a) {
        ++adaptations;
        EXPECT_LE(a.max_gap, 1);
        EXPECT_TRUE(a.edge_rule);
        last = st.dofs.num_flux();
    };
    const RunResult r = run(c, hooks);
    EXPECT_EQ(changes_outside, 0);
    EXPECT_EQ(adaptations, static_cast<int>(r.report.adaptations.size()));
    EXPECT_GE(adaptations, 2);
}

TEST(Run, ManufacturedNormsReported) {
    const RunResult r = run(parse_config_string(kSmallSmooth));
    ASSERT_FALSE(r.report.records.empty());
    for (const auto& rec : r.report.records) {
        ASSERT_TRUE(rec.errors.has_value());
        EXPECT_GE(rec.errors->l2_m, 0.0);
        EXPECT_NEAR(rec.errors->h1, std::hypot(rec.errors->l2_m, rec.errors->l2_h), 1e-14);
        EXPECT_LT(rec.balance, 1e-8);
    }
    EXPECT_LT(flux_normal_jump(*r.mesh, r.state.dofs, r.state.h()), 1e-10);
}

TEST(Run, ErrorsCarryStepContext) {
    Config c = parse_config_string("[mesh]\nnx = 1\n[model]\ntype = fisher\n[initial]\nvalue = -1\n"
                                   "[time]\ndt = 0.5\nT = 50\n[solver]\nblowup = 100\n");
    try {
        run(c);
        FAIL() << "no blow-up";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("step "), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("blow-up"), std::string::npos);
    }
}

TEST(Study, SlopeHelper) {
    EXPECT_NEAR(slope(4.0, 1.0, 0.2, 0.1), 2.0, 1e-14);
    EXPECT_EQ(slope(0.0, 1.0, 0.2, 0.1), 0.0);
    EXPECT_THROW(parse_study_mode("space"), Error);
}

TEST(Study, MeshRefinementReducesErrors) {
    Config c = parse_config_string(kSmallSmooth);
    const auto rows = convergence_study(c, 2, StudyMode::Mesh);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_LT(rows[1].errors.l2_m, rows[0].errors.l2_m);
    EXPECT_GT(rows[1].slope_l2_m, 1.0);
    const CsvTable t = study_table(rows);
    EXPECT_EQ(t.rows.size(), 2u);
    EXPECT_THROW(convergence_study(c, 1, StudyMode::Mesh), Error);
    EXPECT_THROW(convergence_study(parse_config_string("[time]\nT = 1\n"), 2, StudyMode::Mesh), Error);
}

TEST(Study, OrderRaisingSaturates) {
    Config c = parse_config_string(kSmallSmooth);
    c.order = 1;
    const auto rows = convergence_study(c, 3, StudyMode::Order);
    EXPECT_LT(rows[1].errors.energy, rows[0].errors.energy);
    EXPECT_LT(rows[2].errors.energy, rows[1].errors.energy);
}
