#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rdmix/adaptivity.hpp"
#include "rdmix/assembly.hpp"
#include "rdmix/config.hpp"
#include "rdmix/error.hpp"
#include "rdmix/imex.hpp"
#include "rdmix/mesh.hpp"
#include "rdmix/models.hpp"
#include "rdmix/output.hpp"

namespace rdmix {

// ---------------------------------------------------------------------------------------
// Setup
// ---------------------------------------------------------------------------------------

inline Mesh build_mesh(const MeshSpec& spec) {
    Mesh mesh = spec.file.empty() ? generate_structured(spec.nx, spec.ny, spec.box, spec.diagonal)
                                  : load_mesh(spec.file, spec.format);
    if (spec.regions == "none") return mesh;
    std::vector<int> regions(static_cast<std::size_t>(mesh.num_elements()));
    const Box bb = mesh.bounding_box();
    for (int k = 0; k < mesh.num_elements(); ++k) {
        const Point c = mesh.centroid(k);
        if (spec.regions == "checkerboard") {
            RDMIX_REQUIRE(spec.patches >= 1, Error, "mesh: patches must be >= 1");
            const int i = std::clamp(static_cast<int>((c.x - bb.xmin) / (bb.xmax - bb.xmin) * spec.patches), 0,
                                     spec.patches - 1);
            const int j = std::clamp(static_cast<int>((c.y - bb.ymin) / (bb.ymax - bb.ymin) * spec.patches), 0,
                                     spec.patches - 1);
            regions[k] = (i + j) % 2 == (spec.patches - 1) % 2 ? 1 : 2;
        } else if (spec.regions == "strips") {
            int r = 1;
            for (double b : spec.breaks)
                if (c.x > b) ++r;
            regions[k] = r;
        } else {
            throw Error("mesh: unknown region layout '" + spec.regions + "'");
        }
    }
    mesh.set_regions(regions);
    return mesh;
}

inline bool mesh_has_boundary_tag(const Mesh& mesh, int tag) {
    for (const auto& e : mesh.edges())
        if (e.is_boundary() && e.tag == tag) return true;
    return false;
}

/// Outward normal of a side of the structured box by its tag.
inline Point box_normal(int tag) {
    switch (tag) {
    case 1: return {0.0, -1.0};
    case 2: return {1.0, 0.0};
    case 3: return {0.0, 1.0};
    case 4: return {-1.0, 0.0};
    default: throw Error("exact essential data needs a structured box side tag (1-4), got " + std::to_string(tag));
    }
}

inline std::optional<ManufacturedCase> manufactured_of(const Config& cfg) {
    if (!cfg.has_exact()) return std::nullopt;
    return manufactured_case(cfg.manufactured.name, cfg.manufactured.t_star, cfg.manufactured.d,
                             cfg.manufactured.radius);
}

inline std::shared_ptr<const Kinetics> kinetics_of(const Config& cfg) {
    if (cfg.has_exact()) return nullptr;
    const auto& m = cfg.model;
    if (m.type == "fisher") return std::make_shared<FisherKinetics>(m.rate);
    if (m.type == "competition") return std::make_shared<CompetitionKinetics>(m.matrix);
    if (m.type == "aliev_panfilov") return std::make_shared<AlievPanfilovKinetics>(m.ap);
    return nullptr;
}

inline Problem build_problem(const Config& cfg, const Mesh& mesh) {
    const auto mc = manufactured_of(cfg);
    Problem p;
    p.species = cfg.species();
    p.kinetics = kinetics_of(cfg);
    if (p.kinetics && p.kinetics->species() != p.species)
        throw Error("config: model '" + cfg.model.type + "' has " + std::to_string(p.kinetics->species()) +
                    " species, config declares " + std::to_string(p.species));

    DiffusivityField base(mc ? mc->d : cfg.diffusion.fallback);
    if (!mc)
        for (const auto& [r, d] : cfg.diffusion.regions) base.set(r, d);
    for (int s = 0; s < p.species; ++s) {
        const double scale = s < static_cast<int>(cfg.diffusion.species_scale.size()) ? cfg.diffusion.species_scale[s]
                                                                                    : 1.0;
        p.diffusivity.push_back(scale == 1.0 ? base : base.scaled(scale));
    }

    for (int tag : cfg.boundary.natural) {
        RDMIX_REQUIRE(mesh_has_boundary_tag(mesh, tag), Error,
                      "config: natural boundary tag " + std::to_string(tag) + " is absent from the mesh");
        if (cfg.boundary.natural_value == "exact") {
            RDMIX_REQUIRE(mc.has_value(), Error, "config: 'exact' boundary data needs a manufactured case");
            p.bc.natural[tag] = [c = *mc](Point x, double t) { return c.m(x, t); };
        } else {
            const double v = std::stod(cfg.boundary.natural_value);
            p.bc.natural[tag] = [v](Point, double) { return v; };
        }
    }
    for (int tag : cfg.boundary.essential) {
        RDMIX_REQUIRE(mesh_has_boundary_tag(mesh, tag), Error,
                      "config: essential boundary tag " + std::to_string(tag) + " is absent from the mesh");
        if (cfg.boundary.essential_value == "exact") {
            RDMIX_REQUIRE(mc.has_value(), Error, "config: 'exact' boundary data needs a manufactured case");
            const Point n = box_normal(tag);
            p.bc.essential[tag] = [c = *mc, n](Point x, double t) { return -dot(c.h(x, t), n); };
        } else {
            const double v = std::stod(cfg.boundary.essential_value);
            p.bc.essential[tag] = [v](Point, double) { return v; };
        }
    }

    p.source.assign(static_cast<std::size_t>(p.species), nullptr);
    if (mc) p.source[0] = [c = *mc](Point x, double t) { return c.source(x, t); };
    for (const auto& st : cfg.stimuli) {
        RDMIX_REQUIRE(st.species >= 0 && st.species < p.species, Error, "config: stimulus species out of range");
        auto prev = p.source[st.species];
        p.source[st.species] = [prev, st](Point x, double t) {
            double v = prev ? prev(x, t) : 0.0;
            if (t >= st.t_start && t < st.t_end && x.x > st.box.xmin && x.x < st.box.xmax && x.y > st.box.ymin &&
                x.y < st.box.ymax)
                v += st.amplitude;
            return v;
        };
    }
    bool any_source = false;
    for (const auto& s : p.source) any_source = any_source || static_cast<bool>(s);
    if (!any_source) p.source.clear();

    for (int s = 0; s < p.species; ++s) {
        if (mc) {
            p.initial.push_back([c = *mc, t0 = p.t0](int, Point x) { return c.m(x, t0); });
            continue;
        }
        std::vector<InitialSpec> specs;
        for (const auto& is : cfg.initial)
            if (is.species < 0 || is.species == s) specs.push_back(is);
        const std::uint64_t seed = cfg.seed;
        p.initial.push_back([specs, s, seed, &mesh](int k, Point x) {
            double v = 0.0;
            for (const auto& is : specs) {
                if (is.box && !(x.x >= is.box->xmin && x.x <= is.box->xmax && x.y >= is.box->ymin &&
                                x.y <= is.box->ymax))
                    continue;
                if (is.region && mesh.element(k).region != *is.region) continue;
                v = is.value;
                if (is.noise != 0.0) {
                    // one draw per element and species
                    std::mt19937_64 gen(seed * 0x9E3779B97F4A7C15ull + static_cast<std::uint64_t>(k) * 131 +
                                        static_cast<std::uint64_t>(s));
                    v += is.noise * std::uniform_real_distribution<double>(-1.0, 1.0)(gen);
                }
            }
            return v;
        });
    }
    return p;
}

// ---------------------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------------------

struct ErrorNorms {
    double l2_m = 0.0;
    double l2_h = 0.0;
    double div_h = 0.0;
    double h1 = 0.0;      // (||m - m_h||^2 + ||h - h_h||^2)^{1/2}
    double energy = 0.0;  // ||h - h_h||_Div + ||m - m_h||
};

/// Errors against a manufactured solution; per element quadrature degree 2(k+1)+2 or more.
inline ErrorNorms error_norms(const Mesh& mesh, const DofMap& dofs, const Vector& m, const Vector& h,
                              const ManufacturedCase& mc, double t) {
    double em = 0.0, eh = 0.0, ed = 0.0;
    for (int k = 0; k < mesh.num_elements(); ++k) {
        const int deg = std::min(2 * dofs.layout(k).max_degree() + 4, kMaxQuadratureDegree);
        const auto& rule = quadrature_rule(QuadDomain::Triangle, deg);
        const auto geo = ElementGeometry::of(mesh, k);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const Point r = rule.points[q];
            const Point x = geo.map(r);
            const double w = rule.weights[q] * std::abs(geo.det);
            const double dm = eval_mass(dofs, m, k, r) - mc.m(x, t);
            double div = 0.0;
            const Point dh = eval_flux(mesh, dofs, h, k, r, &div) - mc.h(x, t);
            const double dd = div - mc.div_h(x, t);
            em += w * dm * dm;
            eh += w * dot(dh, dh);
            ed += w * dd * dd;
        }
    }
    ErrorNorms n;
    n.l2_m = std::sqrt(em);
    n.l2_h = std::sqrt(eh);
    n.div_h = std::sqrt(ed);
    n.h1 = std::sqrt(em + eh);
    n.energy = std::sqrt(eh + ed) + n.l2_m;
    return n;
}

/// L2 norm of the difference of two mass fields on the same dof map.
inline double mass_difference(const Mesh& mesh, const DofMap& dofs, const Vector& a, const Vector& b) {
    double s = 0.0;
    for (int k = 0; k < mesh.num_elements(); ++k) {
        const int deg = field_quadrature_degree(dofs.mass_order(k));
        const auto& rule = quadrature_rule(QuadDomain::Triangle, deg);
        const auto va = mass_at_field_points(dofs, a, k, deg);
        const auto vb = mass_at_field_points(dofs, b, k, deg);
        const double det = std::abs(ElementGeometry::of(mesh, k).det);
        for (std::size_t q = 0; q < rule.size(); ++q) s += rule.weights[q] * det * (va[q] - vb[q]) * (va[q] - vb[q]);
    }
    return std::sqrt(s);
}

/// Integral of a mass field.
inline double total_mass(const Mesh& mesh, const DofMap& dofs, const Vector& m) {
    double s = 0.0;
    for (int k = 0; k < mesh.num_elements(); ++k) s += m[dofs.mass_offset(k)] * mesh.area(k);
    return s;
}

/// Largest |h_+ . n + h_- . n| over the quadrature points of all interior edges.
inline double flux_normal_jump(const Mesh& mesh, const DofMap& dofs, const Vector& h) {
    double worst = 0.0;
    for (int e = 0; e < mesh.num_edges(); ++e) {
        const auto& ed = mesh.edge(e);
        if (ed.is_boundary()) continue;
        const auto& rule = quadrature_rule(QuadDomain::Segment, edge_quadrature_degree(dofs.edge_count(e)));
        for (std::size_t q = 0; q < rule.size(); ++q) {
            double s = 0.0;
            for (int side = 0; side < 2; ++side) {
                const int k = ed.elements[side];
                const Point v = eval_flux(mesh, dofs, h, k, edge_reference_point(mesh, e, side, rule.points[q].x));
                s += dot(v, mesh.outward_normal(k, ed.local_index[side]));
            }
            worst = std::max(worst, std::abs(s));
        }
    }
    return worst;
}

// ---------------------------------------------------------------------------------------
// Runs
// ---------------------------------------------------------------------------------------

struct RunRecord {
    int step = 0;
    double time = 0.0;
    int flux_dofs = 0, mass_dofs = 0;
    double eta = 0.0, eta_max = 0.0;
    std::optional<ErrorNorms> errors;
    std::optional<double> wavefront;
    std::vector<double> mass;  // per species
    double balance = 0.0, residual = 0.0;
    int order_min = 0, order_max = 0;
    double wall = 0.0;  // seconds spent in the step
};

struct AdaptRecord {
    int step = 0;
    double time = 0.0;
    double eta = 0.0, eta_max = 0.0;
    int flux_dofs = 0, mass_dofs = 0;
    int max_gap = 0;
    bool edge_rule = true;
    std::vector<int> histogram;  // elements per order 0..kOrderMax
};

struct RunReport {
    std::vector<RunRecord> records;
    std::vector<AdaptRecord> adaptations;
    int species = 1;
    int max_total_dofs = 0;

    CsvTable table() const {
        CsvTable t;
        t.header = {"step", "time", "flux_dofs", "mass_dofs", "eta", "eta_max", "l2_m", "l2_h", "div_h", "h1",
                    "energy", "wavefront", "balance", "residual", "order_min", "order_max"};
        for (int s = 0; s < species; ++s) t.header.push_back("mass_" + std::to_string(s));
        for (const auto& r : records) {
            std::vector<std::string> row = {std::to_string(r.step), format_number(r.time),
                                            std::to_string(r.flux_dofs), std::to_string(r.mass_dofs),
                                            format_number(r.eta), format_number(r.eta_max)};
            if (r.errors) {
                for (double v : {r.errors->l2_m, r.errors->l2_h, r.errors->div_h, r.errors->h1, r.errors->energy})
                    row.push_back(format_number(v));
            } else {
                row.insert(row.end(), 5, "");
            }
            row.push_back(r.wavefront ? format_number(*r.wavefront) : "");
            row.push_back(format_number(r.balance));
            row.push_back(format_number(r.residual));
            row.push_back(std::to_string(r.order_min));
            row.push_back(std::to_string(r.order_max));
            for (double m : r.mass) row.push_back(format_number(m));
            t.rows.push_back(std::move(row));
        }
        return t;
    }

    CsvTable adapt_table() const {
        CsvTable t;
        t.header = {"step", "time", "eta", "eta_max", "flux_dofs", "mass_dofs", "max_gap", "edge_rule"};
        for (int p = 0; p <= kOrderMax; ++p) t.header.push_back("order_" + std::to_string(p));
        for (const auto& a : adaptations) {
            std::vector<std::string> row = {std::to_string(a.step), format_number(a.time), format_number(a.eta),
                                            format_number(a.eta_max), std::to_string(a.flux_dofs),
                                            std::to_string(a.mass_dofs), std::to_string(a.max_gap),
                                            a.edge_rule ? "1" : "0"};
            for (int c : a.histogram) row.push_back(std::to_string(c));
            t.rows.push_back(std::move(row));
        }
        return t;
    }

    CsvTable timing_table() const {
        CsvTable t;
        t.header = {"step", "time", "wall_seconds"};
        for (const auto& r : records)
            t.rows.push_back({std::to_string(r.step), format_number(r.time), format_number(r.wall)});
        return t;
    }
};

/// Observers called during a run (all optional).
struct RunHooks {
    std::function<void(const Stepper&, const SimState&, const StepInfo&)> on_step;
    std::function<void(const Stepper&, const SimState&, const AdaptRecord&)> on_adapt;
};

struct RunResult {
    std::shared_ptr<Mesh> mesh;
    SimState state;
    RunReport report;
    ErrorField last_estimate;
};

namespace detail {

inline AdaptRecord adapt_record(const Mesh& mesh, const SimState& st, const ErrorField& err) {
    AdaptRecord a;
    a.step = st.step;
    a.time = st.t;
    a.eta = err.global;
    a.eta_max = err.max;
    a.flux_dofs = st.dofs.num_flux();
    a.mass_dofs = st.dofs.num_mass();
    a.max_gap = max_neighbour_gap(mesh, st.orders);
    a.edge_rule = edge_orders_follow_max_rule(mesh, st.orders);
    a.histogram.assign(kOrderMax + 1, 0);
    for (int k : st.orders.element) ++a.histogram[k];
    return a;
}

} // namespace detail

/// Bootstraps, steps to T, adapts every `cadence` steps when enabled, records every
/// `output.every` steps (and the final one), and writes files when an output directory is set.
inline RunResult run(const Config& cfg, const RunHooks& hooks = {}) {
    cfg.validate();
    RunResult res;
    res.mesh = std::make_shared<Mesh>(build_mesh(cfg.mesh));
    const Mesh& mesh = *res.mesh;
    const Problem problem = build_problem(cfg, mesh);
    const auto mc = manufactured_of(cfg);
    Stepper stepper(mesh, problem, scheme_coefficients(cfg.scheme), cfg.dt, cfg.solver, cfg.blowup);

    const bool write = !cfg.output.dir.empty();
    if (write) std::filesystem::create_directories(cfg.output.dir);
    auto& report = res.report;
    report.species = problem.species;

    const int nsteps = static_cast<int>(std::ceil(cfg.t_end / cfg.dt - 1e-9));
    auto context = [](const SimState& st) {
        return "step " + std::to_string(st.step) + ", t = " + format_number(st.t) + ": ";
    };

    SimState st;
    try {
        OrderMap orders = OrderMap::uniform(mesh, cfg.order);
        st = stepper.initial_state(orders);
        ErrorField err = stepper.initial_estimate(st);
        if (cfg.adaptive) {
            const OrderMap next = adapt_orders(err, cfg.adapt, st.orders, mesh);
            if (!(next == st.orders)) {
                st = stepper.initial_state(next);
                err = stepper.initial_estimate(st);
            }
            const auto a = detail::adapt_record(mesh, st, err);
            report.adaptations.push_back(a);
            if (hooks.on_adapt) hooks.on_adapt(stepper, st, a);
        }
        res.last_estimate = err;

        auto record = [&](const StepInfo* info, const ErrorField& e, double wall) {
            RunRecord r;
            r.step = st.step;
            r.time = st.t;
            r.flux_dofs = st.dofs.num_flux();
            r.mass_dofs = st.dofs.num_mass();
            r.eta = e.global;
            r.eta_max = e.max;
            if (mc) r.errors = error_norms(mesh, st.dofs, st.m(), st.h(), *mc, st.t);
            // once the level set has left the domain the column stays empty
            if (cfg.output.wavefront_level) try {
                    r.wavefront = track_wavefront(mesh, st.dofs, st.m(), *cfg.output.wavefront_level,
                                                  cfg.output.wavefront_axis);
                } catch (const Error&) {
                }
            for (int s = 0; s < problem.species; ++s) r.mass.push_back(total_mass(mesh, st.dofs, st.m(s)));
            if (info) {
                r.balance = info->balance;
                r.residual = info->residual;
            }
            r.order_min = *std::min_element(st.orders.element.begin(), st.orders.element.end());
            r.order_max = *std::max_element(st.orders.element.begin(), st.orders.element.end());
            r.wall = wall;
            report.records.push_back(std::move(r));
            if (write && cfg.output.vtk) {
                std::vector<VtkField> fields;
                std::vector<std::string> names;
                for (int s = 0; s < problem.species; ++s) names.push_back("m" + std::to_string(s));
                for (int s = 0; s < problem.species; ++s) fields.push_back({names[s], &st.m(s), &st.h(s)});
                char name[64];
                std::snprintf(name, sizeof name, "state_%06d.vtk", st.step);
                write_vtk((std::filesystem::path(cfg.output.dir) / name).string(), mesh, st.dofs, fields, e.eta);
            }
        };
        record(nullptr, err, 0.0);
        report.max_total_dofs = st.dofs.num_flux() + st.dofs.num_mass();

        auto clock = std::chrono::steady_clock::now();
        stepper.bootstrap(st);
        while (st.step < nsteps) {
            const bool adapt_now = cfg.adaptive && (st.step + 1) % cfg.adapt.cadence == 0;
            const bool output_now = (st.step + 1) % cfg.output.every == 0 || st.step + 1 == nsteps;
            const StepInfo info = stepper.step(st, adapt_now || output_now);
            if (hooks.on_step) hooks.on_step(stepper, st, info);
            ErrorField e;
            if (adapt_now || output_now) e = stepper.estimate(st, info);
            const auto now = std::chrono::steady_clock::now();
            const double wall = std::chrono::duration<double>(now - clock).count();
            clock = now;
            if (output_now) {
                record(&info, e, wall);
                res.last_estimate = e;
            }
            report.max_total_dofs = std::max(report.max_total_dofs, st.dofs.num_flux() + st.dofs.num_mass());
            if (adapt_now && st.step < nsteps) {
                const OrderMap next = adapt_orders(e, cfg.adapt, st.orders, mesh);
                stepper.change_orders(st, next);
                const auto a = detail::adapt_record(mesh, st, e);
                report.adaptations.push_back(a);
                if (hooks.on_adapt) hooks.on_adapt(stepper, st, a);
                report.max_total_dofs = std::max(report.max_total_dofs, st.dofs.num_flux() + st.dofs.num_mass());
            }
        }
    } catch (const SolverError& e) {
        throw SolverError(context(st) + e.what(), e.iterate(), e.residual());
    } catch (const Error& e) {
        throw Error(context(st) + e.what());
    }

    if (write) {
        const std::filesystem::path dir(cfg.output.dir);
        write_csv((dir / "report.csv").string(), report.table());
        write_csv((dir / "timings.csv").string(), report.timing_table());
        if (cfg.adaptive) write_csv((dir / "adapt.csv").string(), report.adapt_table());
    }
    res.state = std::move(st);
    return res;
}

// ---------------------------------------------------------------------------------------
// Convergence studies
// ---------------------------------------------------------------------------------------

enum class StudyMode { Mesh, Dt, Order };

inline StudyMode parse_study_mode(const std::string& s) {
    if (s == "mesh") return StudyMode::Mesh;
    if (s == "dt") return StudyMode::Dt;
    if (s == "order") return StudyMode::Order;
    throw Error("unknown convergence mode '" + s + "' (expected mesh, dt or order)");
}

struct StudyRow {
    double param = 0.0;  // h, dt or k
    int dofs = 0;
    ErrorNorms errors;
    double eta = 0.0;
    double self_l2_m = 0.0;  // dt mode: ||m(dt) - m(dt/2)||, zero on the last row
    double slope_l2_m = 0.0, slope_h1 = 0.0, slope_energy = 0.0, slope_self = 0.0;
};

inline double slope(double e0, double e1, double p0, double p1) {
    if (!(e0 > 0.0) || !(e1 > 0.0)) return 0.0;
    return std::log(e0 / e1) / std::log(p0 / p1);
}

/// Levels refine the mesh (nx doubled), the time step (halved) or the uniform order
/// (raised by one). Slopes compare consecutive rows; in dt mode the self-convergence
/// differences of successive solutions give slope_self.
inline std::vector<StudyRow> convergence_study(Config cfg, int refinements, StudyMode mode) {
    RDMIX_REQUIRE(refinements >= 2, Error, "convergence_study: at least 2 refinements required");
    RDMIX_REQUIRE(cfg.has_exact(), Error, "convergence_study: needs a manufactured solution");
    cfg.output.dir.clear();
    std::vector<StudyRow> rows;
    std::vector<RunResult> results;
    for (int l = 0; l < refinements; ++l) {
        Config c = cfg;
        if (mode == StudyMode::Mesh) {
            c.mesh.nx = cfg.mesh.nx << l;
            c.mesh.ny = cfg.mesh.ny << l;
        } else if (mode == StudyMode::Dt) {
            c.dt = cfg.dt / static_cast<double>(1 << l);
        } else {
            c.order = cfg.order + l;
        }
        c.output.every = std::max(1, static_cast<int>(std::ceil(c.t_end / c.dt - 1e-9)));
        RunResult r = run(c);
        StudyRow row;
        row.param = mode == StudyMode::Mesh ? (c.mesh.box.xmax - c.mesh.box.xmin) / c.mesh.nx
                    : mode == StudyMode::Dt ? c.dt
                                            : static_cast<double>(c.order);
        row.dofs = r.state.dofs.num_flux() + r.state.dofs.num_mass();
        row.errors = *r.report.records.back().errors;
        row.eta = r.report.records.back().eta;
        rows.push_back(row);
        if (mode == StudyMode::Dt) results.push_back(std::move(r));
    }
    if (mode == StudyMode::Dt)
        for (std::size_t l = 0; l + 1 < results.size(); ++l)
            rows[l].self_l2_m = mass_difference(*results[l].mesh, results[l].state.dofs, results[l].state.m(),
                                                results[l + 1].state.m());
    for (std::size_t l = 1; l < rows.size(); ++l) {
        auto& r = rows[l];
        const auto& p = rows[l - 1];
        r.slope_l2_m = std::abs(slope(p.errors.l2_m, r.errors.l2_m, p.param, r.param));
        r.slope_h1 = std::abs(slope(p.errors.h1, r.errors.h1, p.param, r.param));
        r.slope_energy = std::abs(slope(p.errors.energy, r.errors.energy, p.param, r.param));
        if (mode == StudyMode::Dt && l + 1 < rows.size())
            r.slope_self = std::abs(slope(p.self_l2_m, r.self_l2_m, p.param, r.param));
    }
    return rows;
}

inline CsvTable study_table(const std::vector<StudyRow>& rows) {
    CsvTable t;
    t.header = {"param", "dofs", "l2_m", "l2_h", "div_h", "h1", "energy", "eta", "self_l2_m",
                "slope_l2_m", "slope_h1", "slope_energy", "slope_self"};
    for (const auto& r : rows)
        t.rows.push_back({format_number(r.param), std::to_string(r.dofs), format_number(r.errors.l2_m),
                          format_number(r.errors.l2_h), format_number(r.errors.div_h), format_number(r.errors.h1),
                          format_number(r.errors.energy), format_number(r.eta), format_number(r.self_l2_m),
                          format_number(r.slope_l2_m), format_number(r.slope_h1), format_number(r.slope_energy),
                          format_number(r.slope_self)});
    return t;
}

} // namespace rdmix
