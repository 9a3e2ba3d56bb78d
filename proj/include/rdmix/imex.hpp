#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "rdmix/adaptivity.hpp"
#include "rdmix/assembly.hpp"
#include "rdmix/dofs.hpp"
#include "rdmix/error.hpp"
#include "rdmix/linalg.hpp"
#include "rdmix/mesh.hpp"
#include "rdmix/models.hpp"

namespace rdmix {

// ---------------------------------------------------------------------------------------
// Coefficient tables
// ---------------------------------------------------------------------------------------

struct Rational {
    long num = 0;
    long den = 1;

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    bool operator==(const Rational& o) const { return num * o.den == o.num * den; }
};

/// alpha, beta over levels n-r..n; gamma over levels n-r..n-1.
struct IMEXCoefficients {
    std::string name;
    int r = 1;
    int order = 1;
    std::vector<Rational> alpha, beta, gamma;

    double a(int j) const { return alpha[j].value(); }
    double b(int j) const { return beta[j].value(); }
    double g(int j) const { return gamma[j].value(); }
};

/// Known schemes: bdf2, bdf3, cnab, ark2, and the one-step pair euler used to start the others.
inline IMEXCoefficients scheme_coefficients(const std::string& name) {
    IMEXCoefficients c;
    c.name = name;
    if (name == "bdf2") {
        c.r = 2;
        c.order = 2;
        c.alpha = {{1, 2}, {-2, 1}, {3, 2}};
        c.beta = {{0, 1}, {0, 1}, {1, 1}};
        c.gamma = {{-1, 1}, {2, 1}};
    } else if (name == "bdf3") {
        c.r = 3;
        c.order = 3;
        c.alpha = {{1, 24}, {-1, 8}, {-7, 8}, {23, 24}};
        c.beta = {{1, 16}, {-5, 16}, {15, 16}, {5, 16}};
        c.gamma = {{3, 8}, {-5, 4}, {15, 8}};
    } else if (name == "cnab") {
        c.r = 2;
        c.order = 2;
        c.alpha = {{0, 1}, {-1, 1}, {1, 1}};
        c.beta = {{0, 1}, {1, 2}, {1, 2}};
        c.gamma = {{-1, 2}, {3, 2}};
    } else if (name == "ark2") {
        c.r = 2;
        c.order = 2;
        c.alpha = {{-1, 1}, {0, 1}, {1, 1}};
        c.beta = {{1, 1}, {0, 1}, {1, 1}};
        c.gamma = {{0, 1}, {2, 1}};
    } else if (name == "euler") {
        c.r = 1;
        c.order = 1;
        c.alpha = {{-1, 1}, {1, 1}};
        c.beta = {{0, 1}, {1, 1}};
        c.gamma = {{1, 1}};
    } else {
        throw Error("unknown scheme '" + name + "' (expected bdf2, bdf3, cnab, ark2 or euler)");
    }
    return c;
}

/// sigma = alpha_r / (dt beta_r)
inline double shift(const IMEXCoefficients& c, double dt) {
    RDMIX_REQUIRE(dt > 0.0, Error, "shift: time step must be positive");
    return c.a(c.r) / (dt * c.b(c.r));
}

// ---------------------------------------------------------------------------------------
// Problem and state
// ---------------------------------------------------------------------------------------

/// Initial value of a species at point x of element k.
using InitialFn = std::function<double(int, Point)>;

struct Problem {
    int species = 1;
    std::shared_ptr<const Kinetics> kinetics;  // null means no reaction
    std::vector<DiffusivityField> diffusivity;  // per species
    BoundaryConditions bc;                      // shared by all species
    std::vector<SpaceTimeFn> source;            // per species, may be empty
    std::vector<InitialFn> initial;             // per species
    double t0 = 0.0;

    void validate() const {
        RDMIX_REQUIRE(species >= 1, Error, "problem: at least one species required");
        RDMIX_REQUIRE(static_cast<int>(diffusivity.size()) == species, Error,
                      "problem: one diffusivity per species required");
        RDMIX_REQUIRE(static_cast<int>(initial.size()) == species, Error,
                      "problem: one initial condition per species required");
        RDMIX_REQUIRE(source.empty() || static_cast<int>(source.size()) == species, Error,
                      "problem: source count does not match species count");
        RDMIX_REQUIRE(!kinetics || kinetics->species() == species, Error,
                      "problem: kinetics species count does not match");
    }
};

/// One time level of every species.
struct Level {
    double t = 0.0;
    std::vector<Vector> m, h;
    std::vector<QuadField> f;  // kinetics plus source at the field points
    std::vector<Vector> load;  // (f, v)
};

struct SimState {
    OrderMap orders;
    DofMap dofs;
    double t = 0.0;
    int step = 0;
    std::deque<Level> history;        // oldest first; back() is the current level
    std::vector<QuadField> internal;  // internal states at the field points (current)

    const Vector& m(int s = 0) const { return history.back().m[s]; }
    const Vector& h(int s = 0) const { return history.back().h[s]; }
};

struct StepInfo {
    double sigma = 0.0;
    double residual = 0.0;     // worst block residual over species
    double balance = 0.0;      // worst relative per-element mass-balance residual
    std::vector<QuadField> g;  // discrete source of the estimator, filled on request
};

/// Flux divergence at the points of a triangle rule on element k.
inline std::vector<double> flux_div_at_points(const Mesh& mesh, const DofMap& dofs, const Vector& h, int k,
                                              int degree) {
    const auto& tab = reference_tab(dofs.mass_order(k), dofs.layout(k), degree);
    const auto idx = dofs.element_flux_dofs(k);
    const double det = ElementGeometry::of(mesh, k).det;
    std::vector<double> out(tab.rule->size(), 0.0);
    for (std::size_t q = 0; q < out.size(); ++q) {
        double s = 0.0;
        for (std::size_t j = 0; j < idx.size(); ++j) s += h[idx[j]] * tab.div[q][j];
        out[q] = s / det;
    }
    return out;
}

/// IMEX multistep integrator for one problem on one mesh. Keeps assembled operators and
/// factorisations until the order map changes.
class Stepper {
public:
    Stepper(const Mesh& mesh, Problem problem, IMEXCoefficients scheme, double dt, SolverOptions solver = {},
            double blowup = 1e6)
        : mesh_(mesh), problem_(std::move(problem)), scheme_(std::move(scheme)), dt_(dt), solver_(solver),
          blowup_(blowup) {
        problem_.validate();
        RDMIX_REQUIRE(dt_ > 0.0, Error, "time step must be positive");
        op_index_.resize(static_cast<std::size_t>(problem_.species));
        for (int s = 0; s < problem_.species; ++s) {
            op_index_[s] = s;
            for (int o = 0; o < s; ++o)
                if (problem_.diffusivity[o] == problem_.diffusivity[s]) {
                    op_index_[s] = op_index_[o];
                    break;
                }
        }
    }

    const Mesh& mesh() const { return mesh_; }
    const Problem& problem() const { return problem_; }
    const IMEXCoefficients& scheme() const { return scheme_; }
    double dt() const { return dt_; }
    double sigma() const { return shift(scheme_, dt_); }

    /// Level t0: projected initial data and the flux solving K H = F - B m.
    SimState initial_state(const OrderMap& orders) {
        SimState st;
        st.orders = orders;
        st.dofs = DofMap(mesh_, orders);
        st.t = problem_.t0;
        const auto& ops = operators(st);
        Level lv;
        lv.t = problem_.t0;
        const auto ess = essential_flux_values(mesh_, st.dofs, problem_.bc, lv.t);
        const Vector f0 = assemble_F(mesh_, st.dofs, problem_.bc, lv.t);
        for (int s = 0; s < problem_.species; ++s) {
            lv.m.push_back(project_initial(st.dofs, problem_.initial[s]));
            const auto& op = ops[op_index_[s]];
            Vector rhs = f0;
            const Vector bm = op.g.B.multiply(lv.m[s]);
            for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] -= bm[i];
            Vector dummy(static_cast<std::size_t>(st.dofs.num_mass()), 0.0);
            lift_essential(op.g.K, op.g.B, ess, rhs, dummy);
            lv.h.push_back(solve_spd(op.c.K, rhs));
        }
        const int ni = problem_.kinetics ? problem_.kinetics->internal_dim() : 0;
        const auto init = problem_.kinetics ? problem_.kinetics->initial_internal() : std::vector<double>{};
        for (int i = 0; i < ni; ++i) st.internal.push_back(make_quad_field(mesh_, st.dofs, init[i]));
        evaluate_rates(st.dofs, lv, st.internal);
        st.history.push_back(std::move(lv));
        return st;
    }

    /// Fills the history up to the scheme's step count with one-step IMEX Euler sub-steps
    /// (dt/4), improved by Richardson extrapolation against a dt/8 run.
    void bootstrap(SimState& st) {
        const auto euler = scheme_coefficients("euler");
        while (static_cast<int>(st.history.size()) < scheme_.r) {
            std::vector<QuadField> ia, ib;
            Level a = substep_run(st, euler, 4, ia);
            Level b = substep_run(st, euler, 8, ib);
            Level lv;
            lv.t = problem_.t0 + (st.step + 1) * dt_;
            for (int s = 0; s < problem_.species; ++s) {
                lv.m.push_back(richardson(a.m[s], b.m[s]));
                lv.h.push_back(richardson(a.h[s], b.h[s]));
            }
            for (std::size_t i = 0; i < ib.size(); ++i)
                for (std::size_t k = 0; k < ib[i].values.size(); ++k)
                    ib[i].values[k] = richardson(ia[i].values[k], ib[i].values[k]);
            st.internal = std::move(ib);
            evaluate_rates(st.dofs, lv, st.internal);
            st.history.push_back(std::move(lv));
            st.t = st.history.back().t;
            ++st.step;
        }
    }

    /// One step of the configured scheme. Requires a full history.
    StepInfo step(SimState& st, bool with_estimator_data = false) {
        RDMIX_REQUIRE(static_cast<int>(st.history.size()) >= scheme_.r, Error,
                      "step: insufficient history (" + std::to_string(st.history.size()) + " of " +
                          std::to_string(scheme_.r) + " levels)");
        StepInfo info;
        std::vector<QuadField> internal;
        const double t_new = problem_.t0 + (st.step + 1) * dt_;
        Level lv = advance(st, st.history, st.internal, scheme_, dt_, t_new, internal, &info, with_estimator_data);
        st.history.push_back(std::move(lv));
        while (static_cast<int>(st.history.size()) > scheme_.r) st.history.pop_front();
        st.internal = std::move(internal);
        st.t = st.history.back().t;
        ++st.step;
        return info;
    }

    /// Re-expresses all stored data in a new order map.
    void change_orders(SimState& st, const OrderMap& orders) const {
        if (orders == st.orders) return;
        DofMap to(mesh_, orders);
        for (auto& lv : st.history) {
            for (int s = 0; s < problem_.species; ++s) {
                lv.m[s] = transfer_mass(st.dofs, to, lv.m[s]);
                lv.h[s] = transfer_flux(st.dofs, to, lv.h[s]);
                lv.f[s] = requadrature(mesh_, st.dofs, lv.f[s], to);
                lv.load[s] = load_vector(mesh_, to, lv.f[s]);
            }
        }
        for (auto& q : st.internal) q = requadrature(mesh_, st.dofs, q, to);
        st.orders = orders;
        st.dofs = std::move(to);
    }

    /// Estimator of the last step (all species combined).
    ErrorField estimate(const SimState& st, const StepInfo& info) const {
        RDMIX_REQUIRE(static_cast<int>(info.g.size()) == problem_.species, Error,
                      "estimate: step was taken without estimator data");
        std::vector<ErrorField> fields;
        for (int s = 0; s < problem_.species; ++s)
            fields.push_back(rdmix::estimate(mesh_, st.dofs, st.m(s), st.h(s), info.g[s], info.sigma,
                                             problem_.diffusivity[s]));
        return combine(mesh_, fields);
    }

    /// Estimator of the initial level: constitutive residual, projection residual of the initial
    /// data in place of the mass-balance residual, and jumps.
    ErrorField initial_estimate(const SimState& st) const {
        std::vector<ErrorField> fields;
        for (int s = 0; s < problem_.species; ++s) {
            QuadField g = make_quad_field(mesh_, st.dofs);
            for (int k = 0; k < mesh_.num_elements(); ++k) {
                const auto& rule = quadrature_rule(QuadDomain::Triangle, g.degree[k]);
                const auto geo = ElementGeometry::of(mesh_, k);
                const auto dv = flux_div_at_points(mesh_, st.dofs, st.h(s), k, g.degree[k]);
                for (std::size_t q = 0; q < rule.size(); ++q)
                    g.values[k][q] = problem_.initial[s](k, geo.map(rule.points[q])) + dv[q];
            }
            fields.push_back(rdmix::estimate(mesh_, st.dofs, st.m(s), st.h(s), g, 1.0, problem_.diffusivity[s]));
        }
        return combine(mesh_, fields);
    }

private:
    struct Operators {
        GlobalMatrices g;
        ConstrainedOperators c;
        std::map<double, std::unique_ptr<SchurSolver>> solvers;
    };

    static Vector richardson(const Vector& coarse, const Vector& fine) {
        Vector out(fine.size());
        for (std::size_t i = 0; i < fine.size(); ++i) out[i] = 2.0 * fine[i] - coarse[i];
        return out;
    }
    std::vector<Operators>& operators(const SimState& st) {
        if (ops_.empty() || !(ops_orders_ == st.orders)) {
            ops_.clear();
            ops_.resize(static_cast<std::size_t>(problem_.species));
            const auto ess = essential_flux_values(mesh_, st.dofs, problem_.bc, problem_.t0);
            for (int s = 0; s < problem_.species; ++s) {
                if (op_index_[s] != s) continue;
                ops_[s].g = assemble_global(mesh_, st.dofs, problem_.diffusivity[s]);
                ops_[s].c = constrain_operators(ops_[s].g.K, ops_[s].g.B, ess.dofs);
            }
            ops_orders_ = st.orders;
        }
        return ops_;
    }

    const SchurSolver& solver(Operators& op, double sigma) {
        auto it = op.solvers.find(sigma);
        if (it == op.solvers.end())
            it = op.solvers
                     .emplace(sigma, std::make_unique<SchurSolver>(op.c.K, op.c.B, op.g.M, op.g.mass_blocks, sigma,
                                                                   solver_))
                     .first;
        return *it->second;
    }

    Vector project_initial(const DofMap& dofs, const InitialFn& fn) const {
        Vector out(static_cast<std::size_t>(dofs.num_mass()), 0.0);
        for (int k = 0; k < mesh_.num_elements(); ++k) {
            const int n = dofs.mass_count(k), off = dofs.mass_offset(k);
            const auto& tab = mass_tab(dofs.mass_order(k), field_quadrature_degree(dofs.mass_order(k)));
            const auto geo = ElementGeometry::of(mesh_, k);
            Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
            Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
            for (std::size_t q = 0; q < tab.rule->size(); ++q) {
                const double v = fn(k, geo.map(tab.rule->points[q]));
                const double w = tab.rule->weights[q];
                for (int a = 0; a < n; ++a) {
                    rhs(a) += w * tab.psi[q][a] * v;
                    for (int b = 0; b < n; ++b) gram(a, b) += w * tab.psi[q][a] * tab.psi[q][b];
                }
            }
            const Eigen::VectorXd c = gram.ldlt().solve(rhs);
            for (int a = 0; a < n; ++a) out[off + a] = c(a);
        }
        return out;
    }

    /// Kinetics plus source at the field points of every element, and the load vectors.
    void evaluate_rates(const DofMap& dofs, Level& lv, const std::vector<QuadField>& internal) const {
        const int ns = problem_.species;
        const int ni = static_cast<int>(internal.size());
        lv.f.assign(static_cast<std::size_t>(ns), make_quad_field(mesh_, dofs));
        std::vector<double> mv(static_cast<std::size_t>(ns)), sv(static_cast<std::size_t>(ni)),
            fv(static_cast<std::size_t>(ns));
        for (int k = 0; k < mesh_.num_elements(); ++k) {
            const int deg = lv.f[0].degree[k];
            const auto& rule = quadrature_rule(QuadDomain::Triangle, deg);
            const auto geo = ElementGeometry::of(mesh_, k);
            std::vector<std::vector<double>> mq(static_cast<std::size_t>(ns));
            for (int s = 0; s < ns; ++s) mq[s] = mass_at_field_points(dofs, lv.m[s], k, deg);
            for (std::size_t q = 0; q < rule.size(); ++q) {
                for (int s = 0; s < ns; ++s) {
                    mv[s] = mq[s][q];
                    if (!(std::abs(mv[s]) <= blowup_))
                        throw Error("blow-up: |m| = " + std::to_string(std::abs(mv[s])) + " exceeds " +
                                    std::to_string(blowup_) + " at t = " + std::to_string(lv.t));
                }
                for (int i = 0; i < ni; ++i) sv[i] = internal[i].values[k][q];
                if (problem_.kinetics)
                    problem_.kinetics->rates(mv.data(), sv.data(), fv.data());
                else
                    std::fill(fv.begin(), fv.end(), 0.0);
                const Point x = (problem_.source.empty() ? Point{} : geo.map(rule.points[q]));
                for (int s = 0; s < ns; ++s) {
                    double v = fv[s];
                    if (!problem_.source.empty() && problem_.source[s]) v += problem_.source[s](x, lv.t);
                    lv.f[s].values[k][q] = v;
                }
            }
        }
        lv.load.clear();
        for (int s = 0; s < ns; ++s) lv.load.push_back(load_vector(mesh_, dofs, lv.f[s]));
    }

    /// Internal states from t_old to t_old + dt: explicit RK2 with dt/4 sub-steps at every field
    /// point, m interpolated linearly in time.
    std::vector<QuadField> advance_internal(const DofMap& dofs, const Level& old, const Level& now,
                                            const std::vector<QuadField>& internal, double dt) const {
        if (internal.empty()) return {};
        const int ns = problem_.species, ni = static_cast<int>(internal.size());
        std::vector<QuadField> out = internal;
        constexpr int kSub = 4;
        const double h = dt / kSub;
        std::vector<double> m0(static_cast<std::size_t>(ns)), m1(m0.size()), mi(m0.size()), s(ni), s1(ni),
            d1(ni), d2(ni);
        for (int k = 0; k < mesh_.num_elements(); ++k) {
            const int deg = internal[0].degree[k];
            std::vector<std::vector<double>> qa(ns), qb(ns);
            for (int sp = 0; sp < ns; ++sp) {
                qa[sp] = mass_at_field_points(dofs, old.m[sp], k, deg);
                qb[sp] = mass_at_field_points(dofs, now.m[sp], k, deg);
            }
            for (std::size_t q = 0; q < internal[0].values[k].size(); ++q) {
                for (int i = 0; i < ni; ++i) s[i] = internal[i].values[k][q];
                for (int sub = 0; sub < kSub; ++sub) {
                    const double ta = static_cast<double>(sub) / kSub, tb = static_cast<double>(sub + 1) / kSub;
                    for (int sp = 0; sp < ns; ++sp) {
                        m0[sp] = (1.0 - ta) * qa[sp][q] + ta * qb[sp][q];
                        m1[sp] = (1.0 - tb) * qa[sp][q] + tb * qb[sp][q];
                    }
                    problem_.kinetics->internal_rates(m0.data(), s.data(), d1.data());
                    for (int i = 0; i < ni; ++i) s1[i] = s[i] + h * d1[i];
                    problem_.kinetics->internal_rates(m1.data(), s1.data(), d2.data());
                    for (int i = 0; i < ni; ++i) s[i] += 0.5 * h * (d1[i] + d2[i]);
                }
                for (int i = 0; i < ni; ++i) {
                    if (!std::isfinite(s[i])) throw Error("blow-up: non-finite internal state");
                    out[i].values[k][q] = s[i];
                }
            }
        }
        return out;
    }

    Level advance(SimState& st, const std::deque<Level>& hist, const std::vector<QuadField>& internal,
                  const IMEXCoefficients& c, double dt, double t_new, std::vector<QuadField>& internal_out,
                  StepInfo* info, bool with_g) {
        const int r = c.r;
        const std::size_t base = hist.size() - static_cast<std::size_t>(r);
        auto& ops = operators(st);
        const DofMap& dofs = st.dofs;
        const double sigma = shift(c, dt);
        Level lv;
        lv.t = t_new;
        const auto ess = essential_flux_values(mesh_, dofs, problem_.bc, lv.t);
        const Vector f0 = assemble_F(mesh_, dofs, problem_.bc, lv.t);
        double worst_residual = 0.0, worst_balance = 0.0;
        for (int s = 0; s < problem_.species; ++s) {
            auto& op = ops[op_index_[s]];
            Vector g(static_cast<std::size_t>(dofs.num_mass()), 0.0);
            // history part of the second block row, before dividing by -beta_r
            Vector hist_terms(g.size(), 0.0);
            for (int j = 0; j < r; ++j) {
                const Level& L = hist[base + static_cast<std::size_t>(j)];
                if (c.g(j) != 0.0)
                    for (std::size_t i = 0; i < g.size(); ++i) hist_terms[i] += c.g(j) * L.load[s][i];
                if (c.b(j) != 0.0) {
                    const Vector bth = op.g.B.multiply_transpose(L.h[s]);
                    for (std::size_t i = 0; i < g.size(); ++i) hist_terms[i] += c.b(j) * bth[i];
                }
                if (c.a(j) != 0.0) {
                    const Vector mm = op.g.M.multiply(L.m[s]);
                    for (std::size_t i = 0; i < g.size(); ++i) hist_terms[i] -= c.a(j) / dt * mm[i];
                }
            }
            for (std::size_t i = 0; i < g.size(); ++i) g[i] = -hist_terms[i] / c.b(r);
            Vector f = f0;
            lift_essential(op.g.K, op.g.B, ess, f, g);
            const auto sol = solver(op, sigma).solve(f, g, &hist.back().h[s]);
            worst_residual = std::max(worst_residual, sol.residual);
            lv.m.push_back(sol.m);
            lv.h.push_back(sol.H);
            // element balance: (alpha_r/dt) M m - beta_r B^T h = hist_terms, tested with the
            // constant function of each element
            const Vector mm = op.g.M.multiply(sol.m);
            const Vector bth = op.g.B.multiply_transpose(sol.H);
            for (int k = 0; k < mesh_.num_elements(); ++k) {
                const int i = dofs.mass_offset(k);
                const double a = c.a(r) / dt * mm[i];
                const double b = c.b(r) * bth[i];
                const double res = a - b - hist_terms[i];
                const double scale = std::abs(a) + std::abs(b) + std::abs(hist_terms[i]);
                if (scale > 0.0) worst_balance = std::max(worst_balance, std::abs(res) / scale);
            }
        }
        internal_out = advance_internal(dofs, hist.back(), lv, internal, dt);
        evaluate_rates(dofs, lv, internal_out);
        if (info) {
            info->sigma = sigma;
            info->residual = worst_residual;
            info->balance = worst_balance;
            if (with_g) info->g = estimator_source(st, hist, base, c, dt);
        }
        return lv;
    }

    /// g = (1/beta_r) [sum gamma_j f^j - sum beta_j div h^j - sum (alpha_j/dt) m^j] at the field
    /// points.
    std::vector<QuadField> estimator_source(const SimState& st, const std::deque<Level>& hist, std::size_t base,
                                            const IMEXCoefficients& c, double dt) const {
        std::vector<QuadField> out;
        for (int s = 0; s < problem_.species; ++s) {
            QuadField g = make_quad_field(mesh_, st.dofs);
            for (int k = 0; k < mesh_.num_elements(); ++k) {
                auto& vals = g.values[k];
                for (int j = 0; j < c.r; ++j) {
                    const Level& L = hist[base + static_cast<std::size_t>(j)];
                    if (c.g(j) != 0.0)
                        for (std::size_t q = 0; q < vals.size(); ++q) vals[q] += c.g(j) * L.f[s].values[k][q];
                    if (c.b(j) != 0.0) {
                        const auto dv = flux_div_at_points(mesh_, st.dofs, L.h[s], k, g.degree[k]);
                        for (std::size_t q = 0; q < vals.size(); ++q) vals[q] -= c.b(j) * dv[q];
                    }
                    if (c.a(j) != 0.0) {
                        const auto mv = mass_at_field_points(st.dofs, L.m[s], k, g.degree[k]);
                        for (std::size_t q = 0; q < vals.size(); ++q) vals[q] -= c.a(j) / dt * mv[q];
                    }
                }
                for (auto& v : vals) v /= c.b(c.r);
            }
            out.push_back(std::move(g));
        }
        return out;
    }

    Level substep_run(SimState& st, const IMEXCoefficients& euler, int n, std::vector<QuadField>& internal) {
        std::deque<Level> hist{st.history.back()};
        internal = st.internal;
        const double t_start = st.history.back().t;
        for (int i = 0; i < n; ++i) {
            std::vector<QuadField> next;
            const double t_new = i == n - 1 ? problem_.t0 + (st.step + 1) * dt_ : t_start + (i + 1) * dt_ / n;
            Level lv = advance(st, hist, internal, euler, dt_ / n, t_new, next, nullptr, false);
            hist = {std::move(lv)};
            internal = std::move(next);
        }
        return hist.back();
    }

    const Mesh& mesh_;
    Problem problem_;
    IMEXCoefficients scheme_;
    double dt_;
    SolverOptions solver_;
    double blowup_;
    std::vector<int> op_index_;
    std::vector<Operators> ops_;
    OrderMap ops_orders_;
};

} // namespace rdmix
